"""Embodied-carbon models for CPU, memory and storage.

Every model is affine in the grid carbon intensity ``ci`` (g CO2/kWh)::

    CPU      (gps + mps + ci * eps) / yield          g/cm^2 of die
    memory   ci * elec_per_gb + alpha_m              g/GB
    storage  ci * epg + alpha_s                      g/GB

Vendors publish memory and storage figures as one yearly number per GB, so
the electricity term has to be recovered from that number and the CI the
vendor assumed (:func:`calibrate_memory`, :func:`calibrate_storage`). The
assumed CI is never implicit; it travels in a :class:`CalibrationContext`.

EPS is taken in kWh/cm^2. Memory keeps the electricity-per-GB composite
(EPS divided by bit density) rather than the two factors, since the
published tables mix area units for bit density.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import singledispatch
from pathlib import Path
from typing import NamedTuple, Union

from stecarbon.errors import CalibrationError, ValidationError

__all__ = [
    "CpuProcessSpec",
    "MemoryTechSpec",
    "StorageKind",
    "StorageProductSpec",
    "CalibrationContext",
    "CarbonShares",
    "CPU_NODES",
    "MEMORY_TABLE",
    "STORAGE_TABLE",
    "cpu_embodied",
    "cpu_breakdown",
    "calibrate_memory",
    "memory_embodied",
    "calibrate_storage",
    "storage_embodied",
    "embodied",
    "affine_terms",
    "unit_of_measure",
    "builtin_memory",
    "builtin_storage",
    "HardwareCatalog",
    "load_hardware",
]


def _check_finite(name: str, **values: float) -> None:
    for field_name, v in values.items():
        if not math.isfinite(v):
            raise ValidationError(f"{name}: {field_name} must be finite")


@dataclass(frozen=True)
class CpuProcessSpec:
    node: str
    eps: float  # kWh/cm^2
    gps: float  # g/cm^2
    mps: float  # g/cm^2
    yield_: float = 1.0

    def __post_init__(self):
        _check_finite(self.node, eps=self.eps, gps=self.gps, mps=self.mps, yield_=self.yield_)
        if min(self.eps, self.gps, self.mps) < 0:
            raise ValidationError(f"{self.node}: eps, gps and mps must be non-negative")
        if not 0 < self.yield_ <= 1:
            raise ValidationError(f"{self.node}: yield must lie in (0, 1]")

    @property
    def label(self) -> str:
        return self.node

    def with_yield(self, yield_: float) -> CpuProcessSpec:
        return CpuProcessSpec(self.node, self.eps, self.gps, self.mps, yield_)


@dataclass(frozen=True)
class CalibrationContext:
    """Annual CI a source report assumed when it published a yearly figure."""

    reference_ci: float
    provenance: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.reference_ci) and self.reference_ci > 0):
            raise ValidationError("reference_ci must be a positive number")


@dataclass(frozen=True)
class MemoryTechSpec:
    tech: str
    yearly_ec: float  # g/GB as published
    elec_per_gb: float  # kWh/GB
    alpha_m: float  # g/GB, electricity-independent
    context: CalibrationContext | None = None

    def __post_init__(self):
        _check_finite(self.tech, yearly_ec=self.yearly_ec, elec_per_gb=self.elec_per_gb, alpha_m=self.alpha_m)
        if self.alpha_m < 0:
            raise CalibrationError(f"{self.tech}: electricity-independent carbon is negative ({self.alpha_m})")

    @property
    def label(self) -> str:
        return self.tech


class StorageKind(str, Enum):
    SSD = "SSD"
    HDD = "HDD"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class StorageProductSpec:
    product: str
    kind: StorageKind
    yearly_ec: float  # g/GB as published
    alpha_s: float  # g/GB, electricity-independent
    epg: float  # kWh/GB
    context: CalibrationContext | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StorageKind(self.kind))
        _check_finite(self.product, yearly_ec=self.yearly_ec, alpha_s=self.alpha_s, epg=self.epg)
        if self.alpha_s < 0:
            raise CalibrationError(f"{self.product}: other carbon is negative")
        if self.epg < 0:
            raise CalibrationError(f"{self.product}: electricity per GB is negative")

    @property
    def label(self) -> str:
        return self.product


HardwareSpec = Union[CpuProcessSpec, MemoryTechSpec, StorageProductSpec]


class CarbonShares(NamedTuple):
    gas: float
    material: float
    electricity: float


def _check_ci(ci: float) -> None:
    if not (math.isfinite(ci) and ci >= 0):
        raise ValidationError(f"carbon intensity must be a non-negative number, got {ci}")


def cpu_embodied(spec: CpuProcessSpec, ci: float) -> float:
    """Embodied carbon per cm^2 of die manufactured at intensity ``ci``."""
    _check_ci(ci)
    return (spec.gps + spec.mps + ci * spec.eps) / spec.yield_


def cpu_breakdown(spec: CpuProcessSpec, ci: float) -> CarbonShares:
    """Fractions of CPU embodied carbon from gas, material and electricity."""
    _check_ci(ci)
    elec = ci * spec.eps
    total = spec.gps + spec.mps + elec
    if not total > 0:
        raise ValidationError(f"{spec.node}: zero embodied carbon has no breakdown")
    gas = spec.gps / total
    if elec == 0:
        return CarbonShares(gas, 1.0 - gas, 0.0)
    material = spec.mps / total
    return CarbonShares(gas, material, 1.0 - gas - material)


def calibrate_memory(
    tech: str, yearly_ec: float, elec_carbon: float, ctx: CalibrationContext
) -> MemoryTechSpec:
    """Split a published g/GB figure into electricity and the rest.

    ``elec_carbon`` is the electricity share of ``yearly_ec`` (g/GB) as
    published; the electricity per GB follows from the report's CI.
    """
    if elec_carbon < 0:
        raise CalibrationError(f"{tech}: negative electricity carbon")
    if elec_carbon > yearly_ec:
        raise CalibrationError(
            f"{tech}: electricity carbon {elec_carbon} exceeds embodied carbon {yearly_ec}"
        )
    return MemoryTechSpec(
        tech=tech,
        yearly_ec=yearly_ec,
        elec_per_gb=elec_carbon / ctx.reference_ci,
        alpha_m=yearly_ec - elec_carbon,
        context=ctx,
    )


def memory_embodied(spec: MemoryTechSpec, ci: float) -> float:
    _check_ci(ci)
    return ci * spec.elec_per_gb + spec.alpha_m


def calibrate_storage(
    product: str, kind: StorageKind | str, yearly_ec: float, alpha_s: float, ctx: CalibrationContext
) -> StorageProductSpec:
    """Recover electricity per GB from a yearly figure and its other-carbon part."""
    if alpha_s < 0:
        raise CalibrationError(f"{product}: negative other carbon")
    if alpha_s > yearly_ec:
        raise CalibrationError(f"{product}: other carbon {alpha_s} exceeds embodied carbon {yearly_ec}")
    return StorageProductSpec(
        product=product,
        kind=StorageKind(kind),
        yearly_ec=yearly_ec,
        alpha_s=alpha_s,
        epg=(yearly_ec - alpha_s) / ctx.reference_ci,
        context=ctx,
    )


def storage_embodied(spec: StorageProductSpec, ci: float) -> float:
    _check_ci(ci)
    return ci * spec.epg + spec.alpha_s


@singledispatch
def embodied(spec, ci: float) -> float:
    """Embodied carbon of any hardware spec at intensity ``ci``."""
    raise TypeError(f"not a hardware spec: {type(spec).__name__}")


embodied.register(CpuProcessSpec, cpu_embodied)
embodied.register(MemoryTechSpec, memory_embodied)
embodied.register(StorageProductSpec, storage_embodied)


def affine_terms(spec: HardwareSpec) -> tuple[float, float]:
    """(slope per g/kWh, electricity-independent intercept)."""
    if isinstance(spec, CpuProcessSpec):
        return spec.eps / spec.yield_, (spec.gps + spec.mps) / spec.yield_
    if isinstance(spec, MemoryTechSpec):
        return spec.elec_per_gb, spec.alpha_m
    if isinstance(spec, StorageProductSpec):
        return spec.epg, spec.alpha_s
    raise TypeError(f"not a hardware spec: {type(spec).__name__}")


def unit_of_measure(spec: HardwareSpec) -> str:
    return "g/cm2" if isinstance(spec, CpuProcessSpec) else "g/GB"


# Process node -> (EPS kWh/cm^2, GPS g/cm^2, MPS g/cm^2)
_CPU_ROWS = [
    ("28nm", 0.9, 100, 500),
    ("20nm", 1.2, 110, 500),
    ("14nm", 1.2, 125, 500),
    ("10nm", 1.475, 150, 500),
    ("7nm", 1.52, 200, 500),
    ("7nm-EUV", 2.15, 200, 500),
    ("7nm-EUV-DP", 2.15, 200, 500),
    ("5nm", 2.75, 225, 500),
    ("3nm", 2.75, 275, 500),
]
CPU_NODES: dict[str, CpuProcessSpec] = {n: CpuProcessSpec(n, e, g, m) for n, e, g, m in _CPU_ROWS}

# tech, embodied g/GB, bit density (as printed), electricity carbon g/GB
MEMORY_TABLE: list[tuple[str, float, float, float]] = [
    ("30nm LPDDR3", 230.0, 0.06, 67.50),
    ("20nm LPDDR3", 184.0, 0.11, 51.43),
    ("10nm DDR4", 65.0, 0.19, 35.74),
    ("LPDDR4", 48.0, 0.17, 39.04),
]

# category, product, embodied g/GB, manufacturing-energy g/GB, other g/GB
STORAGE_TABLE: list[tuple[str, str, float, float, float]] = [
    ("Enterprise SSD", "Nytro 3530", 6.27, 4.25, 2.02),
    ("Enterprise SSD", "Nytro 1551", 3.91, 1.53, 2.38),
    ("Enterprise SSD", "Nytro 3331", 5.48, 0.92, 4.56),
    ("Enterprise SSD", "Nytro 3332", 2.42, 0.78, 1.64),
    ("Consumer SSD", "BarraCuda 120 SSD", 26.28, 23.85, 2.43),
    ("Enterprise HDD", "EXOS X20", 0.88, 0.36, 0.52),
    ("Enterprise HDD", "EXOS X18", 0.88, 0.39, 0.49),
    ("Enterprise HDD", "Exos 2X14", 1.28, 0.51, 0.78),
    ("Enterprise HDD", "Exos 7E8", 5.28, 2.34, 2.94),
    ("Enterprise HDD", "Exos 5E8", 2.54, 1.14, 1.40),
    ("Enterprise HDD", "Exos 10E2400", 10.75, 6.94, 3.81),
    ("Enterprise HDD", "EXOS 15E900", 21.62, 10.65, 10.97),
    ("Enterprise HDD", "Exos X16", 1.46, 0.77, 0.69),
    ("Enterprise HDD", "Exos X12", 1.32, 0.53, 0.79),
    ("Consumer HDD", "BarraCuda 3.5", 9.40, 4.84, 4.56),
    ("Consumer HDD", "BarraCuda", 4.25, 2.08, 2.17),
    ("Consumer HDD", "BarraCuda Pro", 2.62, 1.22, 1.40),
    ("Consumer HDD", "FireCuda", 5.16, 3.81, 1.35),
    ("Consumer HDD", "IronWolf", 5.28, 2.22, 3.06),
    ("Consumer HDD", "IronWolf Pro", 3.80, 1.33, 2.47),
    ("Consumer HDD", "Skyhawk 3 TB", 9.85, 2.17, 7.68),
    ("Consumer HDD", "Skyhawk Surveillance HDD", 4.37, 1.54, 2.83),
    ("Consumer HDD", "Skyhawk 6 TB", 4.18, 1.09, 3.09),
    ("Consumer HDD", "Video 3.5 HDD", 8.20, 3.22, 4.98),
    ("Consumer HDD", "Video 3.5 HDD (Pipeline HDD)", 9.54, 3.23, 6.31),
    ("External HDD", "ULTRA TOUCH", 5.54, 3.40, 2.13),
    ("External HDD", "Rugged Mini", 4.22, 2.98, 1.25),
]


def builtin_memory(ctx: CalibrationContext) -> dict[str, MemoryTechSpec]:
    return {tech: calibrate_memory(tech, ec, elec, ctx) for tech, ec, _bd, elec in MEMORY_TABLE}


def builtin_storage(ctx: CalibrationContext) -> dict[str, StorageProductSpec]:
    # the "other carbon" column is authoritative; manufacturing-energy carbon
    # is the remainder and differs from the printed column by rounding on a few rows
    return {
        product: calibrate_storage(product, category.split()[-1], ec, other, ctx)
        for category, product, ec, _mfg, other in STORAGE_TABLE
    }


def _norm(label: str) -> str:
    return " ".join(label.lower().split())


@dataclass
class HardwareCatalog:
    """Named hardware specs addressable as ``cpu:<node>``, ``memory:<tech>``
    and ``storage:<product>`` (also ``ssd:``/``hdd:``)."""

    cpu: dict[str, CpuProcessSpec]
    memory: dict[str, MemoryTechSpec]
    storage: dict[str, StorageProductSpec]
    context: CalibrationContext | None = None

    def get(self, ref: str) -> HardwareSpec:
        kind, sep, name = ref.partition(":")
        if not sep:
            raise ValidationError(f"hardware reference must look like 'cpu:7nm', got {ref!r}")
        kind = kind.strip().lower()
        table = {"cpu": self.cpu, "memory": self.memory, "ssd": self.storage, "hdd": self.storage, "storage": self.storage}.get(kind)
        if table is None:
            raise ValidationError(f"unknown hardware class: {kind}")
        wanted = _norm(name)
        candidates = [wanted]
        if kind == "cpu" and not wanted.endswith("nm") and "-" not in wanted:
            candidates.append(wanted + "nm")
        if kind == "cpu" and wanted[:1].isdigit() and "-" in wanted and "nm-" not in wanted:
            head, _, tail = wanted.partition("-")
            candidates.append(f"{head}nm-{tail}")
        for label, spec in table.items():
            if _norm(label) in candidates:
                if kind in ("ssd", "hdd") and spec.kind.value.lower() != kind:
                    break
                return spec
        raise ValidationError(f"unknown hardware: {ref}")


def load_hardware(path: str | Path, ctx: CalibrationContext | None = None) -> HardwareCatalog:
    """Load a hardware document, or the bundled tables for ``"builtin"``.

    The JSON document has optional ``calibration`` (``reference_ci``,
    ``provenance``), ``cpu``, ``memory`` and ``storage`` entries. Memory and
    storage entries either carry published figures (``yearly_ec`` with
    ``elec_carbon_g_per_gb``, or ``yearly_ec_g_per_gb`` with
    ``other_carbon_g_per_gb``) that are calibrated against the context, or
    already-split terms (``alpha_m``/``elec_per_gb``, ``alpha_s``/``epg``).
    """
    if str(path) == "builtin":
        return HardwareCatalog(
            cpu=dict(CPU_NODES),
            memory=builtin_memory(ctx) if ctx else {},
            storage=builtin_storage(ctx) if ctx else {},
            context=ctx,
        )
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    cal = doc.get("calibration")
    if cal is not None:
        ctx = CalibrationContext(float(cal["reference_ci"]), cal.get("provenance", ""))
    try:
        cpu = {
            e["node"]: CpuProcessSpec(e["node"], float(e["eps"]), float(e["gps"]), float(e["mps"]), float(e.get("yield", 1.0)))
            for e in doc.get("cpu", [])
        }
        memory = {e["tech"]: _memory_entry(e, ctx) for e in doc.get("memory", [])}
        storage = {e["product"]: _storage_entry(e, ctx) for e in doc.get("storage", [])}
    except KeyError as exc:
        raise ValidationError(f"{path}: hardware entry missing field {exc}") from None
    return HardwareCatalog(cpu, memory, storage, ctx)


def _need_ctx(ctx, label):
    if ctx is None:
        raise ValidationError(f"{label}: calibration needs a reference_ci")
    return ctx


def _memory_entry(e: dict, ctx) -> MemoryTechSpec:
    if "alpha_m" in e:
        alpha, per_gb = float(e["alpha_m"]), float(e["elec_per_gb"])
        yearly = alpha + per_gb * ctx.reference_ci if ctx else float(e.get("yearly_ec", alpha))
        return MemoryTechSpec(e["tech"], yearly, per_gb, alpha, ctx)
    return calibrate_memory(e["tech"], float(e["yearly_ec"]), float(e["elec_carbon_g_per_gb"]), _need_ctx(ctx, e["tech"]))


def _storage_entry(e: dict, ctx) -> StorageProductSpec:
    if "alpha_s" in e:
        alpha, epg = float(e["alpha_s"]), float(e["epg"])
        yearly = alpha + epg * ctx.reference_ci if ctx else float(e.get("yearly_ec", alpha))
        return StorageProductSpec(e["product"], e["kind"], yearly, alpha, epg, ctx)
    return calibrate_storage(
        e["product"],
        e["kind"],
        float(e["yearly_ec_g_per_gb"]),
        float(e["other_carbon_g_per_gb"]),
        _need_ctx(ctx, e["product"]),
    )
