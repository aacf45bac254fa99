"""Electricity-generation data: ingestion, validation and static tables.

Three CSV layouts are accepted and normalised into
:class:`EnergyGenerationRecord` rows measured in kWh with UTC timestamps:

``canonical``
    ``region,interval_start,interval_length,source,energy_kwh``.
``entsoe_like``
    Wide hourly export, a timestamp column followed by one column per
    production type. The region is not in the file and comes from
    ``region_hint``.
``owid_like``
    One row per (region, year), one column per source, in TWh.

Provider labels ("Fossil Gas", "Wind Onshore", "coal_electricity", ...) are
mapped onto the ten :class:`EnergySource` classes through
:data:`SOURCE_ALIASES`. Labels that map to nothing are booked as
``EnergySource.OTHER`` and counted in ``GenerationDataset.alias_warnings``.
"""

from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

from stecarbon.errors import IngestError, ValidationError

__all__ = [
    "EnergySource",
    "Resolution",
    "DEFAULT_EMISSION_FACTORS",
    "SOURCE_ALIASES",
    "EmissionFactorTable",
    "load_emission_factors",
    "EnergyGenerationRecord",
    "GenerationDataset",
    "parse_generation_csv",
    "write_canonical_csv",
    "Region",
    "RegionRegistry",
    "register_zone",
    "load_registry",
    "builtin_registry",
    "parse_utc",
    "add_months",
]


class EnergySource(str, Enum):
    OIL = "oil"
    COAL = "coal"
    NATURAL_GAS = "natural_gas"
    NUCLEAR = "nuclear"
    WIND = "wind"
    SOLAR = "solar"
    HYDRO = "hydro"
    GEOTHERMAL = "geothermal"
    BIOMASS = "biomass"
    OTHER = "other"

    def __str__(self) -> str:
        return self.value


class Resolution(str, Enum):
    """Length of one generation interval, ordered fine to coarse."""

    HOUR = "hour"
    DAY = "day"
    MONTH = "month"
    YEAR = "year"

    @property
    def rank(self) -> int:
        return _RESOLUTION_RANK[self]

    def __str__(self) -> str:
        return self.value

    def is_aligned(self, ts: datetime) -> bool:
        if ts.minute or ts.second or ts.microsecond:
            return False
        if self is Resolution.HOUR:
            return True
        if ts.hour:
            return False
        if self is Resolution.DAY:
            return True
        if ts.day != 1:
            return False
        return self is Resolution.MONTH or ts.month == 1

    def end_of(self, start: datetime) -> datetime:
        if self is Resolution.HOUR:
            return start + timedelta(hours=1)
        if self is Resolution.DAY:
            return start + timedelta(days=1)
        if self is Resolution.MONTH:
            return add_months(start, 1)
        return add_months(start, 12)


_RESOLUTION_RANK = {r: i for i, r in enumerate(Resolution)}


def add_months(ts: datetime, months: int) -> datetime:
    """Shift a month-aligned timestamp by whole months."""
    idx = ts.year * 12 + (ts.month - 1) + months
    return ts.replace(year=idx // 12, month=idx % 12 + 1)


# g CO2 / kWh, direct emission factors
DEFAULT_EMISSION_FACTORS: dict[EnergySource, float] = {
    EnergySource.OIL: 406.0,
    EnergySource.COAL: 760.0,
    EnergySource.NATURAL_GAS: 370.0,
    EnergySource.NUCLEAR: 0.0,
    EnergySource.WIND: 0.0,
    EnergySource.SOLAR: 0.0,
    EnergySource.HYDRO: 0.0,
    EnergySource.GEOTHERMAL: 0.0,
    EnergySource.BIOMASS: 0.0,
    EnergySource.OTHER: 575.0,
}


def _norm_label(label: str) -> str:
    return re.sub(r"[^0-9a-z]+", "_", label.strip().lower()).strip("_")


# Provider label (normalised) -> source class. Keys are matched after
# ``_norm_label`` and after stripping the ENTSO-E / OWID column suffixes.
SOURCE_ALIASES: dict[str, EnergySource] = {
    **{s.value: s for s in EnergySource},
    "natural gas": EnergySource.NATURAL_GAS,
    "gas": EnergySource.NATURAL_GAS,
    "fossil_gas": EnergySource.NATURAL_GAS,
    "lng": EnergySource.NATURAL_GAS,
    "fossil_hard_coal": EnergySource.COAL,
    "fossil_brown_coal_lignite": EnergySource.COAL,
    "fossil_coal_derived_gas": EnergySource.COAL,
    "fossil_peat": EnergySource.COAL,
    "hard_coal": EnergySource.COAL,
    "lignite": EnergySource.COAL,
    "peat": EnergySource.COAL,
    "fossil_oil": EnergySource.OIL,
    "fossil_oil_shale": EnergySource.OIL,
    "diesel": EnergySource.OIL,
    "petroleum": EnergySource.OIL,
    "wind_onshore": EnergySource.WIND,
    "wind_offshore": EnergySource.WIND,
    "solar_pv": EnergySource.SOLAR,
    "hydro_run_of_river_and_poundage": EnergySource.HYDRO,
    "hydro_water_reservoir": EnergySource.HYDRO,
    "hydro_pumped_storage": EnergySource.HYDRO,
    "biofuel": EnergySource.BIOMASS,
    "bioenergy": EnergySource.BIOMASS,
    # provider "other" buckets take the generic other factor
    "other_renewable": EnergySource.OTHER,
    "other_renewable_exclude_biofuel": EnergySource.OTHER,
    "other_renewables": EnergySource.OTHER,
}
SOURCE_ALIASES = {_norm_label(k): v for k, v in SOURCE_ALIASES.items()}

# Aggregate columns that would double count if ingested as a source.
_AGGREGATE_COLUMNS = frozenset(
    {
        "fossil",
        "renewables",
        "low_carbon",
        "electricity_generation",
        "generation",
        "total",
        "electricity_demand",
        "net_imports",
        "greenhouse_gas_emissions",
        "carbon_intensity_elec",
        "population",
        "gdp",
    }
)

_UNIT_TO_KWH = {"kwh": 1.0, "mwh": 1e3, "mw": 1e3, "gwh": 1e6, "twh": 1e9}


def _unit_factor(unit: str) -> float:
    try:
        return _UNIT_TO_KWH[unit.strip().lower()]
    except KeyError:
        raise ValidationError(f"unknown energy unit: {unit}") from None


def _strict_source(label: str) -> EnergySource:
    try:
        return EnergySource(_norm_label(label))
    except ValueError:
        raise ValidationError(f"unknown source: {label}") from None


@dataclass(frozen=True)
class EmissionFactorTable:
    """Total map from every :class:`EnergySource` to g CO2/kWh."""

    factors: Mapping[EnergySource, float]

    def __post_init__(self):
        factors = {}
        for src, value in self.factors.items():
            src = src if isinstance(src, EnergySource) else _strict_source(src)
            value = float(value)
            if not math.isfinite(value):
                raise ValidationError(f"non-finite factor: {src}")
            if value < 0:
                raise ValidationError(f"negative factor: {src}")
            factors[src] = value
        missing = [s.value for s in EnergySource if s not in factors]
        if missing:
            raise ValidationError(f"missing factor: {', '.join(missing)}")
        object.__setattr__(self, "factors", {s: factors[s] for s in EnergySource})

    @classmethod
    def builtin(cls) -> EmissionFactorTable:
        return cls(DEFAULT_EMISSION_FACTORS)

    def __getitem__(self, source: EnergySource) -> float:
        return self.factors[source]

    @property
    def max_factor(self) -> float:
        return max(self.factors.values())

    def to_dict(self) -> dict[str, float]:
        return {s.value: v for s, v in self.factors.items()}


def load_emission_factors(path: str | Path) -> EmissionFactorTable:
    """Load a source -> g/kWh table, or the bundled defaults for ``"builtin"``.

    The file is a flat JSON object. Every source class must be present;
    unknown names and negative factors are rejected.
    """
    if str(path) == "builtin":
        return EmissionFactorTable.builtin()
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected a JSON object of source -> factor")
    factors = {}
    for name, value in doc.items():
        src = _strict_source(name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"non-numeric factor: {name}")
        if value < 0:
            raise ValidationError(f"negative factor: {src}")
        factors[src] = value
    return EmissionFactorTable(factors)


@dataclass(frozen=True, order=True)
class EnergyGenerationRecord:
    """Energy generated by one source in one region over one interval."""

    region: str
    interval_start: datetime
    interval_length: Resolution
    source: EnergySource
    energy: float  # kWh

    def __post_init__(self):
        if not self.region:
            raise ValidationError("empty region")
        ts = self.interval_start
        if ts.tzinfo is None or ts.utcoffset() != timedelta(0):
            raise ValidationError("interval_start must be UTC")
        if not isinstance(self.interval_length, Resolution):
            object.__setattr__(self, "interval_length", Resolution(self.interval_length))
        if not isinstance(self.source, EnergySource):
            object.__setattr__(self, "source", EnergySource(self.source))
        if not self.interval_length.is_aligned(ts):
            raise ValidationError(f"interval_start not aligned to {self.interval_length}")
        if not math.isfinite(self.energy):
            raise ValidationError("non-finite energy")
        if self.energy < 0:
            raise ValidationError("negative energy")

    @property
    def key(self) -> tuple[str, datetime, Resolution, EnergySource]:
        return (self.region, self.interval_start, self.interval_length, self.source)

    @property
    def interval_end(self) -> datetime:
        return self.interval_length.end_of(self.interval_start)


@dataclass(frozen=True)
class GenerationDataset:
    """Immutable collection of generation records with a per-region index.

    Records of different resolutions may describe the same period (a yearly
    provider total next to hourly data); within one (region, resolution) the
    intervals never overlap.
    """

    records: tuple[EnergyGenerationRecord, ...] = ()
    provenance: tuple[str, ...] = ()
    alias_warnings: Mapping[str, int] = field(default_factory=dict)
    row_errors: tuple[str, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        records = tuple(sorted(self.records))
        index: dict[str, dict[Resolution, list[EnergyGenerationRecord]]] = defaultdict(
            lambda: defaultdict(list)
        )
        seen = set()
        for rec in records:
            if rec.key in seen:
                raise ValidationError(
                    f"duplicate record: {rec.region} {rec.interval_start.isoformat()} "
                    f"{rec.interval_length} {rec.source}"
                )
            seen.add(rec.key)
            index[rec.region][rec.interval_length].append(rec)
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "alias_warnings", dict(self.alias_warnings))
        object.__setattr__(
            self, "_index", {r: {res: tuple(v) for res, v in d.items()} for r, d in index.items()}
        )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EnergyGenerationRecord]:
        return iter(self.records)

    @property
    def warning_count(self) -> int:
        return sum(self.alias_warnings.values()) + len(self.row_errors)

    def regions(self) -> list[str]:
        return sorted(self._index)

    def resolutions(self, region: str) -> list[Resolution]:
        return sorted(self._index.get(region, {}), key=lambda r: r.rank)

    def resolution(self, region: str) -> Resolution | None:
        """Finest resolution present for ``region``."""
        res = self.resolutions(region)
        return res[0] if res else None

    def records_for(
        self, region: str, resolution: Resolution | None = None
    ) -> tuple[EnergyGenerationRecord, ...]:
        by_res = self._index.get(region, {})
        if resolution is not None:
            return by_res.get(resolution, ())
        return tuple(sorted(r for recs in by_res.values() for r in recs))

    def coverage(self, region: str) -> dict[Resolution, tuple[datetime, datetime]]:
        """Temporal span ``[first start, last end)`` per resolution."""
        out = {}
        for res in self.resolutions(region):
            recs = self._index[region][res]
            out[res] = (recs[0].interval_start, max(r.interval_end for r in recs))
        return out

    def totals(self, region: str, resolution: Resolution) -> dict[datetime, float]:
        """Total generation E(s, t) per interval start."""
        sums: dict[datetime, list[float]] = defaultdict(list)
        for rec in self.records_for(region, resolution):
            sums[rec.interval_start].append(rec.energy)
        return {ts: math.fsum(v) for ts, v in sums.items()}

    @classmethod
    def merge(cls, *datasets: GenerationDataset) -> GenerationDataset:
        warnings: Counter = Counter()
        for ds in datasets:
            warnings.update(ds.alias_warnings)
        return cls(
            records=tuple(r for ds in datasets for r in ds.records),
            provenance=tuple(p for ds in datasets for p in ds.provenance),
            alias_warnings=dict(warnings),
            row_errors=tuple(e for ds in datasets for e in ds.row_errors),
        )


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp that carries an offset, returning UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError("timestamp lacks UTC offset")
    return ts.astimezone(timezone.utc)


def _parse_entsoe_time(text: str, utc_header: bool) -> datetime:
    # "01.01.2021 00:00 - 01.01.2021 01:00" (ENTSO-E MTU) or plain ISO
    text = text.strip()
    if " - " in text:
        text = text.split(" - ")[0].strip()
        if text.endswith("(UTC)"):
            text, utc_header = text[:-5].strip(), True
        try:
            ts = datetime.strptime(text, "%d.%m.%Y %H:%M")
        except ValueError:
            return parse_utc(text)
        if not utc_header:
            raise ValueError("timestamp lacks UTC offset")
        return ts.replace(tzinfo=timezone.utc)
    return parse_utc(text)


class _RowSink:
    """Collects records and row errors while a file is read."""

    def __init__(self, path: str, aliases: Mapping[str, EnergySource]):
        self.path = path
        self.aliases = aliases
        self.records: dict[tuple, EnergyGenerationRecord] = {}
        self.row_of: dict[tuple, int] = {}
        self.errors: list[str] = []
        self.warnings: Counter = Counter()

    def source(self, label: str) -> EnergySource:
        src = self.aliases.get(_norm_label(label))
        if src is None:
            self.warnings[label] += 1
            return EnergySource.OTHER
        return src

    def add(self, row: int, record: EnergyGenerationRecord, *, accumulate: bool = False):
        key = record.key
        if key in self.records:
            if not accumulate:
                self.errors.append(f"row {row}: duplicate record (first seen row {self.row_of[key]})")
                return
            prev = self.records[key]
            record = replace(prev, energy=prev.energy + record.energy)
        else:
            self.row_of[key] = row
        self.records[key] = record

    def finish(self, provenance: str, lenient: bool) -> GenerationDataset:
        if self.errors and not lenient:
            raise IngestError(self.path, self.errors)
        return GenerationDataset(
            records=tuple(self.records.values()),
            provenance=(provenance,),
            alias_warnings=dict(self.warnings),
            row_errors=tuple(self.errors),
        )


def _energy(text: str, factor: float) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite energy")
    if value < 0:
        raise ValueError("negative energy")
    return value * factor


def _is_missing(cell: str | None) -> bool:
    return cell is None or cell.strip().lower() in ("", "n/e", "n/a", "na", "nan", "-")


def _read_canonical(reader, sink: _RowSink, factor: float, region_hint):
    expected = ["region", "interval_start", "interval_length", "source", "energy_kwh"]
    header = [h.strip() for h in (reader.fieldnames or [])]
    if header[:5] != expected:
        raise IngestError(sink.path, [f"row 1: expected header {','.join(expected)}"])
    for row_no, row in enumerate(reader, start=2):
        try:
            region = (row["region"] or "").strip() or region_hint
            if not region:
                raise ValueError("unresolvable region")
            res = Resolution((row["interval_length"] or "").strip().lower())
            rec = EnergyGenerationRecord(
                region=region,
                interval_start=parse_utc(row["interval_start"] or ""),
                interval_length=res,
                source=sink.source(row["source"] or ""),
                energy=_energy(row["energy_kwh"] or "", factor),
            )
        except (ValueError, TypeError) as exc:
            sink.errors.append(f"row {row_no}: {_describe(exc)}")
            continue
        sink.add(row_no, rec)


def _describe(exc: Exception) -> str:
    msg = str(exc)
    if "is not a valid Resolution" in msg:
        return "interval_length must be one of hour, day, month, year"
    if msg.startswith("could not convert string to float"):
        return "malformed energy"
    if "Invalid isoformat" in msg or "does not match format" in msg:
        return "malformed timestamp"
    return msg


def _entsoe_column_label(header: str) -> str | None:
    """Production-type label of a wide ENTSO-E column, or None to skip it."""
    label = header.strip()
    low = label.lower()
    if "consumption" in low:
        return None
    label = re.sub(r"\[.*?\]", "", label)
    label = re.sub(r"-\s*actual aggregated", "", label, flags=re.I)
    return label.strip(" -") or None


def _read_entsoe(reader, sink: _RowSink, factor: float, region_hint):
    header = reader.fieldnames or []
    if not header:
        raise IngestError(sink.path, ["row 1: empty header"])
    if not region_hint:
        raise IngestError(sink.path, ["row 1: entsoe_like files need a region hint"])
    time_col = header[0]
    utc_header = "utc" in time_col.lower()
    columns = []
    for col in header[1:]:
        if col is None or _norm_label(col) in ("area", "region"):
            continue
        label = _entsoe_column_label(col)
        if label is not None:
            columns.append((col, sink.source(label)))
    for row_no, row in enumerate(reader, start=2):
        try:
            ts = _entsoe_time_or_raise(row[time_col], utc_header)
        except ValueError as exc:
            sink.errors.append(f"row {row_no}: {_describe(exc)}")
            continue
        for col, src in columns:
            cell = row.get(col)
            if _is_missing(cell):
                continue
            try:
                rec = EnergyGenerationRecord(region_hint, ts, Resolution.HOUR, src, _energy(cell, factor))
            except ValueError as exc:
                sink.errors.append(f"row {row_no}: {_describe(exc)} ({col.strip()})")
                continue
            # several provider columns can feed one source class
            sink.add(row_no, rec, accumulate=True)


def _entsoe_time_or_raise(cell: str | None, utc_header: bool) -> datetime:
    if _is_missing(cell):
        raise ValueError("malformed timestamp")
    ts = _parse_entsoe_time(cell, utc_header)
    if not Resolution.HOUR.is_aligned(ts):
        raise ValueError("interval_start not aligned to hour")
    return ts


_OWID_ID_COLUMNS = ("country", "region", "entity", "iso_code", "code", "year")


def _owid_source_label(col: str) -> str | None:
    label = _norm_label(col)
    if label in _OWID_ID_COLUMNS:
        return None
    for suffix in ("_electricity", "_twh", "_generation"):
        if label.endswith(suffix) and label != suffix.strip("_"):
            label = label[: -len(suffix)]
    if label in _AGGREGATE_COLUMNS:
        return None
    return label


def _read_owid(reader, sink: _RowSink, factor: float, region_hint, registry):
    header = reader.fieldnames or []
    norm = {_norm_label(h): h for h in header}
    if "year" not in norm:
        raise IngestError(sink.path, ["row 1: owid_like files need a year column"])
    name_col = next((norm[c] for c in ("country", "region", "entity") if c in norm), None)
    code_col = next((norm[c] for c in ("iso_code", "code") if c in norm), None)
    columns = []
    for col in header:
        label = _owid_source_label(col)
        if label is not None:
            columns.append((col, sink.source(label)))
    for row_no, row in enumerate(reader, start=2):
        name = (row.get(name_col) or "").strip() if name_col else ""
        code = (row.get(code_col) or "").strip() if code_col else ""
        region = _resolve_region(name, code, region_hint, registry)
        if region is None:
            sink.errors.append(f"row {row_no}: unresolvable region {name or code!r}")
            continue
        try:
            year = int((row.get(norm["year"]) or "").strip())
            ts = datetime(year, 1, 1, tzinfo=timezone.utc)
        except ValueError:
            sink.errors.append(f"row {row_no}: malformed year")
            continue
        for col, src in columns:
            cell = row.get(col)
            if _is_missing(cell):
                continue
            try:
                rec = EnergyGenerationRecord(region, ts, Resolution.YEAR, src, _energy(cell, factor))
            except ValueError as exc:
                sink.errors.append(f"row {row_no}: {_describe(exc)} ({col})")
                continue
            sink.add(row_no, rec, accumulate=True)


def _resolve_region(name, code, hint, registry):
    if registry is not None:
        for label in (code, name):
            if label:
                found = registry.resolve(label)
                if found is not None:
                    return found
        if hint and registry.resolve(hint):
            return registry.resolve(hint)
        return None
    return code or hint or name or None


_READERS = {"canonical", "entsoe_like", "owid_like"}
_DEFAULT_UNITS = {"canonical": "kWh", "entsoe_like": "MWh", "owid_like": "TWh"}


def parse_generation_csv(
    path: str | Path,
    schema: str = "canonical",
    region_hint: str | None = None,
    *,
    lenient: bool = False,
    registry: RegionRegistry | None = None,
    unit: str | None = None,
    aliases: Mapping[str, EnergySource | str] | None = None,
) -> GenerationDataset:
    """Read one generation CSV into a :class:`GenerationDataset`.

    Parameters
    ----------
    path
        CSV file.
    schema
        ``canonical``, ``entsoe_like`` or ``owid_like``.
    region_hint
        Region id used when the file carries none (always for
        ``entsoe_like``).
    lenient
        Skip bad rows instead of failing; skipped rows are kept in
        ``row_errors``.
    registry
        When given, region names/codes in the file are resolved through it
        and unknown regions are row errors.
    unit
        Energy unit of the values; defaults to kWh, MWh and TWh for the
        three schemas respectively.
    aliases
        Extra provider-label mappings layered over :data:`SOURCE_ALIASES`.

    Raises
    ------
    IngestError
        If any row failed and ``lenient`` is false. Row numbers count the
        header as row 1.
    """
    if schema not in _READERS:
        raise ValidationError(f"unknown schema: {schema} (expected one of {sorted(_READERS)})")
    table = dict(SOURCE_ALIASES)
    for label, src in (aliases or {}).items():
        table[_norm_label(label)] = EnergySource(src)
    factor = _unit_factor(unit or _DEFAULT_UNITS[schema])
    sink = _RowSink(str(path), table)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if schema == "canonical":
            _read_canonical(reader, sink, factor, region_hint)
        elif schema == "entsoe_like":
            _read_entsoe(reader, sink, factor, region_hint)
        else:
            _read_owid(reader, sink, factor, region_hint, registry)
    return sink.finish(f"{schema}:{Path(path).name}", lenient)


def _fmt_ts(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def write_canonical_csv(dataset: GenerationDataset, out: str | Path | IO[str]) -> None:
    """Serialise records in the canonical layout, one row per record."""
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as fh:
            write_canonical_csv(dataset, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["region", "interval_start", "interval_length", "source", "energy_kwh"])
    for rec in dataset.records:
        writer.writerow(
            [rec.region, _fmt_ts(rec.interval_start), rec.interval_length.value, rec.source.value, repr(rec.energy)]
        )


@dataclass(frozen=True)
class Region:
    id: str
    name: str
    country_code: str = ""


@dataclass(frozen=True)
class RegionRegistry:
    """Known regions and the treaty zones grouping them.

    Registries are values: the ``register_*`` methods return new instances.
    """

    regions: Mapping[str, Region] = field(default_factory=dict)
    zones: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "regions", dict(self.regions))
        object.__setattr__(self, "zones", {z: frozenset(m) for z, m in self.zones.items()})
        for zone, members in self.zones.items():
            _check_zone(self, zone, members)

    def register_region(self, id: str, name: str | None = None, country_code: str = "") -> RegionRegistry:
        if not id:
            raise ValidationError("empty region id")
        regions = dict(self.regions)
        regions[id] = Region(id, name or id, country_code)
        return RegionRegistry(regions, self.zones)

    def register_zone(self, zone: str, members: Iterable[str]) -> RegionRegistry:
        return register_zone(self, zone, members)

    def zone_members(self, zone: str) -> frozenset[str]:
        try:
            return self.zones[zone]
        except KeyError:
            raise ValidationError(f"unknown zone: {zone}") from None

    def is_zone(self, unit: str) -> bool:
        return unit in self.zones

    def zones_of(self, region: str) -> list[str]:
        return sorted(z for z, m in self.zones.items() if region in m)

    def resolve(self, label: str) -> str | None:
        """Region id for an id, display name or country code (case-insensitive)."""
        if label in self.regions:
            return label
        low = label.strip().lower()
        for reg in self.regions.values():
            if low in (reg.id.lower(), reg.name.lower()) or (reg.country_code and low == reg.country_code.lower()):
                return reg.id
        return None


def _check_zone(registry: RegionRegistry, zone: str, members) -> None:
    if not zone:
        raise ValidationError("empty zone id")
    if not members:
        raise ValidationError(f"zone {zone}: empty member list")
    unknown = sorted(m for m in members if m not in registry.regions)
    if unknown:
        raise ValidationError(f"zone {zone}: unknown member region(s) {', '.join(unknown)}")


def register_zone(registry: RegionRegistry, zone: str, members: Iterable[str]) -> RegionRegistry:
    """Return ``registry`` with ``zone`` bound to ``members``.

    Re-registering a zone with the same members is a no-op; different
    members replace the old set.
    """
    members = frozenset(members)
    _check_zone(registry, zone, members)
    zones = dict(registry.zones)
    zones[zone] = members
    return RegionRegistry(registry.regions, zones)


def load_registry(path: str | Path) -> RegionRegistry:
    """Load a registry JSON document.

    ``{"regions": [{"id": "IE", "name": "Ireland", "country_code": "IE"}, ...],
    "zones": {"EU": ["IE", "IT"]}}``
    """
    if str(path) == "builtin":
        return builtin_registry()
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    registry = RegionRegistry()
    for entry in doc.get("regions", []):
        if isinstance(entry, str):
            registry = registry.register_region(entry)
        else:
            registry = registry.register_region(
                entry["id"], entry.get("name"), entry.get("country_code", "")
            )
    for zone, members in doc.get("zones", {}).items():
        registry = register_zone(registry, zone, members)
    return registry


def builtin_registry() -> RegionRegistry:
    """The six IC-production countries plus the two provider zone aggregates."""
    registry = RegionRegistry()
    for rid, name in [
        ("TW", "Taiwan"),
        ("CN", "China"),
        ("KR", "South Korea"),
        ("US", "United States"),
        ("IT", "Italy"),
        ("IE", "Ireland"),
    ]:
        registry = registry.register_region(rid, name, rid)
    registry = registry.register_region("EU27", "European Union (27)")
    registry = registry.register_region("ASEAN10", "ASEAN (Ember)")
    registry = register_zone(registry, "EU", ["EU27"])
    return register_zone(registry, "ASEAN", ["ASEAN10"])
