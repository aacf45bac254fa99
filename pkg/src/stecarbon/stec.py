"""Spatial-temporal embodied carbon at a chosen granularity cell.

Four cells are modelled::

               day       season    year
    country    STEC-CD   STEC-CS   -
    zone       x         x         STEC-ZY
    global     x         x         STEC-GY

STEC-GY is the conventional constant-CI estimate and serves as the
baseline every other cell is compared against.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Sequence

from stecarbon.errors import CoverageError, UnsupportedGranularityError, ValidationError
from stecarbon.grid_data import EmissionFactorTable, GenerationDataset, RegionRegistry
from stecarbon.hardware import HardwareSpec, embodied, unit_of_measure
from stecarbon.intensity import (
    METEOROLOGICAL_NH,
    BucketKind,
    IntensitySeries,
    SeasonConvention,
    TimeBucket,
    intensity_series,
    zone_intensity,
)

__all__ = [
    "SpatialLevel",
    "TemporalLevel",
    "GranularitySpec",
    "StecPoint",
    "StecSeries",
    "ComparisonReport",
    "AffineFit",
    "evaluate",
    "unit_intensity",
    "baseline_ci",
    "baseline_gy",
    "compare",
    "affine_consistency_check",
    "write_series_csv",
    "write_summary_csv",
    "report_to_json",
]


class SpatialLevel(str, Enum):
    COUNTRY = "country"
    TREATY_ZONE = "treaty_zone"
    GLOBAL = "global"


class TemporalLevel(str, Enum):
    DAY = "day"
    SEASON = "season"
    YEAR = "year"


MODEL_CELLS = {
    (SpatialLevel.COUNTRY, TemporalLevel.DAY): "STEC-CD",
    (SpatialLevel.COUNTRY, TemporalLevel.SEASON): "STEC-CS",
    (SpatialLevel.TREATY_ZONE, TemporalLevel.YEAR): "STEC-ZY",
    (SpatialLevel.GLOBAL, TemporalLevel.YEAR): "STEC-GY",
}
_SPATIAL_CODES = {"c": SpatialLevel.COUNTRY, "z": SpatialLevel.TREATY_ZONE, "t": SpatialLevel.TREATY_ZONE, "g": SpatialLevel.GLOBAL}
_TEMPORAL_CODES = {"d": TemporalLevel.DAY, "s": TemporalLevel.SEASON, "y": TemporalLevel.YEAR}
GLOBAL_UNIT = "global"


def _unsupported(what: str) -> UnsupportedGranularityError:
    return UnsupportedGranularityError(
        f"unsupported granularity: {what} (supported: {', '.join(MODEL_CELLS.values())})"
    )


@dataclass(frozen=True)
class GranularitySpec:
    """A supported (spatial, temporal) cell bound to concrete units and a period.

    For STEC-GY the units are the spatial units whose yearly CIs are
    averaged into the global figure.
    """

    spatial: SpatialLevel
    temporal: TemporalLevel
    spatial_units: tuple[str, ...] = ()
    period: tuple[datetime, datetime] | None = None

    def __post_init__(self):
        try:
            spatial, temporal = SpatialLevel(self.spatial), TemporalLevel(self.temporal)
        except ValueError:
            raise _unsupported(f"{self.spatial}/{self.temporal}") from None
        if (spatial, temporal) not in MODEL_CELLS:
            raise _unsupported(f"{spatial.value}/{temporal.value}")
        object.__setattr__(self, "spatial", spatial)
        object.__setattr__(self, "temporal", temporal)
        object.__setattr__(self, "spatial_units", tuple(self.spatial_units))
        if self.period is not None and not self.period[0] < self.period[1]:
            raise ValidationError("period start must precede its end")

    @classmethod
    def from_model(cls, code: str, units: Iterable[str] = (), period=None) -> GranularitySpec:
        """Build from a short model code such as ``cd`` or ``STEC-ZY``."""
        raw = code.strip().lower()
        if raw.startswith("stec-"):
            raw = raw[5:]
        if len(raw) != 2 or raw[0] not in _SPATIAL_CODES or raw[1] not in _TEMPORAL_CODES:
            raise _unsupported(code)
        return cls(_SPATIAL_CODES[raw[0]], _TEMPORAL_CODES[raw[1]], tuple(units), period)

    @property
    def label(self) -> str:
        return MODEL_CELLS[(self.spatial, self.temporal)]

    @property
    def bucket_kind(self) -> BucketKind:
        return BucketKind(self.temporal.value)

    def in_period(self, bucket: TimeBucket) -> bool:
        if self.period is None:
            return True
        return self.period[0] <= bucket.start < self.period[1]


@dataclass(frozen=True)
class StecPoint:
    unit: str
    bucket: TimeBucket
    ci: float
    embodied: float


@dataclass(frozen=True)
class StecSeries:
    hardware: HardwareSpec
    granularity: GranularitySpec
    points: tuple[StecPoint, ...]
    label: str = ""

    @property
    def hardware_label(self) -> str:
        return self.label or self.hardware.label

    @property
    def unit_of_measure(self) -> str:
        return unit_of_measure(self.hardware)

    def values(self) -> list[float]:
        return [p.embodied for p in self.points]


class PointDiff(NamedTuple):
    unit: str
    bucket_key: str
    value: float
    diff_pct: float


@dataclass(frozen=True)
class ComparisonReport:
    hardware: str
    model: str
    baseline: float
    avg_diff_pct: float
    max_diff_pct: float
    per_point: tuple[PointDiff, ...] = ()
    coverage: float = 1.0


class AffineFit(NamedTuple):
    slope: float
    intercept: float
    max_residual: float


def unit_intensity(
    dataset: GenerationDataset,
    registry: RegionRegistry | None,
    unit: str,
    kind: BucketKind,
    factors: EmissionFactorTable,
    *,
    convention: SeasonConvention = METEOROLOGICAL_NH,
    zone_mode: str = "weighted",
) -> IntensitySeries:
    """CI series of a region, or of a zone when ``unit`` names one."""
    if registry is not None and registry.is_zone(unit):
        return zone_intensity(dataset, registry, unit, kind, factors, zone_mode, convention=convention)
    return intensity_series(dataset, unit, kind, factors, convention=convention)


def _default_units(granularity: GranularitySpec, dataset, registry) -> tuple[str, ...]:
    if granularity.spatial is SpatialLevel.TREATY_ZONE:
        if registry is None or not registry.zones:
            raise CoverageError("no treaty zones registered")
        return tuple(sorted(registry.zones))
    if granularity.spatial is SpatialLevel.GLOBAL and registry is not None and registry.zones:
        return tuple(sorted(registry.zones))
    return tuple(dataset.regions())


def evaluate(
    hardware: HardwareSpec,
    granularity: GranularitySpec,
    dataset: GenerationDataset,
    registry: RegionRegistry | None,
    factors: EmissionFactorTable,
    *,
    convention: SeasonConvention = METEOROLOGICAL_NH,
    zone_mode: str = "weighted",
    baseline_mode: str = "unweighted",
    label: str = "",
) -> StecSeries:
    """Embodied carbon of ``hardware`` for every (unit, bucket) of the cell."""
    units = granularity.spatial_units or _default_units(granularity, dataset, registry)
    kind = granularity.bucket_kind
    points: list[StecPoint] = []
    if granularity.spatial is SpatialLevel.GLOBAL:
        years = sorted(
            {p.bucket for u in units for p in _unit_series(dataset, registry, u, kind, factors, convention, zone_mode)}
        )
        for bucket in years:
            if not granularity.in_period(bucket):
                continue
            try:
                ci = baseline_ci(dataset, registry, units, int(bucket.key), factors, baseline_mode, zone_mode=zone_mode)
            except CoverageError:
                continue
            points.append(StecPoint(GLOBAL_UNIT, bucket, ci, embodied(hardware, ci)))
    else:
        for unit in units:
            if granularity.spatial is SpatialLevel.TREATY_ZONE and (registry is None or not registry.is_zone(unit)):
                raise ValidationError(f"{unit} is not a registered treaty zone")
            if granularity.spatial is SpatialLevel.COUNTRY and registry is not None and registry.is_zone(unit):
                raise ValidationError(f"{unit} is a treaty zone, not a country")
            for p in _unit_series(dataset, registry, unit, kind, factors, convention, zone_mode):
                if granularity.in_period(p.bucket):
                    points.append(StecPoint(unit, p.bucket, p.ci, embodied(hardware, p.ci)))
    return StecSeries(hardware, granularity, tuple(points), label)


def _unit_series(dataset, registry, unit, kind, factors, convention, zone_mode) -> IntensitySeries:
    series = unit_intensity(dataset, registry, unit, kind, factors, convention=convention, zone_mode=zone_mode)
    if not series.points:
        raise CoverageError(f"no generation data for {unit}")
    return series


def baseline_ci(
    dataset: GenerationDataset,
    registry: RegionRegistry | None,
    units: Sequence[str],
    year: int,
    factors: EmissionFactorTable,
    mode: str = "unweighted",
    *,
    zone_mode: str = "weighted",
) -> float:
    """Single yearly CI standing for all ``units``.

    ``unweighted`` is the arithmetic mean of the units' yearly CIs;
    ``weighted`` pools their generation.
    """
    if mode not in ("unweighted", "weighted"):
        raise ValidationError(f"unknown baseline mode: {mode}")
    if not units:
        raise ValidationError("baseline needs at least one spatial unit")
    key = str(year)
    found, missing = [], []
    for unit in units:
        try:
            series = unit_intensity(dataset, registry, unit, BucketKind.YEAR, factors, zone_mode=zone_mode)
        except CoverageError:
            missing.append(unit)
            continue
        point = series.by_key().get(key)
        if point is None:
            missing.append(unit)
        else:
            found.append(point)
    if missing:
        raise CoverageError(f"baseline {year}: no yearly data for {', '.join(missing)}")
    if mode == "unweighted":
        return math.fsum(p.ci for p in found) / len(found)
    energy = math.fsum(p.total_energy for p in found)
    return math.fsum(p.ci * p.total_energy for p in found) / energy


def baseline_gy(
    hardware: HardwareSpec,
    dataset: GenerationDataset,
    registry: RegionRegistry | None,
    units: Sequence[str],
    year: int,
    factors: EmissionFactorTable,
    mode: str = "unweighted",
    *,
    zone_mode: str = "weighted",
) -> float:
    """Embodied carbon under the single global yearly CI."""
    return embodied(hardware, baseline_ci(dataset, registry, units, year, factors, mode, zone_mode=zone_mode))


def compare(series: StecSeries, baseline: float, *, label: str | None = None) -> ComparisonReport:
    """Relative deviation of every point from ``baseline``, in percent."""
    if not series.points:
        raise CoverageError("cannot compare an empty series")
    if not (math.isfinite(baseline) and baseline > 0):
        raise ValidationError(f"baseline must be positive, got {baseline}")
    per_point = tuple(
        PointDiff(p.unit, p.bucket.key, p.embodied, abs(p.embodied - baseline) / baseline * 100.0)
        for p in series.points
    )
    diffs = [d.diff_pct for d in per_point]
    units = {p.unit for p in series.points}
    keys = {p.bucket.key for p in series.points}
    return ComparisonReport(
        hardware=label or series.hardware_label,
        model=series.granularity.label,
        baseline=baseline,
        avg_diff_pct=math.fsum(diffs) / len(diffs),
        max_diff_pct=max(diffs),
        per_point=per_point,
        coverage=len(per_point) / (len(units) * len(keys)),
    )


def affine_consistency_check(pairs: Sequence[tuple[float, float]]) -> AffineFit:
    """Least-squares line through (ci, embodied) pairs and its worst residual."""
    if len(pairs) < 2:
        raise ValidationError("affine fit needs at least two points")
    xs = [float(x) for x, _ in pairs]
    ys = [float(y) for _, y in pairs]
    n = len(xs)
    mx, my = math.fsum(xs) / n, math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        raise ValidationError("affine fit is degenerate: all carbon intensities are equal")
    slope = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    intercept = my - slope * mx
    residual = max(abs(y - (intercept + slope * x)) for x, y in zip(xs, ys))
    return AffineFit(slope, intercept, residual)


def write_series_csv(series: StecSeries | Sequence[StecSeries], out: str | Path | IO[str]) -> None:
    """``unit,bucket_key,embodied,unit_of_measure`` rows for plotting."""
    if isinstance(series, StecSeries):
        series = [series]
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as fh:
            write_series_csv(series, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["unit", "bucket_key", "embodied", "unit_of_measure"])
    for s in series:
        for p in s.points:
            writer.writerow([p.unit, p.bucket.key, repr(p.embodied), s.unit_of_measure])


def write_summary_csv(reports: Sequence[ComparisonReport], out: str | Path | IO[str] | None = None) -> str:
    """Per-hardware average/maximum difference table with two decimals.

    Several reports get a trailing ``Average`` row. Returns the CSV text and
    writes it to ``out`` when given.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["hardware", "avg_diff_pct", "max_diff_pct"])
    for r in reports:
        writer.writerow([r.hardware, f"{r.avg_diff_pct:.2f}", f"{r.max_diff_pct:.2f}"])
    if len(reports) > 1:
        avg = math.fsum(r.avg_diff_pct for r in reports) / len(reports)
        mx = math.fsum(r.max_diff_pct for r in reports) / len(reports)
        writer.writerow(["Average", f"{avg:.2f}", f"{mx:.2f}"])
    text = buf.getvalue()
    if isinstance(out, (str, Path)):
        Path(out).write_text(text, encoding="utf-8")
    elif out is not None:
        out.write(text)
    return text


def report_to_json(reports: ComparisonReport | Sequence[ComparisonReport]) -> str:
    if isinstance(reports, ComparisonReport):
        reports = [reports]
    doc = [
        {
            "hardware": r.hardware,
            "model": r.model,
            "baseline": r.baseline,
            "avg_diff_pct": r.avg_diff_pct,
            "max_diff_pct": r.max_diff_pct,
            "coverage": r.coverage,
            "per_point": [d._asdict() for d in r.per_point],
        }
        for r in reports
    ]
    return json.dumps(doc, indent=2) + "\n"
