"""Carbon intensity of electricity per spatial unit and time bucket.

``CI = sum_k ef_k * E_k / sum_k E_k`` for the generation mix of one bucket.
Buckets are hours, days, seasons or years; coarser series are built either
from raw generation (:func:`intensity_series`) or by energy-weighted
aggregation of a finer series (:func:`aggregate_intensity`). Both routes
agree with pooling the raw mix, which the test-suite checks.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from stecarbon.errors import CoverageError, IntensityError, ResolutionError, ValidationError
from stecarbon.grid_data import (
    EmissionFactorTable,
    EnergySource,
    GenerationDataset,
    RegionRegistry,
    Resolution,
    add_months,
)

__all__ = [
    "BucketKind",
    "SeasonConvention",
    "METEOROLOGICAL_NH",
    "METEOROLOGICAL_SH",
    "TimeBucket",
    "bucket_for",
    "IntensityPoint",
    "IntensitySeries",
    "carbon_intensity",
    "bucketize",
    "intensity_series",
    "aggregate_intensity",
    "zone_intensity",
    "write_intensity_csv",
    "intensity_to_json",
]


class BucketKind(str, Enum):
    HOUR = "hour"
    DAY = "day"
    SEASON = "season"
    YEAR = "year"

    @property
    def rank(self) -> int:
        return list(BucketKind).index(self)

    @property
    def max_resolution(self) -> Resolution:
        """Coarsest record resolution that still nests inside this bucket kind."""
        return {
            BucketKind.HOUR: Resolution.HOUR,
            BucketKind.DAY: Resolution.DAY,
            BucketKind.SEASON: Resolution.MONTH,
            BucketKind.YEAR: Resolution.YEAR,
        }[self]

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SeasonConvention:
    """Seasons as (name, first month) pairs in order within a season-year.

    When the first season starts late in the calendar (December for
    meteorological winter) it opens the *next* season-year, so December 2020
    belongs to ``2021-winter``.
    """

    name: str
    seasons: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.seasons:
            raise ValidationError("season convention needs at least one season")
        months = [m for _, m in self.seasons]
        if any(not 1 <= m <= 12 for m in months) or len(set(months)) != len(months):
            raise ValidationError(f"season convention {self.name}: bad start months {months}")
        offsets = [(m - months[0]) % 12 for m in months]
        if offsets != sorted(offsets):
            raise ValidationError(f"season convention {self.name}: seasons out of order")

    @property
    def _wraps(self) -> bool:
        # first season starts in the calendar year before its label
        return len(self.seasons) > 1 and self.seasons[0][1] > self.seasons[1][1]

    def season_year_start(self, season_year: int) -> datetime:
        start_month = self.seasons[0][1]
        year = season_year - 1 if self._wraps else season_year
        return datetime(year, start_month, 1, tzinfo=timezone.utc)

    def locate(self, ts: datetime) -> tuple[int, int]:
        """(season-year, season index) containing ``ts``."""
        first = self.seasons[0][1]
        season_year = ts.year
        if self._wraps and ts.month >= first:
            season_year += 1
        elif not self._wraps and ts.month < first:
            season_year -= 1
        months_in = (ts.month - first) % 12
        idx = 0
        for i, (_, m) in enumerate(self.seasons):
            if (m - first) % 12 <= months_in:
                idx = i
        return season_year, idx

    def bucket(self, season_year: int, idx: int) -> TimeBucket:
        first = self.seasons[0][1]
        origin = self.season_year_start(season_year)
        lo = (self.seasons[idx][1] - first) % 12
        hi = (self.seasons[idx + 1][1] - first) % 12 if idx + 1 < len(self.seasons) else 12
        name = self.seasons[idx][0]
        return TimeBucket(
            BucketKind.SEASON, f"{season_year}-{name}", add_months(origin, lo), add_months(origin, hi)
        )


METEOROLOGICAL_NH = SeasonConvention(
    "meteorological-nh", (("winter", 12), ("spring", 3), ("summer", 6), ("fall", 9))
)
METEOROLOGICAL_SH = SeasonConvention(
    "meteorological-sh", (("summer", 12), ("fall", 3), ("winter", 6), ("spring", 9))
)
SEASON_CONVENTIONS = {c.name: c for c in (METEOROLOGICAL_NH, METEOROLOGICAL_SH)}


@dataclass(frozen=True, order=True)
class TimeBucket:
    # ordering is chronological first
    start: datetime
    end: datetime
    kind: BucketKind
    key: str

    def __init__(self, kind: BucketKind, key: str, start: datetime, end: datetime):
        if not start < end:
            raise ValidationError(f"bucket {key}: start must precede end")
        object.__setattr__(self, "kind", BucketKind(kind))
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)

    def __repr__(self) -> str:
        return f"TimeBucket({self.kind.value}, {self.key!r})"


def bucket_for(kind: BucketKind, ts: datetime, convention: SeasonConvention = METEOROLOGICAL_NH) -> TimeBucket:
    """The bucket of ``kind`` containing instant ``ts`` (UTC)."""
    kind = BucketKind(kind)
    if kind is BucketKind.HOUR:
        start = ts.replace(minute=0, second=0, microsecond=0)
        return TimeBucket(kind, start.strftime("%Y-%m-%dT%H"), start, Resolution.HOUR.end_of(start))
    if kind is BucketKind.DAY:
        start = ts.replace(hour=0, minute=0, second=0, microsecond=0)
        return TimeBucket(kind, start.strftime("%Y-%m-%d"), start, Resolution.DAY.end_of(start))
    if kind is BucketKind.YEAR:
        start = datetime(ts.year, 1, 1, tzinfo=timezone.utc)
        return TimeBucket(kind, str(ts.year), start, Resolution.YEAR.end_of(start))
    return convention.bucket(*convention.locate(ts))


@dataclass(frozen=True)
class IntensityPoint:
    bucket: TimeBucket
    ci: float  # g CO2 / kWh
    total_energy: float  # kWh


@dataclass(frozen=True)
class IntensitySeries:
    """CI per bucket for one region or zone, chronologically ordered.

    Buckets without generation are absent rather than zero.
    """

    spatial_unit: str
    kind: BucketKind
    points: tuple[IntensityPoint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(sorted(self.points, key=lambda p: p.bucket)))
        for p in self.points:
            if not p.total_energy > 0:
                raise ValidationError(f"{self.spatial_unit} {p.bucket.key}: bucket without generation")
            if p.ci < 0:
                raise ValidationError(f"{self.spatial_unit} {p.bucket.key}: negative intensity")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def by_key(self) -> dict[str, IntensityPoint]:
        return {p.bucket.key: p for p in self.points}


def carbon_intensity(mix: Mapping[EnergySource, float], factors: EmissionFactorTable) -> float:
    """Generation-weighted mean emission factor of ``mix`` (g CO2/kWh)."""
    for src, energy in mix.items():
        if energy < 0:
            raise IntensityError(f"negative energy for {src}")
    total = math.fsum(mix.values())
    if not total > 0:
        raise IntensityError("no generation")
    return math.fsum(factors[src] * e for src, e in mix.items()) / total


def _pick_resolution(dataset: GenerationDataset, region: str, kind: BucketKind) -> Resolution | None:
    available = dataset.resolutions(region)
    if not available:
        return None
    need = kind.max_resolution
    usable = [r for r in available if r.rank <= need.rank]
    if not usable:
        raise ResolutionError(f"resolution: have {available[0]}, need ≤ {need}")
    # coarsest usable: provider totals beat re-aggregated fine data
    return usable[-1]


def bucketize(
    dataset: GenerationDataset,
    region: str,
    kind: BucketKind | str,
    *,
    convention: SeasonConvention = METEOROLOGICAL_NH,
    resolution: Resolution | None = None,
) -> list[tuple[TimeBucket, dict[EnergySource, float]]]:
    """Sum each region's per-source energy into buckets of ``kind``.

    When the region has several resolutions, the coarsest one that nests in
    ``kind`` is used unless ``resolution`` says otherwise (e.g. provider
    yearly totals for year buckets, hourly data for day buckets).
    """
    kind = BucketKind(kind)
    picked = _pick_resolution(dataset, region, kind)
    if picked is None:
        return []
    if resolution is not None:
        resolution = Resolution(resolution)
        if resolution.rank > kind.max_resolution.rank:
            raise ResolutionError(f"resolution: have {resolution}, need ≤ {kind.max_resolution}")
        picked = resolution
    sums: dict[TimeBucket, dict[EnergySource, list[float]]] = defaultdict(lambda: defaultdict(list))
    cache: dict[datetime, TimeBucket] = {}
    for rec in dataset.records_for(region, picked):
        bucket = cache.get(rec.interval_start)
        if bucket is None:
            bucket = cache[rec.interval_start] = bucket_for(kind, rec.interval_start, convention)
        sums[bucket][rec.source].append(rec.energy)
    return [
        (bucket, {src: math.fsum(v) for src, v in sums[bucket].items()}) for bucket in sorted(sums)
    ]


def _point(bucket: TimeBucket, mix: Mapping[EnergySource, float], factors) -> IntensityPoint | None:
    total = math.fsum(mix.values())
    if not total > 0:
        return None
    return IntensityPoint(bucket, carbon_intensity(mix, factors), total)


def intensity_series(
    dataset: GenerationDataset,
    region: str,
    kind: BucketKind | str,
    factors: EmissionFactorTable,
    *,
    convention: SeasonConvention = METEOROLOGICAL_NH,
    resolution: Resolution | None = None,
) -> IntensitySeries:
    kind = BucketKind(kind)
    points = []
    for bucket, mix in bucketize(dataset, region, kind, convention=convention, resolution=resolution):
        p = _point(bucket, mix, factors)
        if p is not None:
            points.append(p)
    return IntensitySeries(region, kind, tuple(points))


def _coarse_bucket(bucket: TimeBucket, to_kind: BucketKind, convention: SeasonConvention) -> TimeBucket:
    if bucket.kind is BucketKind.SEASON and to_kind is BucketKind.YEAR:
        # a winter straddles two calendar years; seasons roll up into their season-year
        season_year = int(bucket.key.split("-", 1)[0])
        start = convention.season_year_start(season_year)
        return TimeBucket(BucketKind.YEAR, str(season_year), start, add_months(start, 12))
    return bucket_for(to_kind, bucket.start, convention)


def aggregate_intensity(
    series: IntensitySeries,
    to_kind: BucketKind | str,
    *,
    convention: SeasonConvention = METEOROLOGICAL_NH,
) -> IntensitySeries:
    """Energy-weighted roll-up of ``series`` into coarser buckets.

    Season buckets aggregate into season-years (December through November
    under the default convention), the only nesting seasons admit.
    """
    to_kind = BucketKind(to_kind)
    if to_kind.rank <= series.kind.rank:
        raise ValidationError(f"cannot aggregate {series.kind} into {to_kind}: target must be coarser")
    groups: dict[TimeBucket, list[IntensityPoint]] = defaultdict(list)
    for p in series.points:
        groups[_coarse_bucket(p.bucket, to_kind, convention)].append(p)
    points = []
    for bucket, members in groups.items():
        energy = math.fsum(p.total_energy for p in members)
        ci = math.fsum(p.ci * p.total_energy for p in members) / energy
        points.append(IntensityPoint(bucket, ci, energy))
    return IntensitySeries(series.spatial_unit, to_kind, tuple(points))


def _check_coverage(dataset: GenerationDataset, regions: Iterable[str], kind: BucketKind, what: str) -> None:
    need = kind.max_resolution
    missing = []
    for region in sorted(regions):
        finest = dataset.resolution(region)
        if finest is None or finest.rank > need.rank:
            missing.append(region)
    if missing:
        raise CoverageError(f"{what}: no {kind}-level data for {', '.join(missing)}")


def zone_intensity(
    dataset: GenerationDataset,
    registry: RegionRegistry,
    zone: str,
    kind: BucketKind | str,
    factors: EmissionFactorTable,
    mode: str = "weighted",
    *,
    convention: SeasonConvention = METEOROLOGICAL_NH,
) -> IntensitySeries:
    """CI of a treaty zone.

    ``weighted`` pools member generation into one mix per bucket;
    ``unweighted`` averages the member CIs of each bucket arithmetically.
    """
    kind = BucketKind(kind)
    if mode not in ("weighted", "unweighted"):
        raise ValidationError(f"unknown zone mode: {mode}")
    members = registry.zone_members(zone)
    _check_coverage(dataset, members, kind, f"zone {zone}")
    if mode == "weighted":
        pooled: dict[TimeBucket, dict[EnergySource, list[float]]] = defaultdict(lambda: defaultdict(list))
        for region in sorted(members):
            for bucket, mix in bucketize(dataset, region, kind, convention=convention):
                for src, e in mix.items():
                    pooled[bucket][src].append(e)
        points = []
        for bucket in sorted(pooled):
            p = _point(bucket, {s: math.fsum(v) for s, v in pooled[bucket].items()}, factors)
            if p is not None:
                points.append(p)
        return IntensitySeries(zone, kind, tuple(points))
    per_bucket: dict[TimeBucket, list[IntensityPoint]] = defaultdict(list)
    for region in sorted(members):
        for p in intensity_series(dataset, region, kind, factors, convention=convention):
            per_bucket[p.bucket].append(p)
    points = [
        IntensityPoint(
            bucket,
            math.fsum(p.ci for p in ps) / len(ps),
            math.fsum(p.total_energy for p in ps),
        )
        for bucket, ps in per_bucket.items()
    ]
    return IntensitySeries(zone, kind, tuple(points))


INTENSITY_CSV_HEADER = ["spatial_unit", "bucket_kind", "bucket_key", "ci_g_per_kwh", "total_energy_kwh"]


def write_intensity_csv(series: IntensitySeries | Sequence[IntensitySeries], out: str | Path | IO[str]) -> None:
    if isinstance(series, IntensitySeries):
        series = [series]
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as fh:
            write_intensity_csv(series, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(INTENSITY_CSV_HEADER)
    for s in series:
        for p in s.points:
            writer.writerow([s.spatial_unit, s.kind.value, p.bucket.key, repr(p.ci), repr(p.total_energy)])


def intensity_to_json(series: IntensitySeries | Sequence[IntensitySeries]) -> str:
    if isinstance(series, IntensitySeries):
        series = [series]
    doc = [
        {
            "spatial_unit": s.spatial_unit,
            "bucket_kind": s.kind.value,
            "buckets": [
                {
                    "key": p.bucket.key,
                    "start": p.bucket.start.isoformat(),
                    "end": p.bucket.end.isoformat(),
                    "ci_g_per_kwh": p.ci,
                    "total_energy_kwh": p.total_energy,
                }
                for p in s.points
            ],
        }
        for s in series
    ]
    return json.dumps(doc, indent=2) + "\n"
