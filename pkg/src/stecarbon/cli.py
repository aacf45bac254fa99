"""``stec`` command line: ingest -> intensity -> embodied carbon -> reports.

Exit codes: 0 success, 1 internal error, 2 user or data error.

The project file is INI::

    [project]
    emission_factors = builtin          ; or a JSON file
    registry = registry.json            ; or builtin
    hardware = hardware.json            ; or builtin
    reference_ci = 500                  ; calibration CI for builtin memory/storage
    season_convention = meteorological-nh
    baseline_mode = unweighted
    zone_mode = weighted
    output_dir = out

    [data ireland]                      ; one section per generation file
    path = ie_2021.csv
    schema = entsoe_like
    region = IE

    [compare]                           ; defaults for embodied/compare
    hardware = CPU=cpu:7nm, SSD=ssd:Nytro 3530
    model = zy
    units = EU, ASEAN

Relative paths are resolved against the project file's directory. The
``STEC_OUTPUT_DIR`` environment variable overrides ``output_dir``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from stecarbon import __version__
from stecarbon.errors import ConfigError, CoverageError, IngestError, StecError, ValidationError
from stecarbon.grid_data import (
    EnergySource,
    GenerationDataset,
    RegionRegistry,
    load_emission_factors,
    load_registry,
    parse_generation_csv,
    parse_utc,
)
from stecarbon.hardware import CalibrationContext, CpuProcessSpec, HardwareCatalog, embodied, load_hardware
from stecarbon.intensity import (
    SEASON_CONVENTIONS,
    BucketKind,
    bucketize,
    carbon_intensity,
    intensity_to_json,
    write_intensity_csv,
)
from stecarbon.stec import (
    GranularitySpec,
    SpatialLevel,
    baseline_gy,
    compare,
    evaluate,
    report_to_json,
    unit_intensity,
    write_series_csv,
    write_summary_csv,
)

log = logging.getLogger("stecarbon")

OUTPUT_DIR_ENV = "STEC_OUTPUT_DIR"

_PROJECT_KEYS = {
    "emission_factors",
    "registry",
    "hardware",
    "reference_ci",
    "provenance",
    "season_convention",
    "baseline_mode",
    "zone_mode",
    "output_dir",
}
_DATA_KEYS = {"path", "schema", "region", "unit"}
_COMPARE_KEYS = {"hardware", "model", "units", "baseline_units", "year"}


@dataclass
class DataFile:
    name: str
    path: Path
    schema: str
    region: str | None = None
    unit: str | None = None


@dataclass
class ProjectConfig:
    root: Path
    data_files: list[DataFile] = field(default_factory=list)
    emission_factors: str = "builtin"
    registry: str = "builtin"
    hardware: str = "builtin"
    reference_ci: float | None = None
    provenance: str = ""
    season_convention: str = "meteorological-nh"
    baseline_mode: str = "unweighted"
    zone_mode: str = "weighted"
    output_dir: Path = Path("out")
    compare: dict[str, str] = field(default_factory=dict)


def _split(value: str | None) -> list[str]:
    return [v.strip() for v in (value or "").split(",") if v.strip()]


def _existing(root: Path, value: str, key: str) -> str:
    if value == "builtin":
        return value
    path = (root / value).resolve()
    if not path.exists():
        raise ConfigError(f"{key}: file not found: {path}")
    return str(path)


def load_config(path: str | Path) -> ProjectConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    root = path.resolve().parent
    cfg = ProjectConfig(root=root)
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "project":
            _reject_unknown(section, items, _PROJECT_KEYS)
            for key in ("emission_factors", "registry", "hardware"):
                if key in items:
                    setattr(cfg, key, _existing(root, items[key], key))
            if "reference_ci" in items:
                try:
                    cfg.reference_ci = float(items["reference_ci"])
                except ValueError:
                    raise ConfigError(f"reference_ci: not a number: {items['reference_ci']}") from None
            for key in ("provenance", "season_convention", "baseline_mode", "zone_mode"):
                if key in items:
                    setattr(cfg, key, items[key])
            if "output_dir" in items:
                cfg.output_dir = Path(items["output_dir"])
        elif section == "data" or section.startswith("data "):
            _reject_unknown(section, items, _DATA_KEYS)
            if "path" not in items:
                raise ConfigError(f"[{section}]: missing path")
            cfg.data_files.append(
                DataFile(
                    name=section[5:].strip() or Path(items["path"]).stem,
                    path=Path(_existing(root, items["path"], f"[{section}] path")),
                    schema=items.get("schema", "canonical"),
                    region=items.get("region") or None,
                    unit=items.get("unit") or None,
                )
            )
        elif section == "compare":
            _reject_unknown(section, items, _COMPARE_KEYS)
            cfg.compare = items
        else:
            raise ConfigError(f"unknown section: [{section}]")
    if cfg.season_convention not in SEASON_CONVENTIONS:
        raise ConfigError(f"season_convention must be one of {', '.join(SEASON_CONVENTIONS)}")
    if cfg.baseline_mode not in ("weighted", "unweighted"):
        raise ConfigError("baseline_mode must be weighted or unweighted")
    if cfg.zone_mode not in ("weighted", "unweighted"):
        raise ConfigError("zone_mode must be weighted or unweighted")
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    cfg.output_dir = Path(env_out) if env_out else root / cfg.output_dir
    return cfg


def _reject_unknown(section: str, items: dict, allowed: set[str]) -> None:
    unknown = sorted(set(items) - allowed)
    if unknown:
        raise ConfigError(f"[{section}]: unknown key(s) {', '.join(unknown)}")


class Project:
    """Loaded inputs of one project, built lazily."""

    def __init__(self, cfg: ProjectConfig, lenient: bool = False):
        self.cfg = cfg
        self.lenient = lenient
        self.factors = load_emission_factors(cfg.emission_factors)
        self.registry: RegionRegistry = load_registry(cfg.registry)
        self.convention = SEASON_CONVENTIONS[cfg.season_convention]
        self._dataset: GenerationDataset | None = None
        self._catalog: HardwareCatalog | None = None

    def read(self, df: DataFile) -> GenerationDataset:
        return parse_generation_csv(
            df.path, df.schema, df.region, lenient=self.lenient, registry=self.registry, unit=df.unit
        )

    @property
    def dataset(self) -> GenerationDataset:
        if self._dataset is None:
            if not self.cfg.data_files:
                raise ConfigError("no [data ...] sections in config")
            self._dataset = GenerationDataset.merge(*(self.read(df) for df in self.cfg.data_files))
        return self._dataset

    @property
    def catalog(self) -> HardwareCatalog:
        if self._catalog is None:
            ctx = None
            if self.cfg.reference_ci is not None:
                ctx = CalibrationContext(self.cfg.reference_ci, self.cfg.provenance)
            self._catalog = load_hardware(self.cfg.hardware, ctx)
        return self._catalog

    def hardware(self, ref: str):
        label, sep, target = ref.partition("=")
        if not sep:
            label, target = "", ref
        return label.strip(), self.catalog.get(target.strip())


def _out_path(cfg: ProjectConfig, given: str | None, default_name: str) -> Path:
    if given:
        path = Path(given)
    else:
        path = cfg.output_dir / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _fmt_ts(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def cmd_ingest(args, project: Project) -> int:
    failed = 0
    for df in project.cfg.data_files:
        try:
            ds = project.read(df)
        except IngestError as exc:
            failed += 1
            print(f"{df.name}: {len(exc.row_errors)} error(s)", file=sys.stderr)
            for err in exc.row_errors:
                print(f"  {err}", file=sys.stderr)
            continue
        _say(args, f"{df.name} ({df.schema}): {len(ds)} records, regions: {', '.join(ds.regions()) or '-'}")
        for region in ds.regions():
            for res, (start, end) in ds.coverage(region).items():
                _say(args, f"  {region} {res}: {_fmt_ts(start)} .. {_fmt_ts(end)}")
        for label, n in sorted(ds.alias_warnings.items()):
            _say(args, f"  unmapped source {label!r} -> other ({n} values)")
        for err in ds.row_errors:
            print(f"  skipped {err}", file=sys.stderr)
        if ds.warning_count:
            _say(args, f"  warnings: {ds.warning_count}")
    _say(args, f"{len(project.cfg.data_files) - failed} dataset(s) ingested, {failed} failed")
    return 2 if failed else 0


def cmd_intensity(args, project: Project) -> int:
    kind = BucketKind(args.bucket)
    unit = args.zone or args.region
    if args.zone and not project.registry.is_zone(args.zone):
        raise ValidationError(f"unknown zone: {args.zone}")
    series = unit_intensity(
        project.dataset, project.registry, unit, kind, project.factors,
        convention=project.convention, zone_mode=project.cfg.zone_mode,
    )
    if not series.points:
        raise CoverageError(f"no generation data for {unit}")
    out = _out_path(project.cfg, args.out, f"intensity_{unit}_{kind}.csv")
    if out.suffix.lower() == ".json":
        out.write_text(intensity_to_json(series), encoding="utf-8")
    else:
        write_intensity_csv(series, out)
    _say(args, f"wrote {len(series)} bucket(s) to {out}")
    return 0


def _compare_default(args, project: Project, name: str):
    value = getattr(args, name, None)
    if value:
        return value
    return project.cfg.compare.get(name)


def _granularity(args, project: Project) -> GranularitySpec:
    model = _compare_default(args, project, "model")
    if not model:
        raise ValidationError("--model is required")
    units = _split(_compare_default(args, project, "units"))
    period = None
    if getattr(args, "start", None) or getattr(args, "end", None):
        period = (_parse_day(args.start, datetime.min), _parse_day(args.end, datetime.max))
    return GranularitySpec.from_model(model, units, period)


def _parse_day(text: str | None, fallback: datetime) -> datetime:
    if not text:
        return fallback.replace(tzinfo=timezone.utc)
    try:
        if len(text) == 10:
            return datetime.fromisoformat(text).replace(tzinfo=timezone.utc)
        return parse_utc(text)
    except ValueError as exc:
        raise ValidationError(f"bad date {text!r}: {exc}") from None


def _evaluate(project: Project, spec, gran: GranularitySpec, label: str):
    return evaluate(
        spec, gran, project.dataset, project.registry, project.factors,
        convention=project.convention, zone_mode=project.cfg.zone_mode,
        baseline_mode=project.cfg.baseline_mode, label=label,
    )


def cmd_embodied(args, project: Project) -> int:
    gran = _granularity(args, project)
    refs = _split(_compare_default(args, project, "hardware"))
    if len(refs) != 1:
        raise ValidationError("embodied takes exactly one --hardware reference")
    label, spec = project.hardware(refs[0])
    series = _evaluate(project, spec, gran, label)
    if not series.points:
        raise CoverageError("no points in the requested span")
    out = _out_path(project.cfg, args.out, f"embodied_{gran.label}.csv")
    write_series_csv(series, out)
    if gran.spatial is SpatialLevel.GLOBAL and len(series.points) == 1:
        _say(args, f"{series.points[0].embodied:.2f} {series.unit_of_measure}")
    _say(args, f"wrote {len(series.points)} point(s) to {out}")
    return 0


def _series_year(series) -> int:
    years = {int(p.bucket.key[:4]) for p in series.points}
    if len(years) != 1:
        raise ValidationError(f"series spans years {sorted(years)}; pick a baseline with --year")
    return years.pop()


def cmd_compare(args, project: Project) -> int:
    gran = _granularity(args, project)
    refs = _split(_compare_default(args, project, "hardware"))
    if not refs:
        raise ValidationError("--hardware is required")
    baseline_units = _split(_compare_default(args, project, "baseline_units")) or list(gran.spatial_units)
    year_text = _compare_default(args, project, "year")
    reports = []
    for ref in refs:
        label, spec = project.hardware(ref)
        series = _evaluate(project, spec, gran, label)
        if not series.points:
            raise CoverageError("no points in the requested span")
        year = int(year_text) if year_text else _series_year(series)
        units = baseline_units or sorted({p.unit for p in series.points})
        base = baseline_gy(
            spec, project.dataset, project.registry, units, year, project.factors,
            project.cfg.baseline_mode, zone_mode=project.cfg.zone_mode,
        )
        reports.append(compare(series, base, label=label or None))
    out = _out_path(project.cfg, args.out, f"compare_{gran.label}.csv")
    if out.suffix.lower() == ".json":
        out.write_text(report_to_json(reports), encoding="utf-8")
    else:
        write_summary_csv(reports, out)
    if args.json:
        Path(args.json).write_text(report_to_json(reports), encoding="utf-8")
    _say(args, f"wrote {len(reports)} report(s) to {out}")
    return 0


def cmd_plotdata(args, project: Project) -> int:
    ref = args.hardware or "cpu:7nm"
    label, spec = project.hardware(ref)
    start = _parse_day(args.start, datetime.min)
    end = _parse_day(args.end, datetime.max)
    regions = (_split(args.units) or [args.region]) if (args.units or args.region) else project.dataset.regions()
    out = _out_path(project.cfg, args.out, f"plot_{args.figure}.csv")
    rows: list[list] = []
    if args.figure == "storm":
        if len(regions) != 1:
            raise ValidationError("storm figure needs exactly one --region")
        region = regions[0]
        uom = "g_per_cm2" if isinstance(spec, CpuProcessSpec) else "g_per_gb"
        header = ["time", "ci_g_per_kwh", f"embodied_{uom}"] + [f"{s.value}_kwh" for s in EnergySource]
        for bucket, mix in bucketize(project.dataset, region, BucketKind.HOUR, convention=project.convention):
            if not start <= bucket.start < end or not math.fsum(mix.values()) > 0:
                continue
            ci = carbon_intensity(mix, project.factors)
            rows.append(
                [_fmt_ts(bucket.start), repr(ci), repr(embodied(spec, ci))]
                + [repr(mix.get(s, 0.0)) for s in EnergySource]
            )
    else:
        kind = BucketKind.DAY if args.figure == "cd-timeline" else BucketKind.SEASON
        header = ["unit", "bucket_key", "start", "ci_g_per_kwh", "embodied", "unit_of_measure"]
        uom = "g/cm2" if isinstance(spec, CpuProcessSpec) else "g/GB"
        for region in regions:
            series = unit_intensity(
                project.dataset, project.registry, region, kind, project.factors, convention=project.convention
            )
            for p in series.points:
                if start <= p.bucket.start < end:
                    rows.append([region, p.bucket.key, _fmt_ts(p.bucket.start), repr(p.ci), repr(embodied(spec, p.ci)), uom])
    if not rows:
        raise CoverageError(f"no data for figure {args.figure} in the requested span")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    _say(args, f"wrote {len(rows)} row(s) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="project INI file (default: stec.ini)")
    common.add_argument("--lenient", action="store_true", default=argparse.SUPPRESS, help="skip bad rows instead of failing")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="suppress progress output")

    parser = argparse.ArgumentParser(prog="stec", description="Spatial-temporal embodied carbon for computer hardware.", parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common], help="validate generation files and report coverage")

    p = sub.add_parser("intensity", parents=[common], help="carbon intensity per bucket")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--region")
    where.add_argument("--zone")
    p.add_argument("--bucket", choices=[k.value for k in BucketKind], default="day")
    p.add_argument("--out", help="output file (.csv or .json)")

    for name, helptext in (("embodied", "embodied carbon per unit and bucket"), ("compare", "difference against the global yearly baseline")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--hardware", help="e.g. cpu:7nm, memory:10nm DDR4, ssd:Nytro 1551; Label=ref renames")
        p.add_argument("--model", help="cd, cs, zy or gy")
        p.add_argument("--units", help="comma-separated regions or zones")
        p.add_argument("--start", help="period start (ISO date)")
        p.add_argument("--end", help="period end, exclusive (ISO date)")
        p.add_argument("--out", help="output file")
        if name == "compare":
            p.add_argument("--baseline-units", dest="baseline_units", help="units averaged into the baseline")
            p.add_argument("--year", help="baseline year")
            p.add_argument("--json", help="also write the full report as JSON here")

    p = sub.add_parser("plotdata", parents=[common], help="plot-ready CSV for timeline and storm figures")
    p.add_argument("--figure", required=True, choices=["cd-timeline", "cs-timeline", "storm"])
    p.add_argument("--region")
    p.add_argument("--units", help="comma-separated regions (timelines)")
    p.add_argument("--hardware", help="default cpu:7nm")
    p.add_argument("--start")
    p.add_argument("--end")
    p.add_argument("--out")
    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "intensity": cmd_intensity,
    "embodied": cmd_embodied,
    "compare": cmd_compare,
    "plotdata": cmd_plotdata,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.config = getattr(args, "config", "stec.ini")
    args.lenient = getattr(args, "lenient", False)
    args.quiet = getattr(args, "quiet", False)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        project = Project(load_config(args.config), lenient=args.lenient)
        return _COMMANDS[args.command](args, project)
    except (StecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
