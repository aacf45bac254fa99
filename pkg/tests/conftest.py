from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

import stecarbon
from stecarbon.grid_data import (
    EmissionFactorTable,
    EnergyGenerationRecord,
    EnergySource,
    GenerationDataset,
    RegionRegistry,
    Resolution,
    load_registry,
    parse_generation_csv,
)
from stecarbon.hardware import HardwareCatalog, load_hardware

UTC = timezone.utc
ZONES_DIR = Path(stecarbon.__file__).parent / "data" / "zones2022"
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def factors() -> EmissionFactorTable:
    return EmissionFactorTable.builtin()


@pytest.fixture
def registry() -> RegionRegistry:
    reg = RegionRegistry()
    for rid, name in [("IE", "Ireland"), ("IT", "Italy"), ("TW", "Taiwan"), ("A", "A"), ("B", "B")]:
        reg = reg.register_region(rid, name, rid if len(rid) == 2 else "")
    return reg


def records(region, resolution, start, mixes, step=None):
    """One record per (interval, source) from a list of per-interval mixes."""
    resolution = Resolution(resolution)
    out = []
    ts = start
    for mix in mixes:
        for src, e in mix.items():
            out.append(EnergyGenerationRecord(region, ts, resolution, EnergySource(src), float(e)))
        ts = step(ts) if step else resolution.end_of(ts)
    return out


def dataset(*recs) -> GenerationDataset:
    flat = [r for group in recs for r in (group if isinstance(group, list) else [group])]
    return GenerationDataset(tuple(flat))


def random_hourly_records(rng: random.Random, region: str, start: datetime, hours: int):
    """Hourly mixes over a random subset of sources; some hours are empty."""
    out = []
    for h in range(hours):
        ts = start + timedelta(hours=h)
        if rng.random() < 0.05:
            continue
        for src in rng.sample(list(EnergySource), rng.randint(1, 5)):
            out.append(EnergyGenerationRecord(region, ts, Resolution.HOUR, src, rng.uniform(0, 5000)))
    return out


@dataclass(frozen=True)
class ZoneFixture:
    dataset: GenerationDataset
    registry: RegionRegistry
    hardware: HardwareCatalog

    REFS = {
        "CPU": "cpu:7nm",
        "SSD": "ssd:Nytro 3530 (zone fit)",
        "HDD": "hdd:Exos 7E8 (zone fit)",
        "Memory": "memory:10nm DDR4 (zone fit)",
    }


def load_zone_fixture() -> ZoneFixture:
    """The bundled EU/ASEAN 2022 fixture."""
    registry = load_registry(ZONES_DIR / "registry.json")
    ds = parse_generation_csv(ZONES_DIR / "zones_2022.csv", "owid_like", registry=registry)
    return ZoneFixture(ds, registry, load_hardware(ZONES_DIR / "hardware.json"))
