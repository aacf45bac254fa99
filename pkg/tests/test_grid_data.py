import io
import json
from datetime import datetime, timezone

import pytest

from stecarbon.errors import IngestError, ValidationError
from stecarbon.grid_data import (
    DEFAULT_EMISSION_FACTORS,
    EmissionFactorTable,
    EnergyGenerationRecord,
    EnergySource,
    GenerationDataset,
    Resolution,
    builtin_registry,
    load_emission_factors,
    load_registry,
    parse_generation_csv,
    register_zone,
    write_canonical_csv,
)

UTC = timezone.utc


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestEmissionFactors:
    def test_builtin_values(self):
        table = load_emission_factors("builtin")
        assert table[EnergySource.COAL] == 760
        assert table[EnergySource.NATURAL_GAS] == 370
        assert table[EnergySource.OIL] == 406
        assert table[EnergySource.OTHER] == 575
        for src in ("wind", "solar", "hydro", "nuclear", "geothermal", "biomass"):
            assert table[EnergySource(src)] == 0
        assert table.max_factor == 760

    def test_file_round_trip(self, tmp_path):
        path = write(tmp_path, "ef.json", json.dumps(EmissionFactorTable.builtin().to_dict()))
        assert load_emission_factors(path) == EmissionFactorTable.builtin()

    def test_negative_factor_rejected(self, tmp_path):
        doc = {s.value: v for s, v in DEFAULT_EMISSION_FACTORS.items()}
        doc["coal"] = -1
        with pytest.raises(ValidationError, match="negative factor: coal"):
            load_emission_factors(write(tmp_path, "ef.json", json.dumps(doc)))

    def test_unknown_source_rejected(self, tmp_path):
        doc = {s.value: v for s, v in DEFAULT_EMISSION_FACTORS.items()}
        doc["unobtainium"] = 3
        with pytest.raises(ValidationError, match="unknown source: unobtainium"):
            load_emission_factors(write(tmp_path, "ef.json", json.dumps(doc)))

    def test_partial_table_rejected(self, tmp_path):
        with pytest.raises(ValidationError, match="missing factor"):
            load_emission_factors(write(tmp_path, "ef.json", '{"coal": 760}'))

    def test_lookup_is_total(self):
        table = EmissionFactorTable.builtin()
        assert all(table[s] >= 0 for s in EnergySource)


class TestCanonical:
    def test_two_rows(self, tmp_path):
        path = write(
            tmp_path,
            "g.csv",
            "region,interval_start,interval_length,source,energy_kwh\n"
            "IE,2021-01-28T00:00Z,hour,wind,3000\n"
            "IE,2021-01-28T00:00Z,hour,coal,1000\n",
        )
        ds = parse_generation_csv(path)
        assert len(ds) == 2
        start, end = ds.coverage("IE")[Resolution.HOUR]
        assert start == datetime(2021, 1, 28, tzinfo=UTC)
        assert (end - start).total_seconds() == 3600
        assert ds.totals("IE", Resolution.HOUR) == {start: 4000.0}

    def test_negative_energy_cites_row(self, tmp_path):
        path = write(
            tmp_path,
            "g.csv",
            "region,interval_start,interval_length,source,energy_kwh\nIE,2021-01-28T00:00Z,hour,wind,-5\n",
        )
        with pytest.raises(IngestError, match="row 2: negative energy"):
            parse_generation_csv(path)

    def test_lenient_skips_bad_rows(self, tmp_path):
        path = write(
            tmp_path,
            "g.csv",
            "region,interval_start,interval_length,source,energy_kwh\n"
            "IE,2021-01-28T00:00Z,hour,wind,-5\n"
            "IE,2021-01-28T01:00Z,hour,wind,5\n",
        )
        ds = parse_generation_csv(path, lenient=True)
        assert len(ds) == 1
        assert ds.row_errors == ("row 2: negative energy",)

    @pytest.mark.parametrize(
        "stamp, message",
        [
            ("2021-01-28T00:00", "row 2: timestamp lacks UTC offset"),
            ("yesterday", "row 2: malformed timestamp"),
            ("2021-01-28T00:30Z", "row 2: interval_start not aligned to hour"),
        ],
    )
    def test_bad_timestamps(self, tmp_path, stamp, message):
        path = write(
            tmp_path,
            "g.csv",
            f"region,interval_start,interval_length,source,energy_kwh\nIE,{stamp},hour,wind,1\n",
        )
        with pytest.raises(IngestError, match=message):
            parse_generation_csv(path)

    def test_offset_converted_to_utc(self, tmp_path):
        path = write(
            tmp_path,
            "g.csv",
            "region,interval_start,interval_length,source,energy_kwh\nIT,2021-06-01T02:00+02:00,hour,solar,1\n",
        )
        (rec,) = parse_generation_csv(path).records
        assert rec.interval_start == datetime(2021, 6, 1, 0, tzinfo=UTC)

    def test_duplicate_key_rejected(self, tmp_path):
        path = write(
            tmp_path,
            "g.csv",
            "region,interval_start,interval_length,source,energy_kwh\n"
            "IE,2021-01-28T00:00Z,hour,wind,1\n"
            "IE,2021-01-28T00:00Z,hour,wind,2\n",
        )
        with pytest.raises(IngestError, match="row 3: duplicate record"):
            parse_generation_csv(path)

    def test_unknown_source_maps_to_other_with_warning(self, tmp_path):
        path = write(
            tmp_path,
            "g.csv",
            "region,interval_start,interval_length,source,energy_kwh\n"
            "IE,2021-01-28T00:00Z,hour,Fossil Gas,1\n"
            "IE,2021-01-28T00:00Z,hour,Tidal,2\n",
        )
        ds = parse_generation_csv(path)
        assert {r.source for r in ds} == {EnergySource.NATURAL_GAS, EnergySource.OTHER}
        assert ds.alias_warnings == {"Tidal": 1}

    def test_round_trip_bit_exact(self, tmp_path):
        original = GenerationDataset(
            (
                EnergyGenerationRecord("IE", datetime(2021, 1, 1, 5, tzinfo=UTC), Resolution.HOUR, EnergySource.WIND, 0.1 + 0.2),
                EnergyGenerationRecord("IE", datetime(2021, 1, 1, tzinfo=UTC), Resolution.DAY, EnergySource.COAL, 1e-300),
                EnergyGenerationRecord("TW", datetime(2022, 1, 1, tzinfo=UTC), Resolution.YEAR, EnergySource.OTHER, 123456789.123456789),
            )
        )
        path = tmp_path / "out.csv"
        write_canonical_csv(original, path)
        again = parse_generation_csv(path)
        assert again.records == original.records


class TestEntsoe:
    HEADER = (
        'MTU (UTC),Biomass  - Actual Aggregated [MW],Fossil Gas  - Actual Aggregated [MW],'
        'Fossil Hard coal  - Actual Aggregated [MW],Hydro Pumped Storage  - Actual Consumption [MW],'
        'Wind Onshore  - Actual Aggregated [MW],Wind Offshore  - Actual Aggregated [MW]\n'
    )

    def test_wide_hourly(self, tmp_path):
        path = write(
            tmp_path,
            "ie.csv",
            self.HEADER
            + '"28.01.2021 00:00 - 28.01.2021 01:00",10,1000,200,50,2000,n/e\n'
            + '"28.01.2021 01:00 - 28.01.2021 02:00",10,900,200,40,2100,5\n',
        )
        ds = parse_generation_csv(path, "entsoe_like", "IE")
        assert ds.regions() == ["IE"]
        assert ds.resolution("IE") is Resolution.HOUR
        by = {(r.interval_start.hour, r.source): r.energy for r in ds}
        # MW over one hour -> MWh -> kWh; onshore and offshore pool into wind
        assert by[(0, EnergySource.WIND)] == 2000e3
        assert by[(1, EnergySource.WIND)] == 2105e3
        assert by[(0, EnergySource.NATURAL_GAS)] == 1000e3
        assert by[(0, EnergySource.BIOMASS)] == 10e3
        assert len(ds) == 8  # consumption column skipped

    def test_needs_region_hint(self, tmp_path):
        path = write(tmp_path, "ie.csv", self.HEADER)
        with pytest.raises(IngestError, match="region hint"):
            parse_generation_csv(path, "entsoe_like")

    def test_local_time_rejected(self, tmp_path):
        path = write(tmp_path, "ie.csv", "MTU (CET/CEST),Solar [MW]\n\"01.06.2021 00:00 - 01.06.2021 01:00\",5\n")
        with pytest.raises(IngestError, match="lacks UTC offset"):
            parse_generation_csv(path, "entsoe_like", "IT")

    def test_iso_timestamps(self, tmp_path):
        path = write(tmp_path, "it.csv", "timestamp,Solar,Fossil Oil\n2021-06-01T12:00Z,5,1\n")
        ds = parse_generation_csv(path, "entsoe_like", "IT")
        assert {r.source: r.energy for r in ds} == {EnergySource.SOLAR: 5000.0, EnergySource.OIL: 1000.0}


class TestOwid:
    def test_taiwan_row_one_record_per_source_column(self, tmp_path):
        path = write(
            tmp_path,
            "owid.csv",
            "country,year,coal_electricity,gas_electricity,nuclear_electricity,solar_electricity\n"
            "Taiwan,2022,100,80,20,5\n",
        )
        ds = parse_generation_csv(path, "owid_like", registry=builtin_registry())
        assert len(ds) == 4
        assert {r.interval_length for r in ds} == {Resolution.YEAR}
        assert ds.regions() == ["TW"]
        assert {r.source: r.energy for r in ds}[EnergySource.COAL] == 100e9

    def test_aggregate_columns_ignored(self, tmp_path):
        path = write(
            tmp_path,
            "owid.csv",
            "country,iso_code,year,coal_electricity,fossil_electricity,wind_electricity\nIreland,IRL,2022,1,1,2\n",
        )
        ds = parse_generation_csv(path, "owid_like")
        assert ds.regions() == ["IRL"]
        assert len(ds) == 2

    def test_unresolvable_region(self, tmp_path):
        path = write(tmp_path, "owid.csv", "country,year,coal\nAtlantis,2022,1\n")
        with pytest.raises(IngestError, match="row 2: unresolvable region 'Atlantis'"):
            parse_generation_csv(path, "owid_like", registry=builtin_registry())


class TestDataset:
    def test_duplicate_records_rejected(self):
        rec = EnergyGenerationRecord("IE", datetime(2021, 1, 1, tzinfo=UTC), Resolution.HOUR, EnergySource.WIND, 1.0)
        with pytest.raises(ValidationError, match="duplicate"):
            GenerationDataset((rec, rec))

    def test_record_validation(self):
        with pytest.raises(ValidationError, match="negative energy"):
            EnergyGenerationRecord("IE", datetime(2021, 1, 1, tzinfo=UTC), Resolution.HOUR, EnergySource.WIND, -1.0)
        with pytest.raises(ValidationError, match="UTC"):
            EnergyGenerationRecord("IE", datetime(2021, 1, 1), Resolution.HOUR, EnergySource.WIND, 1.0)
        with pytest.raises(ValidationError, match="aligned to month"):
            EnergyGenerationRecord("IE", datetime(2021, 1, 2, tzinfo=UTC), Resolution.MONTH, EnergySource.WIND, 1.0)

    def test_merge_and_resolutions(self):
        a = GenerationDataset(
            (EnergyGenerationRecord("IE", datetime(2021, 1, 1, tzinfo=UTC), Resolution.YEAR, EnergySource.WIND, 1.0),),
            provenance=("a",),
        )
        b = GenerationDataset(
            (EnergyGenerationRecord("IE", datetime(2021, 1, 1, tzinfo=UTC), Resolution.HOUR, EnergySource.WIND, 1.0),),
            provenance=("b",),
        )
        merged = GenerationDataset.merge(a, b)
        assert merged.resolutions("IE") == [Resolution.HOUR, Resolution.YEAR]
        assert merged.resolution("IE") is Resolution.HOUR
        assert merged.provenance == ("a", "b")
        with pytest.raises(ValidationError):
            GenerationDataset.merge(a, a)


class TestRegistry:
    def test_register_zone(self, registry):
        reg = register_zone(registry, "EU", {"IE", "IT"})
        assert reg.zone_members("EU") >= {"IE", "IT"}
        assert reg.zones_of("IE") == ["EU"]

    def test_empty_zone_rejected(self, registry):
        with pytest.raises(ValidationError, match="empty"):
            register_zone(registry, "X", set())

    def test_unknown_member_rejected(self, registry):
        with pytest.raises(ValidationError, match="unknown member"):
            register_zone(registry, "X", {"IE", "ZZ"})

    def test_idempotent(self, registry):
        once = register_zone(registry, "EU", {"IE", "IT"})
        assert register_zone(once, "EU", {"IE", "IT"}) == once

    def test_region_in_several_zones(self, registry):
        reg = register_zone(register_zone(registry, "EU", {"IE", "IT"}), "ISLES", {"IE"})
        assert reg.zones_of("IE") == ["EU", "ISLES"]

    def test_resolve(self):
        reg = builtin_registry()
        assert reg.resolve("Taiwan") == "TW"
        assert reg.resolve("south korea") == "KR"
        assert reg.resolve("European Union (27)") == "EU27"
        assert reg.resolve("Narnia") is None

    def test_load_file(self, tmp_path):
        path = write(
            tmp_path,
            "reg.json",
            json.dumps({"regions": [{"id": "IE", "name": "Ireland"}, "IT"], "zones": {"EU": ["IE", "IT"]}}),
        )
        reg = load_registry(path)
        assert reg.zone_members("EU") == {"IE", "IT"}
        assert reg.regions["IT"].name == "IT"

    def test_load_rejects_bad_zone(self, tmp_path):
        path = write(tmp_path, "reg.json", json.dumps({"regions": ["IE"], "zones": {"EU": ["IE", "XX"]}}))
        with pytest.raises(ValidationError):
            load_registry(path)


def test_write_canonical_to_stream():
    ds = GenerationDataset(
        (EnergyGenerationRecord("IE", datetime(2021, 1, 1, tzinfo=UTC), Resolution.HOUR, EnergySource.WIND, 2.5),)
    )
    buf = io.StringIO()
    write_canonical_csv(ds, buf)
    assert buf.getvalue() == (
        "region,interval_start,interval_length,source,energy_kwh\nIE,2021-01-01T00:00:00Z,hour,wind,2.5\n"
    )
