import csv
import json
import random
import subprocess
import sys
from datetime import datetime, timezone

import pytest

from conftest import ZONES_DIR, dataset, random_hourly_records, records
from stecarbon import cli
from stecarbon.errors import ConfigError
from stecarbon.grid_data import write_canonical_csv

UTC = timezone.utc


@pytest.fixture
def project(tmp_path, monkeypatch):
    """IE: hourly, Jan 27-28 plus the first two days of every 2021 month;
    IT: daily Jan-Feb 2021; TW: yearly 2022."""
    monkeypatch.delenv(cli.OUTPUT_DIR_ENV, raising=False)
    rng = random.Random(7)
    starts = [datetime(2021, 1, 27, tzinfo=UTC)] + [datetime(2021, m, 1, tzinfo=UTC) for m in range(1, 13)]
    ie = dataset(*(random_hourly_records(rng, "IE", s, 48) for s in starts))
    it = dataset(records("IT", "day", datetime(2021, 1, 1, tzinfo=UTC), [{"natural_gas": 5, "solar": 1 + d % 3} for d in range(59)]))
    tw = dataset(records("TW", "year", datetime(2022, 1, 1, tzinfo=UTC), [{"coal": 561, "nuclear": 199}]))
    write_canonical_csv(ie, tmp_path / "ie.csv")
    write_canonical_csv(it, tmp_path / "it.csv")
    write_canonical_csv(tw, tmp_path / "tw.csv")
    cfg = tmp_path / "stec.ini"
    cfg.write_text(
        "[project]\nregistry = builtin\nreference_ci = 500\n\n"
        "[data ie]\npath = ie.csv\n\n[data it]\npath = it.csv\n\n[data tw]\npath = tw.csv\n"
    )
    return tmp_path


def run(project, *argv):
    return cli.main(["--config", str(project / "stec.ini"), "--quiet", *argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestIngest:
    def test_ok(self, project, capsys):
        assert cli.main(["--config", str(project / "stec.ini"), "ingest"]) == 0
        out = capsys.readouterr().out
        assert "3 dataset(s) ingested, 0 failed" in out
        assert "IE hour: 2021-01-01T00:00:00Z" in out

    def test_bad_row(self, project, capsys):
        with open(project / "it.csv", "a") as fh:
            fh.write("IT,2021-03-01T00:00:00Z,day,coal,-5\n")
        assert cli.main(["--config", str(project / "stec.ini"), "ingest"]) == 2
        err = capsys.readouterr().err
        assert "negative energy" in err and "row " in err

    def test_bad_row_lenient(self, project, capsys):
        with open(project / "it.csv", "a") as fh:
            fh.write("IT,2021-03-01T00:00:00Z,day,coal,-5\n")
        assert cli.main(["--config", str(project / "stec.ini"), "ingest", "--lenient"]) == 0
        assert "warnings: 1" in capsys.readouterr().out


class TestIntensity:
    def test_seasons(self, project):
        assert run(project, "intensity", "--region", "IE", "--bucket", "season", "--out", str(project / "s.csv")) == 0
        rows = read_csv(project / "s.csv")
        # Jan-Feb 2021 winter, spring, summer, fall, and December opening 2022-winter
        assert [r["bucket_key"] for r in rows] == ["2021-winter", "2021-spring", "2021-summer", "2021-fall", "2022-winter"]

    def test_zone_year(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
        code = cli.main(["--config", str(ZONES_DIR / "config.ini"), "--quiet", "intensity", "--zone", "EU", "--bucket", "year"])
        assert code == 0
        (row,) = read_csv(tmp_path / "intensity_EU_year.csv")
        assert row["bucket_key"] == "2022" and float(row["ci_g_per_kwh"]) == pytest.approx(372.95)

    def test_json(self, project):
        assert run(project, "intensity", "--region", "TW", "--bucket", "year", "--out", str(project / "tw.json")) == 0
        doc = json.loads((project / "tw.json").read_text())
        assert doc[0]["buckets"][0]["ci_g_per_kwh"] == pytest.approx(561)

    def test_resolution_error(self, project, capsys):
        assert run(project, "intensity", "--region", "TW", "--bucket", "day") == 2
        assert "resolution: have year, need ≤ day" in capsys.readouterr().err

    def test_unknown_zone(self, project):
        assert run(project, "intensity", "--zone", "NOPE", "--bucket", "year") == 2


class TestEmbodied:
    def test_cs_shape(self, project):
        out = project / "cs.csv"
        assert run(project, "embodied", "--hardware", "cpu:7nm", "--model", "cs", "--units", "IE,IT", "--out", str(out)) == 0
        rows = read_csv(out)
        pairs = [(r["unit"], r["bucket_key"]) for r in rows]
        assert len(pairs) == len(set(pairs))
        assert ("IT", "2021-winter") in pairs and ("IE", "2021-summer") in pairs
        assert {r["unit_of_measure"] for r in rows} == {"g/cm2"}

    def test_gy_scalar(self, project, capsys):
        assert cli.main(["--config", str(project / "stec.ini"), "embodied", "--hardware", "cpu:7nm", "--model", "gy", "--units", "TW"]) == 0
        assert "1552.72 g/cm2" in capsys.readouterr().out

    def test_unsupported(self, project, capsys):
        assert run(project, "embodied", "--hardware", "cpu:7nm", "--model", "td") == 2
        assert "unsupported granularity" in capsys.readouterr().err

    def test_memory_uses_reference_ci(self, project):
        out = project / "m.csv"
        assert run(project, "embodied", "--hardware", "memory:10nm DDR4", "--model", "gy", "--units", "TW", "--out", str(out)) == 0
        (row,) = read_csv(out)
        assert float(row["embodied"]) == pytest.approx(29.26 + 35.74 * 561 / 500)

    def test_empty_span(self, project):
        assert run(project, "embodied", "--hardware", "cpu:7nm", "--model", "cd", "--units", "IT", "--start", "2030-01-01") == 2


class TestCompare:
    def test_zone_fixture(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
        assert cli.main(["--config", str(ZONES_DIR / "config.ini"), "--quiet", "compare", "--json", str(tmp_path / "r.json")]) == 0
        rows = read_csv(tmp_path / "compare_STEC-ZY.csv")
        assert rows[0] == {"hardware": "CPU", "avg_diff_pct": "18.66", "max_diff_pct": "18.66"}
        doc = json.loads((tmp_path / "r.json").read_text())
        assert [r["hardware"] for r in doc] == ["CPU", "SSD", "HDD", "Memory"]

    def test_single_point(self, project):
        out = project / "c.csv"
        assert run(project, "compare", "--hardware", "cpu:7nm", "--model", "gy", "--units", "TW", "--out", str(out)) == 0
        assert read_csv(out) == [{"hardware": "7nm", "avg_diff_pct": "0.00", "max_diff_pct": "0.00"}]

    def test_missing_baseline(self, project, capsys):
        code = run(project, "compare", "--hardware", "cpu:7nm", "--model", "cd", "--units", "IT", "--baseline-units", "TW")
        assert code == 2
        assert "no yearly data" in capsys.readouterr().err


class TestPlotdata:
    def test_storm_columns(self, project):
        out = project / "storm.csv"
        argv = ("plotdata", "--figure", "storm", "--region", "IE", "--start", "2021-01-28", "--end", "2021-01-29", "--out", str(out))
        assert run(project, *argv) == 0
        with open(out, newline="") as fh:
            header, *rows = list(csv.reader(fh))
        assert header[:3] == ["time", "ci_g_per_kwh", "embodied_g_per_cm2"]
        assert "wind_kwh" in header and "coal_kwh" in header
        assert 18 <= len(rows) <= 24
        assert all(r[0].startswith("2021-01-28T") for r in rows)
        assert [r[0] for r in rows] == sorted(r[0] for r in rows)

    def test_deterministic(self, project):
        argv = ("plotdata", "--figure", "cd-timeline", "--region", "IE")
        assert run(project, *argv, "--out", str(project / "a.csv")) == 0
        assert run(project, *argv, "--out", str(project / "b.csv")) == 0
        assert (project / "a.csv").read_bytes() == (project / "b.csv").read_bytes()

    def test_empty_span(self, project):
        assert run(project, "plotdata", "--figure", "storm", "--region", "IE", "--start", "2030-01-01") == 2


class TestConfig:
    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "x.ini"
        cfg.write_text("[project]\ncolour = blue\n")
        with pytest.raises(ConfigError, match="colour"):
            cli.load_config(cfg)

    def test_unknown_section(self, tmp_path):
        cfg = tmp_path / "x.ini"
        cfg.write_text("[extras]\n")
        with pytest.raises(ConfigError, match="extras"):
            cli.load_config(cfg)

    def test_missing_file(self, tmp_path):
        cfg = tmp_path / "x.ini"
        cfg.write_text("[data a]\npath = nowhere.csv\n")
        with pytest.raises(ConfigError, match="not found"):
            cli.load_config(cfg)

    def test_output_dir_env(self, tmp_path, monkeypatch):
        cfg = tmp_path / "x.ini"
        cfg.write_text("[project]\noutput_dir = results\n")
        assert cli.load_config(cfg).output_dir == tmp_path / "results"
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path / "elsewhere"))
        assert cli.load_config(cfg).output_dir == tmp_path / "elsewhere"


class TestExitCodes:
    def test_success(self, project):
        assert run(project, "ingest") == 0

    def test_user_error(self, tmp_path):
        assert cli.main(["--config", str(tmp_path / "missing.ini"), "ingest"]) == 2

    def test_usage_error(self):
        assert cli.main(["bogus"]) == 2

    def test_internal_error(self, project, monkeypatch):
        def boom(args, proj):
            raise RuntimeError("boom")

        monkeypatch.setitem(cli._COMMANDS, "ingest", boom)
        assert run(project, "ingest") == 1

    def test_module_entry_point(self, project):
        proc = subprocess.run(
            [sys.executable, "-m", "stecarbon", "--config", str(project / "stec.ini"), "--quiet", "ingest"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
