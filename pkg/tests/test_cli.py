import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from infex.cli import fmt, main
from infex.policies import PolicyConfig
from infex.verification import benchmark_roster


def write_config(tmp_path, **overrides):
    cfg = {
        "dim": 3,
        "n_arms": 6,
        "horizon": 250,
        "n_instances": 2,
        "base_seed": 1,
        "timing_enabled": False,
        "policies": [p.to_dict() for p in benchmark_roster()],
        "output_dir": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg, indent=2))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestRun:
    def test_full_roster(self, tmp_path):
        assert main(["run", "--config", str(write_config(tmp_path))]) == 0
        rows = read_csv(tmp_path / "out" / "results.csv")
        assert len(rows) == 2 * 11
        assert list(rows[0]) == ["policy_label", "instance_seed", "final_regret", "total_ns", "n_opt", "n_explore"]
        labels = {r["policy_label"] for r in rows}
        assert "INFEX(LinTS, m=20)" in labels and "OLSBandit" in labels
        assert len(list((tmp_path / "out" / "traces").glob("*.csv"))) == 11

    def test_rerun_byte_identical(self, tmp_path):
        path = write_config(tmp_path)
        main(["run", "--config", str(path)])
        first = (tmp_path / "out" / "results.csv").read_bytes()
        main(["run", "--config", str(path)])
        assert (tmp_path / "out" / "results.csv").read_bytes() == first

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        path = write_config(tmp_path, policies=[PolicyConfig("Greedy").to_dict()], n_instances=1)
        main(["run", "--config", str(path)])
        base = read_csv(tmp_path / "out" / "results.csv")[0]["instance_seed"]
        monkeypatch.setenv("INFEX_SEED", "77")
        main(["run", "--config", str(path)])
        assert read_csv(tmp_path / "out" / "results.csv")[0]["instance_seed"] != base

    def test_svg_output(self, tmp_path):
        path = write_config(tmp_path, policies=[PolicyConfig("Greedy").to_dict()], n_instances=2)
        assert main(["run", "--config", str(path), "--svg"]) == 0
        assert (tmp_path / "out" / "regret.svg").read_text().startswith("<?xml")
        assert (tmp_path / "out" / "runtime.svg").exists()

    def test_empty_policies(self, tmp_path, capsys):
        assert main(["run", "--config", str(write_config(tmp_path, policies=[]))]) == 2
        assert "no policies configured" in capsys.readouterr().err

    def test_parse_error_location(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "dim": 3,\n  "n_arms": ,\n}')
        assert main(["run", "--config", str(path)]) == 2
        assert f"{path}:3:13" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path):
        assert main(["run", "--config", str(write_config(tmp_path, colour="red"))]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2

    def test_bad_workers(self, tmp_path):
        assert main(["run", "--config", str(write_config(tmp_path)), "--workers", "0"]) == 2


class TestVerify:
    def test_linalg_suite(self, tmp_path, capsys):
        assert main(["verify", "--suite", "linalg", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "verification.csv")
        assert {r["lemma"] for r in rows} == {"sherman_morrison_inverse", "log_det_ratio"}
        assert all(r["passed"] == "1" for r in rows)
        assert capsys.readouterr().out.count("PASS") == 2

    def test_equivalence_suite(self, tmp_path):
        assert main(["verify", "--suite", "equivalence", "--out", str(tmp_path)]) == 0

    def test_unknown_suite(self, tmp_path, capsys):
        assert main(["verify", "--suite", "everything", "--out", str(tmp_path)]) == 2
        assert "unknown suite" in capsys.readouterr().err


class TestLowerBound:
    def test_zero_reps(self, tmp_path):
        args = ["lower-bound", "--gap", "0.2", "--c", "2", "--t-grid", "100,200,400",
                "--reps", "0", "--out", str(tmp_path / "g.csv")]
        assert main(args) == 2

    def test_short_grid(self, tmp_path, capsys):
        args = ["lower-bound", "--gap", "0.2", "--c", "2", "--t-grid", "100,200",
                "--reps", "2", "--out", str(tmp_path / "g.csv")]
        assert main(args) == 2
        assert "at least 3" in capsys.readouterr().err

    def test_bad_gap(self, tmp_path):
        args = ["lower-bound", "--gap", "2", "--c", "2", "--t-grid", "100,200,400",
                "--reps", "2", "--out", str(tmp_path / "g.csv")]
        assert main(args) == 2

    def test_slope_recomputed_from_csv(self, tmp_path):
        out = tmp_path / "growth.csv"
        args = ["lower-bound", "--gap", "0.3", "--c", "2", "--t-grid", "200,400,800",
                "--reps", "4", "--out", str(out)]
        assert main(args) == 0
        rows = read_csv(out)
        assert len(rows) == 6
        slopes = {r["schedule"]: r["slope"] for r in read_csv(tmp_path / "growth_slopes.csv")}
        mine = [r for r in rows if r["schedule"] == "LogLinear(C=2)"]
        t = np.log([float(r["T"]) for r in mine])
        y = np.log([float(r["mean_regret"]) for r in mine])
        assert float(slopes["LogLinear(C=2)"]) == pytest.approx(np.polyfit(t, y, 1)[0], rel=1e-9)


def test_no_command():
    assert main([]) == 2


def test_help():
    assert main(["--help"]) == 0


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_number_format_round_trips(x):
    assert float(fmt(x)) == x
