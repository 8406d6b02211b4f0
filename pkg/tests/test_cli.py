import csv
import json

import pytest

from halpern_mann.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main, normalize_config
from halpern_mann.errors import UsageError


def _config(tmp_path, **cfg):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_run_e1_row_count_and_columns(tmp_path):
    cfg = _config(tmp_path, fixture="E1", scheme="hm", steps=10_000)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == EXIT_OK
    rows = _rows(tmp_path / "out" / "trajectory.csv")
    assert len(rows) == 10_001
    assert list(rows[0]) == ["n", "c0", "d_prev", "d_T", "d_U", "stream"]
    assert rows[0]["d_prev"] == "" and rows[1]["c0"] == "2.0"
    lines = (tmp_path / "out" / "trajectory.jsonl").read_text().splitlines()
    assert len(lines) == 10_001 and json.loads(lines[0])["model"] == "euclidean"


def test_run_gdr_streams(tmp_path):
    cfg = _config(tmp_path, fixture="S2", steps=40)
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    streams = {r["stream"] for r in _rows(tmp_path / "trajectory.csv")}
    assert streams == {"x", "y", "z"}
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["step_identity_gap"] <= 1e-12
    assert report["schema_version"] == 1


def test_run_reports_sound(tmp_path, capsys):
    cfg = _config(tmp_path, fixture="E1", steps=5000, eps_grid=["1/2", "1/10"])
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    by_eps = {}
    for r in report["thresholds"]:
        by_eps.setdefault(r["eps"], []).append(r)
    assert set(by_eps) == {"1/2", "1/10"}
    assert all(r["sound"] is True for r in report["thresholds"])
    assert "sound=True" in capsys.readouterr().out


@pytest.mark.parametrize("scheme,fixture", [("halpern", "E2"), ("km", "T1"), ("tkm", "E1"),
                                            ("hm_errors", "H1"), ("gfb", "S1")])
def test_run_other_schemes(tmp_path, scheme, fixture):
    cfg = _config(tmp_path, fixture=fixture, scheme=scheme, steps=200)
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    assert _rows(tmp_path / "trajectory.csv")


def test_run_is_deterministic(tmp_path):
    cfg = _config(tmp_path, fixture="H1", scheme="hm", steps=300, eps_grid=["1/2"], seed=7)
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["run", "--config", cfg, "--out", str(d)]) == EXIT_OK
        outs.append([(d / n).read_bytes() for n in ("trajectory.csv", "trajectory.jsonl",
                                                     "report.json")])
    assert outs[0] == outs[1]


@pytest.mark.parametrize("cfg", [
    {"fixture": "Z9"},
    {"fixture": "E1", "scheme": "gdr"},
    {"fixture": "S1", "scheme": "hm"},
    {"fixture": "E1", "steps": 0},
    {"fixture": "E1", "color": "red"},
    {"fixture": "E1", "eps_grid": [0]},
    {"fixture": "E1", "counter": {"a": -1}},
    {"fixture": "E1", "eps_grid": ["1/2"], "keep_every": 3},
])
def test_bad_configs_exit_2(tmp_path, cfg, capsys):
    path = _config(tmp_path, **cfg)
    assert main(["run", "--config", path, "--out", str(tmp_path)]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["run", "--config", str(bad)]) == EXIT_USAGE


def test_rates_needing_schedule_moduli(tmp_path):
    cfg = _config(tmp_path, fixture="E1", schedule={"alpha": "1/2", "beta": "1/2"},
                  eps_grid=["1/2"], steps=10)
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE


def test_normalize_defaults():
    cfg = normalize_config({"fixture": "S1"})
    assert cfg["scheme"] == "gfb" and cfg["schedule"] == {"alpha": "harmonic", "beta": "0"}
    with pytest.raises(UsageError):
        normalize_config([])


# rates -----------------------------------------------------------------


def _rates(capsys, *argv):
    code = main(["rates", *argv])
    return code, capsys.readouterr().out


def test_rates_gamma2(capsys):
    code, out = _rates(capsys, "Gamma2", "--k", "2")
    assert code == EXIT_OK and "Gamma2 = 7" in out and "formula:" in out


def test_rates_gamma1(capsys):
    assert "Gamma1 = 4" in _rates(capsys, "Gamma1", "--eps", "1/4")[1]


def test_rates_theta1_prints_exact_integer(capsys):
    code, out = _rates(capsys, "theta1", "--N", "1", "--eps", "1")
    value = int(out.splitlines()[0].split("=")[1])
    assert code == EXIT_OK and value == 162755


def test_rates_mu_toy(capsys):
    code, out = _rates(capsys, "mu", "--moduli", "zero", "--N", "1", "--f", "0,0", "--eps", "4")
    assert code == EXIT_OK and int(out.splitlines()[0].split("=")[1]) >= 1


def test_rates_overflow_reports_lower_bound(capsys):
    code, out = _rates(capsys, "rho3", "--eps", "1/10", "--budget", "4096")
    assert code == EXIT_OK and "(lower bound)" in out


def test_rates_usage(capsys):
    assert _rates(capsys, "bogus")[0] == EXIT_USAGE
    assert _rates(capsys, "Gamma2")[0] == EXIT_USAGE
    assert _rates(capsys, "theta1", "--eps", "-1")[0] == EXIT_USAGE


# verify ----------------------------------------------------------------


def test_verify_passes_and_writes_report(tmp_path, capsys):
    code = main(["verify", "--suite", "axioms:tree", "--samples", "300", "--out", str(tmp_path)])
    assert code == EXIT_OK
    data = json.loads((tmp_path / "verify_axioms_tree.json").read_text())
    assert data["passed"] is True and data["schema_version"] == 1
    assert "axioms:tree: PASS" in capsys.readouterr().out


def test_verify_negative_control_fails(capsys):
    assert main(["verify", "--suite", "negative:broken-W2", "--samples", "300"]) == EXIT_FAIL
    assert "FAIL" in capsys.readouterr().out


@pytest.mark.parametrize("suite", ["axioms:euclidean", "axioms:hyperboloid",
                                   "projection:variational", "nonexpansive:fixtures"])
def test_verify_suites_pass(suite):
    assert main(["verify", "--suite", suite, "--samples", "300"]) == EXIT_OK


def test_verify_unknown_suite():
    assert main(["verify", "--suite", "axioms:torus"]) == EXIT_USAGE


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EXIT_USAGE
