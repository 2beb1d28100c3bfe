import json
import subprocess
import sys

import pytest

from dispherical import cli
from dispherical.io import read_csv


def _run(tmp_path, monkeypatch, argv, sub="run"):
    d = tmp_path / sub
    d.mkdir(exist_ok=True)
    monkeypatch.chdir(d)
    return cli.main(argv), d


def _files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


@pytest.mark.parametrize(
    "argv",
    [
        ["trajectory", "--eta-a", "1.5", "--out", "o.csv"],
        ["trajectory", "--eta-a", "0", "--out", "o.csv"],
        ["trajectory", "--eta-a", "nan", "--out", "o.csv"],
        ["trajectory", "--eta-a", "0.3"],
        ["contours", "--window", "0.5:6,0:1", "--out", "o.csv"],
        ["contours", "--levels-h", "3:1:1", "--out", "o.csv"],
        ["loci", "--times", "-0.1", "--family", "5", "--out", "o.csv"],
        ["trajectories", "--family", "5", "--eta-a", "0.2", "--out", "o.csv"],
        ["erasure-check", "--grid", "1", "--out", "o.csv"],
    ],
)
def test_invalid_parameters_exit_2(tmp_path, monkeypatch, argv):
    code, d = _run(tmp_path, monkeypatch, argv)
    assert code == cli.EXIT_INVALID
    assert not (d / "o.csv").exists()


def test_argparse_rejections_exit_2(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        cli.main(["trajectory", "--k", "-1", "--eta-a", "0.3", "--out", "o.csv"])
    assert exc.value.code == 2


def test_bad_config_key_exit_2(tmp_path, monkeypatch):
    (tmp_path / "c.json").write_text(json.dumps({"bogus": 1}))
    code, _ = _run(tmp_path, monkeypatch, ["params", "--config", str(tmp_path / "c.json")])
    assert code == cli.EXIT_INVALID


def test_bad_config_value_exit_2(tmp_path, monkeypatch):
    (tmp_path / "c.json").write_text(json.dumps({"k": -3}))
    code, _ = _run(tmp_path, monkeypatch, ["params", "--config", str(tmp_path / "c.json")])
    assert code == cli.EXIT_INVALID


def test_nonconvergence_exit_3_is_recorded(tmp_path, monkeypatch):
    code, d = _run(tmp_path, monkeypatch, ["trajectory", "--eta-a", "0.3", "--xi-max", "3", "--tol", "1e-30",
                                          "--out", "o.csv"])
    assert code == cli.EXIT_NONCONVERGED
    m = json.loads((d / "o.manifest.json").read_text())
    assert m["exit_status"] == 3
    assert m["failed"] and m["failed"][0]["task"]


def test_erasure_check_passes(tmp_path, monkeypatch):
    code, d = _run(tmp_path, monkeypatch, ["erasure-check", "--grid", "30", "--out", "e.csv"])
    assert code == cli.EXIT_OK
    m = json.loads((d / "e.manifest.json").read_text())
    assert m["diagnostics"][0]["max_rel_error"] <= 1e-12
    _, cols, rows = read_csv(d / "e.csv")
    assert cols == list(cli.ERASURE_COLUMNS) and len(rows) == 900


def test_config_file_and_flag_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k": 24.3, "xi-max": 3.0, "eta_a": "-0.2"}))
    code, d = _run(tmp_path, monkeypatch, ["trajectory", "--config", str(cfg), "--xi-max", "2.5", "--out", "o.csv"])
    assert code == cli.EXIT_OK
    m = json.loads((d / "o.manifest.json").read_text())
    assert m["config"]["params"]["k"] == 24.3
    assert m["config"]["options"]["xi_max"] == 2.5
    assert m["config"]["options"]["eta_a"] == "-0.2"


def test_manifest_lists_every_setting(tmp_path, monkeypatch):
    code, d = _run(tmp_path, monkeypatch, ["trajectory", "--eta-a", "-0", "--xi-max", "3", "--out", "f/o.csv"])
    assert code == cli.EXIT_OK
    m = json.loads((d / "f" / "o.manifest.json").read_text())
    assert m["tool"] == "dispherical" and m["version"]
    args = cli.parse_args(["trajectory", "--eta-a", "-0", "--out", "x"])
    for key, val in vars(args).items():
        if key in ("command", "config", "workers"):
            continue
        present = key in m["config"] or key in m["config"]["options"] or key in m["config"]["params"]
        assert present or (key == "mass" and "mass" in m["config"]["params"]), key
    eff = m["effective"]["trace_controls"]
    assert eff["xi_max"] == 3.0 and eff["rtol"] > 0 and eff["max_iter"] >= 1
    assert set(m["outputs"]) == {"o.csv", "o.turning.csv"} == set(m["digests"])
    diag = m["diagnostics"][0]
    assert "t_vs_t_xi_max_abs_diff" in diag and diag["max_relative_residual"] <= 1e-8


def test_trace_csv_layout(tmp_path, monkeypatch):
    code, d = _run(tmp_path, monkeypatch, ["trajectory", "--eta-a", "-0.173648", "--xi-max", "3", "--out", "o.csv"])
    assert code == cli.EXIT_OK
    hdr, cols, rows = read_csv(d / "o.csv")
    assert cols == list(cli.TRACE_COLUMNS)
    assert hdr["k"] == "15.2"
    _, tcols, trows = read_csv(d / "o.turning.csv")
    assert tcols == list(cli.TURNING_COLUMNS) and trows


def test_params_to_stdout(capsys):
    assert cli.main(["params", "--k", "24.3"]) == cli.EXIT_OK
    out = capsys.readouterr().out.splitlines()
    vals = dict(line.split(",", 1) for line in out if not line.startswith("tertiary") and
                not line.startswith("destructive"))
    assert float(vals["ka"]) == 24.3
    assert sum(line.startswith("tertiary_focus_eta") for line in out) == 7


@pytest.mark.parametrize(
    "argv",
    [
        ["contours", "--levels-h", "1,2.5", "--window", "1:3,0:1", "--step", "0.02", "--out", "f/c.csv"],
        ["trajectories", "--source", "both", "--eta-a=-0,+0,0.3", "--xi-max", "3", "--out", "f/t.csv"],
        ["loci", "--times", "0,0.02", "--family", "31", "--source", "upper", "--out", "f/l.csv"],
    ],
)
def test_byte_identical_across_runs_and_workers(tmp_path, monkeypatch, argv):
    _, d1 = _run(tmp_path, monkeypatch, argv, "a")
    code, d2 = _run(tmp_path, monkeypatch, argv + ["--workers", "2"], "b")
    assert code == cli.EXIT_OK
    f1, f2 = _files(d1), _files(d2)
    assert f1 and f1 == f2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "dispherical", "trajectory", "--eta-a", "2", "--out",
                        str(tmp_path / "o.csv")], capture_output=True, text=True)
    assert r.returncode == 2
    assert "eta" in r.stderr.lower()
