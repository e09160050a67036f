from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

from vfdlab import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _copy(tmp_path, name, edit=None):
    text = (CONFIGS / name).read_text()
    if edit:
        text = edit(text)
    p = tmp_path / name
    p.write_text(text)
    return p


def test_run_constant_config(tmp_path):
    cfg = _copy(tmp_path, "constant.toml")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "ok"
    assert all(v["passed"] is not False for v in summary["verdicts"])
    assert abs(summary["mass_drift"]) < 1e-12
    with open(out / "series.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 51 and float(rows[0]["t"]) == 0.0


def test_missing_config_exits_2(tmp_path, capsys):
    missing = tmp_path / "nope.toml"
    assert cli.main(["run", "--config", str(missing)]) == cli.EXIT_CONFIG
    assert "nope.toml" in capsys.readouterr().err


def test_unknown_key_is_line_anchored(tmp_path, capsys):
    cfg = _copy(tmp_path, "constant.toml", lambda t: t.replace("dt = 0.01", "dt = 0.01\nbogus = 3"))
    assert cli.main(["run", "--config", str(cfg)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    line = next(i for i, s in enumerate(cfg.read_text().splitlines(), 1) if s.startswith("bogus"))
    assert f"constant.toml:{line}:" in err and "bogus" in err


def test_invalid_value_is_config_error(tmp_path):
    cfg = _copy(tmp_path, "constant.toml", lambda t: t.replace("alpha = 1.0", "alpha = -1.0"))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_rerun_byte_identical(tmp_path):
    cfg = _copy(tmp_path, "spike_interval.toml")
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        cli.main(["run", "--config", str(cfg), "--out", str(out), "--seed", "3"])
    assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()
    assert sorted(p.name for p in a.glob("fields_*.csv")) == ["fields_t0.1.csv", "fields_t0.3.csv", "fields_t0.csv"]


def test_seed_changes_perturbation(tmp_path):
    cfg = _copy(tmp_path, "spike_interval.toml")
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["run", "--config", str(cfg), "--out", str(a), "--seed", "1"])
    cli.main(["run", "--config", str(cfg), "--out", str(b), "--seed", "2"])
    assert (a / "series.csv").read_bytes() != (b / "series.csv").read_bytes()


def test_config_echo_roundtrip(tmp_path):
    cfg_path = _copy(tmp_path, "spike_interval.toml")
    cfg = cli.load_config(cfg_path)
    out = tmp_path / "out"
    cli.main(["run", "--config", str(cfg_path), "--out", str(out)])
    echo = json.loads((out / "summary.json").read_text())["config"]
    back = cli.ExperimentConfig.from_dict(echo)
    expected = cfg.to_dict()
    expected["output"]["dir"] = str(out)
    assert back.to_dict() == expected
    assert back.initial == cfg.initial and back.run == cfg.run


def test_sweep_grid_points(tmp_path):
    def edit(text):
        return text.replace('dir = "out/constant"', 'dir = "out/constant"\n\n[sweep]\nmode = "grid"\n\n'
                            '[sweep.grid]\n"run.alpha" = [0.5, 1.0]\n"run.dt" = [0.01, 0.02]')
    cfg = _copy(tmp_path, "constant.toml", edit)
    out = tmp_path / "sweep"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
    points = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert points == ["point_000", "point_001", "point_002", "point_003"]
    with open(out / "sweep_summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {(r["run.alpha"], r["run.dt"]) for r in rows} == {("0.5", "0.01"), ("0.5", "0.02"), ("1", "0.01"), ("1", "0.02")}


def test_sweep_child_failure_recorded(tmp_path):
    def edit(text):
        return text.replace('dir = "out/constant"', 'dir = "out/constant"\n\n[sweep]\nmode = "grid"\n\n'
                            '[sweep.grid]\n"run.alpha" = [0.0, 1.0]')
    cfg = _copy(tmp_path, "constant.toml", edit)
    out = tmp_path / "sweep"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_CONFIG
    with open(out / "sweep_summary.csv") as fh:
        codes = [int(r["exit_code"]) for r in csv.DictReader(fh)]
    assert codes == [cli.EXIT_CONFIG, cli.EXIT_OK]


def test_sweep_threads_match_serial(tmp_path):
    def edit(text):
        return text.replace('dir = "out/constant"', 'dir = "out/constant"\n\n[sweep]\nmode = "grid"\n\n'
                            '[sweep.grid]\n"initial.value" = [0.8, 1.5]')
    cfg = _copy(tmp_path, "constant.toml", edit)
    cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "s1")])
    cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "s2"), "--threads", "2"])
    for k in ("point_000", "point_001"):
        assert (tmp_path / "s1" / k / "series.csv").read_bytes() == (tmp_path / "s2" / k / "series.csv").read_bytes()


def test_contraction_sweep(tmp_path):
    cfg = _copy(tmp_path, "contraction.toml")
    out = tmp_path / "c"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
    for k in ("point_000", "point_001"):
        verdict = json.loads((out / k / "contraction.json").read_text())
        assert verdict["passed"] is True
        assert (out / k / "a" / "series.csv").exists() and (out / k / "b" / "series.csv").exists()


def test_penalized_sweep_table(tmp_path):
    cfg = _copy(tmp_path, "penalized.toml",
                lambda t: t.replace("n_r = 16", "n_r = 8").replace("n_phi = 32", "n_phi = 16")
                .replace("t_end = 0.5", "t_end = 0.1").replace("[1, 10, 100, 1000]", "[1, 10, 100]"))
    out = tmp_path / "p"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
    table = json.loads((out / "penalized_summary.json").read_text())
    assert table["cauchy"] and len(table["differences"]) == 2
    with open(out / "penalized_table.csv") as fh:
        assert next(csv.reader(fh)) == ["n", "boundary_mass", "l1_to_previous"]


def test_moser_table_columns(capsys):
    assert cli.main(["moser-table", "--eps", "0.5", "--p0", "1", "--i-max", "10"]) == cli.EXIT_OK
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 11
    p = [float(r["p_i"]) for r in rows]
    assert all(b > a for a, b in zip(p, p[1:]))
    assert len({r["H"] for r in rows}) == 1


def test_moser_table_eps_zero_warns(capsys):
    assert cli.main(["moser-table", "--eps", "0", "--i-max", "3"]) == cli.EXIT_OK
    assert "H=1, iteration does not close" in capsys.readouterr().err


def test_moser_table_to_file(tmp_path):
    out = tmp_path / "m.csv"
    assert cli.main(["moser-table", "--eps", "1", "--variant", "theta", "--i-max", "4", "--out", str(out)]) == 0
    assert out.read_text().startswith(",".join(("i", "p_i", "rho_i")))


def test_module_entry_point_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "vfdlab", "--help"], capture_output=True, text=True, check=True)
    for cmd in ("run", "sweep", "verify-oracle", "moser-table"):
        assert cmd in out.stdout
