import json
import subprocess
import sys
from pathlib import Path

import pytest

from harmstat.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, build_parser, main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_subcommands_present():
    parser = build_parser()
    for name in ("evolve", "classical", "ensemble", "analytic", "qfunc", "scan-global-fano", "reproduce-table"):
        args = parser.parse_args([name, "--threads", "2", "--seed", "7", "--tail-tol", "1e-9", "--out", "x"])
        assert args.command == name and args.threads == 2 and args.seed == 7


def test_analytic_summary(tmp_path, capsys):
    code, out, _ = run(["analytic", "-N", "3", "--net-r", "5", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    summary = json.loads(out)
    assert (summary["F1S"], summary["FNS"]) == ("29/16", "13/16")
    assert json.loads((tmp_path / "summary.json").read_text()) == summary


def test_config_error_exit(tmp_path, capsys):
    code, _, err = run(["evolve", "--tail-tol", "2", "--out", str(tmp_path)], capsys)
    assert code == EXIT_CONFIG and "tail_tol" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(["evolve", "--config", str(bad)], capsys)
    assert code == EXIT_CONFIG
    code, _, _ = run(["ensemble", "--threads", "0", "--out", str(tmp_path)], capsys)
    assert code == EXIT_CONFIG


def test_numerical_failure_exit(tmp_path, capsys):
    argv = ["classical", "--alpha1", "1", "--alphaN", "0", "--t-end", "1", "--tol", "1e-300", "--out", str(tmp_path)]
    code, _, err = run(argv, capsys)
    assert code == EXIT_NUMERICAL and "numerical failure" in err


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = {
        "engine": "semiclassical",
        "input": {"alpha1": 6, "alphaN": 3},
        "grid": {"t_end": 1.0, "samples": 11},
        "noise": {"count": 50, "seed": 1},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    code, _, _ = run(["ensemble", "--config", str(path), "--seed", "7", "--out", str(tmp_path / "o")], capsys)
    assert code == EXIT_OK
    meta = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert meta["config"]["noise"] == {"sigma2": 0.25, "seed": 7, "count": 50}


def test_ensemble_threads_byte_identical(tmp_path, capsys):
    common = ["ensemble", "--alpha1", "6", "--alphaN", "3", "--t-end", "2", "--samples", "41", "--count", "500", "--seed", "7", "--snapshot", "2"]
    for threads in ("1", "4"):
        assert run(common + ["--threads", threads, "--out", str(tmp_path / threads)], capsys)[0] == EXIT_OK
    for name in ("ensemble.csv", "cloud_mode2_gt2.csv"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "4" / name).read_bytes()


def test_qfunc_and_evolve(tmp_path, capsys):
    argv = ["qfunc", "--alpha1", "2", "--alphaN", "1", "--times", "0", "0.5", "--resolution", "11", "--out", str(tmp_path)]
    assert run(argv, capsys)[0] == EXIT_OK
    assert sorted(p.name for p in tmp_path.glob("qfunc_*")) == ["qfunc_mode2_gt0.5.csv", "qfunc_mode2_gt0.csv"]
    argv = ["evolve", "--alpha1", "2", "--alphaN", "1", "--t-end", "1", "--samples", "5", "--quadrature", "--out", str(tmp_path / "e")]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK and json.loads(out)["cutoffs"]["cutoff1"] > 0


def test_scan_and_table(tmp_path, capsys):
    argv = ["scan-global-fano", "--alpha1-range", "0", "2", "2", "--alpha2-range", "0", "1", "1", "--out", str(tmp_path / "s")]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK and json.loads(out)["undefined_cells"] == 1
    assert (tmp_path / "s" / "global_fano.csv").exists()
    argv = ["reproduce-table", "--table", "1", "--orders", "1", "--r", "2", "--samples", "11", "--out", str(tmp_path / "t")]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK and json.loads(out)["rows"][0]["closed_form"] == "1"
    code, _, _ = run(["scan-global-fano", "--alpha1-range", "2", "1", "1", "--out", str(tmp_path)], capsys)
    assert code == EXIT_CONFIG


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "harmstat.cli", "analytic", "-N", "2", "--net-r", "3", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["FNS"] == "5/6"


def test_bad_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
