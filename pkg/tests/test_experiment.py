import json
import math
import os
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from harmstat.errors import ConfigError
from harmstat.experiment import (
    ExperimentConfig,
    global_fano_cell,
    reproduce_table,
    run_experiment,
    scan_global_fano,
    table_csv,
    write_atomic,
)


def base(tmp_path, **extra):
    d = {
        "engine": "quantum",
        "model": {"order": 2},
        "input": {"alpha1": 2.0, "alphaN": 1.0},
        "grid": {"t_end": 1.0, "samples": 11},
        "out": str(tmp_path / "run"),
    }
    d.update(extra)
    return d


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"engine": "magic"}, "engine"),
        ({"model": {"order": 0}}, "model.order"),
        ({"model": {"order": 2, "coupling": -1}}, "model.coupling"),
        ({"input": {"alpha1": "big"}}, "input.alpha1"),
        ({"input": {"alpha1": [1, "x"]}}, "input.alpha1[1]"),
        ({"input": {"net_r": 1, "alpha1": 2}}, "input"),
        ({"grid": {"t_end": 1.0, "samples": 1}}, "grid.samples"),
        ({"grid": {"tau": [5, 1]}}, "grid.tau"),
        ({"grid": {}}, "grid"),
        ({"window": [3]}, "window"),
        ({"tail_tol": 2.0}, "tail_tol"),
        ({"threads": 0}, "threads"),
        ({"noise": {"count": 3}}, "noise"),
        ({"observables": ["colour"]}, "observables"),
        ({"qfunc": {"mode": 5}}, "qfunc.mode"),
        ({"bogus": 1}, "bogus"),
    ],
)
def test_config_errors_carry_field_paths(tmp_path, patch, path):
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict(base(tmp_path, **patch))
    assert err.value.field == path
    assert isinstance(err.value, ValueError)


def test_semiclassical_noise_paths(tmp_path):
    d = base(tmp_path, engine="semiclassical", input={"alpha1": 6, "alphaN": 3}, noise={"sigma2": 0})
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict(d)
    assert err.value.field == "noise.sigma2"


def test_amplitude_forms(tmp_path):
    for form in (2.0, [2.0, 0.0], {"re": 2.0}):
        cfg = ExperimentConfig.from_dict(base(tmp_path, input={"alpha1": form, "alphaN": 1}))
        assert cfg.input.alpha1 == 2
    cfg = ExperimentConfig.from_dict(base(tmp_path, input={"net_r": 3}))
    assert (cfg.input.alpha1, cfg.input.alphaN) == (6, 3)


def test_scaled_grid_and_default_window(tmp_path):
    cfg = ExperimentConfig.from_dict(base(tmp_path, grid={"tau": [0, 150], "samples": 301}, input={"net_r": 3}))
    wbar = math.sqrt(12) * 6
    assert cfg.window == (50.0, 150.0)
    assert cfg.times()[-1] == pytest.approx(150 / wbar)
    assert cfg.window_gt() == pytest.approx((50 / wbar, 150 / wbar))


def test_round_trip(tmp_path):
    d = base(tmp_path, engine="semiclassical", input={"alpha1": 6, "alphaN": 3}, noise={"seed": 7, "count": 20}, snapshot_times=[0.5])
    cfg = ExperimentConfig.from_dict(d)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert cfg.replace(threads=2).threads == 2


def test_metadata_reruns_experiment(tmp_path):
    d = base(tmp_path, engine="semiclassical", input={"alpha1": 6, "alphaN": 3}, noise={"seed": 7, "count": 40}, snapshot_times=[1.0])
    art = run_experiment(d)
    meta = json.loads(Path(art.directory, "metadata.json").read_text())
    assert meta["seeds"]["noise"] == 7 and "wall_time_s" in meta and "code_version" in meta
    cfg = dict(meta["config"], out=str(tmp_path / "again"))
    art2 = run_experiment(cfg)
    for name in ("ensemble.csv", "cloud_mode2_gt1.csv", "cloud_mode1_gt1.csv", "summary.json"):
        a = Path(art.directory, name).read_bytes()
        b = Path(art2.directory, name).read_bytes()
        assert a == b, name


def test_byte_identical_reruns_any_threads(tmp_path):
    outs = []
    for k, threads in enumerate((1, 1, 3)):
        d = base(tmp_path, engine="semiclassical", input={"alpha1": 6, "alphaN": 3}, noise={"seed": 7, "count": 600}, threads=threads)
        d["out"] = str(tmp_path / f"r{k}")
        outs.append(Path(run_experiment(d).directory, "ensemble.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_quantum_run_outputs(tmp_path):
    d = base(tmp_path, observables=["fano", "quadrature"], qfunc={"times": [0.0], "resolution": 21})
    art = run_experiment(d)
    s = art.summary
    for key in ("engine", "N", "r", "window", "F1_mean", "F1_rms", "FN_mean", "FN_rms", "cutoffs"):
        assert key in s
    assert s["norm_drift"] < 1e-10
    names = sorted(os.path.basename(p) for p in art.data_files)
    assert names == ["fano.csv", "qfunc_mode2_gt0.csv", "quadrature.csv", "summary.json"]
    quad = Path(art.directory, "quadrature.csv").read_text().splitlines()
    assert quad[0] == "gt,S1,SN" and abs(float(quad[1].split(",")[1]) - 1) < 1e-8


def test_quantum_window_summary(tmp_path):
    d = base(tmp_path, input={"alpha1": 6, "alphaN": 3}, grid={"tau": [50, 150], "samples": 401})
    s = run_experiment(d).summary
    assert 0.80 <= s["FN_mean"] <= 0.87 and s["FN_rms"] > 0
    assert s["cutoffs"]["cutoffE"] == s["cutoffs"]["cutoff1"] + 2 * s["cutoffs"]["cutoffN"]


def test_classical_run(tmp_path):
    d = base(tmp_path, engine="classical", input={"alpha1": 1.3, "alphaN": 0.4}, grid={"t_end": 5, "samples": 101})
    s = run_experiment(d).summary
    assert s["E_drift"] < 1e-8 and s["Gamma_drift"] < 1e-8 and s["elliptic_max_dev"] < 1e-6


def test_analytic_run(tmp_path):
    d = {"engine": "analytic", "model": {"order": 3}, "input": {"net_r": 5}, "out": str(tmp_path / "a")}
    s = run_experiment(d).summary
    assert (s["F1S"], s["FNS"]) == ("29/16", "13/16")
    assert s["omega_bar"] == pytest.approx(math.sqrt(24) * 225)


def test_table_rows():
    rows = reproduce_table("table1", [1], r=2.0)
    r = rows[0]
    assert (round(r.quantum, 10), r.closed_form, round(r.deviation, 10)) == (1, Fraction(1), 0)
    rows = reproduce_table("table2", [2], r=2.0, max_block_dim=3)
    assert rows[0].status == "memory-bound" and rows[0].quantum is None
    assert "memory-bound" in table_csv(rows)
    with pytest.raises(ConfigError):
        reproduce_table("table3", [2])
    with pytest.raises(ConfigError):
        reproduce_table("table1", [6])


def test_global_fano_cells():
    assert math.isnan(global_fano_cell(0.0, 0.0))
    assert global_fano_cell(6.0, 1.0) > 1
    assert global_fano_cell(4.0, 2.0) < 1


def test_global_fano_finite_horizon_converges():
    inf = global_fano_cell(2.0, 1.0)
    assert abs(global_fano_cell(2.0, 1.0, horizon=1e5) - inf) < 1e-3


def test_scan_threads_and_csv():
    a1 = np.array([0.0, 2.0])
    a2 = np.array([0.0, 1.0])
    one = scan_global_fano(a1, a2, threads=1)
    two = scan_global_fano(a1, a2, threads=2)
    assert np.array_equal(one.values, two.values, equal_nan=True)
    lines = one.to_csv().splitlines()
    assert lines[0] == "alpha1,alpha2,FG" and lines[1].endswith("undefined")
    assert one.ridge()[-1][:2] == (2.0, 1.0)


def test_write_atomic_leaves_no_temp(tmp_path):
    p = tmp_path / "x.txt"
    write_atomic(str(p), "hello\n")
    write_atomic(str(p), "again\n")
    assert p.read_text() == "again\n"
    assert os.listdir(tmp_path) == ["x.txt"]
