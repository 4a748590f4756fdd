"""Config-driven experiment runner, table reproduction and global-Fano scans.

Every data file is written to a temporary name and renamed into place.
Data files depend only on the configuration; wall time and other
run-specific facts go to ``metadata.json``.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import metadata as _pkg_metadata

import numpy as np

from . import _backend
from .analytic import net_fano, net_frequencies, net_prediction
from .classical import ClassicalState, integrate, integrals_of_motion, shg_elliptic_solution
from .ensemble import NoiseSpec, run_ensemble, sample_initial_array
from .errors import ConfigError, MemoryBoundError
from .fock import DEFAULT_TAIL_TOL, MAX_BLOCK_DIM, CoherentInput, ModelSpec, choose_cutoffs, prepare_product_state
from .observables import fano_array, husimi_q, quadrature_variance, window_stats
from .quantum import EigenCache, block_eigens, evolve, moment_series, reduced_density, time_averaged_moments

ENGINES = ("quantum", "classical", "semiclassical", "analytic")
DEFAULT_WINDOW = (50.0, 150.0)
DEFAULT_WINDOW_SAMPLES = 2001


def code_version():
    try:
        return _pkg_metadata.version("artifact")
    except _pkg_metadata.PackageNotFoundError:
        return "unknown"


def _parse_complex(value, path):
    if isinstance(value, bool):
        raise ConfigError("expected a number", path)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_parse_float(value[0], path + "[0]"), _parse_float(value[1], path + "[1]"))
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(_parse_float(value.get("re", 0.0), path + ".re"), _parse_float(value.get("im", 0.0), path + ".im"))
    raise ConfigError(f"expected a number, [re, im] or {{re, im}}, got {value!r}", path)


def _parse_float(value, path, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError("must be finite", path)
    if positive and value <= 0:
        raise ConfigError("must be positive", path)
    if nonneg and value < 0:
        raise ConfigError("must be nonnegative", path)
    return value


def _parse_int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}", path)
    return value


def _complex_json(z):
    return [z.real, z.imag]


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. ``grid`` is ``{"t_end", "samples"}`` in gt or
    ``{"tau": [lo, hi], "samples"}`` in scaled time tau = omega_bar g t."""

    engine: str
    model: ModelSpec
    input: CoherentInput
    grid: dict
    out: str
    noise: NoiseSpec | None = None
    observables: tuple = ()
    window: tuple | None = None
    tail_tol: float = DEFAULT_TAIL_TOL
    tol: float = 1e-10
    threads: int = 1
    quad_angle: float = 0.0
    qfunc: dict = field(default_factory=dict)
    snapshot_times: tuple = ()
    max_block_dim: int = MAX_BLOCK_DIM

    @property
    def r(self):
        """NET amplitude scale used for omega_bar: |alphaN|, or |alpha1|/N if the harmonic is empty."""
        return self.input.rN if self.input.rN > 0 else self.input.r1 / self.model.order

    def omega_bar(self):
        r = self.r
        if r == 0:
            raise ConfigError("scaled time needs a nonzero input amplitude", "grid.tau")
        return net_frequencies(self.model.order, r)[0] * self.model.coupling

    def times(self):
        n = self.grid["samples"]
        if "tau" in self.grid:
            lo, hi = self.grid["tau"]
            return np.linspace(lo, hi, n) / self.omega_bar()
        return np.linspace(0.0, self.grid["t_end"], n)

    def window_gt(self):
        if self.window is None:
            return None
        lo, hi = self.window
        w = self.omega_bar()
        return lo / w, hi / w

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {
            "engine", "model", "input", "grid", "out", "noise", "observables", "window", "tail_tol",
            "tol", "threads", "quad_angle", "qfunc", "snapshot_times", "max_block_dim",
        }  # fmt: skip
        for key in d:
            if key not in known:
                raise ConfigError("unknown field", key)
        engine = d.get("engine")
        if engine not in ENGINES:
            raise ConfigError(f"must be one of {', '.join(ENGINES)}", "engine")

        m = d.get("model", {})
        if not isinstance(m, dict):
            raise ConfigError("expected an object", "model")
        order = _parse_int(m.get("order", 2), "model.order", 1)
        coupling = _parse_float(m.get("coupling", 1.0), "model.coupling", positive=True)
        model = ModelSpec(order, coupling)

        inp = d.get("input")
        if not isinstance(inp, dict):
            raise ConfigError("expected an object with alpha1/alphaN or net_r", "input")
        if "net_r" in inp:
            if set(inp) - {"net_r", "phase"}:
                raise ConfigError("net_r cannot be combined with explicit amplitudes", "input")
            r = _parse_float(inp["net_r"], "input.net_r", positive=True)
            coherent = CoherentInput.net(model, r, _parse_float(inp.get("phase", 0.0), "input.phase"))
        else:
            for key in inp:
                if key not in ("alpha1", "alphaN"):
                    raise ConfigError("unknown field", f"input.{key}")
            coherent = CoherentInput(
                _parse_complex(inp.get("alpha1", 0.0), "input.alpha1"),
                _parse_complex(inp.get("alphaN", 0.0), "input.alphaN"),
                model,
            )

        grid = d.get("grid")
        if engine == "analytic" and grid is None:
            grid = {"t_end": 1.0, "samples": 2}
        if not isinstance(grid, dict):
            raise ConfigError("expected an object", "grid")
        samples = _parse_int(grid.get("samples", DEFAULT_WINDOW_SAMPLES), "grid.samples", 2)
        if "tau" in grid:
            if "t_end" in grid:
                raise ConfigError("give either tau or t_end, not both", "grid")
            tau = grid["tau"]
            if not isinstance(tau, (list, tuple)) or len(tau) != 2:
                raise ConfigError("expected [lo, hi]", "grid.tau")
            lo = _parse_float(tau[0], "grid.tau[0]", nonneg=True)
            hi = _parse_float(tau[1], "grid.tau[1]", positive=True)
            if hi <= lo:
                raise ConfigError("hi must exceed lo", "grid.tau")
            grid = {"tau": [lo, hi], "samples": samples}
        elif "t_end" in grid:
            grid = {"t_end": _parse_float(grid["t_end"], "grid.t_end", positive=True), "samples": samples}
        else:
            raise ConfigError("needs t_end or tau", "grid")

        window = d.get("window")
        if window is None and "tau" in grid:
            window = DEFAULT_WINDOW
        if window is not None:
            if not isinstance(window, (list, tuple)) or len(window) != 2:
                raise ConfigError("expected [lo, hi] in scaled time", "window")
            window = (_parse_float(window[0], "window[0]", nonneg=True), _parse_float(window[1], "window[1]"))
            if window[1] <= window[0]:
                raise ConfigError("hi must exceed lo", "window")

        noise = None
        if engine == "semiclassical":
            nd = d.get("noise", {})
            if not isinstance(nd, dict):
                raise ConfigError("expected an object", "noise")
            try:
                noise = NoiseSpec(
                    _parse_float(nd.get("sigma2", 0.25), "noise.sigma2", positive=True),
                    _parse_int(nd.get("seed", 0), "noise.seed", 0),
                    _parse_int(nd.get("count", 10_000), "noise.count", 1),
                )
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(str(exc), "noise") from exc
        elif d.get("noise") is not None:
            raise ConfigError("noise applies to the semiclassical engine only", "noise")

        obs = d.get("observables", [])
        allowed = {"fano", "quadrature", "qfunc", "trajectory", "cloud"}
        if not isinstance(obs, (list, tuple)) or any(o not in allowed for o in obs):
            raise ConfigError(f"entries must be from {sorted(allowed)}", "observables")

        qfunc = d.get("qfunc", {}) or {}
        if not isinstance(qfunc, dict):
            raise ConfigError("expected an object", "qfunc")
        for key in qfunc:
            if key not in ("times", "mode", "resolution", "center", "half_extent"):
                raise ConfigError("unknown field", f"qfunc.{key}")
        if qfunc:
            qfunc = dict(qfunc)
            qfunc["times"] = [_parse_float(t, f"qfunc.times[{i}]", nonneg=True) for i, t in enumerate(qfunc.get("times", []))]
            qfunc["resolution"] = _parse_int(qfunc.get("resolution", 201), "qfunc.resolution", 2)
            mode = qfunc.get("mode", order)
            if mode not in (1, order, "N"):
                raise ConfigError(f"must be 1 or {order}", "qfunc.mode")
            qfunc["mode"] = order if mode == "N" else mode
            if qfunc.get("center") is not None:
                qfunc["center"] = _parse_complex(qfunc["center"], "qfunc.center")
            if qfunc.get("half_extent") is not None:
                qfunc["half_extent"] = _parse_float(qfunc["half_extent"], "qfunc.half_extent", positive=True)

        snaps = d.get("snapshot_times", [])
        if not isinstance(snaps, (list, tuple)):
            raise ConfigError("expected a list", "snapshot_times")
        snaps = tuple(_parse_float(t, f"snapshot_times[{i}]", nonneg=True) for i, t in enumerate(snaps))

        out = d.get("out")
        if not isinstance(out, str) or not out:
            raise ConfigError("output directory required", "out")
        tail_tol = _parse_float(d.get("tail_tol", DEFAULT_TAIL_TOL), "tail_tol", positive=True)
        if tail_tol >= 1:
            raise ConfigError("must lie in (0, 1)", "tail_tol")
        cfg = cls(
            engine=engine,
            model=model,
            input=coherent,
            grid=grid,
            out=out,
            noise=noise,
            observables=tuple(obs),
            window=window,
            tail_tol=tail_tol,
            tol=_parse_float(d.get("tol", 1e-10), "tol", positive=True),
            threads=_parse_int(d.get("threads", 1), "threads", 1),
            quad_angle=_parse_float(d.get("quad_angle", 0.0), "quad_angle"),
            qfunc=qfunc,
            snapshot_times=snaps,
            max_block_dim=_parse_int(d.get("max_block_dim", MAX_BLOCK_DIM), "max_block_dim", 1),
        )
        if ("tau" in grid or window is not None) and engine != "analytic":
            cfg.omega_bar()
        return cfg

    def to_dict(self):
        d = {
            "engine": self.engine,
            "model": {"order": self.model.order, "coupling": self.model.coupling},
            "input": {"alpha1": _complex_json(self.input.alpha1), "alphaN": _complex_json(self.input.alphaN)},
            "grid": copy.deepcopy(self.grid),
            "out": self.out,
            "observables": list(self.observables),
            "window": list(self.window) if self.window is not None else None,
            "tail_tol": self.tail_tol,
            "tol": self.tol,
            "threads": self.threads,
            "quad_angle": self.quad_angle,
            "snapshot_times": list(self.snapshot_times),
            "max_block_dim": self.max_block_dim,
        }
        if self.noise is not None:
            d["noise"] = {"sigma2": self.noise.sigma2, "seed": self.noise.seed, "count": self.noise.count}
        if self.qfunc:
            q = dict(self.qfunc)
            if q.get("center") is not None:
                q["center"] = _complex_json(q["center"])
            d["qfunc"] = q
        return d

    def replace(self, **changes):
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "config") from exc
    return raw


@dataclass
class RunArtifact:
    directory: str
    metadata: dict
    data_files: list
    summary: dict


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _fmt_time(t):
    return f"{t:.6g}"


def _quantum(cfg, files, summary, meta):
    state = prepare_product_state(cfg.input, cfg.tail_tol, cfg.max_block_dim)
    cut1, cutn = state.cutoffs
    summary["cutoffs"] = {"cutoff1": cut1, "cutoffN": cutn, "cutoffE": state.cutoffE, "blocks": len(state.blocks)}
    eigs = block_eigens(state)
    times = cfg.times()
    want = set(cfg.observables) or {"fano"}
    if "fano" in want or cfg.window is not None:
        ms = moment_series(state, eigs, times)
        f1 = fano_array(ms.n1[:, 0], ms.n1[:, 1])
        fn = fano_array(ms.nN[:, 0], ms.nN[:, 1])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gt", "n1_mean", "n1_second", "F1", "nN_mean", "nN_second", "FN"])
        for row in zip(times, ms.n1[:, 0], ms.n1[:, 1], f1, ms.nN[:, 0], ms.nN[:, 1], fn):
            w.writerow([repr(float(v)) for v in row])
        files["fano.csv"] = buf.getvalue()
        summary["norm_drift"] = float(np.max(np.abs(ms.norm - 1.0)))
        energy = ms.n1[:, 0] + cfg.model.order * ms.nN[:, 0]
        summary["energy_drift"] = float(np.max(np.abs(energy - energy[0])) / max(energy[0], 1e-300))
        if cfg.window is not None:
            lo, hi = cfg.window_gt()
            summary["F1_mean"], summary["F1_rms"] = window_stats(times, f1, lo, hi)
            summary["FN_mean"], summary["FN_rms"] = window_stats(times, fn, lo, hi)
    if "quadrature" in want:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gt", "S1", "SN"])
        for t in times:
            st = evolve(state, eigs, t)
            s1 = quadrature_variance(st, 1, cfg.quad_angle)
            sn = quadrature_variance(st, cfg.model.order, cfg.quad_angle)
            w.writerow([repr(float(t)), repr(s1), repr(sn)])
        files["quadrature.csv"] = buf.getvalue()
    if "qfunc" in want or cfg.qfunc.get("times"):
        q = cfg.qfunc
        mode = q.get("mode", cfg.model.order)
        for t in q.get("times", [0.0]):
            rho = reduced_density(evolve(state, eigs, t), mode)
            grid = husimi_q(rho, q.get("center"), q.get("half_extent"), q.get("resolution", 201))
            files[f"qfunc_mode{mode}_gt{_fmt_time(t)}.csv"] = grid.to_csv()


def _classical(cfg, files, summary, meta):
    s0 = ClassicalState(cfg.input.alpha1, cfg.input.alphaN)
    times = cfg.times()
    grid = times if times[0] == 0 else np.concatenate(([0.0], times))
    rec = integrate(s0, cfg.model, None, cfg.tol, times=grid)
    files["trajectory.csv"] = rec.to_csv()
    inv = integrals_of_motion(s0, cfg.model)
    scale = max(inv.E, 1e-300)
    summary["E_drift"] = float(np.max(np.abs(rec.energy - inv.E)) / scale)
    summary["Gamma_drift"] = float(np.max(np.abs(rec.gamma - inv.Gamma)) / max(abs(inv.Gamma), scale ** ((cfg.model.order + 1) / 2)))
    if cfg.model.order == 2:
        closed = shg_elliptic_solution(s0, cfg.model, rec.times)
        summary["elliptic_max_dev"] = float(np.max(np.abs(closed - rec.nN)))


def _semiclassical(cfg, files, summary, meta):
    times = cfg.times()
    samples = sample_initial_array(cfg.input, cfg.noise)
    snaps = cfg.snapshot_times if ("cloud" in cfg.observables or cfg.snapshot_times) else ()
    stats, clouds = run_ensemble(
        samples, cfg.model, times, snaps, cfg.quad_angle, cfg.tol, cfg.threads, seed=cfg.noise.seed
    )
    files["ensemble.csv"] = stats.to_csv()
    for c in clouds:
        files[f"cloud_mode{c.mode}_gt{_fmt_time(c.time)}.csv"] = c.to_csv()
    meta["seeds"] = {"noise": cfg.noise.seed}
    summary["E_mean_drift"] = float(np.max(np.abs(stats.E_mean - stats.E_mean[0])) / max(stats.E_mean[0], 1e-300))
    summary["count"] = stats.count
    if cfg.window is not None:
        lo, hi = cfg.window_gt()
        summary.update(stats.window_summary(lo, hi))


def _analytic(cfg, files, summary, meta):
    N = cfg.model.order
    f1, fn = net_fano(N)
    summary["F1S"] = str(f1)
    summary["FNS"] = str(fn)
    summary["F1_mean"], summary["FN_mean"] = float(f1), float(fn)
    summary["F1_rms"] = summary["FN_rms"] = 0.0
    r = cfg.r
    if r > 0:
        sigma2 = cfg.noise.sigma2 if cfg.noise else 0.25
        p = net_prediction(N, r, sigma2)
        summary.update(
            omega_bar=p.omega_bar * cfg.model.coupling,
            delta_omega=p.delta_omega * cfg.model.coupling,
            T_osc=p.T_osc / cfg.model.coupling,
            T_rel=p.T_rel / cfg.model.coupling,
            A2_mean=p.A2_mean,
            B2_mean=p.B2_mean,
        )


_DISPATCH = {"quantum": _quantum, "classical": _classical, "semiclassical": _semiclassical, "analytic": _analytic}


def run_experiment(config):
    """Run one configured experiment and write its artefacts to ``config.out``."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    try:
        os.makedirs(config.out, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}", "out") from exc
    if not os.access(config.out, os.W_OK):
        raise ConfigError("output directory is not writable", "out")
    start = time.perf_counter()
    files = {}
    summary = {
        "engine": config.engine,
        "N": config.model.order,
        "r": config.r,
        "window": list(config.window) if config.window is not None else None,
        "F1_mean": None,
        "F1_rms": None,
        "FN_mean": None,
        "FN_rms": None,
        "cutoffs": None,
    }
    meta = {"seeds": {}}
    if config.engine == "quantum":
        c1, cn, ce = choose_cutoffs(config.input, config.tail_tol)
        summary["cutoffs"] = {"cutoff1": c1, "cutoffN": cn, "cutoffE": ce}
    _DISPATCH[config.engine](config, files, summary, meta)
    files["summary.json"] = _json(summary)
    paths = []
    for name in sorted(files):
        path = os.path.join(config.out, name)
        write_atomic(path, files[name])
        paths.append(path)
    meta.update(
        config=config.to_dict(),
        cutoffs=summary["cutoffs"],
        code_version=code_version(),
        backend=_backend.BACKEND,
        wall_time_s=time.perf_counter() - start,
        window_convention="tau = omega_bar * g * t; window statistics are plain mean and RMS over samples",
    )
    write_atomic(os.path.join(config.out, "metadata.json"), _json(meta))
    return RunArtifact(config.out, meta, paths, summary)


@dataclass(frozen=True)
class TableRow:
    N: int
    quantum: float | None
    quantum_rms: float | None
    closed_form: Fraction
    deviation: float | None
    cutoffs: dict
    status: str = "ok"


def quantum_window_fano(N, r, tail_tol=DEFAULT_TAIL_TOL, window=DEFAULT_WINDOW, samples=DEFAULT_WINDOW_SAMPLES, max_block_dim=MAX_BLOCK_DIM, cache=None):
    """Window mean and RMS of (F1, FN) for the NET input alpha1 = N r, alphaN = r."""
    model = ModelSpec(N, 1.0)
    inp = CoherentInput.net(model, r)
    state = prepare_product_state(inp, tail_tol, max_block_dim)
    eigs = block_eigens(state, cache)
    wbar = net_frequencies(N, r)[0]
    times = np.linspace(window[0], window[1], samples) / wbar
    ms = moment_series(state, eigs, times)
    f1 = fano_array(ms.n1[:, 0], ms.n1[:, 1])
    fn = fano_array(ms.nN[:, 0], ms.nN[:, 1])
    cut = {"cutoff1": state.cutoffs[0], "cutoffN": state.cutoffs[1], "cutoffE": state.cutoffE}
    return (float(f1.mean()), float(f1.std())), (float(fn.mean()), float(fn.std())), cut


def reproduce_table(which, N_list=(1, 2, 3), r=5.0, tail_tol=DEFAULT_TAIL_TOL, max_block_dim=MAX_BLOCK_DIM, samples=DEFAULT_WINDOW_SAMPLES):
    """Quantum window averages against the NET closed forms, one row per N."""
    if which not in ("table1", "table2"):
        raise ConfigError("must be table1 or table2", "which")
    rows = []
    for N in N_list:
        if N not in (1, 2, 3, 4, 5):
            raise ConfigError(f"N must be in 1..5, got {N}", "N")
        closed = net_fano(N)[0 if which == "table1" else 1]
        try:
            f1, fn, cut = quantum_window_fano(N, r, tail_tol, samples=samples, max_block_dim=max_block_dim)
        except MemoryBoundError as exc:
            rows.append(TableRow(N, None, None, closed, None, exc.required, "memory-bound"))
            continue
        mean, rms = f1 if which == "table1" else fn
        rows.append(TableRow(N, mean, rms, closed, abs(mean - float(closed)) / float(closed), cut))
    return rows


def table_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "quantum", "quantum_rms", "closed_form", "closed_form_value", "deviation", "cutoffE", "status"])
    for row in rows:
        w.writerow(
            [
                row.N,
                "" if row.quantum is None else repr(row.quantum),
                "" if row.quantum_rms is None else repr(row.quantum_rms),
                str(row.closed_form),
                repr(float(row.closed_form)),
                "" if row.deviation is None else repr(row.deviation),
                row.cutoffs.get("cutoffE", ""),
                row.status,
            ]
        )
    return buf.getvalue()


@dataclass(frozen=True)
class GlobalFanoScan:
    """``values[i, j]`` is the harmonic global Fano factor at (alpha1[i], alpha2[j]); NaN where undefined."""

    alpha1: np.ndarray
    alpha2: np.ndarray
    values: np.ndarray
    horizon: float
    order: int = 2

    def ridge(self):
        """alpha1 of the minimum for every alpha2 column with a defined value."""
        out = []
        for j, a2 in enumerate(self.alpha2):
            col = self.values[:, j]
            if np.all(np.isnan(col)):
                continue
            i = int(np.nanargmin(col))
            out.append((float(self.alpha1[i]), float(a2), float(col[i])))
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha1", "alpha2", "FG"])
        for i, a1 in enumerate(self.alpha1):
            for j, a2 in enumerate(self.alpha2):
                v = self.values[i, j]
                w.writerow([repr(float(a1)), repr(float(a2)), "undefined" if np.isnan(v) else repr(float(v))])
        return buf.getvalue()


def global_fano_cell(a1, a2, N=2, horizon=math.inf, tail_tol=DEFAULT_TAIL_TOL, cache=None, max_block_dim=MAX_BLOCK_DIM):
    """Harmonic-mode global Fano factor for real amplitudes (theta = 0); NaN at zero mean."""
    model = ModelSpec(N, 1.0)
    state = prepare_product_state(CoherentInput(a1, a2, model), tail_tol, max_block_dim)
    eigs = block_eigens(state, cache)
    _, mn = time_averaged_moments(state, eigs, horizon)
    if mn[0] <= 0:
        return math.nan
    return float((mn[1] - mn[0] ** 2) / mn[0])


def scan_global_fano(alpha1_values, alpha2_values, N=2, horizon=math.inf, tail_tol=DEFAULT_TAIL_TOL, threads=1, max_block_dim=MAX_BLOCK_DIM):
    """Global Fano factor of the harmonic over a real-amplitude grid.

    Time averages are taken spectrally over [0, horizon] (``inf`` keeps only
    the stationary part), so no time grid is involved.
    """
    a1 = np.asarray(alpha1_values, dtype=float)
    a2 = np.asarray(alpha2_values, dtype=float)
    if not horizon > 0:
        raise ConfigError("must be positive", "horizon")
    cache = EigenCache()
    cells = [(i, j) for i in range(a1.size) for j in range(a2.size)]

    def work(ij):
        i, j = ij
        return global_fano_cell(a1[i], a2[j], N, horizon, tail_tol, cache, max_block_dim)

    values = np.full((a1.size, a2.size), np.nan)
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        for (i, j), v in zip(cells, pool.map(work, cells)):
            values[i, j] = v
    return GlobalFanoScan(a1, a2, values, float(horizon), N)
