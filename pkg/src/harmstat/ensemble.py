"""Classical-trajectory Monte Carlo over Gaussian-seeded coherent amplitudes.

Trajectory ``i`` draws its four noise components from the Philox block at
counter ``i`` under key ``(seed, 0)``, so every trajectory's noise depends
only on ``(seed, i)``. Trajectories are integrated in fixed-size chunks and
reduced with compensated sums in index order, making every statistic
independent of the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .classical import DEFAULT_TOL, ClassicalState
from .errors import IntegrationError

JACKKNIFE_GROUPS = 20
RING_SECTORS = 32
_U53 = 2.0**-53


@dataclass(frozen=True)
class NoiseSpec:
    sigma2: float = 0.25
    seed: int = 0
    count: int = 10_000

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"count must be a positive integer, got {self.count}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "count", int(self.count))


def _gaussians(seed, start, count):
    """(count, 4) standard normals for trajectories start .. start+count-1."""
    bitgen = np.random.Philox(key=[seed, 0], counter=[start, 0, 0, 0])
    raw = bitgen.random_raw(4 * count).reshape(count, 4)
    u = (raw >> np.uint64(11)).astype(np.float64) * _U53
    rad = np.sqrt(-2.0 * np.log1p(-u[:, 0::2]))  # 1 - u lies in (0, 1]
    ang = 2.0 * math.pi * u[:, 1::2]
    out = np.empty((count, 4))
    out[:, 0::2] = rad * np.cos(ang)
    out[:, 1::2] = rad * np.sin(ang)
    return out


def sample_initial_array(inp, noise, start=0, count=None):
    """Noisy initial conditions as rows (Re a1, Im a1, Re aN, Im aN)."""
    count = noise.count - start if count is None else count
    for name, r in (("alpha1", inp.r1), ("alphaN", inp.rN)):
        if noise.sigma2 > 0.1 * r * r:
            warnings.warn(f"sigma2 = {noise.sigma2} is not small against |{name}|^2 = {r * r:.4g}", stacklevel=3)
    z = _gaussians(noise.seed, start, count) * math.sqrt(noise.sigma2)
    z += np.array([inp.alpha1.real, inp.alpha1.imag, inp.alphaN.real, inp.alphaN.imag])
    return z


def sample_initial(inp, noise):
    y = sample_initial_array(inp, noise)
    return [ClassicalState(complex(a, b), complex(c, d)) for a, b, c, d in y]


@dataclass(frozen=True)
class CloudSnapshot:
    time: float
    mode: object
    points: np.ndarray
    seed: int | None = None

    @property
    def count(self):
        return int(self.points.size)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# mode={self.mode} gt={self.time!r} seed={self.seed} count={self.count}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im"])
        for p in self.points:
            w.writerow([repr(float(p.real)), repr(float(p.imag))])
        return buf.getvalue()


def cloud_ring_metrics(snapshot, sectors=RING_SECTORS):
    """(radial mean, radial variance, fraction of angular sectors holding a point)."""
    pts = np.asarray(snapshot.points)
    if pts.size == 0:
        raise ValueError("empty snapshot")
    rad = np.abs(pts)
    idx = np.floor((np.angle(pts) + math.pi) / (2 * math.pi) * sectors).astype(int) % sectors
    return float(rad.mean()), float(rad.var()), np.unique(idx).size / sectors


# per-time accumulated columns, all shifted by trajectory 0's value
_DN1, _DN1SQ, _DX1, _DX1SQ, _DNN, _DNNSQ, _DXN, _DXNSQ, _E = range(9)
_NQ = 9


def _observables(y, order, phase):
    """Per-trajectory columns before shifting; y is (M, T, 4)."""
    a1 = y[..., 0] + 1j * y[..., 1]
    an = y[..., 2] + 1j * y[..., 3]
    n1 = a1.real**2 + a1.imag**2
    nn = an.real**2 + an.imag**2
    x1 = 2.0 * (a1 * phase).real
    xn = 2.0 * (an * phase).real
    return n1, x1, nn, xn, n1 + order * nn


def _neumaier(total, comp, x):
    t = total + x
    big = np.abs(total) >= np.abs(x)
    comp += np.where(big, (total - t) + x, (x - t) + total)
    return t


def _group_of(i, count, groups):
    return min(i * groups // count, groups - 1)


@dataclass(frozen=True)
class EnsembleStats:
    """Per-time ensemble moments. ``F*`` are semiclassical Fano factors and
    ``S*`` quadrature variances at ``quad_angle``."""

    times: np.ndarray
    n1_mean: np.ndarray
    n1_second: np.ndarray
    F1: np.ndarray
    S1: np.ndarray
    nN_mean: np.ndarray
    nN_second: np.ndarray
    FN: np.ndarray
    SN: np.ndarray
    E_mean: np.ndarray
    count: int
    quad_angle: float = 0.0
    _group_sums: np.ndarray = field(default=None, repr=False)
    _group_counts: np.ndarray = field(default=None, repr=False)
    _shift: np.ndarray = field(default=None, repr=False)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gt", "n1_mean", "n1_second", "F1", "S1", "nN_mean", "nN_second", "FN", "SN"])
        cols = (self.times, self.n1_mean, self.n1_second, self.F1, self.S1, self.nN_mean, self.nN_second, self.FN, self.SN)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def window_summary(self, lo, hi):
        """Window mean and RMS of F1, FN with jackknife standard errors of the means."""
        sel = (self.times >= lo) & (self.times <= hi)
        if not sel.any():
            raise ValueError(f"no samples in window [{lo}, {hi}]")
        out = {}
        for key, f in (("F1", self.F1), ("FN", self.FN)):
            v = f[sel]
            out[f"{key}_mean"] = float(v.mean())
            out[f"{key}_rms"] = float(v.std())
        if self._group_sums is not None and self._group_sums.shape[0] > 1:
            total = self._group_sums.sum(axis=0)
            groups = self._group_sums.shape[0]
            est = {"F1": [], "FN": []}
            for g in range(groups):
                m = self.count - self._group_counts[g]
                s = (total - self._group_sums[g])[sel] / m
                est["F1"].append(_fano_from_shifted(s, self._shift[sel], 0).mean())
                est["FN"].append(_fano_from_shifted(s, self._shift[sel], 1).mean())
            for key, vals in est.items():
                vals = np.asarray(vals)
                out[f"{key}_se"] = float(math.sqrt((groups - 1) / groups * np.sum((vals - vals.mean()) ** 2)))
        return out


def _fano_from_shifted(avg, shift, mode):
    """Fano factor from averaged shifted sums ``avg`` (T, _NQ) and shifts (T, 2)."""
    dn, dnsq = (avg[:, _DN1], avg[:, _DN1SQ]) if mode == 0 else (avg[:, _DNN], avg[:, _DNNSQ])
    mean = shift[:, mode] + dn
    var = dnsq - dn * dn
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(mean > 0, var / mean, np.nan)


def _run_chunk(y0, start, order, g, grid, tol, phase, shift, keep_idx, snap_idx, count, groups, kern):
    out, fail = kern.dopri5_batch(y0, order, g, grid, tol, tol)
    bad = np.nonzero(~np.isnan(fail))[0]
    if bad.size:
        j = int(bad[0])
        raise IntegrationError(
            f"trajectory {start + j} failed at t = {fail[j]:.6g}", time=float(fail[j]), trajectory=start + j
        )
    snaps = out[:, snap_idx]
    y = out[:, keep_idx]
    n1, x1, nn, xn, e = _observables(y, order, phase)
    d = np.empty(y.shape[:2] + (_NQ,))
    d[..., _DN1] = n1 - shift[:, 0]
    d[..., _DN1SQ] = d[..., _DN1] ** 2
    d[..., _DX1] = x1 - shift[:, 2]
    d[..., _DX1SQ] = d[..., _DX1] ** 2
    d[..., _DNN] = nn - shift[:, 1]
    d[..., _DNNSQ] = d[..., _DNN] ** 2
    d[..., _DXN] = xn - shift[:, 3]
    d[..., _DXNSQ] = d[..., _DXN] ** 2
    d[..., _E] = e
    partial = {}
    for j in range(y.shape[0]):
        gidx = _group_of(start + j, count, groups)
        if gidx not in partial:
            partial[gidx] = [np.zeros(d.shape[1:]), np.zeros(d.shape[1:])]
        acc = partial[gidx]
        acc[0] = _neumaier(acc[0], acc[1], d[j])
    return partial, snaps


def run_ensemble(
    samples,
    model,
    times,
    snapshot_times=(),
    quad_angle=0.0,
    tol=DEFAULT_TOL,
    threads=1,
    seed=None,
    backend=None,
):
    """Integrate every sample and reduce to EnsembleStats plus CloudSnapshots.

    ``samples`` is a list of ClassicalState or an (M, 4) array of real
    components. Snapshots are returned for both modes at each snapshot time.
    """
    if isinstance(samples, np.ndarray):
        y0 = np.ascontiguousarray(samples, dtype=float).reshape(-1, 4)
    else:
        y0 = np.array([s.as_real() for s in samples], dtype=float).reshape(-1, 4)
    count = y0.shape[0]
    times = np.asarray(times, dtype=float)
    if count == 0 or times.size == 0:
        raise ValueError("run_ensemble needs samples and a nonempty time grid")
    if times.min() < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")
    snapshot_times = np.asarray(snapshot_times, dtype=float).ravel()
    grid = np.unique(np.concatenate(([0.0], times, snapshot_times)))
    keep_idx = np.searchsorted(grid, times)
    snap_idx = np.searchsorted(grid, snapshot_times)
    kern = _backend.kernels(backend)
    chunk = _backend.CHUNK
    order, g = model.order, model.coupling
    phase = np.exp(-1j * quad_angle)
    groups = min(JACKKNIFE_GROUPS, count)

    # shifts from trajectory 0 keep the variance subtraction well conditioned
    ref, fail = kern.dopri5_batch(y0[:1], order, g, grid, tol, tol)
    if not math.isnan(fail[0]):
        raise IntegrationError(f"trajectory 0 failed at t = {fail[0]:.6g}", time=float(fail[0]), trajectory=0)
    n1, x1, nn, xn, _ = _observables(ref[:, keep_idx], order, phase)
    shift = np.stack([n1[0], nn[0], x1[0], xn[0]], axis=1)

    starts = list(range(0, count, chunk))

    def work(s):
        return _run_chunk(
            y0[s : s + chunk], s, order, g, grid, tol, phase, shift, keep_idx, snap_idx, count, groups, kern
        )

    sums = np.zeros((groups, times.size, _NQ))
    comps = np.zeros_like(sums)
    snap_parts = []
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        for partial, snaps in pool.map(work, starts):
            for gidx in sorted(partial):
                s, c = partial[gidx]
                sums[gidx] = _neumaier(sums[gidx], comps[gidx], s + c)
            snap_parts.append(snaps)
    group_sums = sums + comps
    group_counts = np.bincount(np.minimum(np.arange(count) * groups // count, groups - 1), minlength=groups)

    total = np.zeros(group_sums.shape[1:])
    tcomp = np.zeros_like(total)
    for gi in range(groups):
        total = _neumaier(total, tcomp, group_sums[gi])
    avg = (total + tcomp) / count

    n1_mean = shift[:, 0] + avg[:, _DN1]
    nn_mean = shift[:, 1] + avg[:, _DNN]
    var1 = np.maximum(avg[:, _DN1SQ] - avg[:, _DN1] ** 2, 0.0)
    varn = np.maximum(avg[:, _DNNSQ] - avg[:, _DNN] ** 2, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(n1_mean > 0, var1 / n1_mean, np.nan)
        fn = np.where(nn_mean > 0, varn / nn_mean, np.nan)
    stats = EnsembleStats(
        times=times,
        n1_mean=n1_mean,
        n1_second=var1 + n1_mean**2,
        F1=f1,
        S1=np.maximum(avg[:, _DX1SQ] - avg[:, _DX1] ** 2, 0.0),
        nN_mean=nn_mean,
        nN_second=varn + nn_mean**2,
        FN=fn,
        SN=np.maximum(avg[:, _DXNSQ] - avg[:, _DXN] ** 2, 0.0),
        E_mean=avg[:, _E],
        count=count,
        quad_angle=float(quad_angle),
        _group_sums=group_sums,
        _group_counts=group_counts,
        _shift=shift[:, :2],
    )

    snapshots = []
    if snapshot_times.size:
        allsnap = np.concatenate(snap_parts, axis=0)
        for k, t in enumerate(snapshot_times):
            snapshots.append(CloudSnapshot(float(t), 1, allsnap[:, k, 0] + 1j * allsnap[:, k, 1], seed))
            snapshots.append(CloudSnapshot(float(t), order, allsnap[:, k, 2] + 1j * allsnap[:, k, 3], seed))
    return stats, snapshots
