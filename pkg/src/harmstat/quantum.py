"""Exact quantum propagation by blockwise diagonalisation.

The interaction g (a1^N aN^+ + a1^+N aN) conserves E = n1 + N nN, so each
block is an independent real symmetric tridiagonal matrix. Blocks are
diagonalised once at g = 1 and cached; eigenvalues scale linearly with g.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ConvergenceError
from .fock import TwoModeFockState

CACHE_FORMAT_VERSION = 1


def mode_index(mode, order):
    """Map a mode label to 0 (fundamental) or 1 (harmonic).

    Accepts 1 / "1" / "fundamental" for the fundamental and "N" / "harmonic"
    or the integer harmonic order (when it differs from 1) for the harmonic.
    """
    if mode in (1, "1", "fundamental"):
        return 0
    if mode in ("N", "harmonic") or (isinstance(mode, int) and mode == order and order != 1):
        return 1
    raise ValueError(f"unknown mode {mode!r} for harmonic order {order}")


@dataclass(frozen=True)
class TridiagonalBlockHamiltonian:
    """Zero-diagonal symmetric tridiagonal block; ``offdiag[m]`` couples nN = m and m + 1."""

    E: int
    offdiag: np.ndarray
    order: int
    coupling: float

    @property
    def dim(self):
        return self.offdiag.size + 1

    def dense(self):
        return np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class BlockEigen:
    E: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def build_block(E, model):
    n = model.order
    m = np.arange(E // n, dtype=np.float64)  # m = 0 .. dim-2
    n1 = E - n * m
    prod = np.ones_like(m)
    for j in range(n):
        prod *= n1 - j
    off = model.coupling * np.sqrt(m + 1.0) * np.sqrt(prod)
    off.setflags(write=False)
    return TridiagonalBlockHamiltonian(int(E), off, n, model.coupling)


def diagonalize_block(H):
    w, v, status = _backend.ql_eigh(np.zeros(H.dim), H.offdiag)
    if status:
        raise ConvergenceError(
            f"QL iteration cap exceeded in block E={H.E} (dim {H.dim}) at eigenvalue {status - 1}"
        )
    return BlockEigen(H.E, w, v)


class EigenCache:
    """Thread-safe insert-or-get store of g = 1 block decompositions keyed by (N, E)."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._data)

    def unit(self, order, E):
        key = (order, E)
        with self._lock:
            hit = self._data.get(key)
        if hit is not None:
            return hit
        from .fock import ModelSpec

        eig = diagonalize_block(build_block(E, ModelSpec(order, 1.0)))
        eig.eigenvalues.setflags(write=False)
        eig.eigenvectors.setflags(write=False)
        with self._lock:
            return self._data.setdefault(key, eig)

    def get(self, model, E):
        unit = self.unit(model.order, E)
        if model.coupling == 1.0:
            return unit
        return BlockEigen(E, unit.eigenvalues * model.coupling, unit.eigenvectors)

    def save(self, path):
        """Write the cache as .npz with a versioned header entry."""
        arrays = {"header": np.array([CACHE_FORMAT_VERSION], dtype=np.int64)}
        with self._lock:
            items = sorted(self._data.items())
        for (order, E), eig in items:
            dim = eig.eigenvalues.size
            arrays[f"N{order}_E{E}_d{dim}_w"] = eig.eigenvalues
            arrays[f"N{order}_E{E}_d{dim}_v"] = eig.eigenvectors
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path):
        cache = cls()
        with np.load(path) as data:
            if int(data["header"][0]) != CACHE_FORMAT_VERSION:
                raise ValueError(f"unsupported eigen-cache version {int(data['header'][0])}")
            for key in data.files:
                if not key.endswith("_w"):
                    continue
                n_part, e_part, d_part, _ = key.split("_")
                order, E, dim = int(n_part[1:]), int(e_part[1:]), int(d_part[1:])
                w = data[key]
                v = data[key[:-1] + "v"]
                if w.shape != (dim,) or v.shape != (dim, dim):
                    raise ValueError(f"corrupt cache entry {key}")
                cache._data[(order, E)] = BlockEigen(E, w, v)
        return cache


DEFAULT_CACHE = EigenCache()


def block_eigens(state, cache=None):
    """BlockEigen for every block stored in ``state``."""
    cache = DEFAULT_CACHE if cache is None else cache
    return {E: cache.get(state.model, E) for E in state.blocks}


def evolve(state, eigs, t):
    """Propagate ``state`` to time ``t`` with exp(-i H t) applied blockwise."""
    missing = set(state.blocks) - set(eigs)
    if missing:
        raise ValueError(f"no eigen-decomposition for blocks {sorted(missing)[:5]}")
    out = {}
    for E, c in state.blocks.items():
        eig = eigs[E]
        if t == 0:
            out[E] = c
            continue
        v = eig.eigenvectors
        coef = (v.T @ c) * np.exp(-1j * eig.eigenvalues * t)
        out[E] = v @ coef
    return state.with_blocks(out)


def photon_moments(state, mode, max_order=2):
    """Raw moments (<n>, <n^2>, ..., <n^max_order>) of one mode."""
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    idx = mode_index(mode, state.model.order)
    acc = np.zeros(max_order)
    for E, c in state.blocks.items():
        occ = state.occupations(E)[idx].astype(float)
        p = np.abs(c) ** 2
        for k in range(max_order):
            acc[k] += p @ occ ** (k + 1)
    return acc


def number_statistics(state, mode):
    """(<n>, <(n - <n>)^2>) with the variance summed in centred form."""
    idx = mode_index(mode, state.model.order)
    probs, occs = [], []
    for E, c in state.blocks.items():
        probs.append(c.real**2 + c.imag**2)
        occs.append(state.occupations(E)[idx].astype(float))
    p = np.concatenate(probs)
    n = np.concatenate(occs)
    mean = math.fsum(p * n)
    return mean, math.fsum(p * (n - mean) ** 2)


def reduced_density(state, mode):
    """Single-mode density matrix after tracing out the other mode."""
    idx = mode_index(mode, state.model.order)
    c = state.as_matrix()
    if idx == 0:
        rho = c @ c.conj().T
    else:
        rho = c.T @ c.conj()
    return 0.5 * (rho + rho.conj().T)


@dataclass(frozen=True)
class MomentSeries:
    """Raw photon moments on a time grid; ``n1[:, k-1]`` is <n1^k>(t)."""

    times: np.ndarray
    n1: np.ndarray
    nN: np.ndarray
    norm: np.ndarray


def moment_series(state, eigs, times, max_order=2, t_chunk=256):
    """Photon moments of both modes at every time in ``times``.

    Each block is propagated for a chunk of times at once as a real-matrix
    product against the eigenphase table.
    """
    times = np.asarray(times, dtype=float)
    nt = times.size
    n1 = np.zeros((nt, max_order))
    nn = np.zeros((nt, max_order))
    norm = np.zeros(nt)
    powers = np.arange(1, max_order + 1)[:, None]
    for E, c in state.blocks.items():
        eig = eigs[E]
        v = eig.eigenvectors
        coef = v.T @ c
        occ1, occn = state.occupations(E)
        w1 = occ1[None, :].astype(float) ** powers
        wn = occn[None, :].astype(float) ** powers
        cr = coef.real[:, None]
        ci = coef.imag[:, None]
        for s in range(0, nt, t_chunk):
            tc = times[s : s + t_chunk]
            k = tc.size
            ph = np.outer(eig.eigenvalues, tc)
            cos, sin = np.cos(ph), np.sin(ph)
            # coef * exp(-i ph) split into one contiguous real panel [Re | Im]
            panel = np.empty((coef.size, 2 * k))
            panel[:, :k] = cr * cos + ci * sin
            panel[:, k:] = ci * cos - cr * sin
            psi = v @ panel
            p = psi[:, :k] ** 2 + psi[:, k:] ** 2
            n1[s : s + t_chunk] += (w1 @ p).T
            nn[s : s + t_chunk] += (wn @ p).T
            norm[s : s + t_chunk] += p.sum(axis=0)
    return MomentSeries(times, n1, nn, norm)


def time_averaged_moments(state, eigs, horizon=math.inf, max_order=2):
    """Moments averaged over t in [0, horizon], evaluated from the spectrum.

    The average of each cross term exp(i (l_j - l_k) t) is taken in closed
    form, so no time grid is involved. ``horizon = inf`` keeps only the
    diagonal terms (block spectra are simple). Returns ``(mode1, modeN)``
    arrays of length ``max_order``.
    """
    out1 = np.zeros(max_order)
    outn = np.zeros(max_order)
    for E, c in state.blocks.items():
        eig = eigs[E]
        v = eig.eigenvectors
        coef = v.T @ c
        occ1, occn = state.occupations(E)
        if math.isinf(horizon):
            p = np.abs(coef) ** 2
            vsq = v * v
            for k in range(max_order):
                out1[k] += p @ (vsq.T @ occ1.astype(float) ** (k + 1))
                outn[k] += p @ (vsq.T @ occn.astype(float) ** (k + 1))
            continue
        lam = eig.eigenvalues
        omega = lam[:, None] - lam[None, :]
        x = omega * horizon
        with np.errstate(invalid="ignore", divide="ignore"):
            kern = np.where(x == 0, 1.0 + 0j, (np.exp(1j * x) - 1.0) / (1j * x))
        kern = kern * np.outer(coef.conj(), coef)
        for k in range(max_order):
            m1 = v.T @ (occ1.astype(float)[:, None] ** (k + 1) * v)
            mn = v.T @ (occn.astype(float)[:, None] ** (k + 1) * v)
            out1[k] += float(np.sum(kern * m1).real)
            outn[k] += float(np.sum(kern * mn).real)
    return out1, outn


def ladder_moments(rho):
    """(<a>, <a^2>) of a single-mode density matrix."""
    n = np.arange(rho.shape[0], dtype=float)
    a1 = np.sum(np.sqrt(n[1:]) * np.diagonal(rho, -1))
    a2 = np.sum(np.sqrt(n[2:] * n[1:-1]) * np.diagonal(rho, -2))
    return complex(a1), complex(a2)


def state_is_normalized(state, tol=1e-10):
    return abs(state.norm() - 1.0) < tol


__all__ = [
    "BlockEigen",
    "EigenCache",
    "MomentSeries",
    "TridiagonalBlockHamiltonian",
    "TwoModeFockState",
    "block_eigens",
    "build_block",
    "diagonalize_block",
    "evolve",
    "ladder_moments",
    "moment_series",
    "number_statistics",
    "photon_moments",
    "reduced_density",
    "time_averaged_moments",
]
