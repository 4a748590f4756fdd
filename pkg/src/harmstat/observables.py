"""Fano factors, quadrature variances and Husimi Q-function grids."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedFanoError
from .fock import TwoModeFockState
from .quantum import ladder_moments, reduced_density

# Shortfall of <n^2> below <n>^2 tolerated as rounding noise.
_CS_SLACK = 1e-9


@dataclass(frozen=True)
class PhotonMoments:
    mean: float
    second: float

    def __post_init__(self):
        if self.mean < 0 or self.second < self.mean**2 - _CS_SLACK * max(1.0, self.second):
            raise ValueError(f"inconsistent photon moments ({self.mean}, {self.second})")

    @property
    def variance(self):
        return self.second - self.mean**2


@dataclass(frozen=True)
class FanoSeries:
    times: np.ndarray
    values: np.ndarray
    mode: object = 1

    def window(self, lo, hi):
        """(mean, rms) of the values with lo <= t <= hi."""
        return window_stats(self.times, self.values, lo, hi)


def fano(m):
    """Variance-to-mean ratio of a photon-number distribution."""
    mean, second = (m.mean, m.second) if isinstance(m, PhotonMoments) else m
    if mean == 0:
        raise UndefinedFanoError("Fano factor is undefined for zero mean photon number")
    return (second - mean * mean) / mean


def fano_array(mean, second):
    """Elementwise Fano factor; NaN where the mean vanishes."""
    mean = np.asarray(mean, dtype=float)
    second = np.asarray(second, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(mean > 0, (second - mean * mean) / mean, np.nan)


def window_stats(times, values, lo, hi):
    """Plain mean and RMS deviation of ``values`` sampled inside [lo, hi]."""
    times = np.asarray(times)
    sel = (times >= lo - 1e-12 * abs(hi)) & (times <= hi + 1e-12 * abs(hi))
    v = np.asarray(values)[sel]
    if v.size == 0:
        raise ValueError(f"no samples in window [{lo}, {hi}]")
    mean = float(np.mean(v))
    return mean, float(np.sqrt(np.mean((v - mean) ** 2)))


def _trapezoid_average(values, horizon):
    v = np.asarray(values, dtype=float)
    dt = horizon / (v.size - 1)
    return dt * (v.sum() - 0.5 * (v[0] + v[-1])) / horizon


def global_fano(series, horizon):
    """Fano factor of time-averaged moments over a uniform grid spanning [0, horizon].

    ``series`` is a sequence of PhotonMoments or an (n, 2) array of
    (mean, second) pairs; the time average is trapezoidal.
    """
    if isinstance(series, np.ndarray):
        arr = np.asarray(series, dtype=float)
    else:
        arr = np.array([(m.mean, m.second) if isinstance(m, PhotonMoments) else m for m in series], dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValueError("global_fano needs at least two samples")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    mean = _trapezoid_average(arr[:, 0], horizon)
    second = _trapezoid_average(arr[:, 1], horizon)
    return fano((mean, second))


def quadrature_variance(rho_or_state, mode=1, angle=0.0):
    """Variance of X = a exp(-i angle) + a^+ exp(i angle); 1 for coherent light."""
    if isinstance(rho_or_state, TwoModeFockState):
        rho = reduced_density(rho_or_state, mode)
    else:
        rho = np.asarray(rho_or_state)
    a1, a2 = ladder_moments(rho)
    n_mean = float(np.real(np.diagonal(rho) @ np.arange(rho.shape[0])))
    x_mean = 2.0 * (a1 * np.exp(-1j * angle)).real
    x2 = 2.0 * (a2 * np.exp(-2j * angle)).real + 2.0 * n_mean + 1.0
    return float(x2 - x_mean**2)


@dataclass(frozen=True)
class QGrid:
    """Husimi function on a square grid; ``values[i, j]`` sits at
    ``center + x[j] + 1j * y[i]``."""

    center: complex
    half_extent: float
    resolution: int
    values: np.ndarray

    @property
    def axis(self):
        return np.linspace(-self.half_extent, self.half_extent, self.resolution)

    @property
    def cell_area(self):
        step = 2.0 * self.half_extent / (self.resolution - 1)
        return step * step

    def points(self):
        ax = self.axis
        return self.center + ax[None, :] + 1j * ax[:, None]

    def mass(self):
        return float(self.values.sum() * self.cell_area)

    def sector_masses(self, sectors=16):
        """Q mass in equal angular sectors around the phase-space origin."""
        ang = np.angle(self.points())
        idx = np.floor((ang + math.pi) / (2 * math.pi) * sectors).astype(int) % sectors
        return np.bincount(idx.ravel(), weights=self.values.ravel(), minlength=sectors) * self.cell_area

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "q"])
        pts = self.points()
        for i in range(self.resolution):
            for j in range(self.resolution):
                b = pts[i, j]
                w.writerow([repr(float(b.real)), repr(float(b.imag)), repr(float(self.values[i, j]))])
        return buf.getvalue()


def default_q_window(rho):
    """Grid centre (mean field) and half-extent of four Q-function standard deviations."""
    a1, _ = ladder_moments(rho)
    spread = max(quadrature_variance(rho, angle=0.0), quadrature_variance(rho, angle=math.pi / 2))
    std = math.sqrt((spread + 1.0) / 4.0)
    return a1, 4.0 * std


def husimi_q(rho, center=None, half_extent=None, resolution=201, chunk=4096):
    """Q(beta) = <beta|rho|beta> / pi on a square grid.

    The coherent overlaps <n|beta> are generated by the number-state
    recurrence in log-magnitude form; rho enters through its eigenvectors,
    dropping eigenvalues below 1e-14.
    """
    rho = np.asarray(rho, dtype=complex)
    rho = 0.5 * (rho + rho.conj().T)
    if center is None or half_extent is None:
        c0, h0 = default_q_window(rho)
        center = c0 if center is None else center
        half_extent = h0 if half_extent is None else half_extent
    center = complex(center)
    diag = np.real(np.diagonal(rho))
    keep = np.nonzero(diag > 1e-18 * diag.max())[0]
    dim = int(keep[-1]) + 1
    w, u = np.linalg.eigh(rho[:dim, :dim])
    sel = w > 1e-14
    w, u = w[sel], u[:, sel]

    ax = np.linspace(-half_extent, half_extent, resolution)
    beta = (center + ax[None, :] + 1j * ax[:, None]).ravel()
    n = np.arange(dim)
    half_log_fact = 0.5 * np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    q = np.empty(beta.size)
    for s in range(0, beta.size, chunk):
        b = beta[s : s + chunk]
        rad = np.abs(b)
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.log(rad)
            logmag = -0.5 * rad[:, None] ** 2 + n[None, :] * logr[:, None] - half_log_fact[None, :]
        logmag[:, 0] = -0.5 * rad**2
        overlap = np.exp(logmag - 1j * n[None, :] * np.angle(b)[:, None])  # <beta|n>
        amp = overlap @ u
        q[s : s + chunk] = (np.abs(amp) ** 2) @ w / math.pi
    return QGrid(center, float(half_extent), int(resolution), q.reshape(resolution, resolution))
