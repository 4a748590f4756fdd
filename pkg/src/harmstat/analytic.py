"""Closed-form predictions: short-time Fano expansions and the perturbative
no-energy-transfer (NET) analysis.

NET rationals are exact ``fractions.Fraction`` values; float accessors are
derived from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class ShortTimeCoefficients:
    """Truncated power series sum_k c_k (gt)^p_k as (p_k, c_k) pairs."""

    mode: object
    powers: tuple

    def __call__(self, gt):
        gt = np.asarray(gt, dtype=float)
        out = np.zeros_like(gt)
        for p, c in self.powers:
            out = out + c * gt**p
        return float(out) if out.ndim == 0 else out


def shg_coefficients(r1, r2, theta):
    """Stimulated SHG expansions: F1 through (gt)^2 and F2 through (gt)^4."""
    if r1 <= 0 or r2 <= 0:
        raise ValueError("stimulated expansions need r1, r2 > 0")
    s, c2 = math.sin(theta), math.cos(2 * theta)
    f1 = (
        (0, 1.0),
        (1, -4.0 * s * r2),
        (2, 4.0 * r2**2 / r1**2 - 2.0 * r1**2 + 8.0 * (2.0 + c2) * r2**2),
    )
    f2 = (
        (0, 1.0),
        (3, -16.0 / 3.0 * s * r1**2 * r2),
        (4, 4.0 / 3.0 * (2.0 * r2**2 + 16.0 * r1**2 * r2**2 - (4.0 + 3.0 * c2) * r1**4)),
    )
    return ShortTimeCoefficients(1, f1), ShortTimeCoefficients(2, f2)


def short_time_fano_shg(r1, r2, theta, gt):
    c1, c2 = shg_coefficients(r1, r2, theta)
    return c1(gt), c2(gt)


def spontaneous_coefficients(r1):
    """Spontaneous SHG (r2 = 0): Fano factors and normally ordered variances."""
    if r1 <= 0:
        raise ValueError("r1 must be positive")
    f1 = ShortTimeCoefficients(1, ((0, 1.0), (2, -2.0 * r1**2), (4, 4.0 / 3.0 * r1**2 * (3.0 * r1**2 + 1.0))))
    f2 = ShortTimeCoefficients(2, ((0, 1.0), (4, -4.0 / 3.0 * r1**4), (6, 4.0 / 45.0 * r1**4 * (36.0 * r1**2 + 17.0))))
    v1 = ShortTimeCoefficients(1, ((2, -2.0 * r1**4),))
    v2 = ShortTimeCoefficients(2, ((6, -4.0 / 3.0 * r1**8),))
    return f1, f2, v1, v2


def short_time_fano_spontaneous(r1, gt):
    """(F1, F2, <:(dn1)^2:>, <:(dn2)^2:>) for a vacuum harmonic input."""
    return tuple(c(gt) for c in spontaneous_coefficients(r1))


def general_coefficients(N, r1, rN, theta):
    """Fundamental (first order, any N >= 2) and harmonic (N = 2, 3, 4) expansions."""
    if N < 2:
        raise ValueError("harmonic order must be >= 2")
    if r1 <= 0 or rN <= 0:
        raise ValueError("expansions need r1, rN > 0")
    s = math.sin(theta)
    f1 = ShortTimeCoefficients(1, ((0, 1.0), (1, -2.0 * N * (N - 1) * r1 ** (N - 2) * rN * s)))
    if N == 2:
        fn = shg_coefficients(r1, rN, theta)[1]
    elif N == 3:
        fn = ShortTimeCoefficients(3, ((0, 1.0), (3, -36.0 * r1**3 * rN * (r1**2 + 2.0) * s)))
    elif N == 4:
        fn = ShortTimeCoefficients(4, ((0, 1.0), (3, -64.0 * r1**4 * rN * (17.0 + 12.0 * r1**2 + 2.0 * r1**4) * s)))
    else:
        fn = None
    return f1, fn


def short_time_fano_general(N, r1, rN, theta, gt):
    f1, fn = general_coefficients(N, r1, rN, theta)
    if fn is None:
        raise ValueError(f"no harmonic-mode expansion for N = {N} (available for N = 2, 3, 4)")
    return f1(gt), fn(gt)


def net_fano(N):
    """Exact (F1S, FNS) of the dephased NET ensemble."""
    if int(N) != N or N < 1:
        raise ValueError("N must be an integer >= 1")
    N = int(N)
    den = 2 * (N + 1) ** 2
    return Fraction(6 * N * N + N + 1, den), Fraction(2 * N * N + N + 5, den)


def net_frequencies(N, r):
    """(omega_bar, delta_omega, T_osc, T_rel) in units of g; N = 1 gives delta_omega = 0."""
    if N < 1 or not r > 0:
        raise ValueError("need N >= 1 and r > 0")
    pref = math.sqrt(2 * N * (N + 1))
    omega_bar = pref * (N * r) ** (N - 1)
    delta = pref * N ** (N - 1) * r ** (N - 2) * (N - 1) / (N + 1)
    t_rel = 2 * math.pi / delta if delta > 0 else math.inf
    return omega_bar, delta, 2 * math.pi / omega_bar, t_rel


def net_energy(N, r, x1, y1, xN, yN):
    return N * (N + 1) * r**2 + 2 * N * (x1 + xN) * r + x1**2 + y1**2 + N * (xN**2 + yN**2)


def net_perturbative_intensity(N, r, x1, y1, xN, yN, gt):
    """(n1, nN) of a weakly perturbed NET trajectory; broadcasts over array inputs."""
    x1, y1, xN, yN, gt = (np.asarray(v, dtype=float) for v in (x1, y1, xN, yN, gt))
    amp = r / (N + 1) * np.sqrt(4 * (x1 - N * xN) ** 2 + 2 * N * (N + 1) * (y1 - yN) ** 2)
    shift = 2 * r * (x1 + xN) / (N + 1)
    E = net_energy(N, r, x1, y1, xN, yN)
    omega = np.sqrt(2 * N**N * E ** (N - 1) / (N + 1) ** (N - 2))
    osc = amp * np.sin(omega * gt)
    nn = r**2 + shift + osc
    n1 = N**2 * r**2 + N**2 * shift - N * osc
    if n1.ndim == 0:
        return float(n1), float(nn)
    return n1, nn


@dataclass(frozen=True)
class NetPrediction:
    order: int
    F1S: Fraction
    FNS: Fraction
    omega_bar: float
    delta_omega: float
    A2_mean: float
    B2_mean: float
    T_osc: float
    T_rel: float

    @property
    def F1S_float(self):
        return float(self.F1S)

    @property
    def FNS_float(self):
        return float(self.FNS)


def net_averaged_moments(N, r, sigma2=0.25):
    """Ensemble moments of the dephased NET trajectories (sin^2 averaged to 1/2)."""
    a2 = 4 * sigma2 * r**2 * (2 * N * N + N + 1) / (N + 1) ** 2
    b2 = 8 * sigma2 * r**2 / (N + 1) ** 2
    return {
        "A2_mean": a2,
        "B2_mean": b2,
        "n1_mean": N**2 * r**2,
        "nN_mean": r**2,
        "n1_second": N**4 * r**4 + N**4 * b2 + 0.5 * N**2 * a2,
        "nN_second": r**4 + b2 + 0.5 * a2,
    }


def net_prediction(N, r, sigma2=0.25):
    f1, fn = net_fano(N)
    wbar, dw, tosc, trel = net_frequencies(N, r)
    mom = net_averaged_moments(N, r, sigma2)
    return NetPrediction(N, f1, fn, wbar, dw, mom["A2_mean"], mom["B2_mean"], tosc, trel)


def net_monte_carlo_fano(N, r, count, seed=0, sigma2=0.25, gt=None, groups=20):
    """Fano factors of net_perturbative_intensity averaged over Gaussian draws.

    Evaluated at a time ``gt`` deep in the dephased regime (default: one
    thousand relaxation periods). Returns (F1, FN, se1, seN) with batch-means
    standard errors over ``groups`` contiguous batches.
    """
    if gt is None:
        gt = 1000.0 * net_frequencies(N, r)[3]
    rng = np.random.Generator(np.random.Philox(seed))
    x1, y1, xN, yN = rng.normal(0.0, math.sqrt(sigma2), size=(4, count))
    n1, nn = net_perturbative_intensity(N, r, x1, y1, xN, yN, gt)

    def fano(v):
        return v.var() / v.mean()

    f1, fn = fano(n1), fano(nn)
    b1 = np.array([fano(v) for v in np.array_split(n1, groups)])
    bn = np.array([fano(v) for v in np.array_split(nn, groups)])
    return float(f1), float(fn), float(b1.std(ddof=1) / math.sqrt(groups)), float(bn.std(ddof=1) / math.sqrt(groups))
