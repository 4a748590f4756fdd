"""Classical coupled-mode dynamics of Nth-harmonic generation.

Equations of motion (Cartesian complex form, never the polar form):

    d(alpha1)/dt = -i g N conj(alpha1)^(N-1) alphaN
    d(alphaN)/dt = -i g alpha1^N

with integrals E = |alpha1|^2 + N |alphaN|^2 and Gamma = Re[alpha1^N conj(alphaN)].
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .elliptic import asn, jacobi_sn
from .errors import IntegrationError
from .fock import ModelSpec, _check_amplitude

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class ClassicalState:
    alpha1: complex
    alphaN: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha1", _check_amplitude(self.alpha1, "alpha1"))
        object.__setattr__(self, "alphaN", _check_amplitude(self.alphaN, "alphaN"))

    @property
    def n1(self):
        return abs(self.alpha1) ** 2

    @property
    def nN(self):
        return abs(self.alphaN) ** 2

    def as_real(self):
        return np.array([self.alpha1.real, self.alpha1.imag, self.alphaN.real, self.alphaN.imag])

    def conjugate(self):
        return ClassicalState(self.alpha1.conjugate(), self.alphaN.conjugate())


@dataclass(frozen=True)
class MotionIntegrals:
    E: float
    Gamma: float


@dataclass(frozen=True)
class EllipticParams:
    """Roots a >= b >= c, modulus k (with complement mc = 1 - k^2) and the
    reference time t0 at which sn vanishes."""

    a: float
    b: float
    c: float
    k: float
    mc: float
    t0: float


def rhs(s, model):
    n, g = model.order, model.coupling
    a1, an = s.alpha1, s.alphaN
    return -1j * g * n * a1.conjugate() ** (n - 1) * an, -1j * g * a1**n


def integrals_of_motion(s, model):
    n = model.order
    return MotionIntegrals(
        abs(s.alpha1) ** 2 + n * abs(s.alphaN) ** 2,
        (s.alpha1**n * s.alphaN.conjugate()).real,
    )


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray
    alpha1: np.ndarray
    alphaN: np.ndarray
    order: int = 2

    @property
    def states(self):
        return [ClassicalState(a, b) for a, b in zip(self.alpha1, self.alphaN)]

    @property
    def n1(self):
        return np.abs(self.alpha1) ** 2

    @property
    def nN(self):
        return np.abs(self.alphaN) ** 2

    @property
    def energy(self):
        return self.n1 + self.order * self.nN

    @property
    def gamma(self):
        return (self.alpha1**self.order * self.alphaN.conj()).real

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gt", "re1", "im1", "reN", "imN", "n1", "nN", "E", "Gamma"])
        cols = (
            self.times,
            self.alpha1.real,
            self.alpha1.imag,
            self.alphaN.real,
            self.alphaN.imag,
            self.n1,
            self.nN,
            self.energy,
            self.gamma,
        )
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def integrate(s0, model, t_end, tol=DEFAULT_TOL, samples=1001, times=None):
    """Adaptive Dormand-Prince 5(4) integration sampled on a uniform grid
    (or on ``times``, which must start at 0 and increase)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if times is None:
        if not t_end > 0:
            raise ValueError("t_end must be positive")
        times = np.linspace(0.0, t_end, samples)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    out, fail = _backend.dopri5_batch(s0.as_real()[None, :], model.order, model.coupling, times, tol, tol)
    if not math.isnan(fail[0]):
        raise IntegrationError(f"step size underflow at t = {fail[0]:.6g}", time=float(fail[0]))
    y = out[0]
    return TrajectoryRecord(times, y[:, 0] + 1j * y[:, 1], y[:, 2] + 1j * y[:, 3], model.order)


def _cubic(n, E, gamma):
    return n * (E - 2.0 * n) ** 2 - gamma * gamma


def _polish(root, E, gamma):
    x = root
    for _ in range(4):
        f = _cubic(x, E, gamma)
        d = (E - 2.0 * x) * (E - 6.0 * x)
        if d == 0.0:
            break
        step = f / d
        if abs(_cubic(x - step, E, gamma)) >= abs(f):
            break
        x -= step
    return x


def cubic_roots(E, Gamma):
    """Roots a >= b >= c of n (E - 2n)^2 - Gamma^2 = 0 (trigonometric method, Newton-polished)."""
    if E < 0:
        raise ValueError("E must be nonnegative")
    if E == 0:
        if Gamma != 0:
            raise ValueError("complex roots: Gamma != 0 with E = 0")
        return 0.0, 0.0, 0.0
    # depressed cubic y^3 + p y + q with n = y + E/3
    p = -E * E / 12.0
    q = E**3 / 108.0 - Gamma * Gamma / 4.0
    arg = 1.5 * q / p * math.sqrt(-3.0 / p)
    if abs(arg) > 1.0 + 1e-9:
        raise ValueError(f"complex roots for E={E}, Gamma={Gamma}")
    arg = max(-1.0, min(1.0, arg))
    amp = 2.0 * math.sqrt(-p / 3.0)
    base = math.acos(arg) / 3.0
    roots = [E / 3.0 + amp * math.cos(base - 2.0 * math.pi * j / 3.0) for j in range(3)]
    a, b, c = sorted((_polish(x, E, Gamma) for x in roots), reverse=True)
    return a, b, max(c, 0.0)


def elliptic_params(s0, g):
    """(a, b, c, k, t0) for the SHG closed form, t0 fixed by n2(0) and the sign of dn2/dt(0)."""
    E = abs(s0.alpha1) ** 2 + 2.0 * abs(s0.alphaN) ** 2
    gamma = (s0.alpha1**2 * s0.alphaN.conjugate()).real
    a, b, c = cubic_roots(E, gamma)
    span = a - c
    if b - c <= 1e-15 * max(E, 1e-300):
        return EllipticParams(a, b, c, 0.0, 1.0, 0.0)
    m = (b - c) / span
    mc = (a - b) / span
    k = math.sqrt(m)
    n2 = abs(s0.alphaN) ** 2
    x2 = min(max((n2 - c) / (b - c), 0.0), 1.0)
    u0 = asn(math.sqrt(x2), k, mc, one_minus_x2=min(max((b - n2) / (b - c), 0.0), 1.0))
    dn2 = 2.0 * g * (s0.alpha1**2 * s0.alphaN.conjugate()).imag
    if dn2 < 0:
        u0 = -u0
    return EllipticParams(a, b, c, k, mc, -u0 / (2.0 * g * math.sqrt(span)))


def shg_elliptic_solution(s0, g, t):
    """Harmonic intensity n2(t) = c + (b - c) sn^2[2 g sqrt(a - c) (t - t0), k] of SHG.

    ``g`` may be a ModelSpec, which must then have order 2.
    """
    if isinstance(g, ModelSpec):
        if g.order != 2:
            raise ValueError(f"closed-form solution exists for N = 2 only, got N = {g.order}")
        g = g.coupling
    if not g > 0:
        raise ValueError("coupling must be positive")
    p = elliptic_params(s0, g)
    if p.k == 0.0:
        return abs(s0.alphaN) ** 2 if np.ndim(t) == 0 else np.full(np.shape(t), abs(s0.alphaN) ** 2)
    if math.isinf(p.t0):
        # harmonic already at the separatrix maximum with a depleted fundamental
        return p.b if np.ndim(t) == 0 else np.full(np.shape(t), p.b)
    rate = 2.0 * g * math.sqrt(p.a - p.c)
    sn = np.vectorize(lambda u: jacobi_sn(u, p.k, p.mc), otypes=[float])
    val = p.c + (p.b - p.c) * sn(rate * (np.asarray(t, dtype=float) - p.t0)) ** 2
    return float(val) if np.ndim(t) == 0 else val


def net_solution(model, r, t):
    """No-energy-transfer solution with |alpha1| = N r, |alphaN| = r."""
    if not r > 0:
        raise ValueError("r must be positive")
    n, g = model.order, model.coupling
    w = g * (n * r) ** (n - 1)
    return ClassicalState(n * r * cmath.exp(-1j * w * t), r * cmath.exp(-1j * n * w * t))
