"""Jacobi sn and the incomplete elliptic integral of the first kind.

Both accept the complementary parameter ``mc = 1 - k**2`` explicitly so
that moduli close to one keep full precision.
"""

from __future__ import annotations

import math

_RF_TOL = 1e-4  # Carlson's error ~ tol**6 / (4 (1 - tol)) < 1e-24


def _complement(k, mc):
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"modulus must lie in [0, 1], got {k}")
    return (1.0 - k) * (1.0 + k) if mc is None else mc


def jacobi_sn(u, k, mc=None):
    """sn(u, k) by the descending Landen (AGM) ladder."""
    mc = _complement(k, mc)
    if mc == 0.0:
        return math.tanh(u)
    if k == 0.0:
        return math.sin(u)
    a, b = 1.0, math.sqrt(mc)
    ratios = []
    for _ in range(64):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        ratios.append(c / a)
        if abs(c) <= 1e-16 * a:
            break
    phi = (1 << len(ratios)) * a * u
    for r in reversed(ratios):
        phi = 0.5 * (phi + math.asin(r * math.sin(phi)))
    return math.sin(phi)


def carlson_rf(x, y, z):
    """Carlson's symmetric integral R_F(x, y, z) by duplication."""
    if min(x, y, z) < 0 or (x == 0) + (y == 0) + (z == 0) > 1:
        raise ValueError("carlson_rf needs nonnegative arguments with at most one zero")
    for _ in range(200):
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * (sy + sz) + sy * sz
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
        mu = (x + y + z) / 3.0
        dx, dy, dz = 1.0 - x / mu, 1.0 - y / mu, 1.0 - z / mu
        if max(abs(dx), abs(dy), abs(dz)) < _RF_TOL:
            break
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz
    return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / math.sqrt(mu)


def ellipkinc(phi, k, mc=None):
    """F(phi | k^2) for |phi| <= pi/2."""
    mc = _complement(k, mc)
    s, c = math.sin(phi), math.cos(phi)
    if c == 0.0 and mc == 0.0:
        return math.copysign(math.inf, s)
    return s * carlson_rf(c * c, c * c + mc * s * s, 1.0)


def asn(x, k, mc=None, one_minus_x2=None):
    """Inverse of sn on [-K, K]: the u with sn(u, k) = x.

    ``one_minus_x2`` may be supplied when 1 - x^2 is known without
    cancellation.
    """
    mc = _complement(k, mc)
    if abs(x) > 1.0:
        raise ValueError(f"asn argument must lie in [-1, 1], got {x}")
    q = (1.0 - x) * (1.0 + x) if one_minus_x2 is None else one_minus_x2
    if q == 0.0 and mc == 0.0:
        return math.copysign(math.inf, x)
    return x * carlson_rf(q, q + mc * x * x, 1.0)


def ellipk(k, mc=None):
    mc = _complement(k, mc)
    if mc == 0.0:
        return math.inf
    return carlson_rf(0.0, mc, 1.0)
