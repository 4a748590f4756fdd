import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmstat.elliptic import asn, carlson_rf, ellipk, ellipkinc, jacobi_sn

mpmath.mp.dps = 40


def sn_ref(u, k):
    return float(mpmath.ellipfun("sn", u, m=mpmath.mpf(k) ** 2))


def test_degenerate_moduli():
    assert jacobi_sn(0.7, 0.0) == pytest.approx(0.644217687237691, abs=1e-15)
    assert jacobi_sn(0.7, 1.0) == pytest.approx(0.604367777117163, abs=1e-15)


def test_reference_point():
    assert abs(jacobi_sn(0.3, 0.6) - sn_ref(0.3, 0.6)) < 1e-12


@given(st.floats(-30, 30), st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_sn_against_theta_oracle(u, k):
    assert abs(jacobi_sn(u, k) - sn_ref(u, k)) < 1e-12 * max(1.0, abs(u))


def test_near_unit_modulus_uses_complement():
    mc = 1e-20
    k = math.sqrt(1 - mc)
    ref = float(mpmath.ellipfun("sn", 3.0, m=1 - mpmath.mpf(mc)))
    assert abs(jacobi_sn(3.0, k, mc) - ref) < 1e-13


def test_carlson_rf_values():
    assert carlson_rf(1, 1, 1) == pytest.approx(1, abs=1e-15)
    assert carlson_rf(0, 1, 1) == pytest.approx(math.pi / 2, abs=1e-15)
    assert carlson_rf(1, 2, 0) == pytest.approx(float(mpmath.elliprf(1, 2, 0)), rel=1e-14)
    with pytest.raises(ValueError):
        carlson_rf(0, 0, 1)


@given(st.floats(-1.5, 1.5), st.floats(0, 0.999))
@settings(max_examples=100, deadline=None)
def test_ellipkinc_against_mpmath(phi, k):
    ref = float(mpmath.ellipf(phi, k * k))
    assert abs(ellipkinc(phi, k) - ref) < 1e-14 * max(1.0, abs(ref))


@given(st.floats(-1, 1), st.floats(0, 0.999))
@settings(max_examples=100, deadline=None)
def test_asn_inverts_sn(x, k):
    u = asn(x, k)
    assert abs(jacobi_sn(u, k) - x) < 1e-12
    assert abs(u) <= ellipk(k) + 1e-12


def test_ellipk():
    assert ellipk(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert ellipk(0.6) == pytest.approx(float(mpmath.ellipk(0.36)), rel=1e-14)
    assert math.isinf(ellipk(1.0))
    with pytest.raises(ValueError):
        jacobi_sn(0.1, 1.2)
