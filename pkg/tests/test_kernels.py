import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

from harmstat import _backend, _pure

try:
    from harmstat import _kernels
except ImportError:  # pragma: no cover - build without a compiler
    _kernels = None

BACKENDS = [_pure] + ([_kernels] if _kernels is not None else [])
ids = [b.__name__.rsplit(".", 1)[-1] for b in BACKENDS]


@pytest.mark.parametrize("kern", BACKENDS, ids=ids)
@given(n=st.integers(1, 60), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_ql_matches_lapack(kern, n, seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=n)
    e = rng.uniform(0.01, 3.0, size=n - 1)
    w, v, status = kern.ql_eigh(d, e)
    assert status == 0
    ref = eigh_tridiagonal(d, e, eigvals_only=True)
    assert np.allclose(w, ref, atol=1e-11 * max(1.0, np.abs(ref).max()))
    h = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.linalg.norm(v @ np.diag(w) @ v.T - h) < 1e-10 * max(1.0, np.linalg.norm(h))
    assert np.allclose(v.T @ v, np.eye(n), atol=1e-12)


def test_ql_reports_iteration_cap():
    d = np.zeros(40)
    e = np.linspace(1.0, 2.0, 39)
    for kern in BACKENDS:
        _, _, status = kern.ql_eigh(d, e, iter_factor=0)
        assert status > 0


def _reference(y0, order, times):
    def f(t, y):
        a1 = complex(y[0], y[1])
        an = complex(y[2], y[3])
        d1 = -1j * order * a1.conjugate() ** (order - 1) * an
        dn = -1j * a1**order
        return [d1.real, d1.imag, dn.real, dn.imag]

    sol = solve_ivp(f, (times[0], times[-1]), y0, method="DOP853", t_eval=times, rtol=1e-13, atol=1e-13)
    return sol.y.T


@pytest.mark.parametrize("kern", BACKENDS, ids=ids)
@pytest.mark.parametrize("order", [2, 3])
def test_dopri5_against_dop853(kern, order):
    y0 = np.array([1.3, 0.0, 0.4 * math.cos(0.7), 0.4 * math.sin(0.7)])
    times = np.linspace(0.0, 3.0, 31)
    out, fail = kern.dopri5_batch(y0[None], order, 1.0, times, 1e-10, 1e-10)
    assert np.isnan(fail[0])
    assert np.max(np.abs(out[0] - _reference(y0, order, times))) < 1e-8


def test_backends_agree():
    if _kernels is None:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(3)
    y0 = rng.normal(size=(17, 4))
    times = np.linspace(0, 2, 11)
    a, _ = _kernels.dopri5_batch(y0, 2, 1.0, times, 1e-10, 1e-10)
    b, _ = _pure.dopri5_batch(y0, 2, 1.0, times, 1e-10, 1e-10)
    assert np.max(np.abs(a - b)) < 1e-12
    e = rng.uniform(0.1, 2, 30)
    wa, va, _ = _kernels.ql_eigh(np.zeros(31), e)
    wb, vb, _ = _pure.ql_eigh(np.zeros(31), e)
    assert np.allclose(wa, wb, atol=1e-12)


def test_batch_rows_are_independent():
    # a trajectory's result must not depend on what it is batched with
    rng = np.random.default_rng(5)
    y0 = rng.normal(size=(8, 4))
    times = np.linspace(0, 1.5, 7)
    for kern in BACKENDS:
        full, _ = kern.dopri5_batch(y0, 2, 1.0, times, 1e-10, 1e-10)
        for i in (0, 5):
            one, _ = kern.dopri5_batch(y0[i : i + 1], 2, 1.0, times, 1e-10, 1e-10)
            assert np.array_equal(one[0], full[i])


def test_step_underflow_reported():
    for kern in BACKENDS:
        _, fail = kern.dopri5_batch(np.array([[1.0, 0, 0, 0]]), 2, 1.0, np.array([0.0, 1.0]), 1e-300, 1e-300)
        assert not np.isnan(fail[0])


def test_backend_selection():
    assert _backend.BACKEND in ("compiled", "pure")
    assert _backend.kernels("pure") is _pure
    with pytest.raises(ValueError):
        _backend.kernels("gpu")
