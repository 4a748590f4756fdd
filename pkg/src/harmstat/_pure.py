"""Pure numpy implementations of the hot kernels.

Same algorithms and signatures as the compiled ``_kernels`` module. The
eigensolver vectorises the eigenvector rotations; the integrator advances a
whole batch at once while every trajectory keeps its own step size, so a
trajectory's arithmetic never depends on its neighbours in the batch.
"""

import math

import numpy as np

EPS = np.finfo(np.float64).eps


def ql_eigh(diag, offdiag, iter_factor=30):
    d = np.array(diag, dtype=np.float64)
    n = d.shape[0]
    e = np.zeros(max(n, 1))
    if n > 1:
        e[: n - 1] = offdiag
    zt = np.eye(n)
    cap = iter_factor * max(n, 1)
    status = 0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > cap:
                status = l + 1
                break
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = zt[i].copy()
                zt[i] = c * zi - s * zt[i + 1]
                zt[i + 1] = s * zi + c * zt[i + 1]
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
        if status:
            break
    order = np.argsort(d, kind="stable")
    return d[order], np.ascontiguousarray(zt[order].T), status


# Dormand-Prince 5(4) tableau.
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _rhs(y, order, g):
    x1, y1, xn, yn = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
    pr = np.ones_like(x1)
    pi = np.zeros_like(x1)
    for _ in range(order - 1):
        pr, pi = pr * x1 - pi * y1, pr * y1 + pi * x1
    qr = pr * xn + pi * yn
    qi = pr * yn - pi * xn
    sr = pr * x1 - pi * y1
    si = pr * y1 + pi * x1
    return np.stack((g * order * qi, -g * order * qr, g * si, -g * sr), axis=1)


def dopri5_batch(y0, order, g, times, rtol, atol, max_steps=10_000_000):
    y = np.array(y0, dtype=np.float64, copy=True).reshape(-1, 4)
    times = np.asarray(times, dtype=np.float64)
    m, nt = y.shape[0], times.shape[0]
    out = np.empty((m, nt, 4))
    out[:, 0] = y
    fail = np.full(m, np.nan)
    if nt == 1 or m == 0:
        return out, fail

    t = np.full(m, times[0])
    idx = np.ones(m, dtype=np.int64)
    k1 = _rhs(y, order, g)
    sc = atol + rtol * np.abs(y)
    with np.errstate(over="ignore"):
        d0 = np.sqrt(np.mean((y / sc) ** 2, axis=1))
        d1 = np.sqrt(np.mean((k1 / sc) ** 2, axis=1))
    with np.errstate(over="ignore", invalid="ignore"):
        h = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.where(d1 == 0, 1.0, d1))
    h = np.where((h > 0) & (h < 1e300), h, 1e-6)  # inf/inf when the tolerances underflow
    h = np.minimum(h, times[-1] - times[0])
    rejected = np.zeros(m, dtype=bool)
    steps = np.zeros(m, dtype=np.int64)
    active = np.arange(m)

    while active.size:
        ya, ta, ha, ka = y[active], t[active], h[active], k1[active]
        target = times[idx[active]]
        clipped = ta + ha >= target
        h_try = np.where(clipped, target - ta, ha)
        tiny = (h_try < 16.0 * EPS * np.maximum(np.abs(ta), 1.0)) & ~clipped
        steps[active] += 1
        over = steps[active] > max_steps
        dead = tiny | over
        if dead.any():
            fail[active[dead]] = ta[dead]
            keep = ~dead
            active = active[keep]
            ya, ta, ha, ka = ya[keep], ta[keep], ha[keep], ka[keep]
            target, clipped, h_try = target[keep], clipped[keep], h_try[keep]
            if not active.size:
                break

        hc = h_try[:, None]
        ks = [ka]
        for row in _A[1:]:
            acc = row[0] * ks[0]
            for coef, kk in zip(row[1:], ks[1:]):
                acc = acc + coef * kk
            ks.append(_rhs(ya + hc * acc, order, g))
        acc = _B[0] * ks[0]
        for coef, kk in zip(_B[1:], ks[1:]):
            acc = acc + coef * kk
        yn = ya + hc * acc
        k7 = _rhs(yn, order, g)
        ks.append(k7)
        acc = _E[0] * ks[0]
        for coef, kk in zip(_E[1:], ks[1:]):
            acc = acc + coef * kk
        err = hc * acc
        scale = atol + rtol * np.maximum(np.abs(ya), np.abs(yn))
        with np.errstate(over="ignore", invalid="ignore"):
            errn = np.sqrt(np.sum((err / scale) ** 2, axis=1) / 4.0)

        ok = errn <= 1.0
        with np.errstate(divide="ignore"):
            fac = 0.9 * np.power(errn, -0.2)
        fac_ok = np.where(errn == 0.0, 5.0, np.clip(fac, 0.2, 5.0))
        fac_ok = np.where(rejected[active] & (fac_ok > 1.0), 1.0, fac_ok)
        fac_bad = np.where(fac >= 0.2, fac, 0.2)  # NaN-safe

        acc_i = active[ok]
        t_new = np.where(clipped[ok], target[ok], ta[ok] + h_try[ok])
        t[acc_i] = t_new
        y[acc_i] = yn[ok]
        k1[acc_i] = k7[ok]
        h_new = h_try[ok] * fac_ok[ok]
        h_new = np.where(clipped[ok], np.maximum(h_new, ha[ok]), h_new)
        h[acc_i] = h_new
        rejected[acc_i] = False
        landed = acc_i[clipped[ok]]
        out[landed, idx[landed]] = y[landed]
        idx[landed] += 1

        rej_i = active[~ok]
        h[rej_i] = h_try[~ok] * fac_bad[~ok]
        rejected[rej_i] = True

        active = active[idx[active] < nt]
        active = active[np.isnan(fail[active])]
    return out, fail
