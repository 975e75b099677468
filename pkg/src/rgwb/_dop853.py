"""Compiled DOP853 stepper for ``y'' + w(t)^2 y = sum_i eps_i(t) f_i(y, ydot)``.

Tableau, error norm and step-size control follow scipy's ``DOP853`` so the
two agree step for step; the loop runs under numba because a single loop
measurement takes ~10^6 steps. Parameters follow the trigonometric schedule
of :class:`rgwb.protocol.Schedule` and must be smooth on ``[ta, tb]``.
"""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _c

N_STAGES = _c.N_STAGES
A = np.ascontiguousarray(_c.A, dtype=np.float64)
B = np.ascontiguousarray(_c.B, dtype=np.float64)
C = np.ascontiguousarray(_c.C, dtype=np.float64)
D = np.ascontiguousarray(_c.D, dtype=np.float64)
E3 = np.ascontiguousarray(_c.E3, dtype=np.float64)
E5 = np.ascontiguousarray(_c.E5, dtype=np.float64)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERR_EXP = -1.0 / 8.0
EPS = np.finfo(np.float64).eps

OK, UNDERFLOW, MAX_STEPS, RECORD_FULL = 0, 1, 2, 3


@njit(cache=True, nogil=True)
def _params(t, center, cos_amp, sin_amp, t0, dur, kappa, out):
    s = t - t0
    if s < 0.0:
        s = 0.0
    elif s > dur:
        s = dur
    c = np.cos(kappa * s)
    sn = np.sin(kappa * s)
    for j in range(center.shape[0]):
        out[j] = center[j] + cos_amp[j] * c + sin_amp[j] * sn


@njit(cache=True, nogil=True)
def _rhs(t, y, v, sched, iomega, pidx, ypow, vpow, coef, pv):
    center, cos_amp, sin_amp, t0, dur, kappa = sched
    _params(t, center, cos_amp, sin_amp, t0, dur, kappa, pv)
    w = pv[iomega]
    acc = -w * w * y
    for k in range(coef.shape[0]):
        acc += coef[k] * pv[pidx[k]] * y ** ypow[k] * v ** vpow[k]
    return v, acc


@njit(cache=True, nogil=True)
def _dense(F, yold, x):
    """Value and ``d/dx`` of the degree-7 interpolant at ``x`` in ``[0, 1]``."""
    val = 0.0
    der = 0.0
    for i in range(7):
        f = F[6 - i]
        if i % 2 == 0:
            der = der * x + (val + f)
            val = (val + f) * x
        else:
            der = der * (1.0 - x) - (val + f)
            val = (val + f) * (1.0 - x)
    return val + yold, der


@njit(cache=True, nogil=True)
def _polish(F, yold):
    """Root of the y-interpolant in ``[0, 1]``; Newton steps guarded by bisection."""
    lo, hi = 0.0, 1.0
    x = 0.5
    f_lo, _ = _dense(F, yold, lo)
    fx, d = _dense(F, yold, x)
    for _ in range(100):
        if fx == 0.0:
            return x
        if (fx < 0.0) == (f_lo < 0.0):
            lo, f_lo = x, fx
        else:
            hi = x
        xn = x - fx / d if d != 0.0 else -1.0
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 4.0 * EPS:
            return xn
        x = xn
        fx, d = _dense(F, yold, x)
    return x


@njit(cache=True, nogil=True)
def integrate_segment(ta, tb, y0, h0, rtol, atol, sched, iomega, pidx, ypow, vpow, coef,
                      rec_from, rec_times, steps_out, max_steps):
    """Integrate from ``ta`` to ``tb``.

    Returns ``(t, state, h_next, n_up, n_rec, n_steps, status)``. ``n_up``
    counts upward zero crossings of ``y``; the times of those at
    ``t >= rec_from`` are written to ``rec_times``. When ``steps_out`` has rows,
    every accepted step stores ``[t_old, h, y_old, v_old, F (7x2)]`` there for
    dense output. A full buffer stops the run early with ``RECORD_FULL`` so
    the caller can resume from ``t``.
    """
    n = 2
    K = np.empty((16, n))
    pv = np.empty(sched[0].shape[0])
    F = np.empty((7, n))
    y = np.array([y0[0], y0[1]])
    t = ta
    h_abs = min(h0, tb - ta)
    k0, k1 = _rhs(t, y[0], y[1], sched, iomega, pidx, ypow, vpow, coef, pv)
    f = np.array([k0, k1])
    n_up = 0
    n_rec = 0
    n_steps = 0
    status = OK
    ynew = np.empty(n)
    dy = np.empty(n)
    while t < tb:
        if n_steps >= max_steps:
            status = MAX_STEPS
            break
        if steps_out.shape[0] > 0 and n_steps == steps_out.shape[0]:
            status = RECORD_FULL
            break
        if n_rec == rec_times.shape[0] and t + h_abs >= rec_from:
            status = RECORD_FULL
            break
        min_step = 1e3 * EPS * max(abs(t), 1.0)
        rejected = False
        while True:
            if h_abs < min_step:
                status = UNDERFLOW
                break
            t_new = t + h_abs
            if t_new >= tb:
                t_new = tb
            h = t_new - t
            K[0, 0] = f[0]
            K[0, 1] = f[1]
            for s in range(1, N_STAGES):
                dy[0] = 0.0
                dy[1] = 0.0
                for j in range(s):
                    dy[0] += A[s, j] * K[j, 0]
                    dy[1] += A[s, j] * K[j, 1]
                a0, a1 = _rhs(t + C[s] * h, y[0] + h * dy[0], y[1] + h * dy[1],
                              sched, iomega, pidx, ypow, vpow, coef, pv)
                K[s, 0] = a0
                K[s, 1] = a1
            for i in range(n):
                acc = 0.0
                for j in range(N_STAGES):
                    acc += B[j] * K[j, i]
                ynew[i] = y[i] + h * acc
            a0, a1 = _rhs(t + h, ynew[0], ynew[1], sched, iomega, pidx, ypow, vpow, coef, pv)
            K[N_STAGES, 0] = a0
            K[N_STAGES, 1] = a1
            e5 = 0.0
            e3 = 0.0
            for i in range(n):
                sc = atol + max(abs(y[i]), abs(ynew[i])) * rtol
                s5 = 0.0
                s3 = 0.0
                for j in range(N_STAGES + 1):
                    s5 += E5[j] * K[j, i]
                    s3 += E3[j] * K[j, i]
                e5 += (s5 / sc) ** 2
                e3 += (s3 / sc) ** 2
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = abs(h) * e5 / np.sqrt((e5 + 0.01 * e3) * n)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                break
            h_abs *= max(MIN_FACTOR, SAFETY * err ** ERR_EXP)
            rejected = True
        if status != OK:
            break
        crossing = y[0] < 0.0 and ynew[0] >= 0.0
        want_dense = steps_out.shape[0] > 0 or (crossing and t_new >= rec_from)
        if want_dense:
            for s in range(N_STAGES + 1, 16):
                dy[0] = 0.0
                dy[1] = 0.0
                for j in range(s):
                    dy[0] += A[s, j] * K[j, 0]
                    dy[1] += A[s, j] * K[j, 1]
                a0, a1 = _rhs(t + C[s] * h, y[0] + h * dy[0], y[1] + h * dy[1],
                              sched, iomega, pidx, ypow, vpow, coef, pv)
                K[s, 0] = a0
                K[s, 1] = a1
            for i in range(n):
                d = ynew[i] - y[i]
                F[0, i] = d
                F[1, i] = h * K[0, i] - d
                F[2, i] = 2.0 * d - h * (K[N_STAGES, i] + K[0, i])
                for r in range(4):
                    acc = 0.0
                    for j in range(16):
                        acc += D[r, j] * K[j, i]
                    F[3 + r, i] = h * acc
        if crossing:
            n_up += 1
            if t_new >= rec_from:
                x = _polish(F[:, 0], y[0])
                tc = t + x * h
                if tc >= rec_from:
                    rec_times[n_rec] = tc
                    n_rec += 1
        if steps_out.shape[0] > 0:
            row = steps_out[n_steps]
            row[0] = t
            row[1] = h
            row[2] = y[0]
            row[3] = y[1]
            for r in range(7):
                row[4 + 2 * r] = F[r, 0]
                row[5 + 2 * r] = F[r, 1]
        n_steps += 1
        t = t_new
        y[0] = ynew[0]
        y[1] = ynew[1]
        f[0] = K[N_STAGES, 0]
        f[1] = K[N_STAGES, 1]
    return t, y, h_abs, n_up, n_rec, n_steps, status
