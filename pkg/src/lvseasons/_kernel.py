"""Compiled DOP853 stepper for the competitive Lotka-Volterra good season.

Internally the augmented state is::

    y[0:3]   log densities u = ln x (unused, and x = 0, for pinned species)
    y[3:6]   running integral of x over the season
    y[6:15]  variational matrix (row-major), only when ``with_var``: row i
             holds W_i / x_i for a free species and W_i for a pinned one,
             with W = dx(t)/dx(0)

Working with ``u`` makes positivity exact and lets orbits pass arbitrarily
close to a face (x far below the smallest double) and come back. The public
entry points take and return densities ``x``.

Step-size control follows Hairer's DOP853 (8th order, 5th/3rd order error
estimators) with the tableau shipped in scipy. The log densities carry an
absolute error target of ``rtol`` (a relative target on x). Scaling the free
rows of W by 1/x_i keeps them accurate relative to x_i, and the pinned-row
diagonal of W is controlled relative to its own size.
"""

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
TAB_A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
TAB_B = np.ascontiguousarray(_dop.B)
TAB_E3 = np.ascontiguousarray(_dop.E3)
TAB_E5 = np.ascontiguousarray(_dop.E5)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_MAXSTEPS = 3

N_BASE = 6
N_FULL = 15


@njit(cache=True)
def _rhs(y, b, A, pinned, n, out, x):
    for i in range(3):
        x[i] = 0.0 if pinned[i] else np.exp(y[i])
    for i in range(3):
        g = b[i]
        for j in range(3):
            g -= A[i, j] * x[j]
        out[i] = 0.0 if pinned[i] else g
        out[3 + i] = x[i]
    if n == N_FULL:
        # Free rows hold V = W / x_i, the sensitivity of u_i, with
        # dV_ij/dt = -sum_k a_ik W_kj. A pinned row holds W itself, where
        # x_i = 0 reduces dW/dt = Df(x) W to dW_ij/dt = g_i W_ij.
        for i in range(3):
            if pinned[i]:
                g = b[i]
                for j in range(3):
                    g -= A[i, j] * x[j]
                for j in range(3):
                    out[6 + 3 * i + j] = g * y[6 + 3 * i + j]
            else:
                for j in range(3):
                    acc = 0.0
                    for k in range(3):
                        w_kj = y[6 + 3 * k + j] if pinned[k] else x[k] * y[6 + 3 * k + j]
                        acc -= A[i, k] * w_kj
                    out[6 + 3 * i + j] = acc


@njit(cache=True)
def _fill_scale(y, y_new, pinned, n, rtol, atol, scale):
    for i in range(3):
        scale[i] = rtol
    for i in range(3, n):
        scale[i] = atol + max(abs(y[i]), abs(y_new[i])) * rtol
    if n == N_FULL:
        # a pinned-row diagonal of W is a positive exponential that may
        # decay far below atol
        for i in range(3):
            if pinned[i]:
                d = 6 + 4 * i
                scale[d] = max(abs(y[d]), abs(y_new[d])) * rtol


@njit(cache=True)
def _rms_scaled(v, scale, n):
    acc = 0.0
    for i in range(n):
        q = v[i] / scale[i]
        acc += q * q
    return np.sqrt(acc / n)


@njit(cache=True)
def _initial_step(y0, f0, b, A, pinned, n, t_span, max_step, rtol, atol):
    scale = np.empty(n)
    _fill_scale(y0, y0, pinned, n, rtol, atol, scale)
    d0 = _rms_scaled(y0, scale, n)
    d1 = _rms_scaled(f0, scale, n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_span)
    y1 = np.empty(n)
    for i in range(n):
        y1[i] = y0[i] + h0 * f0[i]
    f1 = np.empty(n)
    _rhs(y1, b, A, pinned, n, f1, np.empty(3))
    diff = np.empty(n)
    for i in range(n):
        diff[i] = f1[i] - f0[i]
    d2 = _rms_scaled(diff, scale, n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1, t_span, max_step)


@njit(cache=True)
def _integrate_log(y0, pinned, t_out, b, A, n, rtol, atol, max_step, max_steps):
    """Core loop in log coordinates; ``states[k]`` is the internal state at ``t_out[k]``.

    Steps are clipped to land exactly on each output time.
    """
    n_out = t_out.shape[0]
    states = np.zeros((n_out, n))
    y = y0.copy()
    K = np.zeros((N_STAGES + 1, n))
    f = np.empty(n)
    xs = np.empty(3)
    _rhs(y, b, A, pinned, n, f, xs)
    t = 0.0
    if n_out == 0:
        return states, STATUS_OK, t, 0
    h_abs = _initial_step(y, f, b, A, pinned, n, t_out[-1], max_step, rtol, atol)
    ystage = np.empty(n)
    y_new = np.empty(n)
    f_new = np.empty(n)
    scale = np.empty(n)
    n_steps = 0
    k_out = 0
    while k_out < n_out and t_out[k_out] <= t:
        states[k_out] = y
        k_out += 1

    while k_out < n_out:
        if n_steps >= max_steps:
            return states, STATUS_MAXSTEPS, t, n_steps
        target = t_out[k_out]
        # a step shorter than the distance to the target is only allowed to
        # fall below min_step when it lands on the target itself
        min_step = min(10.0 * abs(np.nextafter(t, np.inf) - t), target - t)
        h_abs = min(h_abs, max_step)
        if h_abs < min_step:
            return states, STATUS_UNDERFLOW, t, n_steps

        step_rejected = False
        while True:
            if h_abs < min_step:
                return states, STATUS_UNDERFLOW, t, n_steps
            t_new = t + h_abs
            hit = False
            if t_new >= target:
                t_new = target
                hit = True
            h = t_new - t
            h_abs_used = h

            for i in range(n):
                K[0, i] = f[i]
            for s in range(1, N_STAGES):
                for i in range(n):
                    acc = 0.0
                    for m in range(s):
                        acc += TAB_A[s, m] * K[m, i]
                    ystage[i] = y[i] + h * acc
                _rhs(ystage, b, A, pinned, n, K[s], xs)
            for i in range(n):
                acc = 0.0
                for m in range(N_STAGES):
                    acc += TAB_B[m] * K[m, i]
                y_new[i] = y[i] + h * acc
            _rhs(y_new, b, A, pinned, n, f_new, xs)
            for i in range(n):
                K[N_STAGES, i] = f_new[i]

            finite = True
            for i in range(n):
                if not np.isfinite(y_new[i]) or not np.isfinite(f_new[i]):
                    finite = False
            if not finite:
                h_abs *= MIN_FACTOR
                step_rejected = True
                if h_abs < min_step:
                    return states, STATUS_NONFINITE, t, n_steps
                continue

            _fill_scale(y, y_new, pinned, n, rtol, atol, scale)
            e5 = 0.0
            e3 = 0.0
            for i in range(n):
                a5 = 0.0
                a3 = 0.0
                for m in range(N_STAGES + 1):
                    a5 += K[m, i] * TAB_E5[m]
                    a3 += K[m, i] * TAB_E3[m]
                a5 /= scale[i]
                a3 /= scale[i]
                e5 += a5 * a5
                e3 += a3 * a3
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = h * e5 / np.sqrt((e5 + 0.01 * e3) * n)

            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
                if step_rejected:
                    factor = min(1.0, factor)
                # keep the unclipped proposal so output times do not shrink steps
                if hit:
                    h_abs = max(h_abs, h_abs_used * factor)
                else:
                    h_abs = h_abs_used * factor
                break
            h_abs = h_abs_used * max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            step_rejected = True

        n_steps += 1
        t = t_new
        for i in range(n):
            y[i] = y_new[i]
            f[i] = f_new[i]
        while k_out < n_out and t_out[k_out] <= t:
            states[k_out] = y
            k_out += 1
    return states, STATUS_OK, t, n_steps


@njit(cache=True)
def integrate(y0, t_out, b, A, with_var, rtol, atol, max_step, max_steps):
    """Integrate from t=0 through every time in ``t_out`` (sorted, >= 0).

    ``y0`` and the returned rows use densities ``x`` in ``[0:3]``. Returns
    ``(states, status, t_reached, n_steps)``.
    """
    n = N_FULL if with_var else N_BASE
    pinned = np.zeros(3, dtype=np.bool_)
    y = np.zeros(n)
    for i in range(n):
        y[i] = y0[i]
    for i in range(3):
        if y0[i] == 0.0:
            pinned[i] = True
            y[i] = 0.0
        else:
            y[i] = np.log(y0[i])
            if with_var:
                for j in range(3):
                    y[6 + 3 * i + j] /= y0[i]
    states, status, t, n_steps = _integrate_log(
        y, pinned, t_out, b, A, n, rtol, atol, max_step, max_steps)
    for k in range(states.shape[0]):
        for i in range(3):
            x = 0.0 if pinned[i] else np.exp(states[k, i])
            states[k, i] = x
            if with_var and not pinned[i]:
                for j in range(3):
                    states[k, 6 + 3 * i + j] *= x
    return states, status, t, n_steps


@njit(cache=True)
def poincare_orbit(x0, n_iter, b, A, decay, duration, rtol, atol, max_step, max_steps):
    """Iterate the period map ``n_iter`` times; row k of the result is P^k(x0).

    The log densities are carried from one period to the next, so a density
    that dips below the double range in between is not lost.
    """
    out = np.zeros((n_iter + 1, 3))
    pinned = np.zeros(3, dtype=np.bool_)
    u = np.zeros(3)
    log_decay = np.log(decay)
    for i in range(3):
        out[0, i] = x0[i]
        if x0[i] == 0.0:
            pinned[i] = True
        else:
            u[i] = np.log(x0[i])
    t_out = np.array([duration])
    y0 = np.zeros(N_BASE)
    for k in range(n_iter):
        for i in range(3):
            y0[i] = 0.0 if pinned[i] else u[i] + log_decay[i]
            y0[3 + i] = 0.0
        states, status, t_reached, _ = _integrate_log(
            y0, pinned, t_out, b, A, N_BASE, rtol, atol, max_step, max_steps)
        if status != STATUS_OK:
            return out[: k + 1], status, k
        for i in range(3):
            u[i] = states[0, i]
            out[k + 1, i] = 0.0 if pinned[i] else np.exp(u[i])
    return out, STATUS_OK, n_iter
