"""Time evolution of the seasonally switched system.

Within each period the bad season ``[k omega, k omega + (1-phi) omega)`` comes
first and is solved in closed form (pure exponential decay); the good season
is integrated with an adaptive DOP853 stepper. Integration is restarted at
every season boundary, so no step ever straddles a switch.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernel
from .params import SeasonalParams


class IntegrationError(RuntimeError):
    """The good-season integrator could not reach the requested time."""

    def __init__(self, message, t_reached):
        super().__init__(f"{message} (reached t={t_reached:.17g})")
        self.t_reached = t_reached


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    """Blow-up or NaN in the state; impossible for valid competitive data."""


class StepLimitExceeded(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("integrator tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")

    def tightened(self, factor: float = 100.0) -> "IntegratorConfig":
        return IntegratorConfig(
            self.rel_tol / factor, self.abs_tol / factor, self.max_step, self.max_steps
        )


DEFAULT_CONFIG = IntegratorConfig()

# Per-step error control runs this much tighter than the configured tolerances,
# so that the accumulated error over a season stays within them.
LOCAL_TOL_FACTOR = 0.1


def kernel_tolerances(cfg: IntegratorConfig):
    return cfg.rel_tol * LOCAL_TOL_FACTOR, cfg.abs_tol * LOCAL_TOL_FACTOR


class VariationalState(NamedTuple):
    x: np.ndarray
    W: np.ndarray


def _state(x) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(3)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"state must be finite and nonnegative, got {arr}")
    return arr


def _raise_for(status, t_reached):
    if status == _kernel.STATUS_UNDERFLOW:
        raise StepSizeUnderflow("step size underflow", t_reached)
    if status == _kernel.STATUS_NONFINITE:
        raise NonFiniteState("non-finite state", t_reached)
    if status == _kernel.STATUS_MAXSTEPS:
        raise StepLimitExceeded("step limit exceeded", t_reached)


def integrate_good_season(params: SeasonalParams, x, t_out, cfg=None, with_var=False):
    """Augmented good-season states at each time of ``t_out`` (sorted, >= 0).

    Each returned row holds ``x`` (3), the running integral of ``x`` (3) and,
    when ``with_var``, the variational matrix flattened row-major (9).
    Coordinates that start at zero stay exactly zero.
    """
    cfg = cfg or DEFAULT_CONFIG
    t_out = np.ascontiguousarray(t_out, dtype=float)
    n = _kernel.N_FULL if with_var else _kernel.N_BASE
    y0 = np.zeros(n)
    y0[:3] = x
    if with_var:
        y0[6:] = np.eye(3).ravel()
    rtol, atol = kernel_tolerances(cfg)
    states, status, t_reached, _ = _kernel.integrate(
        y0, t_out, params.b, params.A, with_var, rtol, atol, cfg.max_step, cfg.max_steps,
    )
    _raise_for(status, t_reached)
    return states


def linear_phase_map(params: SeasonalParams, x, duration: float) -> np.ndarray:
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    return _state(x) * np.exp(-params.mu * duration)


def lv_flow(params: SeasonalParams, x, t: float, cfg=None) -> np.ndarray:
    """Solution of the competition phase after time ``t`` from ``x``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = _state(x)
    if t == 0:
        return x
    return integrate_good_season(params, x, [t], cfg)[0, :3].copy()


def variational_flow(params: SeasonalParams, x, t: float, cfg=None) -> VariationalState:
    """Good-season state and its sensitivity ``W = D_x Phi_t(x)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = _state(x)
    if t == 0:
        return VariationalState(x, np.eye(3))
    row = integrate_good_season(params, x, [t], cfg, with_var=True)[0]
    return VariationalState(row[:3].copy(), row[6:].reshape(3, 3).copy())


def _segments(params: SeasonalParams, t_end: float):
    """Yield ``(kind, start, stop)`` season pieces covering ``[0, t_end]``."""
    omega = params.omega
    bad = params.bad_duration
    k = 0
    while True:
        start = k * omega
        if start >= t_end:
            return
        switch = start + bad
        stop = (k + 1) * omega
        if switch > start:
            yield "bad", start, min(switch, t_end)
        if switch < t_end and stop > switch:
            yield "good", switch, min(stop, t_end)
        k += 1


def seasonal_flow(params: SeasonalParams, x, t: float, cfg=None) -> np.ndarray:
    """Full switched-system solution operator ``Psi(t, x)`` started at time 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = _state(x)
    for kind, s0, s1 in _segments(params, t):
        if kind == "bad":
            x = x * np.exp(-params.mu * (s1 - s0))
        else:
            x = integrate_good_season(params, x, [s1 - s0], cfg)[0, :3].copy()
    return x


def time_series(params: SeasonalParams, x0, t_end: float, n_samples: int = 501, cfg=None):
    """Sample the switched solution on a uniform grid over ``[0, t_end]``.

    Returns ``(t, X)`` with ``X[k]`` the state at ``t[k]``. With ``t_end == 0``
    a single row equal to ``x0`` is returned.
    """
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    x = _state(x0)
    if t_end == 0:
        return np.zeros(1), x[None, :].copy()
    if n_samples < 2:
        raise ValueError("need at least two samples")
    t = np.linspace(0.0, t_end, n_samples)
    X = np.empty((n_samples, 3))
    X[0] = x
    for kind, s0, s1 in _segments(params, t_end):
        sel = np.nonzero((t > s0) & (t <= s1))[0]
        if kind == "bad":
            if sel.size:
                X[sel] = x * np.exp(-np.outer(t[sel] - s0, params.mu))
            x = x * np.exp(-params.mu * (s1 - s0))
        else:
            local = np.append(t[sel] - s0, s1 - s0)
            states = integrate_good_season(params, x, local, cfg)
            X[sel] = states[:-1, :3]
            x = states[-1, :3].copy()
    return t, X


def write_series_csv(path, t, X, index_name="t") -> None:
    """Write ``index_name, x1, x2, x3`` rows; floats use shortest round-trip repr."""
    integral = np.issubdtype(np.asarray(t).dtype, np.integer)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([index_name, "x1", "x2", "x3"])
        for tk, xk in zip(t, X):
            first = int(tk) if integral else repr(float(tk))
            writer.writerow([first] + [repr(float(v)) for v in xk])
