"""Period map, its Jacobian, moment vectors and fixed points.

Species are indexed 0, 1, 2 throughout the Python API; reports and labels
use 1-based numbering (``q1``, ``v3``).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import _kernel
from .flow import DEFAULT_CONFIG, IntegrationError, _raise_for, _state, integrate_good_season, kernel_tolerances
from .params import SeasonalParams, derive, growth_exponents

log = logging.getLogger(__name__)

NEWTON_STEP_TOL = 1e-11
RESIDUAL_TOL = 1e-9
DEDUP_RADIUS = 1e-6
BOX_INFLATION = 1.05
SEED_ENV = "LVSEASONS_SEED"


class NewtonDivergence(RuntimeError):
    pass


def decay_factors(params: SeasonalParams) -> np.ndarray:
    return np.exp(-params.mu * params.bad_duration)


def poincare_map(params: SeasonalParams, x, cfg=None) -> np.ndarray:
    x = _state(x)
    y = x * decay_factors(params)
    return integrate_good_season(params, y, [params.good_duration], cfg)[0, :3].copy()


def _map_data(params, x, cfg=None, with_var=True):
    """``(P(x), DP(x), theta_hat(x))`` from a single good-season integration."""
    c = decay_factors(params)
    row = integrate_good_season(params, _state(x) * c, [params.good_duration], cfg, with_var)[0]
    P = row[:3].copy()
    th = row[3:6].copy()
    DP = row[6:].reshape(3, 3) * c[None, :] if with_var else None
    return P, DP, th


def poincare_jacobian(params: SeasonalParams, x, cfg=None) -> np.ndarray:
    """``DP(x) = W(phi omega, Lx) @ DL`` with ``DL = diag(c)``."""
    return _map_data(params, x, cfg)[1]


def theta_hat(params: SeasonalParams, theta, cfg=None) -> np.ndarray:
    """Good-season integral of the trajectory started from ``L theta``."""
    return _map_data(params, theta, cfg, with_var=False)[2]


def kolmogorov_factors(params: SeasonalParams, x, cfg=None) -> np.ndarray:
    """``F_i(x)`` with ``P_i(x) = x_i F_i(x)``, valid on faces as well.

    Along any trajectory ``x_i(T) = x_i(0) exp(int g_i)``, hence
    ``F_i(x) = exp(r_i - (A theta_hat(x))_i)`` for every nonnegative ``x``.
    """
    th = theta_hat(params, x, cfg)
    return np.exp(growth_exponents(params) - params.A @ th)


def orbit_points(params: SeasonalParams, x0, n: int, cfg=None) -> np.ndarray:
    """``(n + 1, 3)`` array whose row k is ``P^k(x0)``."""
    cfg = cfg or DEFAULT_CONFIG
    rtol, atol = kernel_tolerances(cfg)
    pts, status, k = _kernel.poincare_orbit(
        _state(x0), int(n), params.b, params.A, decay_factors(params),
        params.good_duration, rtol, atol, cfg.max_step, cfg.max_steps,
    )
    _raise_for(status, k * params.omega)
    return pts


# -- axis ---------------------------------------------------------------------

def logistic(b: float, a: float, x0, t: float):
    """Closed-form solution of ``x' = x (b - a x)``."""
    x0 = np.asarray(x0, dtype=float)
    return b * x0 / (a * x0 + (b - a * x0) * np.exp(-b * t))


def axis_map_closed_form(params: SeasonalParams, i: int, s):
    """``P(s e_i)_i``: logistic growth over the good season after decay by ``c_i``."""
    c = decay_factors(params)[i]
    return logistic(params.b[i], params.A[i, i], c * np.asarray(s, dtype=float), params.good_duration)


def axial_closed_form(params: SeasonalParams, i: int):
    """Positive axis fixed point coordinate, or None when ``r_i <= 0``."""
    if growth_exponents(params)[i] <= 0:
        return None
    b, a = params.b[i], params.A[i, i]
    c = decay_factors(params)[i]
    e = np.exp(-b * params.good_duration)
    return b * (c - e) / (a * c * (1.0 - e))


def axial_newton(params: SeasonalParams, i: int, cfg=None, x0=None, max_iter=50) -> float:
    """1-D Newton on the axis restriction of P, using the variational derivative."""
    if x0 is None:
        x0 = params.b[i] / params.A[i, i]
    s = float(x0)
    e = np.zeros(3)
    for _ in range(max_iter):
        e[i] = s
        P, DP, _ = _map_data(params, e, cfg)
        g = P[i] - s
        dg = DP[i, i] - 1.0
        step = -g / dg
        s_new = s + step
        if not np.isfinite(s_new) or s_new <= 0:
            s_new = 0.5 * s
        if abs(s_new - s) <= NEWTON_STEP_TOL * max(1.0, abs(s)):
            return s_new
        s = s_new
    e[i] = s
    if abs(poincare_map(params, e, cfg)[i] - s) < RESIDUAL_TOL:
        return s
    raise NewtonDivergence(f"axis {i + 1} Newton did not converge (last iterate {s})")


# -- records ------------------------------------------------------------------

@dataclass
class FixedPointRecord:
    """A verified fixed point of the period map.

    ``transversal_multipliers`` maps each absent species index to
    ``exp(r_i - (A theta_hat)_i)``; ``face_multipliers`` are the eigenvalues of
    the Jacobian block on the support; ``full_spectrum`` is the spectrum of the
    whole Jacobian.
    """

    support: tuple
    theta: np.ndarray
    theta_hat: np.ndarray
    jacobian: np.ndarray
    transversal_multipliers: dict
    face_multipliers: np.ndarray
    full_spectrum: np.ndarray
    residual: float
    linear_defect: float
    notes: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if len(self.support) == 1:
            return f"q{self.support[0] + 1}"
        if len(self.support) == 2:
            k = ({0, 1, 2} - set(self.support)).pop()
            return f"v{k + 1}"
        if len(self.support) == 3:
            return "p"
        return "0"

    def log_factors(self) -> np.ndarray:
        """``ln F_i(theta)``: zero on the support, transversal exponents elsewhere."""
        m = np.zeros(3)
        for i, lam in self.transversal_multipliers.items():
            m[i] = np.log(lam)
        return m

    def boundary_multipliers(self) -> np.ndarray:
        return np.concatenate(
            [self.face_multipliers, np.array(list(self.transversal_multipliers.values()), dtype=complex)]
        )

    def spectrum_mismatch(self) -> float:
        """Largest relative distance from an analytic multiplier to the numerical spectrum."""
        worst = 0.0
        for lam in self.transversal_multipliers.values():
            d = np.min(np.abs(self.full_spectrum - lam)) / abs(lam)
            worst = max(worst, float(d))
        return worst

    def to_dict(self) -> dict:
        def cplx(z):
            z = complex(z)
            return [z.real, z.imag]

        return {
            "label": self.label,
            "support": [i + 1 for i in self.support],
            "theta": self.theta.tolist(),
            "theta_hat": self.theta_hat.tolist(),
            "transversal_multipliers": {
                str(i + 1): float(v) for i, v in sorted(self.transversal_multipliers.items())
            },
            "face_multipliers": [cplx(z) for z in self.face_multipliers],
            "full_spectrum": [cplx(z) for z in self.full_spectrum],
            "residual": self.residual,
            "linear_defect": self.linear_defect,
        }


def face_structured_spectrum(DP, support) -> np.ndarray:
    """Eigenvalues of ``DP`` at a point whose absent coordinates are ``{0,1,2} - support``.

    Rows of absent species vanish off the diagonal, so the spectrum splits into
    those diagonal entries and the eigenvalues of the remaining block. This keeps
    relative accuracy for multipliers many orders of magnitude below ``|DP|``.
    """
    keep = [i for i in range(3) if i in support]
    absent = [i for i in range(3) if i not in support]
    for i in absent:
        off = np.delete(DP[i], i)
        if np.any(off != 0.0):
            raise ValueError(f"row {i + 1} of the Jacobian is not face-structured")
    parts = [DP[i, i] + 0j for i in absent]
    if keep:
        parts.extend(np.linalg.eigvals(DP[np.ix_(keep, keep)]))
    return np.array(parts, dtype=complex)


def make_record(params: SeasonalParams, theta, cfg=None) -> FixedPointRecord:
    theta = _state(theta)
    support = tuple(int(i) for i in np.nonzero(theta > 0)[0])
    P, DP, th = _map_data(params, theta, cfg)
    r = growth_exponents(params)
    Ath = params.A @ th
    absent = [i for i in range(3) if i not in support]
    trans = {i: float(np.exp(r[i] - Ath[i])) for i in absent}
    if support:
        face = np.linalg.eigvals(DP[np.ix_(support, support)]).astype(complex)
        defect = float(np.max(np.abs(Ath[list(support)] - r[list(support)])))
    else:
        face = np.zeros(0, dtype=complex)
        defect = 0.0
    return FixedPointRecord(
        support=support,
        theta=theta,
        theta_hat=th,
        jacobian=DP,
        transversal_multipliers=trans,
        face_multipliers=face,
        full_spectrum=face_structured_spectrum(DP, support),
        residual=float(np.max(np.abs(P - theta))),
        linear_defect=defect,
    )


def transversal_multiplier(params: SeasonalParams, rec: FixedPointRecord, i: int) -> float:
    if i in rec.support:
        raise ValueError(f"species {i + 1} is in the support of {rec.label}")
    r = growth_exponents(params)
    return float(np.exp(r[i] - params.A[i] @ rec.theta_hat))


def axial_fixed_point(params: SeasonalParams, i: int, cfg=None):
    """Axis fixed point record, or None when species ``i`` cannot persist alone.

    The closed-form coordinate is cross-checked against Newton on the axis.
    """
    q = axial_closed_form(params, i)
    if q is None:
        return None
    qn = axial_newton(params, i, cfg, x0=q * 1.1)
    if abs(qn - q) > 1e-8 * max(1.0, q):
        raise NewtonDivergence(f"axis {i + 1}: Newton {qn!r} disagrees with closed form {q!r}")
    theta = np.zeros(3)
    theta[i] = q
    rec = make_record(params, theta, cfg)
    rec.notes["newton"] = qn
    return rec


# -- Newton on faces -------------------------------------------------------------

def face_newton(params: SeasonalParams, support, seed, cfg=None, max_iter=60, upper=None):
    """Newton for ``ln F_s(x) = 0`` on the face spanned by ``support``.

    Works in log coordinates ``u = ln x`` so iterates stay in the open face.
    Returns the converged point or None.
    """
    S = list(support)
    u = np.log(np.asarray(seed, dtype=float)[S])
    x = np.zeros(3)

    def evaluate(u):
        x[:] = 0.0
        x[S] = np.exp(u)
        P, DP, _ = _map_data(params, x, cfg)
        if np.any(P[S] <= 0):
            raise FloatingPointError("map left the open face")
        G = np.log(P[S] / x[S])
        J = DP[np.ix_(S, S)] * x[S][None, :] / P[S][:, None] - np.eye(len(S))
        return G, J

    try:
        G, J = evaluate(u)
    except (FloatingPointError, ArithmeticError, IntegrationError):
        return None
    for _ in range(max_iter):
        try:
            du = np.linalg.solve(J, -G)
        except np.linalg.LinAlgError:
            return None
        big = np.max(np.abs(du))
        if big > 2.0:
            du *= 2.0 / big
        g0 = np.max(np.abs(G))
        lam = 1.0
        accepted = False
        for _ in range(12):
            u_try = u + lam * du
            if upper is not None and np.any(np.exp(u_try) > upper[S]):
                lam *= 0.5
                continue
            try:
                G_try, J_try = evaluate(u_try)
            except (FloatingPointError, ArithmeticError, IntegrationError):
                lam *= 0.5
                continue
            if np.max(np.abs(G_try)) < g0 or g0 < 1e-10:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return None
        step = np.max(np.abs(np.exp(u_try) - np.exp(u)))
        u, G, J = u_try, G_try, J_try
        if np.any(u < np.log(1e-12)):
            return None
        if step <= NEWTON_STEP_TOL * max(1.0, np.max(np.exp(u))):
            break
    out = np.zeros(3)
    out[S] = np.exp(u)
    return out


def _dedup(points):
    pts = sorted(points, key=lambda p: tuple(np.round(p, 9)))
    kept = []
    for p in pts:
        if all(np.max(np.abs(p - k)) > DEDUP_RADIUS for k in kept):
            kept.append(p)
    return kept


def _accept(params, candidates, cfg):
    records = []
    for p in _dedup(candidates):
        rec = make_record(params, p, cfg)
        if rec.residual < RESIDUAL_TOL:
            records.append(rec)
        else:
            log.debug("rejecting candidate %s with residual %.3g", p, rec.residual)
    return records


def axial_box(params: SeasonalParams) -> np.ndarray:
    """Per-species upper bounds: ``1.05 q_max`` where any axial point exists."""
    qs = [axial_closed_form(params, i) for i in range(3)]
    qs = [q for q in qs if q is not None]
    q_max = max(qs) if qs else 1.0
    return np.full(3, BOX_INFLATION * q_max)


def _seed_from_moments(params, th_hat, support):
    """Map a predicted moment vector to a state guess via the axial ratio ``q_i/(r_i/a_ii)``."""
    r = growth_exponents(params)
    guess = np.zeros(3)
    for i in support:
        q = axial_closed_form(params, i)
        ratio = q * params.A[i, i] / r[i] if q is not None else 1.0 / params.good_duration
        guess[i] = th_hat[i] * ratio
    return guess


def planar_fixed_points(params: SeasonalParams, k: int, cfg=None, grid: int = 6):
    """Fixed points in the open coordinate plane where species ``k`` is absent.

    On a nondegenerate plane any such point has moment vector
    ``(beta_ij, beta_ji)``, so non-positive ``beta`` means the list is empty.
    Otherwise Newton is run from the moment-based predictor and from a
    ``grid x grid`` lattice; a singular 2x2 minor falls back to the lattice alone.
    """
    i, j = [m for m in range(3) if m != k]
    r = growth_exponents(params)
    if r[i] <= 0 or r[j] <= 0:
        return []
    box = axial_box(params)
    upper = 4.0 * box
    seeds = []
    d = derive(params)
    if d.beta_defined[i, j]:
        bij, bji = d.beta[i, j], d.beta[j, i]
        if not (bij > 0 and bji > 0):
            # a planar fixed point would have moments (beta_ij, beta_ji)
            return []
        th = np.zeros(3)
        th[i], th[j] = bij, bji
        seeds.append(_seed_from_moments(params, th, (i, j)))
    lo = 1e-2
    levels = np.linspace(lo, 1.0, grid)
    for a in levels:
        for c in levels:
            s = np.zeros(3)
            s[i], s[j] = a * box[i], c * box[j]
            seeds.append(s)
    found = []
    for s in seeds:
        p = face_newton(params, (i, j), s, cfg, upper=upper)
        if p is not None:
            found.append(p)
    return _accept(params, found, cfg)


def _seed_value(seed):
    if seed is not None:
        return int(seed)
    return int(os.environ.get(SEED_ENV, "0"))


def interior_fixed_points(params: SeasonalParams, cfg=None, n_seeds: int = 32, seed=None):
    """Positive fixed points from multi-start Newton (predictor + scrambled Sobol seeds)."""
    r = growth_exponents(params)
    if np.any(r <= 0):
        return []
    box = axial_box(params)
    seeds = []
    try:
        th = np.linalg.solve(params.A, r)
    except np.linalg.LinAlgError:
        th = None
    if th is not None and np.all(th > 0):
        seeds.append(_seed_from_moments(params, th, (0, 1, 2)))
    sobol = qmc.Sobol(d=3, scramble=True, seed=_seed_value(seed))
    m = max(1, int(np.ceil(np.log2(max(1, n_seeds)))))
    pts = sobol.random_base2(m)[:n_seeds]
    lo = 1e-3 * box
    seeds.extend(qmc.scale(pts, lo, box))
    found = []
    for s in seeds:
        p = face_newton(params, (0, 1, 2), s, cfg, upper=4.0 * box)
        if p is not None:
            found.append(p)
    return _accept(params, found, cfg)


def fixed_point_report(records) -> list:
    return [rec.to_dict() for rec in records]


def all_fixed_points(params: SeasonalParams, cfg=None) -> list:
    """Axial, planar and interior fixed points (origin excluded), in that order."""
    records = [rec for rec in (axial_fixed_point(params, i, cfg) for i in range(3)) if rec is not None]
    for k in range(3):
        records.extend(planar_fixed_points(params, k, cfg))
    records.extend(interior_fixed_points(params, cfg))
    return records
