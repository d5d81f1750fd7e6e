"""Long-run behaviour of period-map orbits: fixed point versus invariant closed curve."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial.distance import directed_hausdorff, pdist

from .flow import DEFAULT_CONFIG, IntegratorConfig, _state
from .params import SeasonalParams
from .poincare import FixedPointRecord, orbit_points, poincare_map

MIN_TRANSIENT = 500
MIN_DETECT_LENGTH = 1000

FP_STEP_TOL = 1e-9
FP_RESIDUAL_TOL = 1e-8
CURVE_MIN_DIAMETER = 1e-3
CURVE_MIN_GAP = 1e-3
CURVE_MAX_CLOSURE = 0.05

FIXED_POINT = "FixedPoint"
CLOSED_CURVE = "ClosedCurve"
UNRESOLVED = "Unresolved"


class DegenerateProjection(ValueError):
    pass


@dataclass
class OrbitRecord:
    """``points[k] = P^k(origin_state)`` for ``k = 0..n``."""

    points: np.ndarray
    transient_cut: int
    origin_state: np.ndarray
    params: Optional[SeasonalParams] = None
    cfg: IntegratorConfig = DEFAULT_CONFIG

    @property
    def n(self) -> int:
        return len(self.points) - 1

    def post_transient(self) -> np.ndarray:
        return self.points[self.transient_cut:]


def default_transient(n: int) -> int:
    return min(max(n // 2, MIN_TRANSIENT), n)


def iterate_orbit(params: SeasonalParams, x0, n: int, cfg=None, transient_cut=None) -> OrbitRecord:
    if n < 1:
        raise ValueError("n must be at least 1")
    cfg = cfg or DEFAULT_CONFIG
    x0 = _state(x0)
    pts = orbit_points(params, x0, n, cfg)
    cut = default_transient(n) if transient_cut is None else int(transient_cut)
    return OrbitRecord(points=pts, transient_cut=cut, origin_state=x0, params=params, cfg=cfg)


class RotationEstimate(NamedTuple):
    rho: float
    defect: float


def _circular_gap(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _winding(angles_xy: np.ndarray) -> float:
    ang = np.arctan2(angles_xy[:, 1], angles_xy[:, 0])
    inc = np.angle(np.exp(1j * np.diff(ang)))
    return float(np.mean(inc) / (2 * np.pi)) % 1.0


def plane_coordinates(points, center) -> np.ndarray:
    """Coordinates of ``points - center`` in the best-fit plane of the cloud.

    The plane normal is oriented towards ``(1, 1, 1)`` and the in-plane frame
    is right-handed about it, so the sense of rotation is well defined.
    """
    pts = np.asarray(points, dtype=float)
    center = np.asarray(center, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3) or len(pts) < 3:
        raise DegenerateProjection("need at least three 2-D or 3-D points")
    if pts.shape[1] == 2:
        rel = pts - center
        if np.linalg.matrix_rank(rel - rel.mean(0), tol=1e-12 * max(1.0, np.abs(rel).max())) < 2:
            raise DegenerateProjection("point cloud is collinear")
        return rel
    centered = pts - pts.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[0] == 0 or s[1] <= 1e-12 * s[0]:
        raise DegenerateProjection("point cloud has rank < 2")
    normal = vt[2]
    if normal.sum() < 0:
        normal = -normal
    e1 = vt[0]
    e2 = np.cross(normal, e1)
    rel = pts - center
    return np.column_stack([rel @ e1, rel @ e2])


def rotation_number_estimate(record, center) -> RotationEstimate:
    """Mean winding per iterate about ``center``, as a fraction of a turn in [0, 1).

    ``record`` is an :class:`OrbitRecord` (its post-transient part is used) or a
    plain array of points. ``defect`` is the circular difference between the
    estimates over the two halves of the window.
    """
    pts = record.post_transient() if isinstance(record, OrbitRecord) else np.asarray(record, float)
    xy = plane_coordinates(pts, center)
    rho = _winding(xy)
    half = len(xy) // 2
    defect = _circular_gap(_winding(xy[: half + 1]), _winding(xy[half:]))
    return RotationEstimate(rho, defect)


@dataclass
class AttractorReport:
    kind: str
    iterations_used: int
    fixed_point: Optional[np.ndarray] = None
    curve_diagnostics: Optional[dict] = None
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "iterations_used": self.iterations_used,
            "fixed_point": None if self.fixed_point is None else self.fixed_point.tolist(),
            "curve_diagnostics": self.curve_diagnostics,
            "checks": self.checks,
        }


def _as_state(fp):
    return fp.theta if isinstance(fp, FixedPointRecord) else np.asarray(fp, dtype=float)


def closure_defect(post: np.ndarray) -> float:
    """Symmetric Hausdorff distance between the two halves of the window."""
    half = len(post) // 2
    a, b = post[:half], post[half:]
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def attractor_detect(record: OrbitRecord, known_fixed_points=()) -> AttractorReport:
    """Type the post-transient behaviour of an orbit.

    The fixed-point test runs first (last step below ``1e-9`` and, when the
    record carries its parameters, ``|P(x*) - x*| < 1e-8``). Then the closed
    curve test: diameter above ``1e-3``, every iterate more than ``1e-3`` from
    every known fixed point, and a closure defect under 5% of the diameter.
    """
    if len(record.points) < MIN_DETECT_LENGTH:
        raise ValueError(f"orbit too short for typing ({len(record.points)} < {MIN_DETECT_LENGTH})")
    pts = record.points
    used = record.n
    checks = {}

    last_step = float(np.max(np.abs(pts[-1] - pts[-2])))
    checks["last_step"] = last_step
    if last_step < FP_STEP_TOL:
        x_star = pts[-1].copy()
        if record.params is not None:
            res = float(np.max(np.abs(poincare_map(record.params, x_star, record.cfg) - x_star)))
        else:
            res = last_step
        checks["limit_residual"] = res
        if res < FP_RESIDUAL_TOL:
            return AttractorReport(FIXED_POINT, used, fixed_point=x_star, checks=checks)

    post = record.post_transient()
    diameter = float(np.max(pdist(post))) if len(post) > 1 else 0.0
    fps = [_as_state(fp) for fp in known_fixed_points]
    gap = min((float(np.min(np.linalg.norm(post - fp, axis=1))) for fp in fps), default=np.inf)
    closure = closure_defect(post)
    checks.update(diameter=diameter, min_gap_to_fixed_points=gap, closure_defect=closure)

    is_curve = (
        diameter > CURVE_MIN_DIAMETER
        and gap > CURVE_MIN_GAP
        and closure < CURVE_MAX_CLOSURE * diameter
    )
    if not is_curve:
        return AttractorReport(UNRESOLVED, used, checks=checks)

    interior = [fp for fp in fps if np.all(fp > 0)]
    if interior:
        centroid = post.mean(axis=0)
        center = min(interior, key=lambda fp: np.linalg.norm(fp - centroid))
    else:
        center = post.mean(axis=0)
    diag = {
        "diameter": diameter,
        "min_gap_to_fixed_points": gap,
        "closure_defect": closure,
        "amplitude_ratio": amplitude_ratio(post, center),
    }
    try:
        est = rotation_number_estimate(post, center)
        diag["rotation_number_estimate"] = est.rho
        diag["rotation_number_defect"] = est.defect
    except DegenerateProjection:
        diag["rotation_number_estimate"] = None
    return AttractorReport(CLOSED_CURVE, used, curve_diagnostics=diag, checks=checks)


def amplitude_ratio(post: np.ndarray, center) -> float:
    """Largest distance to ``center`` in the second half over that in the first.

    Values clearly below one flag a slow spiral towards ``center`` rather than
    a curve of fixed size.
    """
    d = np.linalg.norm(post - np.asarray(center), axis=1)
    half = len(d) // 2
    return float(d[half:].max() / d[:half].max())


def boundary_distance(record: OrbitRecord) -> float:
    """Smallest coordinate over the post-transient orbit."""
    return float(record.post_transient().min())
