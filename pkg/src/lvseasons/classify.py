"""Permanence decision from the boundary fixed points of the period map."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lp import MaxMinResult, max_min_weights
from .params import DerivedQuantities, SeasonalParams, derive
from .poincare import FixedPointRecord, axial_fixed_point, planar_fixed_points

HYPERBOLIC_TOL = 1e-8

PERMANENT = "Permanent"
IMPERMANENT = "Impermanent"
INDETERMINATE = "Indeterminate"


def extinction_check(derived: DerivedQuantities) -> tuple:
    """Species (0-based) whose per-period growth exponent is not positive."""
    return tuple(int(i) for i in np.nonzero(derived.r <= 0)[0])


@dataclass
class BoundaryPortrait:
    axial: list
    planar: dict
    hyperbolic: bool
    non_hyperbolic: list = field(default_factory=list)
    cycle: Optional[str] = None

    def points(self) -> list:
        pts = [rec for rec in self.axial if rec is not None]
        for k in sorted(self.planar):
            pts.extend(self.planar[k])
        return pts

    def signature(self) -> dict:
        """Existence pattern and multiplier signs; stands in for a class label."""
        sig = {}
        for rec in self.points():
            sig[rec.label] = {
                str(i + 1): ("+" if lam > 1 else "-")
                for i, lam in sorted(rec.transversal_multipliers.items())
            }
        return sig

    def to_dict(self) -> dict:
        return {
            "axial": [None if rec is None else rec.to_dict() for rec in self.axial],
            "planar": {str(k + 1): [rec.to_dict() for rec in v] for k, v in sorted(self.planar.items())},
            "hyperbolic": self.hyperbolic,
            "non_hyperbolic": self.non_hyperbolic,
            "cycle": self.cycle,
            "signature": self.signature(),
        }


def _detect_cycle(axial, planar):
    if any(rec is None for rec in axial) or any(planar[k] for k in planar):
        return None
    successor = {}
    for i, rec in enumerate(axial):
        logs = {j: np.log(lam) for j, lam in rec.transversal_multipliers.items()}
        up = [j for j, v in logs.items() if v > 0]
        down = [j for j, v in logs.items() if v < 0]
        if len(up) != 1 or len(down) != 1:
            return None
        successor[i] = up[0]
    if successor == {0: 1, 1: 2, 2: 0}:
        return "1->2->3->1"
    if successor == {0: 2, 2: 1, 1: 0}:
        return "1->3->2->1"
    return None


def boundary_portrait(params: SeasonalParams, cfg=None) -> BoundaryPortrait:
    d = derive(params)
    if np.any(d.r <= 0):
        raise ValueError("boundary portrait needs every growth exponent r_i > 0")
    axial = [axial_fixed_point(params, i, cfg) for i in range(3)]
    planar = {k: planar_fixed_points(params, k, cfg) for k in range(3)}

    non_hyp = []
    for rec in [a for a in axial if a is not None] + [p for k in planar for p in planar[k]]:
        for lam in rec.boundary_multipliers():
            mod = abs(lam)
            if mod > 0 and abs(np.log(mod)) <= HYPERBOLIC_TOL:
                non_hyp.append({"point": rec.label, "multiplier": [lam.real, lam.imag]})
    return BoundaryPortrait(
        axial=axial,
        planar=planar,
        hyperbolic=not non_hyp,
        non_hyperbolic=non_hyp,
        cycle=_detect_cycle(axial, planar),
    )


def is_attracting(rec: FixedPointRecord) -> bool:
    """All multipliers, within the face and transversal, inside the unit circle."""
    return bool(np.all(np.abs(rec.full_spectrum) < 1.0))


@dataclass
class LyapunovTest:
    rows: np.ndarray
    labels: list
    permanence: MaxMinResult
    impermanence: MaxMinResult

    def to_dict(self) -> dict:
        return {
            "points": self.labels,
            "log_factors": self.rows.tolist(),
            "permanence_margin": self.permanence.margin,
            "permanence_nu": self.permanence.nu.tolist(),
            "impermanence_margin": self.impermanence.margin,
            "impermanence_nu": self.impermanence.nu.tolist(),
        }


def average_lyapunov_test(portrait: BoundaryPortrait) -> LyapunovTest:
    """Best linear weights for ``eta = sum nu_i ln F_i`` over the boundary fixed points.

    ``ln F_i`` is zero on a point's support and the log transversal multiplier
    off it. Both the permanence margin (max over nu of the min of eta) and the
    impermanence margin (same for -eta) are returned.
    """
    pts = portrait.points()
    rows = np.array([rec.log_factors() for rec in pts]).reshape(-1, 3)
    return LyapunovTest(
        rows=rows,
        labels=[rec.label for rec in pts],
        permanence=max_min_weights(rows),
        impermanence=max_min_weights(-rows),
    )


@dataclass
class PermanenceVerdict:
    verdict: str
    witness: dict
    extinct_species: tuple = ()
    portrait: Optional[BoundaryPortrait] = None
    derived: Optional[DerivedQuantities] = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": self.witness,
            "extinct_species": [i + 1 for i in self.extinct_species],
            "portrait": None if self.portrait is None else self.portrait.to_dict(),
            "derived": None if self.derived is None else self.derived.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        w = self.witness
        kind = w.get("type")
        if kind == "extinction":
            lines.append(f"species with r_i <= 0: {w['species']}")
        elif kind == "heteroclinic_cycle":
            lines.append(f"boundary is a heteroclinic cycle {w['orientation']}, vartheta = {w['vartheta']:.9g}")
        elif kind == "attracting_boundary_point":
            lines.append(f"attracting boundary fixed point {w['point']} at {w['theta']}")
        elif kind == "weights":
            lines.append(f"weights nu = {w['nu']}, margin = {w['margin']:.6g}")
        elif kind == "non_hyperbolic":
            lines.append(f"non-hyperbolic boundary multipliers: {w['multipliers']}")
        elif kind == "inconclusive_lp":
            lines.append(
                f"no sign-definite weighting (margins {w['permanence_margin']:.3g}, "
                f"{w['impermanence_margin']:.3g})"
            )
        if self.portrait is not None:
            for rec in self.portrait.points():
                mult = ", ".join(
                    f"lambda_{i + 1}={lam:.6g}" for i, lam in sorted(rec.transversal_multipliers.items())
                )
                lines.append(f"  {rec.label}: theta={np.array2string(rec.theta, precision=6)} {mult}")
        return "\n".join(lines)


def cycle_vartheta_from_multipliers(portrait: BoundaryPortrait) -> float:
    """``w12 w23 w31 + w21 w13 w32`` rebuilt from ``w_ij = ln lambda_j(q_i)``."""
    w = np.zeros((3, 3))
    for i, rec in enumerate(portrait.axial):
        for j, lam in rec.transversal_multipliers.items():
            w[i, j] = np.log(lam)
    return float(w[0, 1] * w[1, 2] * w[2, 0] + w[1, 0] * w[0, 2] * w[2, 1])


def classify_permanence(params: SeasonalParams, cfg=None) -> PermanenceVerdict:
    d = derive(params)
    extinct = extinction_check(d)
    if extinct:
        return PermanenceVerdict(
            IMPERMANENT,
            {"type": "extinction", "species": [i + 1 for i in extinct]},
            extinct_species=extinct,
            derived=d,
        )

    portrait = boundary_portrait(params, cfg)
    if not portrait.hyperbolic:
        return PermanenceVerdict(
            INDETERMINATE,
            {"type": "non_hyperbolic", "multipliers": portrait.non_hyperbolic},
            portrait=portrait,
            derived=d,
        )

    for rec in portrait.points():
        if is_attracting(rec):
            return PermanenceVerdict(
                IMPERMANENT,
                {
                    "type": "attracting_boundary_point",
                    "point": rec.label,
                    "theta": rec.theta.tolist(),
                    "moduli": np.abs(rec.full_spectrum).tolist(),
                },
                portrait=portrait,
                derived=d,
            )

    if portrait.cycle is not None:
        vt = d.vartheta
        witness = {
            "type": "heteroclinic_cycle",
            "orientation": portrait.cycle,
            "vartheta": vt,
            "vartheta_from_multipliers": cycle_vartheta_from_multipliers(portrait),
        }
        if vt > 0:
            verdict = PERMANENT
        elif vt < 0:
            verdict = IMPERMANENT
        else:
            verdict = INDETERMINATE
        return PermanenceVerdict(verdict, witness, portrait=portrait, derived=d)

    test = average_lyapunov_test(portrait)
    if test.permanence.margin > 0:
        verdict = PERMANENT
        witness = {"type": "weights", "nu": test.permanence.nu.tolist(), "margin": test.permanence.margin}
    elif test.impermanence.margin > 0:
        verdict = IMPERMANENT
        witness = {"type": "weights", "nu": test.impermanence.nu.tolist(), "margin": test.impermanence.margin,
                   "sign": "negative"}
    else:
        verdict = INDETERMINATE
        witness = {"type": "inconclusive_lp",
                   "permanence_margin": test.permanence.margin,
                   "impermanence_margin": test.impermanence.margin}
    witness["lp"] = test.to_dict()
    return PermanenceVerdict(verdict, witness, portrait=portrait, derived=d)
