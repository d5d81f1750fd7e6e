"""Model constants, validation and closed-form derived quantities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np


class ParameterError(ValueError):
    """Base class for rejected parameter documents."""


@dataclass(frozen=True)
class NonPositiveParameter:
    name: str

    def __str__(self) -> str:
        return f"parameter {self.name} must be strictly positive"


@dataclass(frozen=True)
class PhiOutOfRange:
    value: float

    def __str__(self) -> str:
        return f"phi must lie in (0, 1], got {self.value!r}"


@dataclass(frozen=True)
class NonFiniteValue:
    name: str

    def __str__(self) -> str:
        return f"parameter {self.name} is not finite"


@dataclass(frozen=True)
class MalformedField:
    name: str
    reason: str

    def __str__(self) -> str:
        return f"field {self.name}: {self.reason}"


class InvalidParameters(ParameterError):
    """Raised by :func:`validate_params`; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    def to_dict(self) -> dict:
        return {
            "error": "InvalidParameters",
            "violations": [
                {"kind": type(v).__name__, **v.__dict__} for v in self.violations
            ],
        }


@dataclass(frozen=True, eq=False)
class SeasonalParams:
    """Constants of the seasonally switched three-species competition model.

    Attributes
    ----------
    omega : float
        Period length.
    phi : float
        Fraction of the period spent in the good (competition) season.
    mu : ndarray, shape (3,)
        Bad-season death rates.
    b : ndarray, shape (3,)
        Good-season intrinsic growth rates.
    A : ndarray, shape (3, 3)
        Competition coefficients ``a_ij``.

    Instances are built by :func:`validate_params`; the arrays are read-only.
    """

    omega: float
    phi: float
    mu: np.ndarray
    b: np.ndarray
    A: np.ndarray

    @property
    def bad_duration(self) -> float:
        return (1.0 - self.phi) * self.omega

    @property
    def good_duration(self) -> float:
        return self.phi * self.omega

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "phi": self.phi,
            "mu": self.mu.tolist(),
            "b": self.b.tolist(),
            "a": self.A.tolist(),
        }

    def permuted(self, perm) -> "SeasonalParams":
        """Relabel species so that new species ``k`` is old species ``perm[k]``."""
        p = np.asarray(perm)
        return validate_params(
            {
                "omega": self.omega,
                "phi": self.phi,
                "mu": self.mu[p],
                "b": self.b[p],
                "a": self.A[np.ix_(p, p)],
            }
        )

    def __eq__(self, other):
        if not isinstance(other, SeasonalParams):
            return NotImplemented
        return (
            self.omega == other.omega
            and self.phi == other.phi
            and np.array_equal(self.mu, other.mu)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.A, other.A)
        )

    __hash__ = None


def _as_vector(raw, name, shape, violations):
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        violations.append(MalformedField(name, "not numeric"))
        return None
    if arr.shape != shape:
        violations.append(MalformedField(name, f"expected shape {shape}, got {arr.shape}"))
        return None
    return arr


def validate_params(raw: Mapping[str, Any]) -> SeasonalParams:
    """Check a parameter record and return a frozen :class:`SeasonalParams`.

    ``raw`` follows the JSON document layout: keys ``omega``, ``phi``, ``mu``,
    ``b`` and ``a`` (``A`` is accepted as an alias). Every violated constraint
    is collected before raising :class:`InvalidParameters`.
    """
    violations: list = []
    if not isinstance(raw, Mapping):
        raise InvalidParameters([MalformedField("<root>", "expected an object")])

    scalars = {}
    for key in ("omega", "phi"):
        if key not in raw:
            violations.append(MalformedField(key, "missing"))
            continue
        try:
            scalars[key] = float(raw[key])
        except (TypeError, ValueError):
            violations.append(MalformedField(key, "not numeric"))

    vectors = {}
    for key, shape in (("mu", (3,)), ("b", (3,)), ("a", (3, 3))):
        src = raw.get(key, raw.get("A") if key == "a" else None)
        if src is None:
            violations.append(MalformedField(key, "missing"))
            continue
        arr = _as_vector(src, key, shape, violations)
        if arr is not None:
            vectors[key] = arr

    if "omega" in scalars:
        w = scalars["omega"]
        if not math.isfinite(w):
            violations.append(NonFiniteValue("omega"))
        elif w <= 0:
            violations.append(NonPositiveParameter("omega"))
    if "phi" in scalars:
        p = scalars["phi"]
        if not math.isfinite(p):
            violations.append(NonFiniteValue("phi"))
        elif not 0.0 < p <= 1.0:
            violations.append(PhiOutOfRange(p))

    for key in ("mu", "b"):
        if key in vectors:
            for i, v in enumerate(vectors[key]):
                name = f"{key}{i + 1}"
                if not math.isfinite(v):
                    violations.append(NonFiniteValue(name))
                elif v <= 0:
                    violations.append(NonPositiveParameter(name))
    if "a" in vectors:
        for (i, j), v in np.ndenumerate(vectors["a"]):
            name = f"a{i + 1}{j + 1}"
            if not math.isfinite(v):
                violations.append(NonFiniteValue(name))
            elif v <= 0:
                violations.append(NonPositiveParameter(name))

    if violations:
        raise InvalidParameters(violations)

    arrays = {k: v.copy() for k, v in vectors.items()}
    for v in arrays.values():
        v.flags.writeable = False
    return SeasonalParams(
        omega=scalars["omega"],
        phi=scalars["phi"],
        mu=arrays["mu"],
        b=arrays["b"],
        A=arrays["a"],
    )


def load_params(path) -> SeasonalParams:
    with open(path, encoding="utf-8") as fh:
        return validate_params(json.load(fh))


def save_params(params: SeasonalParams, path) -> None:
    Path(path).write_text(json.dumps(params.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class DerivedQuantities:
    """Closed-form quantities used by the classifier.

    Off-diagonal matrices (``gamma``, ``w``, ``beta``) carry NaN on the
    diagonal. ``beta_defined[i, j]`` is False where the 2x2 minor
    ``a_ii a_jj - a_ij a_ji`` vanishes; those ``beta`` entries are NaN and
    must not be read.
    """

    r: np.ndarray
    c: np.ndarray
    gamma: np.ndarray
    w: np.ndarray
    beta: np.ndarray
    beta_defined: np.ndarray
    vartheta: float
    axial_theta_hat: np.ndarray

    def to_dict(self) -> dict:
        def offdiag(m, defined=None):
            return {
                f"{i + 1}{j + 1}": (
                    None if defined is not None and not defined[i, j] else float(m[i, j])
                )
                for i in range(3)
                for j in range(3)
                if i != j
            }

        return {
            "r": self.r.tolist(),
            "c": self.c.tolist(),
            "gamma": offdiag(self.gamma),
            "w": offdiag(self.w),
            "beta": offdiag(self.beta, self.beta_defined),
            "vartheta": self.vartheta,
            "axial_theta_hat": self.axial_theta_hat.tolist(),
        }


def growth_exponents(params: SeasonalParams) -> np.ndarray:
    """Per-period log growth at low density, ``b_i phi omega - mu_i (1-phi) omega``."""
    return params.b * params.good_duration - params.mu * params.bad_duration


def derive(params: SeasonalParams) -> DerivedQuantities:
    A = params.A
    r = growth_exponents(params)
    c = np.exp(-params.mu * params.bad_duration)
    diag = np.diag(A)

    gamma = np.full((3, 3), np.nan)
    w = np.full((3, 3), np.nan)
    beta = np.full((3, 3), np.nan)
    beta_defined = np.zeros((3, 3), dtype=bool)
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            gamma[i, j] = A[i, i] * r[j] - A[j, i] * r[i]
            w[i, j] = r[j] - A[j, i] * r[i] / A[i, i]
            det = A[i, i] * A[j, j] - A[i, j] * A[j, i]
            if det != 0.0:
                beta[i, j] = (A[j, j] * r[i] - A[i, j] * r[j]) / det
                beta_defined[i, j] = True

    vartheta = float(w[0, 1] * w[1, 2] * w[2, 0] + w[1, 0] * w[0, 2] * w[2, 1])
    out = DerivedQuantities(
        r=r,
        c=c,
        gamma=gamma,
        w=w,
        beta=beta,
        beta_defined=beta_defined,
        vartheta=vartheta,
        axial_theta_hat=r / diag,
    )
    for arr in (r, c, gamma, w, beta, beta_defined, out.axial_theta_hat):
        arr.flags.writeable = False
    return out


# Parameter sets of the three worked examples with invariant closed curves,
# plus their initial values.
EXAMPLES = {
    1: {
        "omega": 10.0,
        "phi": 0.65,
        "mu": [0.15, 0.2, 0.1],
        "b": [0.3, 0.3, 0.25],
        "a": [[0.2, 0.35, 0.2], [0.1, 0.2, 0.3], [0.8, 0.1, 0.3]],
    },
    2: {
        "omega": 10.0,
        "phi": 0.5,
        "mu": [0.1, 0.11, 0.15],
        "b": [0.345, 0.505, 0.666],
        "a": [[0.73, 0.215, 0.052], [1.092, 0.892, 0.003], [0.185, 2.923, 0.009]],
    },
    3: {
        "omega": 1.0,
        "phi": 0.97,
        "mu": [0.23, 0.27, 0.18],
        "b": [108.0, 1.2, 2.3174],
        "a": [[6.99, 1.0, 100.2], [0.074, 0.521, 0.602], [0.1174, 1.0, 1.2]],
    },
}

EXAMPLE_X0 = {
    1: (0.3, 0.4, 0.8),
    2: (2.0, 5.0, 2.0),
    3: (1.8, 2.3, 1.5),
}

# Species 1 dominates; species 2 and 3 are excluded.
DOMINANCE = {
    "omega": 10.0,
    "phi": 0.65,
    "mu": [0.1, 0.1, 0.1],
    "b": [0.5, 0.2, 0.2],
    "a": [[0.1, 0.1, 0.1], [1.0, 1.0, 0.1], [1.0, 0.1, 1.0]],
}


def example_params(k: int) -> SeasonalParams:
    return validate_params(EXAMPLES[k])
