"""Max-min weighting over the probability simplex by vertex enumeration.

Solves::

    maximize t  subject to  m_k . nu >= t  for every row m_k,
                            nu_i >= nu_min,  sum(nu) = 1.

With three weights and a handful of rows the feasible polyhedron has at most
a few hundred candidate vertices, so enumerating them is exact, deterministic
and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

NU_MIN = 1e-9
FEAS_TOL = 1e-12


class DegenerateLP(ValueError):
    """No constraint rows were supplied."""


@dataclass(frozen=True)
class MaxMinResult:
    margin: float
    nu: np.ndarray

    def slacks(self, rows) -> np.ndarray:
        return np.asarray(rows, dtype=float) @ self.nu - self.margin


def max_min_weights(rows, nu_min: float = NU_MIN) -> MaxMinResult:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0:
        raise DegenerateLP("no boundary fixed points to constrain the weights")
    if rows.shape[1] != 3:
        raise ValueError("rows must have three columns")
    if not 0 <= nu_min < 1.0 / 3.0:
        raise ValueError("nu_min must lie in [0, 1/3)")

    # z = (nu1, nu2, t); nu3 = 1 - nu1 - nu2.  Constraints G z >= h.
    G = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, -1.0, 0.0]]
    h = [nu_min, nu_min, nu_min - 1.0]
    for m in rows:
        G.append([m[0] - m[2], m[1] - m[2], -1.0])
        h.append(-m[2])
    G = np.array(G)
    h = np.array(h)

    best = None
    for idx in combinations(range(len(h)), 3):
        sub = G[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-14:
            continue
        z = np.linalg.solve(sub, h[list(idx)])
        if np.all(G @ z - h >= -FEAS_TOL * (1.0 + np.abs(h))):
            nu = np.array([z[0], z[1], 1.0 - z[0] - z[1]])
            # evaluate the margin directly rather than trusting the solve
            t = float(np.min(rows @ nu))
            key = (t, -z[0], -z[1])
            if best is None or key > best[0]:
                best = (key, nu)
    if best is None:  # pragma: no cover - polyhedron always has a vertex
        raise DegenerateLP("no feasible vertex found")
    nu = np.clip(best[1], nu_min, None)
    nu /= nu.sum()
    return MaxMinResult(margin=float(np.min(rows @ nu)), nu=nu)
