"""Low-order moments (alpha, beta, gamma) dual to G, F_i and H_j."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import Grid, RealField

MOMENT_NAMES = ("alpha", "beta1", "beta2", "gamma1", "gamma2", "gamma3")
BASIS_TAGS = ("G", "F1", "F2", "H1", "H2", "H3")


@dataclass(frozen=True)
class MomentSet:
    alpha: float
    beta: tuple[float, float]
    gamma: tuple[float, float, float]

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, *self.beta, *self.gamma])

    @classmethod
    def from_array(cls, a) -> "MomentSet":
        a = [float(x) for x in a]
        return cls(a[0], (a[1], a[2]), (a[3], a[4], a[5]))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(MOMENT_NAMES, self.as_array().tolist()))


@lru_cache(maxsize=8)
def moment_weights(grid: Grid) -> np.ndarray:
    """Stack of the six dual polynomials times the cell area, shape (6, n, n)."""
    x1, x2 = grid.mesh
    polys = np.stack(
        [
            np.ones_like(x1),
            -x1,
            -x2,
            0.25 * (x1**2 + x2**2 - 4.0),
            0.25 * (x1**2 - x2**2),
            x1 * x2,
        ]
    )
    weights = grid.cell_area * polys
    weights.setflags(write=False)
    return weights


def moment_vector(values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.tensordot(moment_weights(grid), values, axes=([1, 2], [0, 1]))


def extract_moments(w: RealField) -> MomentSet:
    return MomentSet.from_array(moment_vector(w.values, w.grid))
