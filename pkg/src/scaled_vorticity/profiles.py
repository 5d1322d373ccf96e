"""Closed-form vorticity profiles of the Gaussian family.

All profiles are polynomial multiples of the Oseen vortex
G = exp(-|xi|^2/4) / (4 pi), except the quadratic interaction density Phi and
the two fields built from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from .fields import Grid, RealField

KAPPA = 1.0 / (32.0 * np.pi)
PHI_AT_ORIGIN = 1.0 / (256.0 * np.pi**2)

TAGS = ("G", "F1", "F2", "H1", "H2", "H3", "K", "Phi", "Psi2", "Psi3")


def gaussian(x1, x2):
    return np.exp(-(x1**2 + x2**2) / 4.0) / (4.0 * np.pi)


def _second_order_remainder(r):
    """(exp(-r) - 1 + r) / r^2, stable near r = 0."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = r < 0.5
    rs = r[small]
    # alternating series sum_k (-r)^k / (k+2)!
    term = np.full_like(rs, 0.5)
    acc = term.copy()
    for k in range(1, 24):
        term = -term * rs / (k + 2)
        acc += term
    out[small] = acc
    rl = r[~small]
    out[~small] = (np.expm1(-rl) + rl) / rl**2
    return out


def interaction_density(x1, x2):
    """Phi = exp(-s/4) (exp(-s/4) - 1 + s/4) / (8 pi^2 s^2), s = |xi|^2."""
    r = (x1**2 + x2**2) / 4.0
    return np.exp(-r) * _second_order_remainder(r) / (128.0 * np.pi**2)


_FORMULAS: dict[str, Callable] = {
    "G": gaussian,
    "F1": lambda x1, x2: -0.5 * x1 * gaussian(x1, x2),
    "F2": lambda x1, x2: -0.5 * x2 * gaussian(x1, x2),
    "H1": lambda x1, x2: 0.25 * (x1**2 + x2**2 - 4.0) * gaussian(x1, x2),
    "H2": lambda x1, x2: 0.25 * (x1**2 - x2**2) * gaussian(x1, x2),
    "H3": lambda x1, x2: 0.25 * x1 * x2 * gaussian(x1, x2),
    "K": lambda x1, x2: x1 * (1.0 - (x1**2 + x2**2) / 8.0) * gaussian(x1, x2),
    "Phi": interaction_density,
    "Psi2": lambda x1, x2: (x1**2 - x2**2) * interaction_density(x1, x2)
    - KAPPA * 0.25 * (x1**2 - x2**2) * gaussian(x1, x2),
    "Psi3": lambda x1, x2: x1 * x2 * interaction_density(x1, x2)
    - KAPPA * 0.25 * x1 * x2 * gaussian(x1, x2),
}


@dataclass(frozen=True)
class NamedProfile:
    tag: str

    def __post_init__(self):
        if self.tag not in _FORMULAS:
            raise ValueError(f"unknown profile {self.tag!r}; expected one of {TAGS}")

    def __call__(self, x1, x2):
        return _FORMULAS[self.tag](np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))

    def on(self, grid: Grid) -> RealField:
        return grid.sample(self)


def profile(tag: str, grid: Grid) -> RealField:
    return NamedProfile(tag).on(grid)


# d^k/dx^k exp(-x^2/4) = q_k(x) exp(-x^2/4); coefficients in increasing powers
_GAUSS_DERIVATIVE_1D = (
    (1.0,),
    (0.0, -1 / 2),
    (-1 / 2, 0.0, 1 / 4),
    (0.0, 3 / 4, 0.0, -1 / 8),
    (3 / 4, 0.0, -3 / 4, 0.0, 1 / 16),
    (0.0, -15 / 8, 0.0, 5 / 8, 0.0, -1 / 32),
    (-15 / 8, 0.0, 45 / 16, 0.0, -15 / 32, 0.0, 1 / 64),
)
MAX_HERMITE_ORDER = len(_GAUSS_DERIVATIVE_1D) - 1


def gauss_derivative_coefficients(k: int) -> np.ndarray:
    """Coefficients of q_k with d^k/dx^k exp(-x^2/4) = q_k(x) exp(-x^2/4)."""
    if not 0 <= k <= MAX_HERMITE_ORDER:
        raise ValueError(f"derivative order must lie in [0, {MAX_HERMITE_ORDER}], got {k}")
    return np.array(_GAUSS_DERIVATIVE_1D[k])


def hermite_polynomial_coefficients(k: int) -> np.ndarray:
    """1D factor (2^k / k!) q_k of the dual Hermite polynomials."""
    return gauss_derivative_coefficients(k) * 2.0**k / factorial(k)
