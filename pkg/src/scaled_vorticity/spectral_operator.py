"""The linear operator L w = Lap w + (xi . grad w)/2 + w, its Hermite
eigenfunctions, spectral projections and the exact semigroup exp(tau L)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly

from .fields import (
    Grid,
    RealField,
    SpectralCoefficients,
    check_boundary,
    forward_transform,
    inverse_transform,
    laplacian,
    spectral_derivative,
    weighted_norm,
)
from .profiles import MAX_HERMITE_ORDER, gauss_derivative_coefficients, hermite_polynomial_coefficients


@dataclass(frozen=True)
class HermiteIndex:
    a1: int
    a2: int

    def __post_init__(self):
        if self.a1 < 0 or self.a2 < 0:
            raise ValueError(f"Hermite index components must be >= 0, got ({self.a1}, {self.a2})")

    @property
    def order(self) -> int:
        return self.a1 + self.a2

    @classmethod
    def of(cls, alpha) -> "HermiteIndex":
        return alpha if isinstance(alpha, HermiteIndex) else cls(*alpha)


def indices_up_to(order: int) -> list[HermiteIndex]:
    return [HermiteIndex(k - j, j) for k in range(order + 1) for j in range(k + 1)]


def _checked(alpha) -> HermiteIndex:
    alpha = HermiteIndex.of(alpha)
    if alpha.order > MAX_HERMITE_ORDER:
        raise ValueError(f"Hermite order {alpha.order} exceeds the supported maximum {MAX_HERMITE_ORDER}")
    return alpha


def apply_L(w: RealField) -> RealField:
    x1, x2 = w.grid.mesh
    dilation = x1 * spectral_derivative(w, 1).values + x2 * spectral_derivative(w, 2).values
    check_boundary(dilation, "xi . grad w", ratio=1e-8)
    return RealField(w.grid, laplacian(w).values + 0.5 * dilation + w.values)


def hermite_function(alpha, grid: Grid) -> RealField:
    """d^alpha of G, as the closed form q_a1(xi1) q_a2(xi2) G."""
    alpha = _checked(alpha)
    q1 = gauss_derivative_coefficients(alpha.a1)
    q2 = gauss_derivative_coefficients(alpha.a2)

    def f(x1, x2):
        gauss = np.exp(-(x1**2 + x2**2) / 4.0) / (4.0 * np.pi)
        return npoly.polyval(x1, q1) * npoly.polyval(x2, q2) * gauss

    return grid.sample(f)


@dataclass(frozen=True, eq=False)
class HermitePolynomial:
    """Polynomial sum c[i, j] xi1^i xi2^j dual to the Hermite function of the same index."""

    index: HermiteIndex
    coefficients: np.ndarray

    def __call__(self, x1, x2):
        return npoly.polyval2d(x1, x2, self.coefficients)

    def on(self, grid: Grid) -> RealField:
        return grid.sample(self)


def hermite_polynomial(alpha) -> HermitePolynomial:
    alpha = _checked(alpha)
    c = np.outer(hermite_polynomial_coefficients(alpha.a1), hermite_polynomial_coefficients(alpha.a2))
    return HermitePolynomial(alpha, c)


@dataclass(frozen=True)
class ProjectionSpec:
    """P_n keeps the eigenvalues 0, -1/2, ..., -n/2 in the space with weight m."""

    n: int
    m: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("projection index must be >= 0")
        if not self.n + 1 < self.m:
            raise ValueError(f"projection requires n + 1 < m, got n={self.n}, m={self.m}")


@lru_cache(maxsize=16)
def _projection_basis(grid: Grid, n: int):
    idx = indices_up_to(n)
    polys = np.stack([hermite_polynomial(a).on(grid).values for a in idx]) * grid.cell_area
    funcs = np.stack([hermite_function(a, grid).values for a in idx])
    return polys, funcs


def project(w: RealField, spec: ProjectionSpec, part: str = "P") -> RealField:
    if part not in ("P", "Q"):
        raise ValueError("part must be 'P' or 'Q'")
    polys, funcs = _projection_basis(w.grid, spec.n)
    coeffs = np.tensordot(polys, w.values, axes=([1, 2], [0, 1]))
    low = np.tensordot(coeffs, funcs, axes=1)
    return RealField(w.grid, low if part == "P" else w.values - low)


def hermite_coefficients(w: RealField, order: int) -> dict[HermiteIndex, float]:
    polys, _ = _projection_basis(w.grid, order)
    coeffs = np.tensordot(polys, w.values, axes=([1, 2], [0, 1]))
    return dict(zip(indices_up_to(order), coeffs.tolist()))


def _dilated_transform(w: RealField, factor: float) -> np.ndarray:
    """Samples of w_hat(factor * p) on the wavenumber grid.

    Evaluates the trigonometric sum h^2 sum_j w_j exp(-i q . xi_j) directly at
    q = factor * p; separable, so two dense matrix products.
    """
    g = w.grid
    q = factor * g.wavenumbers
    e = np.exp(-1j * np.outer(q, g.xi))
    return g.cell_area * (e @ w.values @ e.T)


def semigroup_apply(w: RealField, tau: float) -> RealField:
    """exp(tau L) w via (S f)^(p) = exp(-a |p|^2) f^(p exp(-tau/2)), a = 1 - exp(-tau)."""
    if tau < 0:
        raise ValueError(f"semigroup time must be >= 0, got {tau}")
    if tau == 0:
        return RealField(w.grid, w.values.copy())
    g = w.grid
    p1, p2 = g.pmesh
    a = -np.expm1(-tau)
    coeffs = np.exp(-a * (p1**2 + p2**2)) * _dilated_transform(w, np.exp(-tau / 2.0))
    return inverse_transform(SpectralCoefficients(g, coeffs))


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit log(observable) = log(amplitude) + rate * tau."""

    window: tuple[float, float]
    rate: float
    amplitude: float
    residual: float

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValueError(f"empty fit window {self.window}")


def fit_log_linear(times, values, window=None) -> DecayFit:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        window = (float(times.min()), float(times.max()))
    lo, hi = window
    sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    t, y = times[sel], values[sel]
    if t.size < 2:
        raise ValueError(f"fit window {window} contains fewer than two samples")
    if np.any(y == 0) or (y.min() < 0 < y.max()):
        raise ValueError("observable crosses or touches zero in the fit window")
    logy = np.log(np.abs(y))
    rate, intercept = np.polyfit(t, logy, 1)
    resid = float(np.max(np.abs(logy - (intercept + rate * t))))
    amp = float(np.sign(y[0]) * np.exp(intercept))
    return DecayFit((float(lo), float(hi)), float(rate), amp, resid)


def random_enveloped_polynomial(grid: Grid, rng: np.random.Generator, degree: int = 4) -> RealField:
    """Gaussian-enveloped polynomial with random coefficients and width."""
    width = rng.uniform(0.75, 1.0)
    shift = rng.uniform(-0.5, 0.5, size=2)
    coeffs = np.zeros((degree + 1, degree + 1))
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            coeffs[i, j] = rng.normal()

    def f(x1, x2):
        y1, y2 = x1 - shift[0], x2 - shift[1]
        return npoly.polyval2d(y1, y2, coeffs) * np.exp(-(y1**2 + y2**2) / (4.0 * width**2)) / (4 * np.pi)

    return grid.sample(f)


@dataclass
class SgestimReport:
    m: float
    n: int
    bound: float
    worst: DecayFit
    fits: list[DecayFit]
    rows: list[tuple[float, int, float, float]] = field(default_factory=list)
    regime: str = "b"

    @property
    def passed(self) -> bool:
        return self.worst.rate <= self.bound

    def summary(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "regime": self.regime,
            "fitted_rate": self.worst.rate,
            "bound": self.bound,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "n", "tau", "norm"])
        for m, n, tau, norm in self.rows:
            writer.writerow([m, n, repr(tau), repr(norm)])
        return buf.getvalue()


def verify_sgestim(
    m: float,
    n: int,
    tau_grid,
    corpus_size: int = 20,
    seed: int = 0,
    grid: Grid | None = None,
) -> SgestimReport:
    """Fit the decay of ||exp(tau L) Q_n f||_m over a random corpus.

    Accepts m >= n + 2. At equality the admissible rate is still
    -(n+1)/2 up to an arbitrarily small loss, which the 0.05 slack covers.
    """
    if m < n + 2:
        raise ValueError(f"decay check needs m >= n + 2, got m={m}, n={n}")
    grid = grid or Grid(128, 12.0)
    tau_grid = np.asarray(sorted(tau_grid), dtype=float)
    if tau_grid.size < 2:
        raise ValueError("need at least two sample times")
    rng = np.random.default_rng(seed)
    spec = ProjectionSpec(n, m)
    bound = -(n + 1) / 2 + 0.05
    fits, rows = [], []
    for _ in range(corpus_size):
        f = random_enveloped_polynomial(grid, rng)
        q = project(f, spec, "Q")
        if weighted_norm(q, m) <= 1e-12 * weighted_norm(f, m):
            continue  # f lies in the retained span
        norms = []
        for tau in tau_grid:
            value = weighted_norm(semigroup_apply(q, float(tau)), m)
            norms.append(value)
            rows.append((m, n, float(tau), value))
        fits.append(fit_log_linear(tau_grid, norms))
    if not fits:
        raise ValueError("corpus produced no fields outside the retained span")
    worst = max(fits, key=lambda fit: fit.rate)
    regime = "b" if m > n + 2 else "a"
    return SgestimReport(m, n, bound, worst, fits, rows, regime)
