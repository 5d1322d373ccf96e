"""Velocity from vorticity: periodic spectral inversion, closed forms, checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.special import gammainc

from .fields import Grid, RealField, VectorField, lp_norm
from .moments import BASIS_TAGS, moment_vector
from .profiles import NamedProfile, gaussian


def velocity_from_vorticity(w: RealField) -> VectorField:
    """Periodic Biot-Savart inversion, v_hat = i p_perp w_hat / |p|^2.

    p_perp = (-p2, p1). The zero mode of the velocity is set to zero, so the
    curl of the result is w minus its grid mean.
    """
    g = w.grid
    v1, v2 = _spectral_velocity(sfft.rfft2(w.values), g)
    return VectorField(g, v1, v2)


def _spectral_velocity(w_hat: np.ndarray, g: Grid) -> tuple[np.ndarray, np.ndarray]:
    p1, p2 = g.derivative_wavenumbers
    q1, q2 = g.rfft_wavenumbers
    k2 = q1**2 + q2**2
    k2[0, 0] = 1.0
    psi_hat = -w_hat / k2  # stream function, Laplacian(psi) = w
    psi_hat[0, 0] = 0.0
    v1 = sfft.irfft2(-1j * p2 * psi_hat, s=(g.n, g.n))
    v2 = sfft.irfft2(1j * p1 * psi_hat, s=(g.n, g.n))
    return v1, v2


# Closed forms. v^G = psi(|xi|^2) (xi2, -xi1) with psi(s) = (exp(-s/4) - 1) / (2 pi s).
# Using (exp(-s/4) - 1)/s = -1/4 int_0^1 exp(-s t/4) dt, the k-th derivative in s is
# -1/4 (-1/4)^k int_0^1 t^k exp(-c t) dt with c = s/4.


def _moment_of_exponential(k: int, c: np.ndarray) -> np.ndarray:
    """int_0^1 t^k exp(-c t) dt for c >= 0."""
    c = np.asarray(c, dtype=float)
    out = np.empty_like(c)
    small = c < 1.0
    cs = c[small]
    acc = np.zeros_like(cs)
    term = np.ones_like(cs)
    for j in range(30):
        acc += term / (k + j + 1)
        term = -term * cs / (j + 1)
    out[small] = acc
    cl = c[~small]
    out[~small] = math.factorial(k) * gammainc(k + 1, cl) / cl ** (k + 1)
    return out


def _psi_derivatives(s: np.ndarray, order: int) -> list[np.ndarray]:
    c = s / 4.0
    return [
        -0.25 * (-0.25) ** k * _moment_of_exponential(k, c) / (2.0 * np.pi)
        for k in range(order + 1)
    ]


def _oseen_and_derivatives(x1, x2, alpha):
    """Return d^alpha applied to v^G for a multi-index with |alpha| <= 2."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    s = x1**2 + x2**2
    psi, dpsi, ddpsi = _psi_derivatives(s, 2)
    xs = (x1, x2)

    def dpsi_i(i):
        return 2.0 * xs[i] * dpsi

    def dpsi_ij(i, j):
        return (2.0 * dpsi if i == j else 0.0) + 4.0 * xs[i] * xs[j] * ddpsi

    # d^alpha (psi * x_m), m = index of the coordinate multiplying psi
    def deriv_psi_times(m, idx):
        if len(idx) == 0:
            return psi * xs[m]
        if len(idx) == 1:
            (i,) = idx
            return dpsi_i(i) * xs[m] + (psi if i == m else 0.0)
        i, j = idx
        out = dpsi_ij(i, j) * xs[m]
        if i == m:
            out = out + dpsi_i(j)
        if j == m:
            out = out + dpsi_i(i)
        return out

    idx = [0] * alpha[0] + [1] * alpha[1]
    v1 = deriv_psi_times(1, idx)
    v2 = -deriv_psi_times(0, idx)
    return np.broadcast_to(v1, s.shape).copy(), np.broadcast_to(v2, s.shape).copy()


def oseen_velocity(xi) -> np.ndarray:
    """Velocity of the Oseen vortex at a point (or stacked points, last axis = 2)."""
    xi = np.asarray(xi, dtype=float)
    v1, v2 = _oseen_and_derivatives(xi[..., 0], xi[..., 1], (0, 0))
    return np.stack([v1, v2], axis=-1)


def _named_velocity_arrays(tag: str, x1, x2):
    if tag == "G":
        return _oseen_and_derivatives(x1, x2, (0, 0))
    if tag == "F1":
        return _oseen_and_derivatives(x1, x2, (1, 0))
    if tag == "F2":
        return _oseen_and_derivatives(x1, x2, (0, 1))
    if tag == "H1":
        g = gaussian(x1, x2)
        return 0.5 * g * x2, -0.5 * g * x1
    if tag == "H2":
        a1, a2 = _oseen_and_derivatives(x1, x2, (2, 0))
        b1, b2 = _oseen_and_derivatives(x1, x2, (0, 2))
        return a1 - b1, a2 - b2
    if tag == "H3":
        return _oseen_and_derivatives(x1, x2, (1, 1))
    if tag == "K":
        g = gaussian(x1, x2)
        return -0.25 * g * x1 * x2, 0.25 * g * (x1**2 - 2.0)
    NamedProfile(tag)  # raises for unknown tags
    raise ValueError(f"no closed-form velocity for profile {tag!r}")


def named_velocity(tag: str, grid: Grid) -> VectorField:
    x1, x2 = grid.mesh
    v1, v2 = _named_velocity_arrays(tag, x1, x2)
    return VectorField(grid, v1, v2)


class HybridBiotSavart:
    """Closed-form velocity for the G/F/H part, periodic inversion for the rest.

    The split uses the six low-order moments, so the remainder has zero mass,
    first and second moments and its velocity decays fast enough for the
    periodic box.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        basis = [NamedProfile(t).on(grid).values for t in BASIS_TAGS]
        self.basis = np.stack(basis)
        self.basis_hat = np.stack([sfft.rfft2(b) for b in basis])
        vel = [named_velocity(t, grid) for t in BASIS_TAGS]
        self.basis_v1 = np.stack([v.v1 for v in vel])
        self.basis_v2 = np.stack([v.v2 for v in vel])

    def arrays(self, w: np.ndarray, w_hat: np.ndarray | None = None):
        g = self.grid
        if w_hat is None:
            w_hat = sfft.rfft2(w)
        coeffs = moment_vector(w, g)
        rem_hat = w_hat - np.tensordot(coeffs, self.basis_hat, axes=1)
        v1, v2 = _spectral_velocity(rem_hat, g)
        v1 += np.tensordot(coeffs, self.basis_v1, axes=1)
        v2 += np.tensordot(coeffs, self.basis_v2, axes=1)
        return v1, v2

    def __call__(self, w: RealField) -> VectorField:
        v1, v2 = self.arrays(w.values)
        return VectorField(self.grid, v1, v2)


@lru_cache(maxsize=8)
def hybrid_solver(grid: Grid) -> HybridBiotSavart:
    return HybridBiotSavart(grid)


def hybrid_velocity(w: RealField) -> VectorField:
    """Velocity with closed forms for the Gaussian-family part of w."""
    return hybrid_solver(w.grid)(w)


def divergence(v: VectorField) -> RealField:
    g = v.grid
    p1, p2 = g.derivative_wavenumbers
    d = sfft.irfft2(1j * (p1 * sfft.rfft2(v.v1) + p2 * sfft.rfft2(v.v2)), s=(g.n, g.n))
    return RealField(g, d)


def curl(v: VectorField) -> RealField:
    g = v.grid
    p1, p2 = g.derivative_wavenumbers
    d = sfft.irfft2(1j * (p1 * sfft.rfft2(v.v2) - p2 * sfft.rfft2(v.v1)), s=(g.n, g.n))
    return RealField(g, d)


def gradient_l2(v: VectorField) -> float:
    """|grad v|_2 computed spectrally from the periodic velocity samples."""
    g = v.grid
    q1, q2 = g.rfft_wavenumbers
    k2 = q1**2 + q2**2
    total = 0.0
    for comp in (v.v1, v.v2):
        c = sfft.rfft2(comp)
        weight = np.full(k2.shape, 2.0)  # rfft stores half the spectrum
        weight[:, 0] = 1.0
        if g.n % 2 == 0:
            weight[:, -1] = 1.0
        total += np.sum(weight * k2 * np.abs(c) ** 2)
    # discrete Parseval: h^2 sum |f|^2 = h^2 / n^2 sum |F|^2
    return float(np.sqrt(total * g.cell_area / g.n**2))


def _check_pair(p: float, q: float) -> None:
    if not (1 < p < 2 < q < math.inf):
        raise ValueError(f"exponent pair ({p}, {q}) must satisfy 1 < p < 2 < q < inf")
    if abs(1.0 / q - (1.0 / p - 0.5)) > 1e-12:
        raise ValueError(f"exponent pair ({p}, {q}) must satisfy 1/q = 1/p - 1/2")


@dataclass
class HLSReport:
    rows: list[dict] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return any(r["tolerance_flag"] for r in self.rows)

    def to_json(self) -> str:
        return json.dumps(self.rows, indent=2)


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return math.nan  # 0/0 sentinel
    return num / den


def check_hls_bounds(w: RealField, pairs, gradient_tolerance: float = 1e-8) -> HLSReport:
    """Ratios of velocity norms to vorticity norms for each exponent pair.

    The velocity is the hybrid one. The gradient identity uses the periodic
    inversion, whose curl is w minus its mean, and compares against that
    mean-free vorticity.
    """
    pairs = [(float(p), float(q)) for p, q in pairs]
    for p, q in pairs:
        _check_pair(p, q)
    v = hybrid_velocity(w)
    speed = v.magnitude()
    report = HLSReport()
    for p, q in pairs:
        wp, wq = lp_norm(w, p), lp_norm(w, q)
        report.rows.append(
            {"pair": [p, q], "kind": "hls", "ratio": _ratio(lp_norm(speed, q), wp), "tolerance_flag": False}
        )
        a = (1.0 / q - 0.5) / (1.0 / q - 1.0 / p)  # 1/2 = a/p + (1-a)/q
        report.rows.append(
            {
                "pair": [p, q],
                "kind": "interpolation",
                "ratio": _ratio(lp_norm(speed, math.inf), wp**a * wq ** (1 - a)),
                "tolerance_flag": False,
            }
        )
    periodic = velocity_from_vorticity(w)
    mean_free = w - w.values.mean()
    grad_ratio = _ratio(gradient_l2(periodic), lp_norm(mean_free, 2))
    flag = not math.isnan(grad_ratio) and abs(grad_ratio - 1.0) > gradient_tolerance
    report.rows.append({"pair": [2.0, 2.0], "kind": "gradient", "ratio": grad_ratio, "tolerance_flag": flag})
    return report


def far_field_exponent(v: VectorField, radius_window: tuple[float, float], bins: int = 24) -> float:
    """Log-log slope of the angular average of |v| against radius."""
    r1, r2 = radius_window
    g = v.grid
    if not 0 < r1 < r2:
        raise ValueError(f"empty radius window {radius_window}")
    if r2 > 0.8 * g.half_width:
        raise ValueError(f"window end {r2} exceeds 0.8 * half_width = {0.8 * g.half_width}")
    r = np.sqrt(g.radius_sq).ravel()
    speed = np.hypot(v.v1, v.v2).ravel()
    edges = np.linspace(r1, r2, bins + 1)
    idx = np.digitize(r, edges) - 1
    radii, means = [], []
    for b in range(bins):
        sel = idx == b
        if sel.any():
            radii.append(r[sel].mean())
            means.append(speed[sel].mean())
    if len(radii) < 2:
        raise ValueError("radius window contains too few grid points")
    slope, _ = np.polyfit(np.log(radii), np.log(means), 1)
    return float(slope)
