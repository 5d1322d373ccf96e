"""Periodic grid on the similarity plane, transforms, quadrature and norms.

The plane is truncated to the box [-L, L)^2 with ``n`` points per axis.
Array axis 0 runs along xi_1 and axis 1 along xi_2 (``indexing="ij"``).
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft


class TruncationWarning(UserWarning):
    """A quantity is not negligible at the edge of the truncated box."""


MAX_WEIGHT = 6
BOUNDARY_RATIO = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform periodic tensor grid on [-half_width, half_width)^2."""

    n: int = 256
    half_width: float = 12.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 16, got {self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @cached_property
    def xi(self) -> np.ndarray:
        """1D node coordinates, starting at -half_width."""
        return -self.half_width + self.spacing * np.arange(self.n)

    @cached_property
    def integers(self) -> np.ndarray:
        """Integer frequencies k in FFT order, covering -n/2 .. n/2-1."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(int)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers p_k = pi k / half_width in FFT order."""
        return np.pi * self.integers / self.half_width

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.xi, self.xi, indexing="ij"))

    @cached_property
    def radius_sq(self) -> np.ndarray:
        x1, x2 = self.mesh
        return x1**2 + x2**2

    @cached_property
    def pmesh(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.wavenumbers, self.wavenumbers, indexing="ij"))

    @cached_property
    def phase(self) -> np.ndarray:
        # exp(i p . L) for the grid origin at -L; equals (-1)^(k1+k2)
        k = self.integers
        return np.where((k[:, None] + k[None, :]) % 2 == 0, 1.0, -1.0)

    @cached_property
    def rfft_wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumber meshes matching the layout of ``scipy.fft.rfft2``."""
        p = self.wavenumbers
        half = np.pi * np.arange(self.n // 2 + 1) / self.half_width
        return tuple(np.meshgrid(p, half, indexing="ij"))

    @cached_property
    def derivative_wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """rfft-layout wavenumbers with the Nyquist entries zeroed.

        Odd derivatives of the unpaired Nyquist mode are not real, so they
        are dropped.
        """
        p1, p2 = self.rfft_wavenumbers
        p1 = p1.copy()
        p2 = p2.copy()
        p1[self.n // 2, :] = 0.0
        p2[:, self.n // 2] = 0.0
        return p1, p2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask (full FFT layout) of the modes kept by the 2/3 rule."""
        keep = np.abs(self.integers) <= self.n // 3
        return keep[:, None] & keep[None, :]

    @cached_property
    def rfft_dealias_mask(self) -> np.ndarray:
        keep = np.abs(self.integers) <= self.n // 3
        keep_half = np.arange(self.n // 2 + 1) <= self.n // 3
        return keep[:, None] & keep_half[None, :]

    def sample(self, func) -> "RealField":
        """Evaluate ``func(xi1, xi2)`` on the nodes."""
        x1, x2 = self.mesh
        return RealField(self, np.asarray(func(x1, x2), dtype=float))

    def zeros(self) -> "RealField":
        return RealField(self, np.zeros((self.n, self.n)))


@dataclass(frozen=True, eq=False)
class RealField:
    """Scalar field sampled on a grid. Supports linear arithmetic."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values shape {values.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def _other(self, other):
        if isinstance(other, RealField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return RealField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RealField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return RealField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return RealField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return RealField(self.grid, self.values / scalar)

    def __neg__(self):
        return RealField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        for name in ("v1", "v2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n, self.grid.n):
                raise ValueError(f"{name} shape {arr.shape} does not match grid")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def component(self, i: int) -> RealField:
        return RealField(self.grid, self.v1 if i == 1 else self.v2)

    def magnitude(self) -> RealField:
        return RealField(self.grid, np.hypot(self.v1, self.v2))

    def __add__(self, other: "VectorField"):
        return VectorField(self.grid, self.v1 + other.v1, self.v2 + other.v2)

    def __sub__(self, other: "VectorField"):
        return VectorField(self.grid, self.v1 - other.v1, self.v2 - other.v2)

    def __mul__(self, scalar: float):
        return VectorField(self.grid, scalar * self.v1, scalar * self.v2)

    __rmul__ = __mul__


@dataclass(frozen=True)
class WeightSpec:
    """Exponent m of the weight (1 + |xi|^2)^m."""

    m: float

    def __post_init__(self):
        if not 0 <= self.m <= MAX_WEIGHT:
            raise ValueError(f"weight exponent must lie in [0, {MAX_WEIGHT}], got {self.m}")


@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    """Continuous Fourier transform samples, full FFT layout."""

    grid: Grid
    values: np.ndarray


def forward_transform(f: RealField) -> SpectralCoefficients:
    """Approximate f_hat(p) = int f(xi) exp(-i p.xi) dxi on the wavenumber grid."""
    g = f.grid
    return SpectralCoefficients(g, g.cell_area * g.phase * sfft.fft2(f.values))


def inverse_transform(c: SpectralCoefficients) -> RealField:
    g = c.grid
    values = sfft.ifft2(c.values * g.phase).real / g.cell_area
    return RealField(g, values)


def integrate(f: RealField) -> float:
    """Trapezoidal rule on the periodic grid."""
    return float(f.grid.cell_area * f.values.sum())


def _boundary_max(a: np.ndarray) -> float:
    return max(np.abs(a[0]).max(), np.abs(a[-1]).max(), np.abs(a[:, 0]).max(), np.abs(a[:, -1]).max())


def check_boundary(a: np.ndarray, what: str, ratio: float = BOUNDARY_RATIO) -> bool:
    """Warn if ``|a|`` on the box edge exceeds ``ratio`` times its maximum."""
    peak = np.abs(a).max()
    if peak == 0:
        return True
    edge = _boundary_max(a)
    if edge > ratio * peak:
        warnings.warn(
            f"{what}: boundary value {edge:.3e} exceeds {ratio:g} of max {peak:.3e}",
            TruncationWarning,
            stacklevel=3,
        )
        return False
    return True


def weighted_norm(f: RealField, spec: WeightSpec | float) -> float:
    """(int (1+|xi|^2)^m f^2)^(1/2) by quadrature."""
    if not isinstance(spec, WeightSpec):
        spec = WeightSpec(spec)
    integrand = (1.0 + f.grid.radius_sq) ** spec.m * f.values**2
    check_boundary(integrand, f"weighted norm m={spec.m}")
    return float(np.sqrt(f.grid.cell_area * integrand.sum()))


def lp_norm(f: RealField, p: float) -> float:
    if p < 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    if p == 1:
        return float(f.grid.cell_area * a.sum())
    if p == 2:
        return float(np.sqrt(f.grid.cell_area * np.sum(a * a)))
    return float((f.grid.cell_area * np.sum(a**p)) ** (1.0 / p))


def spectral_derivative(f: RealField, axis: int) -> RealField:
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    g = f.grid
    p = g.derivative_wavenumbers[axis - 1]
    d = sfft.irfft2(1j * p * sfft.rfft2(f.values), s=(g.n, g.n))
    return RealField(g, d)


def laplacian(f: RealField) -> RealField:
    g = f.grid
    p1, p2 = g.rfft_wavenumbers
    d = sfft.irfft2(-(p1**2 + p2**2) * sfft.rfft2(f.values), s=(g.n, g.n))
    return RealField(g, d)


def dealias(c: SpectralCoefficients) -> SpectralCoefficients:
    """Zero every mode with |k| > n/3 on either axis."""
    return SpectralCoefficients(c.grid, np.where(c.grid.dealias_mask, c.values, 0.0))


def save_field(f: RealField, path: str | Path) -> None:
    """Binary layout: n (int64 LE), half_width (float64 LE), row-major float64 values."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qd", f.grid.n, f.grid.half_width))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path: str | Path) -> RealField:
    data = Path(path).read_bytes()
    n, half_width = struct.unpack_from("<qd", data)
    values = np.frombuffer(data, dtype="<f8", offset=16)
    if values.size != n * n:
        raise ValueError(f"{path}: expected {n * n} values, found {values.size}")
    return RealField(Grid(n, half_width), values.reshape(n, n).copy())


def field_to_csv(f: RealField, path: str | Path) -> None:
    x1, x2 = f.grid.mesh
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["xi1", "xi2", "value"])
        for a, b, v in zip(x1.ravel(), x2.ravel(), f.values.ravel()):
            writer.writerow([repr(float(a)), repr(float(b)), repr(float(v))])
