"""Time integration of the rescaled vorticity equation
dw/dtau = L w - v . grad w, and diagnostics along trajectories.

The state is advanced in Fourier space with a fourth-order Runge-Kutta
scheme. The Laplacian is integrated exactly through the factor
exp(-|p|^2 dt). Everything else is written in divergence form,
Lw - Lap w - v.grad w = div((xi/2 - v) w), and treated explicitly. Its zero
mode therefore vanishes exactly, so the total mass is conserved to
round-off.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .biot_savart import HybridBiotSavart, _spectral_velocity, hybrid_solver
from .fields import Grid, RealField, VectorField, lp_norm, save_field, weighted_norm
from .moments import MOMENT_NAMES, MomentSet, moment_vector
from .spectral_operator import semigroup_apply

BLOWUP_THRESHOLD = 1e6
TRAJECTORY_COLUMNS = ("tau", *MOMENT_NAMES, "l1", "l2", "wm_norm", "v_l2")


class StabilityError(ValueError):
    """The time step exceeds the advective or diffusive limit."""


class BlowUpError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 4e-3
    tau_end: float = 6.0
    record_every: int = 25
    dealias: bool = True
    hybrid_velocity: bool = True
    weight_m: float = 4.0
    snapshot_every: int = 0  # 0 disables snapshots
    # For data with zero mass and first moments: zero the mean mode of w0 (the
    # scheme then keeps it exactly 0) and reset beta to 0 after every step, so
    # round-off cannot seed the slowly decaying F modes on long runs.
    moment_free: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.tau_end > 0:
            raise ValueError(f"tau_end must be positive, got {self.tau_end}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")

    @property
    def steps(self) -> int:
        return max(1, math.ceil(self.tau_end / self.dt - 1e-9))

    @property
    def step_size(self) -> float:
        """dt shrunk slightly so that an integer number of steps ends at tau_end."""
        return self.tau_end / self.steps


def stability_limits(grid: Grid, config: SimConfig, max_speed: float = 0.0) -> tuple[float, float]:
    """(advective limit, diffusive limit) on the time step.

    Advective: half the CFL number h / max|xi/2 - v|. Diffusive: 1 / max |p|^2
    over the retained modes.
    """
    drift = 0.5 * math.sqrt(2.0) * grid.half_width + max_speed
    advective = 0.5 * grid.spacing / drift
    kmax = grid.n // 3 if config.dealias else grid.n // 2
    pmax = math.pi * kmax / grid.half_width
    return advective, 1.0 / (2.0 * pmax**2)


class Integrator:
    """Fourier-space stepper for one grid and configuration.

    Construction checks the time step against the stability limits.
    """

    def __init__(self, grid: Grid, config: SimConfig, max_speed: float = 0.0, check: bool = True):
        self.grid = grid
        self.config = config
        if check:
            adv, diff = stability_limits(grid, config, max_speed)
            if config.step_size > min(adv, diff) * (1 + 1e-12):
                raise StabilityError(
                    f"dt={config.step_size:.3g} exceeds stability limits "
                    f"(advective {adv:.3g}, diffusive {diff:.3g})"
                )
        p1, p2 = grid.rfft_wavenumbers
        self.k2 = p1**2 + p2**2
        self.d1, self.d2 = grid.derivative_wavenumbers
        x1, x2 = grid.mesh
        self.half_x1 = 0.5 * x1
        self.half_x2 = 0.5 * x2
        self.mask = grid.rfft_dealias_mask if config.dealias else None
        self.hybrid: HybridBiotSavart | None = hybrid_solver(grid) if config.hybrid_velocity else None
        self._factors: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def to_hat(self, w: np.ndarray) -> np.ndarray:
        return sfft.rfft2(w)

    def from_hat(self, w_hat: np.ndarray) -> np.ndarray:
        return sfft.irfft2(w_hat, s=(self.grid.n, self.grid.n))

    def velocity_arrays(self, w: np.ndarray, w_hat: np.ndarray | None = None):
        if self.hybrid is not None:
            return self.hybrid.arrays(w, w_hat)
        if w_hat is None:
            w_hat = self.to_hat(w)
        return _spectral_velocity(w_hat, self.grid)

    def explicit_hat(self, w_hat: np.ndarray) -> np.ndarray:
        """Transform of div((xi/2 - v) w), dealiased when enabled."""
        w = self.from_hat(w_hat)
        v1, v2 = self.velocity_arrays(w, w_hat)
        flux1 = sfft.rfft2((self.half_x1 - v1) * w)
        flux2 = sfft.rfft2((self.half_x2 - v2) * w)
        out = 1j * (self.d1 * flux1 + self.d2 * flux2)
        if self.mask is not None:
            out *= self.mask
        return out

    def rhs_hat(self, w_hat: np.ndarray) -> np.ndarray:
        return -self.k2 * w_hat + self.explicit_hat(w_hat)

    def _factor(self, dt: float):
        f = self._factors.get(dt)
        if f is None:
            f = self._factors[dt] = (np.exp(-self.k2 * dt), np.exp(-self.k2 * dt / 2.0))
        return f

    def pin_first_moments(self, w_hat: np.ndarray) -> np.ndarray:
        """Subtract beta1 F1 + beta2 F2, leaving the mean mode untouched."""
        beta = moment_vector(self.from_hat(w_hat), self.grid)[1:3]
        solver = self.hybrid or hybrid_solver(self.grid)
        correction = np.tensordot(beta, solver.basis_hat[1:3], axes=1)
        correction[0, 0] = 0.0
        return w_hat - correction

    def step_hat(self, w_hat: np.ndarray, dt: float) -> np.ndarray:
        full, half = self._factor(dt)
        k1 = self.explicit_hat(w_hat)
        k2 = self.explicit_hat(half * (w_hat + 0.5 * dt * k1))
        k3 = self.explicit_hat(half * w_hat + 0.5 * dt * k2)
        k4 = self.explicit_hat(full * w_hat + dt * half * k3)
        return full * w_hat + (dt / 6.0) * (full * k1 + 2.0 * half * (k2 + k3) + k4)


def _max_speed(w: RealField, hybrid: bool) -> float:
    v = _velocity(w, hybrid)
    return float(np.hypot(v.v1, v.v2).max())


def _velocity(w: RealField, hybrid: bool = True) -> VectorField:
    integ = hybrid_solver(w.grid) if hybrid else None
    if integ is not None:
        v1, v2 = integ.arrays(w.values)
    else:
        v1, v2 = _spectral_velocity(sfft.rfft2(w.values), w.grid)
    return VectorField(w.grid, v1, v2)


def rhs(w: RealField, dealias: bool = True, hybrid_velocity: bool = True) -> RealField:
    """L w - v . grad w on the grid."""
    integ = Integrator(w.grid, SimConfig(dealias=dealias, hybrid_velocity=hybrid_velocity), check=False)
    w_hat = integ.to_hat(w.values)
    return RealField(w.grid, integ.from_hat(integ.rhs_hat(w_hat)))


def step(w: RealField, dt: float, dealias: bool = True, hybrid_velocity: bool = True) -> RealField:
    """One integrating-factor RK4 step (no stability check)."""
    integ = Integrator(w.grid, SimConfig(dt=dt, dealias=dealias, hybrid_velocity=hybrid_velocity), check=False)
    return RealField(w.grid, integ.from_hat(integ.step_hat(integ.to_hat(w.values), dt)))


@dataclass
class Trajectory:
    grid: Grid
    config: SimConfig
    times: np.ndarray
    moments: np.ndarray  # (records, 6) in MOMENT_NAMES order
    l1: np.ndarray
    l2: np.ndarray
    wm_norm: np.ndarray
    v_l2: np.ndarray
    velocity_products: np.ndarray  # (records, 3): int v1 v1, int v1 v2, int v2 v2
    snapshots: list[tuple[float, RealField]] = field(default_factory=list)
    final: RealField | None = None

    def __len__(self) -> int:
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        if name in MOMENT_NAMES:
            return self.moments[:, MOMENT_NAMES.index(name)]
        if name == "tau":
            return self.times
        return getattr(self, name)

    def moment_set(self, i: int) -> MomentSet:
        return MomentSet.from_array(self.moments[i])

    @property
    def initial(self) -> RealField | None:
        return self.snapshots[0][1] if self.snapshots else None

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRAJECTORY_COLUMNS)
            for i in range(len(self)):
                row = [self.times[i], *self.moments[i], self.l1[i], self.l2[i], self.wm_norm[i], self.v_l2[i]]
                writer.writerow([repr(float(x)) for x in row])

    def write_snapshots(self, directory: str | Path) -> list[Path]:
        paths = []
        for tau, snap in self.snapshots:
            path = Path(directory) / snapshot_name(tau)
            save_field(snap, path)
            paths.append(path)
        return paths


def snapshot_name(tau: float) -> str:
    return f"snap_{int(round(tau * 1000)):07d}.bin"


def read_trajectory_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRAJECTORY_COLUMNS:
            raise ValueError(f"{path}: unexpected trajectory header {header}")
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, len(TRAJECTORY_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(TRAJECTORY_COLUMNS)}


def run(w0: RealField, config: SimConfig | None = None) -> Trajectory:
    config = config or SimConfig()
    grid = w0.grid
    integ = Integrator(grid, config, max_speed=_max_speed(w0, config.hybrid_velocity))
    dt = config.step_size
    nsteps = config.steps

    times, moments, l1, l2, wm, vl2, vprod = [], [], [], [], [], [], []
    snapshots: list[tuple[float, RealField]] = []

    def record(tau: float, w: np.ndarray, w_hat: np.ndarray):
        field_ = RealField(grid, w)
        v1, v2 = integ.velocity_arrays(w, w_hat)
        a = grid.cell_area
        products = (a * np.sum(v1 * v1), a * np.sum(v1 * v2), a * np.sum(v2 * v2))
        norms = (lp_norm(field_, 1), lp_norm(field_, 2), weighted_norm(field_, config.weight_m))
        if not all(math.isfinite(x) for x in norms) or max(norms) > BLOWUP_THRESHOLD:
            raise BlowUpError(f"norms {norms} exceeded {BLOWUP_THRESHOLD:g} at tau={tau:.4f}")
        times.append(tau)
        moments.append(moment_vector(w, grid))
        l1.append(norms[0])
        l2.append(norms[1])
        wm.append(norms[2])
        vprod.append(products)
        vl2.append(math.sqrt(max(products[0] + products[2], 0.0)))

    w_hat = integ.to_hat(w0.values)
    if config.moment_free:
        w_hat[0, 0] = 0.0
        w_hat = integ.pin_first_moments(w_hat)
        w0 = RealField(grid, integ.from_hat(w_hat))
    w = w0.values
    with warnings.catch_warnings():
        warnings.simplefilter("once")
        record(0.0, w, w_hat)
        if config.snapshot_every:
            snapshots.append((0.0, w0))
        for k in range(1, nsteps + 1):
            w_hat = integ.step_hat(w_hat, dt)
            if config.moment_free:
                w_hat = integ.pin_first_moments(w_hat)
            last = k == nsteps
            want_record = k % config.record_every == 0 or last
            want_snap = bool(config.snapshot_every) and (k % config.snapshot_every == 0 or last)
            if want_record or want_snap:
                w = integ.from_hat(w_hat)
                tau = k * dt
                if want_record:
                    record(tau, w, w_hat)
                if want_snap:
                    snapshots.append((tau, RealField(grid, w)))
    return Trajectory(
        grid=grid,
        config=config,
        times=np.array(times),
        moments=np.array(moments),
        l1=np.array(l1),
        l2=np.array(l2),
        wm_norm=np.array(wm),
        v_l2=np.array(vl2),
        velocity_products=np.array(vprod),
        snapshots=snapshots,
        final=RealField(grid, integ.from_hat(w_hat)),
    )


def unscale(w: RealField, tau: float) -> tuple[RealField, float]:
    """Map w(., tau) to omega(., t) on the x-grid of half-width L sqrt(1+t)."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    t = math.expm1(tau)
    stretch = math.exp(tau / 2.0)
    grid = Grid(w.grid.n, w.grid.half_width * stretch)
    return RealField(grid, w.values / (1.0 + t)), t


def unscale_velocity(v: VectorField, tau: float) -> tuple[VectorField, float]:
    t = math.expm1(tau)
    stretch = math.exp(tau / 2.0)
    grid = Grid(v.grid.n, v.grid.half_width * stretch)
    return VectorField(grid, v.v1 / stretch, v.v2 / stretch), t


@dataclass
class ConservationReport:
    alpha_drift: float
    beta_drift: float  # max |beta_i - beta_i(0) e^{-tau/2}| / (1 + |beta_i(0)|)
    beta_relative: float  # same, relative to |beta_i(0)| e^{-tau/2} (nan when beta(0) = 0)
    gamma1_drift: float  # max |gamma1 - gamma1(0) e^{-tau}| / (1 + |gamma1(0)|)
    gamma1_relative: float
    alpha_ok: bool
    beta_ok: bool
    gamma1_ok: bool

    @property
    def passed(self) -> bool:
        return self.alpha_ok and self.beta_ok and self.gamma1_ok

    def as_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


def _relative(err: np.ndarray, scale: np.ndarray) -> float:
    scale = np.abs(scale)
    if np.all(scale == 0):
        return math.nan
    return float(np.max(err / np.where(scale > 0, scale, np.inf)))


def monitor_conservation(traj: Trajectory) -> ConservationReport:
    if len(traj) < 3:
        raise ValueError("conservation monitor needs at least three records")
    t = traj.times
    m = traj.moments
    alpha_drift = float(np.max(np.abs(m[:, 0] - m[0, 0])))
    beta_abs, beta_rel = 0.0, []
    for i in (1, 2):
        law = m[0, i] * np.exp(-t / 2)
        err = np.abs(m[:, i] - law)
        beta_abs = max(beta_abs, float(np.max(err)) / (1 + abs(float(m[0, i]))))
        if abs(m[0, i]) > 1e-12:
            beta_rel.append(_relative(err, law))
    law = m[0, 3] * np.exp(-t)
    err = np.abs(m[:, 3] - law)
    g_abs = float(np.max(err)) / (1 + abs(float(m[0, 3])))
    g_rel = _relative(err, law) if abs(m[0, 3]) > 1e-12 else math.nan
    return ConservationReport(
        alpha_drift=alpha_drift,
        beta_drift=beta_abs,
        beta_relative=max(beta_rel) if beta_rel else math.nan,
        gamma1_drift=g_abs,
        gamma1_relative=g_rel,
        alpha_ok=alpha_drift <= 1e-9,
        beta_ok=bool(beta_abs <= 1e-7),
        gamma1_ok=bool(g_abs <= 1e-6),
    )


def duhamel_residual(traj: Trajectory, tau: float | None = None, min_snapshots: int = 5) -> float:
    """L2 norm of w(tau) - S(tau) w0 + int_0^tau e^{-(tau-s)/2} div S(tau-s)(v w)(s) ds.

    The integral uses the trapezoid rule over the stored snapshots.
    """
    snaps = traj.snapshots
    if tau is None:
        tau = snaps[-1][0] if snaps else 0.0
    snaps = [(s, f) for s, f in snaps if s <= tau + 1e-12]
    if len(snaps) < min_snapshots:
        raise ValueError(f"need at least {min_snapshots} snapshots up to tau={tau}, found {len(snaps)}")
    if abs(snaps[-1][0] - tau) > 1e-9 or snaps[0][0] != 0.0:
        raise ValueError("snapshots must start at 0 and include the evaluation time")
    grid = traj.grid
    p1, p2 = grid.derivative_wavenumbers
    s_vals = np.array([s for s, _ in snaps])
    integrand = []
    for s, w in snaps:
        v = _velocity(w, traj.config.hybrid_velocity)
        lag = tau - s
        f1 = semigroup_apply(RealField(grid, v.v1 * w.values), lag)
        f2 = semigroup_apply(RealField(grid, v.v2 * w.values), lag)
        div = sfft.irfft2(1j * (p1 * sfft.rfft2(f1.values) + p2 * sfft.rfft2(f2.values)), s=(grid.n, grid.n))
        integrand.append(math.exp(-lag / 2.0) * div)
    integral = np.trapezoid(np.array(integrand), s_vals, axis=0)
    w0 = snaps[0][1]
    residual = snaps[-1][1].values - semigroup_apply(w0, tau).values + integral
    return lp_norm(RealField(grid, residual), 2)


@dataclass
class EnergyReport:
    decreasing: bool
    max_increase: float
    windows: list[dict]
    mean_zero: bool

    @property
    def dissipation_ok(self) -> bool:
        return all(w["relative_error"] <= 0.05 for w in self.windows if w["decrement"] > 0)


def energy_monotonicity(traj: Trajectory, n_windows: int = 4, slack: float = 1e-9) -> EnergyReport:
    """Check that |v|_2 does not increase and that the decrease of |v|_2^2 / 2
    over coarse windows matches the time integral of |grad v|_2^2 = |w|_2^2."""
    alpha = traj.moments[:, 0]
    mean_zero = bool(np.max(np.abs(alpha)) <= 1e-10 * max(1.0, float(np.max(traj.l1))))
    if not mean_zero:
        warnings.warn("velocity is not square integrable for nonzero total mass", stacklevel=2)
    v = traj.v_l2
    increase = float(np.max(np.diff(v))) if len(v) > 1 else 0.0
    decreasing = increase <= slack * max(1.0, float(v.max()))
    edges = np.linspace(0, len(v) - 1, n_windows + 1).round().astype(int)
    windows = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        t = traj.times[a : b + 1]
        dissipation = float(np.trapezoid(traj.l2[a : b + 1] ** 2, t))
        decrement = 0.5 * (v[a] ** 2 - v[b] ** 2)
        rel = abs(decrement - dissipation) / dissipation if dissipation > 0 else 0.0
        windows.append(
            {"tau_start": float(t[0]), "tau_end": float(t[-1]), "decrement": decrement,
             "dissipation": dissipation, "relative_error": rel}
        )
    return EnergyReport(decreasing, increase, windows, mean_zero)
