import math

import numpy as np
import pytest

from scaled_vorticity.evolution import (
    TRAJECTORY_COLUMNS,
    BlowUpError,
    SimConfig,
    StabilityError,
    duhamel_residual,
    energy_monotonicity,
    monitor_conservation,
    read_trajectory_csv,
    rhs,
    run,
    snapshot_name,
    stability_limits,
    step,
    unscale,
    unscale_velocity,
)
from scaled_vorticity.biot_savart import named_velocity
from scaled_vorticity.fields import Grid, RealField, integrate, load_field, lp_norm, weighted_norm
from scaled_vorticity.profiles import gaussian, profile


@pytest.fixture(scope="module")
def mixed_traj(grid128):
    g = grid128
    w0 = 0.05 * (profile("G", g) + profile("F1", g)) + 0.03 * profile("H1", g)
    return run(w0, SimConfig(dt=4e-3, tau_end=6.0, record_every=25))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=0.0)
    with pytest.raises(ValueError):
        SimConfig(tau_end=-1.0)
    with pytest.raises(ValueError):
        SimConfig(record_every=0)
    cfg = SimConfig(dt=4e-3, tau_end=1.0)
    assert cfg.steps == 250
    assert cfg.step_size * cfg.steps == pytest.approx(1.0)


def test_stability_limits_enforced(grid128):
    adv, diff = stability_limits(grid128, SimConfig())
    assert diff == pytest.approx(1 / (2 * (math.pi * 42 / 12.0) ** 2))
    assert adv > diff
    with pytest.raises(StabilityError):
        run(profile("G", grid128), SimConfig(dt=1e-2, tau_end=0.1))


@pytest.mark.parametrize("scale", [1.0, 0.3])
def test_rhs_vanishes_on_oseen_vortex(grid128, scale):
    assert np.abs(rhs(scale * profile("G", grid128)).values).max() < 1e-7


def test_rhs_of_zero(grid128):
    assert np.all(rhs(grid128.zeros()).values == 0)


def test_rhs_linear_part_for_small_data(grid128):
    # for tiny amplitude the advection is quadratic, so rhs(eps H2) ~ -eps H2
    eps = 1e-6
    r = rhs(eps * profile("H2", grid128))
    assert lp_norm(r + eps * profile("H2", grid128), 2) < 1e-5 * eps * lp_norm(profile("H2", grid128), 2)


def test_oseen_vortex_is_stationary(grid128):
    G = profile("G", grid128)
    traj = run(G, SimConfig(dt=4e-3, tau_end=2.0))
    assert lp_norm(traj.final - G, 2) <= 1e-6


def test_zero_trajectory(grid128):
    traj = run(grid128.zeros(), SimConfig(dt=4e-3, tau_end=0.4, record_every=10))
    assert np.all(traj.final.values == 0)
    assert np.all(traj.moments == 0) and np.all(traj.l2 == 0)
    assert np.all(np.diff(traj.times) > 0)


def test_fourth_order_convergence():
    g = Grid(64, 12.0)
    w0 = 0.05 * (profile("F1", g) + profile("H2", g))
    finals = [run(w0, SimConfig(dt=dt, tau_end=1.0, record_every=1000)).final for dt in (0.016, 0.008, 0.004)]
    ratio = lp_norm(finals[0] - finals[1], 2) / lp_norm(finals[1] - finals[2], 2)
    assert 13.0 < ratio < 19.0


def test_step_matches_run(grid128):
    w0 = 0.05 * profile("H2", grid128)
    one = step(w0, 4e-3)
    traj = run(w0, SimConfig(dt=4e-3, tau_end=4e-3, record_every=1))
    assert np.array_equal(one.values, traj.final.values)


def test_blowup_guard(grid128, monkeypatch):
    from scaled_vorticity import evolution

    monkeypatch.setattr(evolution, "BLOWUP_THRESHOLD", 0.01)
    with pytest.raises(BlowUpError):
        run(0.05 * profile("H2", grid128), SimConfig(dt=4e-3, tau_end=0.1, record_every=1))


def test_conservation(mixed_traj):
    rep = monitor_conservation(mixed_traj)
    assert rep.passed
    assert rep.alpha_drift <= 1e-9
    assert rep.beta_relative <= 1e-6
    assert rep.gamma1_relative <= 1e-6
    assert set(rep.as_dict()) >= {"alpha_drift", "beta_drift", "passed"}


def test_mass_stays_zero_for_mean_zero_data(grid128):
    traj = run(0.1 * profile("H2", grid128) + 0.05 * profile("K", grid128), SimConfig(dt=4e-3, tau_end=1.0))
    assert np.abs(traj.column("alpha")).max() <= 1e-12


def test_conservation_needs_three_records(grid128):
    traj = run(profile("G", grid128), SimConfig(dt=4e-3, tau_end=4e-3, record_every=1))
    with pytest.raises(ValueError):
        monitor_conservation(traj)


def test_duhamel_residual_for_oseen(grid128):
    traj = run(profile("G", grid128), SimConfig(dt=4e-3, tau_end=1.0, record_every=50, snapshot_every=25))
    assert duhamel_residual(traj) <= 1e-6


def test_duhamel_residual_quadrature_order():
    g = Grid(64, 12.0)
    w0 = 0.05 * profile("F1", g)
    residuals = []
    for count in (25, 50, 100):
        # ten steps per snapshot interval keeps time-stepping error far below quadrature error
        dt = 1.0 / (10 * count)
        traj = run(w0, SimConfig(dt=dt, tau_end=1.0, record_every=1000, snapshot_every=10))
        residuals.append(duhamel_residual(traj))
    assert residuals[1] <= 1e-4
    assert 3.0 < residuals[0] / residuals[1] < 5.0
    assert 3.0 < residuals[1] / residuals[2] < 5.0


def test_duhamel_rejects_sparse_snapshots(grid128):
    traj = run(profile("G", grid128), SimConfig(dt=4e-3, tau_end=0.2, snapshot_every=25))
    with pytest.raises(ValueError):
        duhamel_residual(traj)


def test_energy_decreases_for_h2(grid128):
    traj = run(0.1 * profile("H2", grid128), SimConfig(dt=4e-3, tau_end=3.0, record_every=5))
    rep = energy_monotonicity(traj)
    assert rep.mean_zero and rep.decreasing
    assert np.all(np.diff(traj.v_l2) < 0)
    assert rep.dissipation_ok


def test_energy_of_zero(grid128):
    traj = run(grid128.zeros(), SimConfig(dt=4e-3, tau_end=0.2, record_every=5))
    rep = energy_monotonicity(traj)
    assert rep.decreasing and np.all(traj.v_l2 == 0)


def test_energy_warns_for_nonzero_mass(mixed_traj):
    with pytest.warns(UserWarning):
        energy_monotonicity(mixed_traj)


def test_unscale_identity_at_zero(grid128):
    w = profile("K", grid128)
    omega, t = unscale(w, 0.0)
    assert t == 0.0 and omega.grid == w.grid and np.array_equal(omega.values, w.values)
    with pytest.raises(ValueError):
        unscale(w, -0.1)


def test_unscale_oseen_profile(grid128):
    omega, t = unscale(profile("G", grid128), 1.0)
    assert t == pytest.approx(math.e - 1)
    x1, x2 = omega.grid.mesh
    s = math.sqrt(1 + t)
    expected = gaussian(x1 / s, x2 / s) / (1 + t)
    assert np.abs(omega.values - expected).max() < 1e-15
    assert lp_norm(omega, 1) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0, math.inf])
def test_unscale_norm_scaling(grid128, p):
    w = 0.3 * profile("H2", grid128) + 0.1 * profile("G", grid128)
    tau = 1.7
    omega, t = unscale(w, tau)
    exponent = 1 - (0 if math.isinf(p) else 1 / p)
    assert lp_norm(omega, p) == pytest.approx((1 + t) ** (-exponent) * lp_norm(w, p), rel=1e-12)


def test_unscale_velocity(grid128):
    v = named_velocity("G", grid128)
    u, t = unscale_velocity(v, 2.0)
    assert np.allclose(u.v1, v.v1 / math.sqrt(1 + t))


def test_trajectory_csv_round_trip(tmp_path, mixed_traj):
    path = tmp_path / "traj.csv"
    mixed_traj.write_csv(path)
    data = read_trajectory_csv(path)
    assert tuple(data) == TRAJECTORY_COLUMNS
    assert np.array_equal(data["gamma1"], mixed_traj.column("gamma1"))
    assert np.array_equal(data["tau"], mixed_traj.times)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trajectory_csv(tmp_path / "bad.csv")


def test_snapshots_written(tmp_path, grid128):
    traj = run(profile("G", grid128), SimConfig(dt=4e-3, tau_end=0.2, snapshot_every=25))
    paths = traj.write_snapshots(tmp_path)
    assert [p.name for p in paths] == ["snap_0000000.bin", "snap_0000100.bin", "snap_0000200.bin"]
    assert np.array_equal(load_field(paths[-1]).values, traj.final.values)
    assert snapshot_name(1.2345) == "snap_0001234.bin"


def test_step_size_robustness(grid128):
    w0 = 0.05 * (profile("F1", grid128) + profile("H2", grid128)) + 0.05 * profile("G", grid128)
    a = run(w0, SimConfig(dt=4e-3, tau_end=2.0, record_every=50))
    b = run(w0, SimConfig(dt=2e-3, tau_end=2.0, record_every=100))
    assert np.array_equal(a.times, b.times)
    # beta2 and gamma1 are round-off level here, so differences are measured
    # against the largest moment of the run rather than column by column
    scale = np.abs(a.moments).max()
    assert np.max(np.abs(a.moments - b.moments)) <= 1e-8 * scale


def test_weighted_norm_stays_bounded(grid128):
    rng = np.random.default_rng(4)
    from scaled_vorticity.asymptotics import random_small_datum

    for _ in range(2):
        w0 = random_small_datum(grid128, rng)
        for m in (2.0, 4.0):
            w0 = w0 * (1.0 / max(1.0, weighted_norm(w0, m)))
            traj = run(w0, SimConfig(dt=4e-3, tau_end=6.0, record_every=50, weight_m=m))
            assert traj.wm_norm.max() <= 3 * traj.wm_norm[0]


def test_mean_zero_decay_after_transient(grid128):
    w0 = 0.1 * profile("H2", grid128) + 0.05 * profile("K", grid128) + 0.05 * profile("F2", grid128)
    traj = run(w0, SimConfig(dt=4e-3, tau_end=6.0, record_every=25))
    late = traj.times >= 1.0
    assert np.all(np.diff(traj.wm_norm[late]) < 0)
    t = np.expm1(traj.times[late])
    for p, norms in ((1.0, traj.l1[late]), (2.0, traj.l2[late])):
        scaled = (t / (1 + t)) ** (1 - 1 / p) * norms  # t^{1-1/p} |omega(t)|_p
        assert np.all(np.diff(scaled) < 0)
        assert scaled[-1] < 0.2 * scaled[0]


def test_integrate_records_match_moments(mixed_traj):
    assert mixed_traj.column("alpha")[-1] == pytest.approx(integrate(mixed_traj.final), abs=1e-12)
