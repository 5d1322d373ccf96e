import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaled_vorticity.fields import Grid, integrate, lp_norm, spectral_derivative
from scaled_vorticity.profiles import profile
from scaled_vorticity.spectral_operator import (
    DecayFit,
    HermiteIndex,
    ProjectionSpec,
    apply_L,
    fit_log_linear,
    hermite_coefficients,
    hermite_function,
    hermite_polynomial,
    indices_up_to,
    project,
    random_enveloped_polynomial,
    semigroup_apply,
    verify_sgestim,
)


def rel(a, b):
    return lp_norm(a - b, 2) / lp_norm(b, 2)


def test_indices():
    idx = indices_up_to(2)
    assert [(a.a1, a.a2) for a in idx] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(indices_up_to(4)) == 15
    with pytest.raises(ValueError):
        HermiteIndex(-1, 0)
    with pytest.raises(ValueError):
        hermite_function((4, 3), Grid(64, 12.0))


@pytest.mark.parametrize("tag,eig", [("G", 0.0), ("F1", -0.5), ("F2", -0.5), ("H1", -1.0), ("H2", -1.0), ("K", -1.5)])
def test_apply_L_eigenfunctions(grid128, tag, eig):
    w = profile(tag, grid128)
    assert lp_norm(apply_L(w) - eig * w, 2) <= 1e-8 * max(lp_norm(w, 2), 1.0)


def test_hermite_function_matches_named_profiles(grid128):
    assert np.abs(hermite_function((1, 1), grid128).values - profile("H3", grid128).values).max() < 1e-15
    assert np.abs(hermite_function((1, 0), grid128).values - profile("F1", grid128).values).max() < 1e-15


def test_hermite_function_is_derivative(grid128):
    d = spectral_derivative(spectral_derivative(hermite_function((2, 0), grid128), 1), 2)
    assert np.abs(d.values - hermite_function((3, 1), grid128).values).max() < 1e-8


def test_hermite_polynomial_low_orders():
    p = hermite_polynomial((1, 0))
    assert p(2.0, 5.0) == pytest.approx(-2.0)
    assert hermite_polynomial((0, 0))(3.0, 4.0) == pytest.approx(1.0)


def test_biorthogonality_up_to_order_three(grid128):
    idx = indices_up_to(3)
    polys = [hermite_polynomial(a).on(grid128) for a in idx]
    funcs = [hermite_function(a, grid128) for a in idx]
    gram = np.array([[integrate(p * f) for f in funcs] for p in polys])
    assert np.abs(gram - np.eye(len(idx))).max() < 1e-8


def test_projection_spec_validation():
    with pytest.raises(ValueError):
        ProjectionSpec(2, 3.0)
    with pytest.raises(ValueError):
        ProjectionSpec(-1, 3.0)
    ProjectionSpec(2, 3.5)


def test_projection_examples(grid128):
    G = profile("G", grid128)
    assert rel(project(G, ProjectionSpec(0, 2.0)), G) < 1e-10
    w = G + profile("H2", grid128)
    assert lp_norm(project(w, ProjectionSpec(2, 4.0), "Q"), 2) < 1e-10
    assert lp_norm(project(profile("K", grid128), ProjectionSpec(2, 4.0)), 2) < 1e-10
    with pytest.raises(ValueError):
        project(w, ProjectionSpec(2, 4.0), "R")


def test_projection_algebra(grid128):
    rng = np.random.default_rng(3)
    f = random_enveloped_polynomial(grid128, rng)
    spec = ProjectionSpec(3, 5.0)
    p, q = project(f, spec), project(f, spec, "Q")
    assert rel(p + q, f) < 1e-14
    assert rel(project(p, spec), p) < 1e-10
    assert lp_norm(project(q, spec), 2) < 1e-10 * lp_norm(f, 2)


def test_hermite_coefficients_of_combination(grid128):
    w = 2 * hermite_function((1, 0), grid128) - 0.5 * hermite_function((0, 3), grid128)
    c = hermite_coefficients(w, 3)
    assert c[HermiteIndex(1, 0)] == pytest.approx(2.0, abs=1e-9)
    assert c[HermiteIndex(0, 3)] == pytest.approx(-0.5, abs=1e-9)
    assert abs(c[HermiteIndex(2, 1)]) < 1e-9


def test_semigroup_fixes_gaussian(grid128):
    G = profile("G", grid128)
    assert rel(semigroup_apply(G, 5.0), G) < 1e-8
    assert rel(semigroup_apply(G, 0.0), G) == 0.0
    with pytest.raises(ValueError):
        semigroup_apply(G, -1.0)


@pytest.mark.parametrize("alpha", [(1, 0), (1, 1), (3, 0), (2, 2)])
def test_semigroup_eigen_action(grid128, alpha):
    phi = hermite_function(alpha, grid128)
    order = sum(alpha)
    for tau in (0.5, 2.0):
        assert rel(semigroup_apply(phi, tau), math.exp(-order * tau / 2) * phi) < 1e-7


def test_semigroup_composition(grid128):
    f = random_enveloped_polynomial(grid128, np.random.default_rng(7))
    once = semigroup_apply(f, 1.5)
    twice = semigroup_apply(semigroup_apply(f, 0.7), 0.8)
    assert rel(twice, once) < 1e-8


def test_semigroup_generator(grid128):
    f = random_enveloped_polynomial(grid128, np.random.default_rng(11))
    lf = apply_L(f)
    errs = []
    for tau in (2e-3, 1e-3):
        diff = (semigroup_apply(f, tau) - f) * (1.0 / tau)
        errs.append(rel(diff, lf))
    # forward difference: first-order convergence towards L f
    assert errs[1] < 0.6 * errs[0]
    assert errs[1] < 5e-3


def test_semigroup_commutes_with_derivative(grid128):
    f = random_enveloped_polynomial(grid128, np.random.default_rng(5))
    tau = 1.3
    lhs = spectral_derivative(semigroup_apply(f, tau), 1)
    rhs = math.exp(tau / 2) * semigroup_apply(spectral_derivative(f, 1), tau)
    assert rel(lhs, rhs) < 1e-7


def test_fit_log_linear_recovers_rate():
    t = np.linspace(0, 4, 9)
    fit = fit_log_linear(t, 3.0 * np.exp(-0.75 * t))
    assert fit.rate == pytest.approx(-0.75, abs=1e-12)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-12)
    assert fit_log_linear(t, -np.exp(-t)).amplitude == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        fit_log_linear(t, np.sin(t) + 0.0)
    with pytest.raises(ValueError):
        fit_log_linear(t, np.exp(-t), window=(10, 12))
    with pytest.raises(ValueError):
        DecayFit((2.0, 1.0), -1.0, 1.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 100))
def test_fit_log_linear_property(rate, amp):
    t = np.linspace(0.0, 5.0, 11)
    fit = fit_log_linear(t, amp * np.exp(rate * t))
    assert fit.rate == pytest.approx(rate, abs=1e-9)
    assert fit.residual < 1e-9


@pytest.mark.parametrize("m,n", [(4.0, 2), (3.0, 1)])
def test_sgestim_rates(m, n):
    rep = verify_sgestim(m, n, np.linspace(1.0, 5.0, 9), corpus_size=10, seed=0)
    assert rep.passed
    assert rep.worst.rate <= -(n + 1) / 2 + 0.05
    assert rep.regime == "a"
    summary = json.loads(rep.to_json())
    assert summary["pass"] is True
    assert rep.to_csv().splitlines()[0] == "m,n,tau,norm"


def test_sgestim_validation():
    with pytest.raises(ValueError):
        verify_sgestim(3.0, 2, [1.0, 2.0])
    with pytest.raises(ValueError):
        verify_sgestim(4.0, 1, [1.0])


def test_semigroup_converges_to_mass_times_gaussian(grid128):
    # without the projection a generic datum keeps its Gaussian part forever
    f = random_enveloped_polynomial(grid128, np.random.default_rng(2))
    mass = integrate(f)
    limit = semigroup_apply(f, 12.0)
    assert rel(limit, mass * profile("G", grid128)) < 1e-2
