"""Self-contained verification suites: each check measures a quantity and
compares it to a known value or bound."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import asymptotics as asym
from .biot_savart import (
    curl,
    divergence,
    far_field_exponent,
    gradient_l2,
    named_velocity,
    velocity_from_vorticity,
)
from .evolution import SimConfig, monitor_conservation, run
from .fields import Grid, lp_norm
from .profiles import KAPPA, PHI_AT_ORIGIN, interaction_density, profile
from .spectral_operator import apply_L, hermite_function, indices_up_to, semigroup_apply, verify_sgestim

SUITES = ("constants", "spectrum", "semigroup", "conservation", "asymptotics")


@dataclass
class Check:
    name: str
    measured: float
    expected: str
    passed: bool
    seconds: float = 0.0

    def row(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} measured={self.measured:<+.6e}  expected {self.expected}"

    def as_dict(self) -> dict:
        return asdict(self)


def _within(name: str, measured: float, target: float, tol: float) -> Check:
    return Check(name, measured, f"{target:+.6e} +- {tol:g}", abs(measured - target) <= tol)


def _at_most(name: str, measured: float, bound: float) -> Check:
    return Check(name, measured, f"<= {bound:g}", measured <= bound)


def constants_suite(seed: int = 0) -> list[Check]:
    g = Grid(256, 12.0)
    _, f3 = asym.f2_f3(profile("K", g), velocity=named_velocity("K", g))
    return [
        _within("kappa = int xi1^2 xi2^2 Phi", asym.kappa(g), KAPPA, 1e-6),
        _within("kappa = 1/4 int (xi1^2 - xi2^2)^2 Phi", asym.kappa(g, "middle"), KAPPA, 1e-6),
        _within("Phi(0)", float(interaction_density(np.array(0.0), np.array(0.0))), PHI_AT_ORIGIN, 1e-15),
        _within("f3(K) with closed-form v^K", f3, -1.0 / (64.0 * math.pi), 2e-5),
    ]


def spectrum_suite(seed: int = 0) -> list[Check]:
    g = Grid(256, 12.0)
    checks = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for a in indices_up_to(3):
            phi = hermite_function(a, g)
            res = lp_norm(apply_L(phi) + 0.5 * a.order * phi, 2) / lp_norm(phi, 2)
            checks.append(_at_most(f"eigen-residual phi({a.a1},{a.a2})", res, 1e-7))
    return checks


def semigroup_suite(seed: int = 0) -> list[Check]:
    g = Grid(256, 12.0)
    checks = []
    for a in indices_up_to(3):
        phi = hermite_function(a, g)
        worst = 0.0
        for tau in (0.5, 1.0, 2.0):
            expected = math.exp(-a.order * tau / 2.0) * phi
            worst = max(worst, lp_norm(semigroup_apply(phi, tau) - expected, 2) / lp_norm(phi, 2))
        checks.append(_at_most(f"semigroup eigen-action phi({a.a1},{a.a2})", worst, 1e-6))
    taus = np.linspace(1.0, 5.0, 9)
    for m, n in ((4.0, 2), (3.0, 1)):
        rep = verify_sgestim(m, n, taus, corpus_size=20, seed=seed)
        checks.append(_at_most(f"worst decay rate Q_{n}, m={m:g}", rep.worst.rate, rep.bound))
    return checks


def conservation_suite(seed: int = 0) -> list[Check]:
    g = Grid(128, 12.0)
    checks = []
    G = profile("G", g)
    traj = run(G, SimConfig(dt=4e-3, tau_end=2.0))
    checks.append(_at_most("Oseen vortex drift |w(2) - G|_2", lp_norm(traj.final - G, 2), 1e-6))
    w0 = 0.05 * (profile("F1", g) + profile("F2", g)) + 0.05 * profile("H1", g) + 0.02 * profile("H2", g)
    rep = monitor_conservation(run(w0, SimConfig(dt=4e-3, tau_end=6.0)))
    checks.append(_at_most("mass drift", rep.alpha_drift, 1e-9))
    checks.append(_at_most("beta relative deviation from e^{-tau/2}", rep.beta_relative, 1e-6))
    checks.append(_at_most("gamma1 relative deviation from e^{-tau}", rep.gamma1_relative, 1e-6))

    w = 0.3 * profile("H2", g) + 0.2 * profile("K", g) + 0.1 * profile("G", g)
    v = velocity_from_vorticity(w)
    checks.append(_at_most("max |div v|", float(np.abs(divergence(v).values).max()), 1e-10))
    rot_err = float(np.abs(curl(v).values - (w.values - w.values.mean())).max())
    checks.append(_at_most("max |rot v - (w - mean)|", rot_err, 1e-10))
    grad = gradient_l2(v) / lp_norm(w - w.values.mean(), 2)
    checks.append(_within("|grad v|_2 / |w - mean|_2", grad, 1.0, 1e-8))
    big = Grid(256, 40.0)
    for tag, target in (("G", -1.0), ("F1", -2.0), ("H2", -3.0)):
        slope = far_field_exponent(named_velocity(tag, big), (8.0, 30.0))
        checks.append(_within(f"far-field exponent of v^{tag}", slope, target, 0.2))
    report = asym.velocity_integrability(profile("H1", g))
    checks.append(_within("int xi2 v1 for H1 (gamma1 = 1)", report.xi2_v1, 1.0, 0.01))
    return checks


def asymptotics_suite(seed: int = 0) -> list[Check]:
    g = Grid(128, 12.0)
    b = 0.05
    traj = run(b * (profile("F1", g) + profile("F2", g)), SimConfig(dt=4e-3, tau_end=4.0, record_every=10))
    predicted = KAPPA * b * b
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        slope2 = asym.secular_slope(traj, (1.0, 4.0), "gamma2")
        slope3 = asym.secular_slope(traj, (1.0, 4.0), "gamma3")
    checks = [
        _within("secular slope of e^tau gamma2", slope2, predicted, 0.1 * predicted),
        _within("secular slope of e^tau gamma3", slope3, 0.0, 0.1 * predicted),
        Check("exponential / secular fit residual ratio", asym.resonance_fit(traj).ratio, ">= 5",
              asym.resonance_fit(traj).ratio >= 5.0),
    ]
    rng = np.random.default_rng(seed)
    gam, beta = rng.normal(size=3), rng.uniform(-0.2, 0.2, size=2)
    back = asym.inverse_normal_form(asym.normal_form(gam, beta), beta)
    checks.append(_at_most("normal form round trip", float(np.max(np.abs(np.subtract(back, gam)))), 1e-12))

    cg = Grid(96, 12.0)
    radial = 0.05 * (hermite_function((4, 0), cg) + 2 * hermite_function((2, 2), cg) + hermite_function((0, 4), cg))
    for name, w0, want in (("0.05 K", 0.05 * profile("K", cg), "off_Ws"), ("radial datum", radial, "on_Ws")):
        rep = asym.classify_optimal_decay(w0)
        ok = rep.classification == want and rep.consistent
        checks.append(Check(f"classify {name}", float(rep.checks["statement_2"]["rate"]), want, ok))
    return checks


_SUITE_FUNCS: dict[str, Callable[[int], list[Check]]] = {
    "constants": constants_suite,
    "spectrum": spectrum_suite,
    "semigroup": semigroup_suite,
    "conservation": conservation_suite,
    "asymptotics": asymptotics_suite,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    names = SUITES if name == "all" else (name,)
    unknown = [n for n in names if n not in _SUITE_FUNCS]
    if unknown:
        raise ValueError(f"unknown suite {unknown[0]!r}; choose from {SUITES + ('all',)}")
    checks = []
    for n in names:
        start = time.perf_counter()
        part = _SUITE_FUNCS[n](seed)
        elapsed = time.perf_counter() - start
        for c in part:
            c.name = f"[{n}] {c.name}"
            c.seconds = elapsed / max(len(part), 1)
        checks.extend(part)
    return checks
