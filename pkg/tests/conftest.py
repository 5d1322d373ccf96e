import warnings

import pytest

from scaled_vorticity.fields import Grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid128():
    return Grid(128, 12.0)


@pytest.fixture(scope="session")
def grid256():
    return Grid(256, 12.0)


@pytest.fixture(scope="session")
def grid96():
    return Grid(96, 12.0)


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture(autouse=True)
def _quiet_truncation():
    from scaled_vorticity.fields import TruncationWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


# Expensive trajectories shared by the module tests and the acceptance run.

SECULAR_B = 0.05


@pytest.fixture(scope="session")
def secular_traj(grid128):
    from scaled_vorticity.evolution import SimConfig, run
    from scaled_vorticity.profiles import profile

    w0 = SECULAR_B * (profile("F1", grid128) + profile("F2", grid128))
    return run(w0, SimConfig(dt=4e-3, tau_end=4.0, record_every=10))


def radial_datum(grid, amplitude=0.05):
    from scaled_vorticity.spectral_operator import hermite_function

    # Delta^2 G, a radial member of the space with zero low moments
    return amplitude * (
        hermite_function((4, 0), grid) + 2 * hermite_function((2, 2), grid) + hermite_function((0, 4), grid)
    )


@pytest.fixture(scope="session")
def classified(grid96):
    """Classifier reports keyed by datum name, computed on first use."""
    from scaled_vorticity.asymptotics import classify_optimal_decay
    from scaled_vorticity.profiles import profile

    data = {
        "0.05K": lambda: 0.05 * profile("K", grid96),
        "radial": lambda: radial_datum(grid96),
        "radial/2": lambda: radial_datum(grid96, 0.025),
        "0.05H2": lambda: 0.05 * profile("H2", grid96),
    }
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = classify_optimal_decay(data[name]())
        return cache[name]

    return get


CORPUS_CONFIG = dict(dt=4e-3, tau_end=5.0, record_every=25, snapshot_every=50)


@pytest.fixture(scope="session")
def massive_corpus(grid128):
    """Five small random data with nonzero mass and their trajectories."""
    import numpy as np

    from scaled_vorticity.asymptotics import random_small_datum
    from scaled_vorticity.evolution import SimConfig, run

    rng = np.random.default_rng(20240601)
    out = []
    for _ in range(5):
        w0 = random_small_datum(grid128, rng)
        out.append(run(w0, SimConfig(**CORPUS_CONFIG)))
    return out


@pytest.fixture(scope="session")
def mean_free_corpus(grid128):
    """Three small random data with zero mass and their trajectories."""
    import numpy as np

    from scaled_vorticity.asymptotics import random_small_datum
    from scaled_vorticity.evolution import SimConfig, run

    rng = np.random.default_rng(20240602)
    return [run(random_small_datum(grid128, rng, mass=0.0), SimConfig(**CORPUS_CONFIG)) for _ in range(3)]
