import numpy as np
import pytest

from hslab import evolver, scattering
from hslab.asymptotics import AsymptoticModel
from hslab.field import SpatialGrid, build_profile

ACCEPT = {"kind": "gaussian", "A": 0.1, "sigma": 1.0, "x0": 0.0}
ACCEPT_TIMES = (25.0, 50.0, 100.0, 200.0)


def gaussian(A, L=12.0, N=2048, sigma=1.0, x0=0.0):
    return build_profile({"kind": "gaussian", "A": A, "sigma": sigma, "x0": x0}, SpatialGrid(L, N))


@pytest.fixture(scope="session")
def accept_profile():
    return build_profile(ACCEPT, SpatialGrid(12.0, 2048))


@pytest.fixture(scope="session")
def accept_data(accept_profile):
    return scattering.scattering_table(accept_profile, scattering.default_k_grid(1024, 8.0))


@pytest.fixture(scope="session")
def accept_model(accept_data):
    return AsymptoticModel(accept_data)


@pytest.fixture(scope="session")
def long_run(accept_profile):
    """Reference evolution to t = 200 on [-132, 132], N = 4096, with snapshots."""
    L = evolver.evolution_half_width(12.0, 0.5, 200.0)
    state = evolver.init_state(accept_profile, L=L, N=4096)
    import time
    t0 = time.perf_counter()
    snaps = {0.0: state}
    log = []
    for T in ACCEPT_TIMES:
        state = evolver.evolve_to(state, T, dt=0.02, log=log)
        snaps[T] = state
    return {"snaps": snaps, "log": log, "seconds": time.perf_counter() - t0}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def report(number, ok, detail):
    """Record and print one acceptance line."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def accept_compare():
    """The compare pipeline at the acceptance settings (one evolution to t = 200)."""
    import time
    from hslab import cli, config
    cfg = config.parse_text("evolve.N = 4096\nevolve.dt = 0.02\ncompare.xi = -0.5, 0.5\n"
                            "compare.t = 25, 50, 100, 200\n")
    t0 = time.perf_counter()
    rows, summary = cli.compare_run(cfg)
    return {"rows": rows, "summary": summary, "cfg": cfg, "seconds": time.perf_counter() - t0}
