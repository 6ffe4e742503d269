import pytest

from hestonlab import HestonParams, SimConfig, V0Policy, simulate_paths

PINNED = dict(kappa=2.0, theta=0.04, sigma=0.3, rho=-0.7)
PINNED_DELTA = 1 / 12


@pytest.fixture(scope="session")
def pinned():
    return HestonParams(**PINNED)


@pytest.fixture(scope="session")
def small_ensemble(pinned):
    """Cheap pinned-set ensemble for structural tests."""
    cfg = SimConfig(delta=PINNED_DELTA, substeps=16, horizon=6, n_paths=4000, seed=7,
                    track_level_integral=True)
    return simulate_paths(pinned, cfg)


@pytest.fixture(scope="session")
def sigma0_params():
    return HestonParams(kappa=2.0, theta=0.04, sigma=0.0, rho=-0.7, v0_policy=V0Policy.THETA)


ACCEPTANCE = []


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
