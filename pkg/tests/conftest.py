import numpy as np
import pytest

from osplab.chains import validate_uniform_ergodicity
from osplab.mdp import analyze_mdp, generate_ergodic_mdp


def random_chain(rng, n_max=10, min_density=0.15):
    """Random row-stochastic matrix, often sparse (so transient states and slow mixing occur)."""
    n = int(rng.integers(1, n_max + 1))
    density = rng.uniform(min_density, 1.0)
    M = rng.random((n, n)) * (rng.random((n, n)) < density)
    for i in range(n):
        if M[i].sum() == 0:
            M[i, rng.integers(n)] = 1.0
    return M / M.sum(axis=1, keepdims=True)


def random_validated_chains(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        P = random_chain(rng)
        if validate_uniform_ergodicity(P):
            out.append(P)
    return out


def power_iteration_stationary(P, steps=10_000):
    """Oracle: average of the rows of P^steps (exact for aperiodic unichains in the limit)."""
    Pn = np.linalg.matrix_power(P, steps)
    return Pn.mean(axis=0)


@pytest.fixture(scope="session")
def fixture_mdp():
    return generate_ergodic_mdp(2, 2, seed=7)


@pytest.fixture(scope="session")
def fixture_analysis(fixture_mdp):
    return analyze_mdp(fixture_mdp)


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
