import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from osplab.chains import (
    MixingCapExceeded,
    NotErgodicError,
    analyze_chain,
    as_transition_matrix,
    mixing_time,
    pseudo_spectral_gap,
    stationary_distribution,
    tv_distance,
    validate_uniform_ergodicity,
    worst_case_tv,
)

from .conftest import power_iteration_stationary, random_validated_chains


def two_state(a, b):
    return np.array([[1 - a, a], [b, 1 - b]])


# -- tv_distance ---------------------------------------------------------------

@pytest.mark.parametrize(
    "p, q, expected",
    [
        ((0.5, 0.5), (0.5, 0.5), 0.0),
        ((1, 0), (0, 1), 1.0),
        ((0.5, 0.5), (0.75, 0.25), 0.25),
    ],
)
def test_tv_distance_examples(p, q, expected):
    assert tv_distance(p, q) == pytest.approx(expected, abs=1e-15)


def test_tv_distance_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        tv_distance([1.0], [0.5, 0.5])


def _simplex(n):
    return arrays(float, n, elements=st.floats(0.01, 1.0)).map(lambda v: v / v.sum())


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(_simplex(n), _simplex(n), _simplex(n))))
@settings(max_examples=200, deadline=None)
def test_tv_distance_is_a_metric(triple):
    p, q, r = triple
    assert tv_distance(p, q) == pytest.approx(tv_distance(q, p), abs=1e-15)
    assert tv_distance(p, p) == 0.0
    assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12
    assert 0.0 <= tv_distance(p, q) <= 1.0 + 1e-12


def test_tv_distance_zero_only_for_equal():
    assert tv_distance([0.3, 0.7], [0.3 + 1e-9, 0.7 - 1e-9]) > 0


# -- stationary distribution --------------------------------------------------

def test_stationary_rank_one():
    rho = np.array([0.2, 0.5, 0.3])
    P = np.tile(rho, (3, 1))
    np.testing.assert_allclose(stationary_distribution(P), rho, atol=1e-14)


def test_stationary_two_state_analytic():
    P = two_state(0.3, 0.1)
    mu = stationary_distribution(P)
    np.testing.assert_allclose(mu, [0.25, 0.75], atol=1e-14)
    # balance equation mu_1 * 0.3 == mu_2 * 0.1 and the power-iteration oracle
    assert mu[0] * 0.3 == pytest.approx(mu[1] * 0.1, abs=1e-15)
    np.testing.assert_allclose(power_iteration_stationary(P), [0.25, 0.75], atol=1e-12)


def test_stationary_doubly_stochastic():
    P = np.array([[0.2, 0.3, 0.5], [0.5, 0.2, 0.3], [0.3, 0.5, 0.2]])
    np.testing.assert_allclose(stationary_distribution(P), [1 / 3] * 3, atol=1e-14)


def test_stationary_transient_state_gets_zero_mass():
    P = np.array([[0.5, 0.5, 0.0], [0.0, 0.2, 0.8], [0.0, 0.6, 0.4]])
    mu = stationary_distribution(P)
    assert mu[0] == 0.0
    np.testing.assert_allclose(mu @ P, mu, atol=1e-12)


def test_stationary_rejects_two_classes():
    with pytest.raises(NotErgodicError, match="not uniquely ergodic"):
        stationary_distribution(np.eye(2))


@pytest.mark.parametrize("P", random_validated_chains(30, seed=11))
def test_stationary_matches_power_iteration(P):
    mu = stationary_distribution(P)
    assert np.abs(mu @ P - mu).sum() <= 1e-10
    np.testing.assert_allclose(mu, power_iteration_stationary(P), atol=1e-8)


# -- mixing time --------------------------------------------------------------

def explicit_mixing_time(P, mu, cap=10_000):
    """Oracle: power P from scratch for every n."""
    for n in range(1, cap):
        Pn = np.linalg.matrix_power(P, n)
        if max(0.5 * np.abs(Pn[s] - mu).sum() for s in range(len(P))) <= 0.25 + 1e-12:
            return n
    raise AssertionError("did not mix")


def test_mixing_time_rank_one():
    mu = np.array([0.1, 0.9])
    assert mixing_time(np.tile(mu, (2, 1)), mu) == 1


def test_mixing_time_half_flip():
    assert mixing_time(two_state(0.5, 0.5), np.array([0.5, 0.5])) == 1


def test_mixing_time_flip_09():
    # TV after n steps is 0.5 * 0.8**n: 0.256 at n=3, 0.2048 at n=4
    P = two_state(0.9, 0.9)
    mu = np.array([0.5, 0.5])
    assert mixing_time(P, mu) == 4
    assert explicit_mixing_time(P, mu) == 4


def test_mixing_time_cap():
    P = two_state(1e-4, 1e-4)
    with pytest.raises(MixingCapExceeded, match="mixing exceeds cap"):
        mixing_time(P, np.array([0.5, 0.5]), cap=10)
    with pytest.raises(ValueError):
        mixing_time(P, np.array([0.5, 0.5]), cap=0)


@pytest.mark.parametrize("P", random_validated_chains(30, seed=12))
def test_mixing_time_matches_oracle_and_boundary(P):
    mu = stationary_distribution(P)
    t = mixing_time(P, mu)
    assert t == explicit_mixing_time(P, mu)
    assert worst_case_tv(np.linalg.matrix_power(P, t), mu) <= 0.25 + 1e-12
    if t > 1:
        assert worst_case_tv(np.linalg.matrix_power(P, t - 1), mu) > 0.25 + 1e-12


# -- pseudo-spectral gap ------------------------------------------------------

def dense_eig_psg(P, mu, k_max):
    """Oracle: general (non-symmetric) eigensolver on the mu-adjoint product."""
    D = np.diag(mu)
    Dinv = np.diag(1 / mu)
    Pstar = Dinv @ P.T @ D
    best = 0.0
    for k in range(1, k_max + 1):
        Pk = np.linalg.matrix_power(P, k)
        M = np.linalg.matrix_power(Pstar, k) @ Pk
        ev = np.sort(np.linalg.eigvals(M).real)
        best = max(best, (1 - ev[-2]) / k)
    return best


def test_psg_rank_one():
    mu = np.array([0.2, 0.3, 0.5])
    P = np.tile(mu, (3, 1))
    assert pseudo_spectral_gap(P, mu, 2) == pytest.approx(1.0, abs=1e-12)
    assert dense_eig_psg(P, mu, 2) == pytest.approx(1.0, abs=1e-12)


def test_psg_half_flip():
    P = two_state(0.5, 0.5)
    mu = np.array([0.5, 0.5])
    assert pseudo_spectral_gap(P, mu, 2) == pytest.approx(1.0, abs=1e-12)


def test_psg_flip_09_closed_form():
    # P symmetric, eigenvalues 1 and -0.8: gap_k = 1 - 0.64**k, best at k=1
    P = two_state(0.9, 0.9)
    assert pseudo_spectral_gap(P, np.array([0.5, 0.5]), 8) == pytest.approx(0.36, abs=1e-12)


def test_psg_single_state():
    assert pseudo_spectral_gap(np.array([[1.0]]), np.array([1.0]), 2) == 1.0


def test_psg_domain_error():
    P = np.array([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError, match="zero stationary mass"):
        pseudo_spectral_gap(P, np.array([1.0, 0.0]), 2)


@pytest.mark.parametrize(
    "P", [P for P in random_validated_chains(60, seed=13) if (stationary_distribution(P) > 0).sum() > 1][:20]
)
def test_psg_matches_dense_oracle(P):
    mu = stationary_distribution(P)
    sup = mu > 0
    Q = P[np.ix_(sup, sup)]
    k_max = 2 * mixing_time(P, mu)
    assert pseudo_spectral_gap(P, mu, k_max) == pytest.approx(dense_eig_psg(Q, mu[sup], k_max), abs=1e-9)


# -- uniform ergodicity -------------------------------------------------------

def test_identity_has_two_recurrent_classes():
    report = validate_uniform_ergodicity(np.eye(2))
    assert not report
    assert "2 recurrent classes" in report.message


def test_two_cycle_is_periodic():
    report = validate_uniform_ergodicity(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert not report
    assert report.period == 2
    assert "period 2" in report.message


def test_three_cycle_with_transient_state():
    P = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0, 0.5],
    ])
    report = validate_uniform_ergodicity(P)
    assert not report and report.period == 3


def test_unichain_with_transient_state_accepted():
    P = np.array([[0.5, 0.5, 0.0], [0.0, 0.2, 0.8], [0.0, 0.6, 0.4]])
    report = validate_uniform_ergodicity(P)
    assert report and report.recurrent_classes == [[1, 2]]


@given(arrays(float, (4, 4), elements=st.floats(0.01, 1.0)))
@settings(max_examples=50, deadline=None)
def test_strictly_positive_is_ergodic(M):
    assert validate_uniform_ergodicity(M / M.sum(axis=1, keepdims=True))


def test_rejects_malformed_matrices():
    with pytest.raises(ValueError):
        as_transition_matrix([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ValueError):
        as_transition_matrix([[1.0, 0.0]])


# -- combined analysis --------------------------------------------------------

@pytest.mark.parametrize("P", random_validated_chains(25, seed=14))
def test_inverse_gap_below_twice_mixing_time(P):
    ca = analyze_chain(P, np.linspace(0, 1, len(P)))
    assert 1 / ca.pseudo_spectral_gap <= 2 * ca.mixing_time + 1e-9
    assert np.abs(ca.stationary @ P - ca.stationary).sum() <= 1e-10
    assert 0.0 <= ca.avg_reward <= 1.0


def test_analyze_chain_rejects_non_ergodic():
    with pytest.raises(NotErgodicError):
        analyze_chain(np.eye(3))
