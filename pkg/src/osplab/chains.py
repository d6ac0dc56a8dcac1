"""Exact analysis of finite Markov chains.

Everything here is a pure function of a row-stochastic matrix ``P`` (row ``s``
is the next-state distribution from ``s``).  Recurrent classes and periodicity
are decided on the support graph, so no tolerance enters those verdicts.
"""
from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.sparse.csgraph import connected_components

ROW_TOL = 1e-12
TV_SLACK = 1e-12
MIXING_THRESHOLD = 0.25
DEFAULT_MIXING_CAP = 100_000


class NotErgodicError(ValueError):
    """The chain does not have a unique stationary distribution."""


class MixingCapExceeded(RuntimeError):
    """No step count up to the cap brings the chain within 1/4 of stationarity."""


def as_transition_matrix(P):
    """Return ``P`` as a float array after checking it is row-stochastic."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ValueError(f"transition matrix must be square and nonempty, got shape {P.shape}")
    if np.any(P < 0) or np.any(P > 1):
        raise ValueError("transition probabilities must lie in [0, 1]")
    err = np.abs(P.sum(axis=1) - 1.0)
    if np.any(err > ROW_TOL):
        bad = int(np.argmax(err))
        raise ValueError(f"row {bad} sums to {P[bad].sum()!r}, not 1")
    return P


def tv_distance(p, q):
    """Total variation distance between two distributions on the same finite set."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def worst_case_tv(Pn, mu):
    """max_s d_TV(Pn[s], mu) for an n-step kernel ``Pn``."""
    return float(0.5 * np.abs(Pn - mu[None, :]).sum(axis=1).max())


# -- structure ---------------------------------------------------------------

@dataclass
class ErgodicityReport:
    ok: bool
    recurrent_classes: list = field(default_factory=list)
    period: int = 1
    message: str = ""

    def __bool__(self):
        return self.ok


def recurrent_classes(P):
    """Closed communicating classes of the chain, each as a sorted list of states."""
    adj = np.asarray(P) > 0
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    closed = np.ones(n_comp, dtype=bool)
    src, dst = np.nonzero(adj)
    leaving = labels[src] != labels[dst]
    closed[labels[src[leaving]]] = False
    return [sorted(np.flatnonzero(labels == c).tolist()) for c in range(n_comp) if closed[c]]


def class_period(P, states):
    """Period of a communicating class: gcd of its cycle lengths."""
    adj = np.asarray(P) > 0
    members = set(states)
    level = {states[0]: 0}
    frontier = [states[0]]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(adj[u]):
                v = int(v)
                if v in members and v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u in states:
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v in members:
                g = gcd(g, abs(level[u] + 1 - level[v]))
    return g


def validate_uniform_ergodicity(P):
    """Accept iff the chain has one recurrent class and that class is aperiodic.

    For a finite chain this is the same as uniform ergodicity.  Transient
    states are allowed.  Returns an :class:`ErgodicityReport`; never raises
    for a well-formed matrix.
    """
    P = as_transition_matrix(P)
    classes = recurrent_classes(P)
    if len(classes) != 1:
        return ErgodicityReport(
            False, classes, 0,
            f"{len(classes)} recurrent classes: {classes}",
        )
    d = class_period(P, classes[0])
    if d != 1:
        return ErgodicityReport(False, classes, d, f"recurrent class {classes[0]} has period {d}")
    return ErgodicityReport(True, classes, 1, "ok")


# -- stationary quantities ---------------------------------------------------

def stationary_distribution(P):
    """Solve mu^T P = mu^T, sum(mu) = 1 directly.

    Transient states get exactly zero mass; the balance equations are solved
    on the unique recurrent class.
    """
    P = as_transition_matrix(P)
    classes = recurrent_classes(P)
    if len(classes) != 1:
        raise NotErgodicError(f"not uniquely ergodic: {len(classes)} recurrent classes")
    cls = classes[0]
    Q = P[np.ix_(cls, cls)]
    m = len(cls)
    system = np.vstack([Q.T - np.eye(m), np.ones((1, m))])
    rhs = np.zeros(m + 1)
    rhs[-1] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(system, rhs, rcond=None)
    if rank < m:
        raise NotErgodicError("not uniquely ergodic: singular balance equations")
    sol = np.clip(sol, 0.0, None)
    mu = np.zeros(P.shape[0])
    mu[cls] = sol / sol.sum()
    return mu


def mixing_time(P, mu, cap=DEFAULT_MIXING_CAP):
    """Smallest n >= 1 with max_s d_TV(P^n(s, .), mu) <= 1/4."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    P = np.asarray(P, dtype=float)
    mu = np.asarray(mu, dtype=float)
    Pn = P.copy()
    for n in range(1, cap + 1):
        if worst_case_tv(Pn, mu) <= MIXING_THRESHOLD + TV_SLACK:
            return n
        Pn = Pn @ P
    raise MixingCapExceeded(f"mixing exceeds cap of {cap} steps")


def _symmetrized_gram(Pk, sqrt_mu):
    # D^{1/2} (P*)^k P^k D^{-1/2} = B^T B with B = D^{1/2} P^k D^{-1/2}
    B = sqrt_mu[:, None] * Pk / sqrt_mu[None, :]
    return B.T @ B


def pseudo_spectral_gap(P, mu, k_max):
    """max_{1<=k<=k_max} gamma((P*)^k P^k) / k, with P* the mu-adjoint of P.

    gamma is one minus the second largest eigenvalue.  The operator is
    restricted to the support of ``mu``, which is closed under ``P``.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    P = np.asarray(P, dtype=float)
    mu = np.asarray(mu, dtype=float)
    support = np.flatnonzero(mu > 0)
    if support.size == 0:
        raise ValueError("stationary distribution has empty support")
    Q = P[np.ix_(support, support)]
    if np.any(np.abs(Q.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("support of mu is not closed: a reachable state has zero stationary mass")
    if support.size == 1:
        return 1.0
    sqrt_mu = np.sqrt(mu[support])
    best = 0.0
    Qk = np.eye(support.size)
    for k in range(1, k_max + 1):
        Qk = Qk @ Q
        eig = np.linalg.eigvalsh(_symmetrized_gram(Qk, sqrt_mu))
        best = max(best, (1.0 - eig[-2]) / k)
    return float(best)


@dataclass(frozen=True)
class ChainAnalysis:
    stationary: np.ndarray
    mixing_time: int
    pseudo_spectral_gap: float
    avg_reward: float


def analyze_chain(P, rewards=None, cap=DEFAULT_MIXING_CAP, k_max=None):
    """Stationary distribution, mixing time, pseudo-spectral gap and average reward.

    ``k_max`` defaults to twice the mixing time.
    """
    P = as_transition_matrix(P)
    report = validate_uniform_ergodicity(P)
    if not report:
        raise NotErgodicError(report.message)
    mu = stationary_distribution(P)
    t = mixing_time(P, mu, cap)
    beta = pseudo_spectral_gap(P, mu, k_max or 2 * t)
    rho = float(mu @ np.asarray(rewards, dtype=float)) if rewards is not None else float("nan")
    return ChainAnalysis(mu, t, beta, rho)
