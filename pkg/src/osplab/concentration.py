"""Monte-Carlo checks of Markov-chain concentration bounds.

Each check simulates ``trials`` independent trajectories ``X_1..X_n`` (with
``X_1`` the start state) from every start state, and compares the worst
start state's empirical tail rate or mean with the theoretical bound.  A
check passes when ``empirical <= theoretical + margin``; the margin is the
99% Wilson half-width for rates and a 99% normal half-width for means.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from .chains import analyze_chain, as_transition_matrix

BOUND_KINDS = ("reward_mcdiarmid", "reward_ci", "tv_concentration", "tv_expectation")
Z99 = float(norm.ppf(0.995))
BATCH = 10_000
STEP_CHUNK = 1000


# -- bound formulas ----------------------------------------------------------

def reward_tail_bound(eps, n, t_mix):
    return 2.0 * math.exp(-2.0 * eps * eps * n / (9.0 * t_mix))


def reward_ci_radius(n, t_mix, delta):
    return math.sqrt(9.0 * t_mix * math.log(2.0 / delta) / (2.0 * n))


def tv_ci_radius(n, S, t_mix, delta):
    return math.sqrt(38.0 * S * t_mix * math.log(2.0 / delta) / n)


def tv_expectation_bound(mu, n, beta):
    mu = np.asarray(mu, dtype=float)
    return float(np.minimum(np.sqrt(8.0 * mu / (n * beta)), mu).sum())


def wilson_half_width(rate, trials, z=Z99):
    denom = 1.0 + z * z / trials
    return z / denom * math.sqrt(rate * (1.0 - rate) / trials + z * z / (4.0 * trials * trials))


# -- simulation --------------------------------------------------------------

def trial_seed(seed, trial):
    return seed ^ trial


def simulate_visits(P, start, n, trials, seed):
    """Visit counts, shape ``(trials, S)``, of length-``n`` trajectories from ``start``.

    Trial ``i`` draws its ``n - 1`` transition uniforms from a Philox stream
    keyed by ``seed ^ i``, so results do not depend on batching.
    """
    P = np.ascontiguousarray(P, dtype=float)
    counts = _simulate_visits(P.tobytes(), P.shape[0], int(start), int(n), int(trials), int(seed))
    return counts.copy()


@lru_cache(maxsize=32)
def _simulate_visits(P_bytes, S, start, n, trials, seed):
    cum = np.cumsum(np.frombuffer(P_bytes).reshape(S, S), axis=1)
    counts = np.zeros((trials, S), dtype=np.int64)
    for lo in range(0, trials, BATCH):
        hi = min(trials, lo + BATCH)
        B = hi - lo
        gens = [np.random.Generator(np.random.Philox(trial_seed(seed, i))) for i in range(lo, hi)]
        x = np.full(B, start, dtype=np.int64)
        flat = np.zeros(B * S, dtype=np.int64)
        offsets = np.arange(B) * S
        flat[offsets + x] += 1
        done = 0
        while done < n - 1:
            m = min(STEP_CHUNK, n - 1 - done)
            U = np.empty((m, B))
            for j, g in enumerate(gens):
                U[:, j] = g.random(m)
            for step in range(m):
                x = (cum[x] <= U[step, :, None]).sum(axis=1)
                np.minimum(x, S - 1, out=x)
                flat[offsets + x] += 1
            done += m
        counts[lo:hi] = flat.reshape(B, S)
    counts.setflags(write=False)
    return counts


# -- specs and reports -------------------------------------------------------

@dataclass
class TailCheckSpec:
    P: np.ndarray
    rewards: np.ndarray
    n: int
    trials: int = 10_000
    bound_kind: str = "reward_ci"
    epsilon: float = None
    delta: float = None
    seed: int = 0
    start_states: tuple = None  # None: every state, report the worst

    def __post_init__(self):
        self.P = as_transition_matrix(self.P)
        self.rewards = np.asarray(self.rewards, dtype=float)
        if self.rewards.shape != (self.P.shape[0],):
            raise ValueError("reward vector must have one entry per state")
        if self.n < 1 or self.trials < 1:
            raise ValueError("n and trials must be >= 1")
        if self.bound_kind not in BOUND_KINDS:
            raise ValueError(f"unknown bound kind {self.bound_kind!r}")
        if self.bound_kind == "reward_mcdiarmid":
            if self.epsilon is None or self.epsilon <= 0:
                raise ValueError("reward_mcdiarmid needs epsilon > 0")
        elif self.delta is None or self.delta <= 0:
            raise ValueError(f"{self.bound_kind} needs delta > 0")


@dataclass
class TailCheckReport:
    bound_kind: str
    n: int
    epsilon_or_delta: float
    trials: int
    empirical: float
    theoretical: float
    margin: float
    vacuous: bool
    start_state: int = 0

    @property
    def passed(self):
        return self.vacuous or self.empirical <= self.theoretical + self.margin

    def to_dict(self):
        return {
            "bound_kind": self.bound_kind,
            "n": self.n,
            "epsilon_or_delta": self.epsilon_or_delta,
            "trials": self.trials,
            "empirical": self.empirical,
            "theoretical": self.theoretical,
            "margin": self.margin,
            "vacuous": self.vacuous,
            "pass": self.passed,
        }


def _per_start(spec):
    starts = spec.start_states if spec.start_states is not None else range(spec.P.shape[0])
    ca = analyze_chain(spec.P, spec.rewards)
    for s in starts:
        yield ca, s, simulate_visits(spec.P, s, spec.n, spec.trials, spec.seed)


def _worst_rate(spec, kind, param, bound, vacuous, event):
    worst = None
    for ca, s, counts in _per_start(spec):
        rate = float(event(ca, counts).mean())
        if worst is None or rate > worst[0]:
            worst = (rate, s)
    rate, s = worst
    return TailCheckReport(kind, spec.n, param, spec.trials, rate, bound(),
                           wilson_half_width(rate, spec.trials), vacuous, s)


def check_reward_concentration(spec):
    """Tail rate of |mean reward - rho| >= eps against 2 exp(-2 eps^2 n / (9 t_mix))."""
    ca = analyze_chain(spec.P, spec.rewards)
    bound = reward_tail_bound(spec.epsilon, spec.n, ca.mixing_time)

    def event(ca, counts):
        means = counts @ spec.rewards / spec.n
        return np.abs(means - ca.avg_reward) >= spec.epsilon

    return _worst_rate(spec, "reward_mcdiarmid", spec.epsilon, lambda: bound, bound >= 1.0, event)


def check_reward_ci(spec):
    """Rate at which the mean reward leaves the confidence interval, against delta."""
    ca = analyze_chain(spec.P, spec.rewards)
    radius = reward_ci_radius(spec.n, ca.mixing_time, spec.delta)

    def event(ca, counts):
        means = counts @ spec.rewards / spec.n
        return np.abs(means - ca.avg_reward) > radius

    return _worst_rate(spec, "reward_ci", spec.delta, lambda: spec.delta, spec.delta >= 1.0, event)


def check_tv_concentration(spec):
    """Two reports: TV radius violation rate against delta, and mean TV against
    sum_s min(sqrt(8 mu(s) / (n beta)), mu(s))."""
    ca = analyze_chain(spec.P, spec.rewards)
    S = spec.P.shape[0]
    radius = tv_ci_radius(spec.n, S, ca.mixing_time, spec.delta)
    exp_bound = tv_expectation_bound(ca.stationary, spec.n, ca.pseudo_spectral_gap)
    worst_rate = worst_mean = None
    for ca, s, counts in _per_start(spec):
        tv = 0.5 * np.abs(counts / spec.n - ca.stationary[None, :]).sum(axis=1)
        rate = float((tv > radius).mean())
        mean = float(tv.mean())
        half = Z99 * float(tv.std(ddof=1)) / math.sqrt(spec.trials) if spec.trials > 1 else 0.0
        if worst_rate is None or rate > worst_rate[0]:
            worst_rate = (rate, s)
        if worst_mean is None or mean > worst_mean[0]:
            worst_mean = (mean, s, half)
    vacuous = spec.delta >= 1.0 or radius >= 1.0
    conc = TailCheckReport("tv_concentration", spec.n, spec.delta, spec.trials, worst_rate[0], spec.delta,
                           wilson_half_width(worst_rate[0], spec.trials), vacuous, worst_rate[1])
    expect = TailCheckReport("tv_expectation", spec.n, spec.delta, spec.trials, worst_mean[0], exp_bound,
                             worst_mean[2], False, worst_mean[1])
    return conc, expect


def run_check(spec):
    """Dispatch on ``spec.bound_kind``; returns a single report."""
    if spec.bound_kind == "reward_mcdiarmid":
        return check_reward_concentration(spec)
    if spec.bound_kind == "reward_ci":
        return check_reward_ci(spec)
    conc, expect = check_tv_concentration(spec)
    return conc if spec.bound_kind == "tv_concentration" else expect


# Named two-state chains with rewards (1, 0); "flip" is the default fixture.
FIXTURE_CHAINS = {
    "flip": (np.array([[0.1, 0.9], [0.9, 0.1]]), np.array([1.0, 0.0])),
    "asymmetric": (np.array([[0.7, 0.3], [0.1, 0.9]]), np.array([1.0, 0.0])),
    "rank_one": (np.array([[0.25, 0.75], [0.25, 0.75]]), np.array([1.0, 0.0])),
}
