"""Optimistic Sample Path (OSP): phase loop and the regret-side quantities."""
import math
from dataclasses import dataclass, field

import numpy as np

from .mdp import EnvState, all_policies, analyze_mdp, env_step
from .paths import ObservationLog, construct_path, extend_path, path_reward_estimate

INF = float("inf")


@dataclass(frozen=True)
class OspConfig:
    """Inputs to the algorithm.

    ``start_state`` is ``"env"`` (paths start at the agent's state at phase
    start) or an integer fixed start state.  ``paths`` selects incremental
    extension or from-scratch reconstruction; both give identical runs.
    """
    delta: float
    T: int
    t_mix_bound: int
    seed: int = 0
    start_state: object = "env"
    initial_state: int = 0
    paths: str = "incremental"

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.t_mix_bound < 1:
            raise ValueError("t_mix_bound must be >= 1")
        if self.paths not in ("incremental", "scratch"):
            raise ValueError(f"unknown path mode {self.paths!r}")
        if self.start_state != "env" and not isinstance(self.start_state, int):
            raise ValueError("start_state must be 'env' or a state index")


@dataclass
class PhaseRecord:
    k: int
    policy: int
    n_prev: int
    n_planned: int
    n_executed: int
    rho_hat: float
    rho_tilde: float
    start_t: int

    @property
    def short_path(self):
        return self.n_planned > self.n_prev


@dataclass
class RunResult:
    rewards: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    phase_of_step: np.ndarray
    regret_curve: np.ndarray
    rho_star: float
    phases: list = field(default_factory=list)

    @property
    def K(self):
        return len(self.phases)

    @property
    def K_minus(self):
        return sum(1 for p in self.phases if p.short_path)

    @property
    def K_plus(self):
        return self.K - self.K_minus

    @property
    def final_regret(self):
        return float(self.regret_curve[-1])


def regret_curve(rewards, rho_star):
    t = np.arange(1, len(rewards) + 1)
    return t * rho_star - np.cumsum(rewards)


def optimistic_value(rho_hat, n, t, T, delta, t_mix):
    """rho_hat + sqrt(8 t_mix log(8 t T / delta) / n), or +inf on an empty path."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if n == 0:
        return INF
    return rho_hat + math.sqrt(8.0 * t_mix * math.log(8.0 * t * T / delta) / n)


def select_policy(values):
    """Index of the largest value; the smallest index wins ties, including among infinities."""
    if len(values) == 0:
        raise ValueError("no policies to choose from")
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def min_phase_length(T, S, A):
    return math.ceil(math.sqrt(T / (S * A)))


def phase_length(n_prev, T, S, A):
    return max(n_prev, min_phase_length(T, S, A))


def regret_bound(T, t_mix, S, A, delta):
    return 4.0 * math.log(8.0 * T * T / delta) * math.sqrt(t_mix * S * A * T)


def t_threshold_rhs(S, A, T, delta, t_mix, mu_min):
    return S**3 * A * (152.0 * t_mix * math.log(8.0 * T * T / delta) / mu_min**2) ** 2


def t_threshold(analysis, S, A, T, delta):
    """Whether T is large enough for the high-probability regret guarantee."""
    return T >= t_threshold_rhs(S, A, T, delta, analysis.mdp_mixing_time, analysis.mu_min)


def min_horizon_for_threshold(S, A, delta, t_mix, mu_min):
    """Smallest integer T with T >= rhs(T); rhs grows only logarithmically in T."""
    lo, hi = 1, 2
    while hi < t_threshold_rhs(S, A, hi, delta, t_mix, mu_min):
        lo, hi = hi, hi * 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid >= t_threshold_rhs(S, A, mid, delta, t_mix, mu_min):
            hi = mid
        else:
            lo = mid + 1
    return lo


def phase_count_bound(S, A, T):
    if T <= S * A:
        raise ValueError("phase count bound needs T > S*A")
    return S * A * math.log(T / (S * A)) / math.log(4.0 / 3.0)


def run_osp(m, cfg, rho_star=None):
    """Run OSP on ``m`` for exactly ``cfg.T`` steps.

    The algorithm sees only ``cfg``; ``rho_star`` (computed from the model if
    omitted) is used solely to score the regret curve.
    """
    if rho_star is None:
        rho_star = analyze_mdp(m).rho_star
    policies = all_policies(m)
    S, A, T = m.S, m.A, cfg.T
    env = EnvState(cfg.seed, cfg.initial_state)
    log = ObservationLog(S, A)
    rewards = np.empty(T)
    states = np.empty(T, dtype=np.int64)
    actions = np.empty(T, dtype=np.int64)
    phase_of_step = np.empty(T, dtype=np.int64)
    phases = []
    cache = {}
    steps = 0
    k = 0
    while steps < T:
        k += 1
        t = steps + 1
        start = env.current_state if cfg.start_state == "env" else cfg.start_state
        values = []
        estimates = []
        for pi in policies:
            key = (pi.id, start)
            if cfg.paths == "scratch" or key not in cache:
                path = construct_path(log, pi, start)
            else:
                path = extend_path(cache[key], log)
            cache[key] = path
            rho_hat, n = path_reward_estimate(path)
            estimates.append((rho_hat, n))
            values.append(optimistic_value(rho_hat, n, t, T, cfg.delta, cfg.t_mix_bound))
        chosen = select_policy(values)
        rho_hat, n_prev = estimates[chosen]
        n_planned = phase_length(n_prev, T, S, A)
        n_exec = min(n_planned, T - steps)
        acts = policies[chosen].actions
        for _ in range(n_exec):
            s = env.current_state
            a = acts[s]
            r, s_next = env_step(m, env, a)
            log.append(s, a, r, s_next, steps)
            rewards[steps] = r
            states[steps] = s
            actions[steps] = a
            phase_of_step[steps] = k
            steps += 1
        phases.append(PhaseRecord(k, chosen, n_prev, n_planned, n_exec, rho_hat, values[chosen], t))
    return RunResult(rewards, states, actions, phase_of_step, regret_curve(rewards, rho_star), rho_star, phases)


def optimism_violations(result, analysis):
    """(phases where the optimistic value fell below the true average reward, total phases)."""
    bad = sum(1 for p in result.phases if p.rho_tilde < analysis.rho(p.policy))
    return bad, len(result.phases)


def phase_accounting(result, S, A, T):
    """Deterministic per-run phase invariants; the final (truncated) phase is exempt."""
    floor = min_phase_length(T, S, A)
    last = len(result.phases) - 1
    min_len_ok = all(p.n_planned >= floor for p in result.phases)
    long_phase_ok = all(
        p.n_planned == p.n_prev for i, p in enumerate(result.phases) if not p.short_path and i != last
    )
    executed_ok = sum(p.n_executed for p in result.phases) == T
    return {
        "min_phase_length_ok": min_len_ok,
        "long_phase_length_ok": long_phase_ok,
        "steps_total_ok": executed_ok,
    }
