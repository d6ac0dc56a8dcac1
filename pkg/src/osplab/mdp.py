"""Finite MDPs: the model, its JSON form, policies, simulation and brute-force analysis."""
import json
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import jsonschema
import numpy as np

from .chains import (
    DEFAULT_MIXING_CAP,
    ROW_TOL,
    analyze_chain,
    validate_uniform_ergodicity,
)

REWARD_KINDS = ("bernoulli", "deterministic")
MAX_POLICIES = 10**6
TIE_TOL = 1e-12

MDP_SCHEMA = {
    "type": "object",
    "required": ["num_states", "num_actions", "transitions", "mean_rewards", "reward_kind"],
    "additionalProperties": False,
    "properties": {
        "num_states": {"type": "integer", "minimum": 1},
        "num_actions": {"type": "integer", "minimum": 1},
        "transitions": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        },
        "mean_rewards": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "reward_kind": {"enum": list(REWARD_KINDS)},
    },
}


class MdpFormatError(ValueError):
    """An MDP file or dict violates the schema; ``path`` locates the offending entry."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class EnumerationLimitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MdpModel:
    transitions: np.ndarray  # (S, A, S), p(s'|s, a)
    mean_rewards: np.ndarray  # (S, A)
    reward_kind: str = "bernoulli"

    def __post_init__(self):
        p = np.array(self.transitions, dtype=float)
        r = np.array(self.mean_rewards, dtype=float)
        if p.ndim != 3 or p.shape[0] != p.shape[2] or p.shape[0] < 1 or p.shape[1] < 1:
            raise MdpFormatError("transitions", f"expected shape (S, A, S), got {p.shape}")
        if r.shape != p.shape[:2]:
            raise MdpFormatError("mean_rewards", f"expected shape {p.shape[:2]}, got {r.shape}")
        if self.reward_kind not in REWARD_KINDS:
            raise MdpFormatError("reward_kind", f"unknown reward kind {self.reward_kind!r}")
        for s, a in product(range(p.shape[0]), range(p.shape[1])):
            row = p[s, a]
            if np.any(row < 0) or np.any(row > 1) or abs(row.sum() - 1.0) > ROW_TOL:
                raise MdpFormatError(f"transitions[{s}][{a}]", "not a probability distribution")
            if not 0.0 <= r[s, a] <= 1.0:
                raise MdpFormatError(f"mean_rewards[{s}][{a}]", f"{r[s, a]!r} outside [0, 1]")
        p.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transitions", p)
        object.__setattr__(self, "mean_rewards", r)

    @property
    def S(self):
        return self.transitions.shape[0]

    @property
    def A(self):
        return self.transitions.shape[1]

    @property
    def num_policies(self):
        return self.A**self.S

    @cached_property
    def _cum_rows(self):
        return [[np.cumsum(self.transitions[s, a]).tolist() for a in range(self.A)] for s in range(self.S)]

    @cached_property
    def _reward_table(self):
        return self.mean_rewards.tolist()

    def to_dict(self):
        return {
            "num_states": self.S,
            "num_actions": self.A,
            "transitions": self.transitions.tolist(),
            "mean_rewards": self.mean_rewards.tolist(),
            "reward_kind": self.reward_kind,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            jsonschema.validate(d, MDP_SCHEMA)
        except jsonschema.ValidationError as e:
            path = "/".join(str(x) for x in e.absolute_path) or "<root>"
            raise MdpFormatError(path, e.message) from None
        S, A = d["num_states"], d["num_actions"]
        p, r = d["transitions"], d["mean_rewards"]
        if len(p) != S:
            raise MdpFormatError("transitions", f"expected {S} states, got {len(p)}")
        for s in range(S):
            if len(p[s]) != A:
                raise MdpFormatError(f"transitions[{s}]", f"expected {A} actions, got {len(p[s])}")
            for a in range(A):
                if len(p[s][a]) != S:
                    raise MdpFormatError(f"transitions[{s}][{a}]", f"expected {S} entries, got {len(p[s][a])}")
        if len(r) != S:
            raise MdpFormatError("mean_rewards", f"expected {S} states, got {len(r)}")
        for s in range(S):
            if len(r[s]) != A:
                raise MdpFormatError(f"mean_rewards[{s}]", f"expected {A} actions, got {len(r[s])}")
        return cls(np.array(p, dtype=float), np.array(r, dtype=float), d["reward_kind"])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def same_as(self, other):
        return self.to_dict() == other.to_dict()


def load_mdp(path):
    with open(path) as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise MdpFormatError("<root>", f"invalid JSON: {e}") from None
    return MdpModel.from_dict(d)


def save_mdp(m, path):
    with open(path, "w") as f:
        f.write(m.to_json())


# -- policies ----------------------------------------------------------------

@dataclass(frozen=True)
class Policy:
    actions: tuple
    id: int


def encode_policy(actions, A):
    """Mixed-radix index of a deterministic policy, state 0 least significant."""
    pid = 0
    for a in reversed(actions):
        if not 0 <= a < A:
            raise ValueError(f"action {a} out of range for A={A}")
        pid = pid * A + int(a)
    return pid


def decode_policy(pid, S, A):
    if not 0 <= pid < A**S:
        raise ValueError(f"policy id {pid} out of range for S={S}, A={A}")
    actions = []
    for _ in range(S):
        pid, a = divmod(pid, A)
        actions.append(a)
    return tuple(actions)


def policy(pid, S, A):
    return Policy(decode_policy(pid, S, A), pid)


def all_policies(m):
    check_enumeration_limit(m)
    return [policy(pid, m.S, m.A) for pid in range(m.num_policies)]


def check_enumeration_limit(m, limit=MAX_POLICIES):
    if m.num_policies > limit:
        raise EnumerationLimitError(
            f"A^S = {m.A}^{m.S} policies exceeds the enumeration limit of {limit}"
        )


def induced_chain(m, pi):
    """Transition matrix and mean reward vector of the chain induced by ``pi``."""
    actions = pi.actions if isinstance(pi, Policy) else tuple(pi)
    states = np.arange(m.S)
    acts = np.asarray(actions, dtype=int)
    return m.transitions[states, acts].copy(), m.mean_rewards[states, acts].copy()


def validate_mdp(m):
    """Check every deterministic policy induces a uniformly ergodic chain.

    Returns a list of ``(policy_id, ErgodicityReport)`` for the violators;
    an empty list means the MDP is valid.
    """
    violations = []
    for pi in all_policies(m):
        report = validate_uniform_ergodicity(induced_chain(m, pi)[0])
        if not report:
            violations.append((pi.id, report))
    return violations


@dataclass
class MdpAnalysis:
    per_policy: dict  # policy id -> ChainAnalysis
    mdp_mixing_time: int
    rho_star: float
    optimal_policy: int
    mu_min: float

    def rho(self, pid):
        return self.per_policy[pid].avg_reward


def analyze_mdp(m, cap=DEFAULT_MIXING_CAP):
    per_policy = {}
    for pi in all_policies(m):
        P, r = induced_chain(m, pi)
        per_policy[pi.id] = analyze_chain(P, r, cap=cap)
    rho_star = max(ca.avg_reward for ca in per_policy.values())
    # values within TIE_TOL of the max are ties; smallest id wins
    best = min(pid for pid, ca in per_policy.items() if ca.avg_reward >= rho_star - TIE_TOL)
    mu_min = min(float(ca.stationary[ca.stationary > 0].min()) for ca in per_policy.values())
    return MdpAnalysis(
        per_policy=per_policy,
        mdp_mixing_time=max(ca.mixing_time for ca in per_policy.values()),
        rho_star=rho_star,
        optimal_policy=best,
        mu_min=mu_min,
    )


# -- simulation --------------------------------------------------------------

class EnvState:
    """Current state plus a counter-based uniform stream.

    Draw ``c`` of the stream is the ``c``-th double produced by a Philox
    generator keyed by ``seed``, so ``(seed, counter)`` pins every future
    draw exactly.
    """

    _BLOCK = 4096

    def __init__(self, seed, state=0, counter=0):
        self.seed = int(seed)
        self.current_state = int(state)
        self.counter = int(counter)
        bitgen = np.random.Philox(self.seed)
        bitgen.advance(self.counter // 4)
        self._gen = np.random.Generator(bitgen)
        self._gen.random(self.counter % 4)
        self._buf = []
        self._pos = 0

    def uniform(self):
        if self._pos == len(self._buf):
            self._buf = self._gen.random(self._BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        self.counter += 1
        return u


def env_step(m, env, a):
    """Take action ``a``: draw the transition, then the reward (always two draws)."""
    s = env.current_state
    if not 0 <= a < m.A:
        raise ValueError(f"invalid action {a} for A={m.A}")
    u_next = env.uniform()
    u_rew = env.uniform()
    s_next = bisect_right(m._cum_rows[s][a], u_next)
    if s_next >= m.S:
        s_next = m.S - 1
    mean = m._reward_table[s][a]
    if m.reward_kind == "bernoulli":
        r = 1.0 if u_rew < mean else 0.0
    else:
        r = mean
    env.current_state = s_next
    return r, s_next


def simulate_policy(m, actions, n, env):
    """Run a fixed policy for ``n`` steps; returns the reward array."""
    rewards = np.empty(n)
    for i in range(n):
        rewards[i], _ = env_step(m, env, actions[env.current_state])
    return rewards


def generate_ergodic_mdp(S, A, seed, smoothing=0.1, reward_kind="bernoulli"):
    """Random MDP whose transition rows are all strictly positive.

    Kernels are Dirichlet(1) draws and mean rewards are uniform on [0, 1];
    every row is then mixed with the uniform distribution by weight
    ``smoothing``.
    """
    if S < 1 or A < 1:
        raise ValueError("S and A must be >= 1")
    if not 0 < smoothing < 1:
        raise ValueError("smoothing must lie in (0, 1)")
    rng = np.random.Generator(np.random.Philox(seed))
    kernels = rng.dirichlet(np.ones(S), size=(S, A))
    rewards = rng.random((S, A))
    kernels = (1.0 - smoothing) * kernels + smoothing / S
    kernels /= kernels.sum(axis=2, keepdims=True)
    return MdpModel(kernels, rewards, reward_kind)
