"""Observation log and non-extendible sample paths.

A path for policy ``pi`` always consumes the earliest unused observation of
``(s, pi(s))``, so the observations it has used for a given state are a
prefix of that pair's occurrence list.  A path is therefore fully described
by one cursor per state, which is what makes incremental extension exact.
"""
import csv
from dataclasses import dataclass
from typing import NamedTuple


class Observation(NamedTuple):
    s: int
    a: int
    r: float
    s_next: int
    t: int


class PathIntegrityError(ValueError):
    pass


class ObservationLog:
    """Append-only sequence of observations with a per-(s, a) position index."""

    def __init__(self, S, A):
        self.S = S
        self.A = A
        self.s = []
        self.a = []
        self.r = []
        self.s_next = []
        self.t = []
        self.index = [[[] for _ in range(A)] for _ in range(S)]

    def __len__(self):
        return len(self.s)

    def __getitem__(self, i):
        return Observation(self.s[i], self.a[i], self.r[i], self.s_next[i], self.t[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def append(self, s, a, r, s_next, t=None):
        if not (0 <= s < self.S and 0 <= s_next < self.S and 0 <= a < self.A):
            raise ValueError(f"observation ({s}, {a}, {r}, {s_next}) out of range")
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"reward {r!r} outside [0, 1]")
        pos = len(self.s)
        self.s.append(s)
        self.a.append(a)
        self.r.append(r)
        self.s_next.append(s_next)
        self.t.append(pos if t is None else t)
        self.index[s][a].append(pos)

    def prefix(self, n):
        """A new log holding the first ``n`` observations."""
        out = ObservationLog(self.S, self.A)
        for i in range(n):
            out.append(self.s[i], self.a[i], self.r[i], self.s_next[i], self.t[i])
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["t", "s", "a", "r", "s_next"])
            for o in self:
                w.writerow([o.t, o.s, o.a, repr(o.r), o.s_next])

    @classmethod
    def read_csv(cls, path, S, A):
        log = cls(S, A)
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                log.append(int(row["s"]), int(row["a"]), float(row["r"]), int(row["s_next"]), int(row["t"]))
        return log


@dataclass
class SamplePath:
    policy: object  # mdp.Policy
    start_state: int
    positions: list
    cursors: list  # per state: how many (s, pi(s)) occurrences the path has used
    terminal: int
    reward_sum: float
    log: ObservationLog

    def __len__(self):
        return len(self.positions)

    @property
    def steps(self):
        return [self.log[i] for i in self.positions]


def _advance(log, actions, positions, cursors, state, reward_sum):
    index = log.index
    s_next = log.s_next
    r = log.r
    while True:
        occ = index[state][actions[state]]
        c = cursors[state]
        if c >= len(occ):
            return state, reward_sum
        pos = occ[c]
        cursors[state] = c + 1
        positions.append(pos)
        reward_sum += r[pos]
        state = s_next[pos]


def construct_path(log, pi, s1):
    """Build the non-extendible path for ``pi`` from ``s1`` by always taking
    the earliest unused matching observation.  The log is not modified."""
    if not 0 <= s1 < log.S:
        raise ValueError(f"start state {s1} out of range")
    positions = []
    cursors = [0] * log.S
    terminal, total = _advance(log, pi.actions, positions, cursors, s1, 0.0)
    return SamplePath(pi, s1, positions, cursors, terminal, total, log)


def extend_path(existing, log):
    """Continue ``existing`` with observations appended to ``log`` since it was built.

    Gives the same path as ``construct_path`` on the full log.
    """
    pi = existing.policy
    if len(existing.positions) != sum(existing.cursors):
        raise PathIntegrityError("cursor totals disagree with path length")
    for s, c in enumerate(existing.cursors):
        if c > len(log.index[s][pi.actions[s]]):
            raise PathIntegrityError(f"path uses more (s={s}) observations than the log holds")
    if existing.positions:
        last = existing.positions[-1]
        if last >= len(log) or log.s_next[last] != existing.terminal:
            raise PathIntegrityError("path terminal state does not match the log")
    elif existing.terminal != existing.start_state:
        raise PathIntegrityError("empty path must end at its start state")
    positions = list(existing.positions)
    cursors = list(existing.cursors)
    terminal, total = _advance(log, pi.actions, positions, cursors, existing.terminal, existing.reward_sum)
    return SamplePath(pi, existing.start_state, positions, cursors, terminal, total, log)


def path_reward_estimate(path):
    """(mean reward on the path, path length); the mean is NaN for an empty path."""
    n = len(path)
    if n == 0:
        return float("nan"), 0
    return path.reward_sum / n, n
