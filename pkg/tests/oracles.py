"""Independent reference implementations used by the tests."""
import math

import numpy as np


def ucb_phase_bandit(means, T, delta, t_mix, seed):
    """Phase-based UCB on Bernoulli arms, written without any osplab code.

    Reward draws follow the environment's stream layout: two uniforms per
    pull (an unused transition draw, then the reward draw).
    """
    A = len(means)
    uniforms = np.random.Generator(np.random.Philox(seed)).random(2 * T)
    counts = [0] * A
    sums = [0.0] * A
    pulls = []
    min_len = math.ceil(math.sqrt(T / A))
    while len(pulls) < T:
        t = len(pulls) + 1
        best, best_val = 0, None
        for a in range(A):
            if counts[a] == 0:
                val = math.inf
            else:
                val = sums[a] / counts[a] + math.sqrt(8 * t_mix * math.log(8 * t * T / delta) / counts[a])
            if best_val is None or val > best_val:
                best, best_val = a, val
        length = min(max(counts[best], min_len), T - len(pulls))
        for _ in range(length):
            u = uniforms[2 * len(pulls) + 1]
            r = 1.0 if u < means[best] else 0.0
            counts[best] += 1
            sums[best] += r
            pulls.append(best)
    return pulls
