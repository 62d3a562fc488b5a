"""Seedable O(1) discrete sampling with Vose's alias method.

Each draw consumes exactly one double from a PCG64 stream, so
``draw_many(a)`` followed by ``draw_many(b)`` returns the same indices as a
single ``draw_many(a + b)``.  Solvers rely on this to stay reproducible no
matter how they chunk their iterations.
"""
from __future__ import annotations

import numpy as np

from . import _kernels

#: Recorded in benchmark output so runs can be replayed.
PRNG_NAME = "numpy.random.PCG64"


def make_rng(seed):
    """Generator for a seed (int, SeedSequence or Generator passthrough)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(master_seed, count):
    """Independent per-trial integer seeds derived from one master seed."""
    ss = np.random.SeedSequence(master_seed)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in ss.spawn(count)]


def alias_table(weights):
    """Vose alias table for nonnegative ``weights``.

    Returns ``(prob, alias)`` with ``prob[i]`` the probability of keeping
    column ``i`` and ``alias[i]`` the fallback index.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-d array")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if not total > 0:
        raise ValueError("at least one weight must be positive")

    n = w.size
    scaled = w * (n / total)
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small.append(g)
        else:
            large.append(g)
    # leftovers are 1 up to rounding
    for i in small + large:
        prob[i] = 1.0
    return prob, alias


class DiscreteSampler:
    """Draw indices with probability ``weights[i] / sum(weights)``.

    Single owner: the sampler carries mutable generator state.
    """

    def __init__(self, weights, seed=None):
        self.weights = np.array(weights, dtype=np.float64)
        self.prob, self.alias = alias_table(self.weights)
        self.total = float(self.weights.sum())
        self.rng = make_rng(seed)

    def __len__(self):
        return self.weights.size

    @property
    def probabilities(self):
        return self.weights / self.total

    def draw(self):
        return int(self.draw_many(1)[0])

    def draw_many(self, count):
        u = self.rng.random(int(count))
        return _kernels.alias_lookup(u, self.prob, self.alias)

    def alias_probabilities(self):
        """Exact draw distribution implied by the alias table (for tests)."""
        n = self.prob.size
        p = self.prob / n
        np.add.at(p, self.alias, (1.0 - self.prob) / n)
        return p


def build(weights, seed=None):
    return DiscreteSampler(weights, seed)
