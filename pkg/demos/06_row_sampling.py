"""
Sampling rows by squared norm
=============================

Row indices are drawn with probability proportional to the squared row
norm using an alias table: O(m) setup, O(1) per draw, one uniform each.
"""
import numpy as np

from rkas.sampling import DiscreteSampler

weights = np.array([1.0, 2.0, 3.0, 4.0])
sampler = DiscreteSampler(weights, seed=7)
print("target    :", sampler.probabilities)
print("alias     :", sampler.alias_probabilities())

draws = sampler.draw_many(200_000)
print("empirical :", np.bincount(draws, minlength=4) / draws.size)

# the stream does not depend on how draws are batched
a = DiscreteSampler(weights, seed=7).draw_many(10)
s = DiscreteSampler(weights, seed=7)
b = np.concatenate([s.draw_many(3), s.draw_many(7)])
print("batched draws agree:", np.array_equal(a, b))
