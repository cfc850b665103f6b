"""Exact rejection probabilities from Imhof's formula, checked against simulation."""
import numpy as np

from zeropower import MonteCarlo, prob_positive, qform_law

rng = np.random.default_rng(0)
for l1, l2 in ((3.0, 1.0), (1.0, 1.0), (0.01, 5.0)):
    law = qform_law(np.diag([l1, -l2]))
    exact = 2 / np.pi * np.arctan(np.sqrt(l1 / l2))
    print(f"weights ({l1}, -{l2}): inversion {prob_positive(law):.10f}, closed form {exact:.10f}")

for _ in range(3):
    w = rng.standard_normal(12)
    law = qform_law(np.diag(w))
    mc = prob_positive(law, MonteCarlo(400_000, seed=1))
    print(f"12 random weights: inversion {prob_positive(law):.5f}, "
          f"simulation {mc.value:.5f} +- {mc.se:.5f}")
