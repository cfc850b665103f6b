"""Combining the Cliff-Ord test with the e-direction test.

The base test runs at level alpha - eps and the e-direction test fills the
remaining size. Its cutoff is calibrated by Monte Carlo with common random
numbers, so the calibration is exactly reproducible from the seed.
"""
import numpy as np

from zeropower import build_lattice_weights, critical_value, enhanced_critical, enhanced_power, power, sar_model
from zeropower.testkit import b_ee, build_spec

REPS = 200_000

model = sar_model(build_lattice_weights(4, 4))
X = np.ones((16, 1))
base = build_spec("cliff-ord", model, X)
ee = b_ee(model.e, X, basis=base.basis)
base_cv = critical_value(base, 0.05)

for eps in (0.01, 0.006, 0.002):
    t = enhanced_critical(base, ee, 0.05, eps, reps=REPS, seed=0)
    print(f"eps = {eps}: e-direction cutoff {t.ee_cutoff:.5f} "
          f"(bound {t.ee_kappa_eps:.5f}), size {t.achieved_size:.4f} +- {t.se:.4f}")
    for f in (0.2, 0.7, 0.999):
        rho = f * model.a
        p = enhanced_power(t, model, rho)
        print(f"  rho/a = {f}: enhanced {p.value:.4f}, Cliff-Ord {power(base, base_cv, model, rho):.4f}")
