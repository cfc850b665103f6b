"""Does the Cliff-Ord test lose all power on a small lattice?

A 4x4 regular lattice with Queen contiguity, an intercept-only regression,
and the Cliff-Ord test at the 5% level. As the spatial correlation
approaches its upper limit the errors concentrate along the Perron vector
of W, and whether the test survives depends only on where that vector
falls relative to the rejection region.
"""
import numpy as np

from zeropower import build_lattice_weights, critical_value, diagnose, power, sar_model
from zeropower.testkit import build_spec

W = build_lattice_weights(4, 4, "queen", "binary")
model = sar_model(W)
X = np.ones((16, 1))
spec = build_spec("cliff-ord", model, X)

verdict = diagnose(spec, 0.05, model.e)
print(f"upper endpoint a = {model.a:.6f}")
print(f"T(e) = {verdict.t_at_e:.5f}, critical value = {verdict.kappa_alpha:.5f}")
print(f"status: {verdict.status}")
print(f"the trap occurs for every level below alpha* = {verdict.alpha_star:.4f}")

cv = critical_value(spec, 0.05)
for d in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5):
    rho = model.a * (1 - d)
    print(f"  power at rho = a(1 - {d:g}): {power(spec, cv, model, rho):.5f}")

# at a level above alpha* the sufficient condition no longer holds
print("at alpha = 0.10:", diagnose(spec, 0.10, model.e).status)
