"""Escaping the trap by adding e as a regressor.

Treating the Perron vector as an extra column of X removes the direction
along which the errors concentrate. The test no longer collapses, but its
limiting power is strictly below one.
"""
import numpy as np

from zeropower import artificial_regressor_test, build_lattice_weights, lambda_matrix, power, sar_model

model = sar_model(build_lattice_weights(4, 4))
X = np.ones((16, 1))

lam = lambda_matrix(model)
print("Lambda construction:", lam.construction)
for rho, dist in lam.validation:
    print(f"  distance to the pre-limit matrix at rho/a = {rho / model.a:.5f}: {dist:.2e}")

test = artificial_regressor_test(model, X, 0.05, "cliff-ord")
print(f"critical value in the augmented model: {test.kappa_bar.c:.5f}")
print(f"limiting power: {test.limiting_power:.4f}")
for d in (1e-2, 1e-3, 1e-4):
    p = power(test.spec, test.kappa_bar, model, model.a * (1 - d))
    print(f"  power at rho = a(1 - {d:g}): {p:.4f}")
