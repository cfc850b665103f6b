"""How common is the trap? Random designs under AR(1) errors."""
from zeropower import ar1_model, design_scan

for n in (8, 20, 40):
    rep = design_scan(ar1_model, "lbi", 0.05, n, 1, 200, seed=1, workers=4)
    levels = (0.1, 0.05, 0.01, 0.001)
    frac = ", ".join(f"{a}: {rep.fraction_trapped_at(a):.2f}" for a in levels)
    print(f"n = {n:2d}, k = 1  trapped fraction by level  {frac}")
