"""Power curves against the point-optimal envelope, written as CSV and SVG."""
import os

import numpy as np

from zeropower import build_lattice_weights, critical_value, power_curve, power_envelope, sar_model
from zeropower.cli import rho_grid
from zeropower.svg import line_chart
from zeropower.testkit import build_spec

out = os.environ.get("DEMO_OUT", "demo_output")
os.makedirs(out, exist_ok=True)

model = sar_model(build_lattice_weights(4, 4))
X = np.ones((16, 1))
grid = rho_grid(model.a, 40, 0.9999)[1:]

curves = [power_envelope(model, X, 0.05, grid)]
for kind in ("cliff-ord", "ee", "poi"):
    spec = build_spec(kind, model, X, rho_bar=0.5 * model.a)
    curves.append(power_curve(spec, critical_value(spec, 0.05), model, grid))

for c in curves:
    c.to_csv(os.path.join(out, f"curve_{c.label.lower()}.csv"))
    print(f"{c.label:9s} power at rho/a = 0.5, 0.99, 0.9999: "
          + ", ".join(f"{np.interp(f * model.a, c.rho, c.power):.3f}" for f in (0.5, 0.99, 0.9999)))

svg = line_chart([(c.label, c.rho, c.power) for c in curves], hline=0.05,
                 title="Power against the envelope", xlim=(0, model.a))
with open(os.path.join(out, "envelope.svg"), "w") as fh:
    fh.write(svg)
print("wrote", out)
