"""
Waiting for new boxes
=====================

Record when each new box is first hit.  After k discoveries the unseen
probability R_k behaves like (pi/2) c / k for the 1/j^2 law, and the waiting
time to the k-th box is predicted by inverting the mean curve.
"""
import math

import numpy as np

from occupancy import (RegularVariationSpec, SlowVariation, discovery_process, make_power_law,
                       predict_discovery, predict_residual)

model = make_power_law(0.5)
spec = RegularVariationSpec(0.5, SlowVariation(model.c ** 0.5, 0.0))
k = 1000
runs = [discovery_process(model, k, np.random.default_rng(s)) for s in range(50)]
R = np.array([r.R[-1] for r in runs])
N = np.array([r.N[-1] for r in runs])
print(f"median R_k k / c = {np.median(R) * k / model.c:.4f}   (pi/2 = {math.pi / 2:.4f})")
print(f"predicted residual {predict_residual(spec, k):.3e}, observed median {np.median(R):.3e}")
print(f"median N_k = {np.median(N):.0f}, predicted {predict_discovery(spec, k):.0f}")
