"""
Simulating a power law and checking the limits
==============================================

p_j proportional to 1/j^2 has index alpha = 1/2.  The number of occupied boxes
grows like sqrt(pi c n), half of the occupied boxes are singletons and an
eighth are doubletons.
"""
import math

import numpy as np

from occupancy import (RegularVariationSpec, SlowVariation, make_power_law, phi_poisson,
                       predict_mean, ratio_limit, run_fixed)

model = make_power_law(0.5)
spec = RegularVariationSpec(0.5, SlowVariation(model.c ** 0.5, 0.0))
n = 10 ** 6
print("exact Phi(n):", phi_poisson(model, n), " leading term:", predict_mean(spec, n))

rows = []
for rep in range(20):
    st = run_fixed(model, n, np.random.default_rng(rep))
    rows.append((st.K, st.K_r(1), st.K_r(2), st.S))
K, K1, K2, S = np.array(rows, dtype=float).T
print(f"mean K = {K.mean():.1f} +- {K.std(ddof=1) / math.sqrt(len(K)):.1f}")
print(f"K_1/K = {np.mean(K1 / K):.4f}  (limit {ratio_limit(0.5, 1)})")
print(f"K_2/K = {np.mean(K2 / K):.4f}  (limit {ratio_limit(0.5, 2)})")
# the unseen mass is close to the singleton share K_1/n
print(f"unseen mass {S.mean():.3e}  vs  K_1/n {K1.mean() / n:.3e}")
