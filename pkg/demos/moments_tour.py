"""
Exact moments of the occupancy counts
=====================================

Throw n balls into boxes with probabilities p_j and count the occupied boxes.
The expected count has a closed form under both the fixed-n and the Poisson
schemes; here we compare them.
"""
import numpy as np

from occupancy import (make_explicit, make_geometric, make_power_law, phi_fixed, phi_poisson,
                       phi_poisson_r, var_fixed, var_poisson)

# two boxes, three balls: E K = 1.72 and Var K = 0.2016
two = make_explicit([0.6, 0.4])
print("two boxes, n=3:", phi_fixed(two, 3), var_fixed(two, 3))

# the Poisson scheme smooths the fixed-n one; the gap is at most (2/n) Phi_2(n)
for model in (make_geometric(0.5), make_power_law(0.5)):
    print(model.kind)
    for n in (10, 100, 1000, 10 ** 4):
        gap = abs(phi_poisson(model, n) - phi_fixed(model, n))
        print(f"  n={n:>6}  Phi(n)={phi_poisson(model, n):10.4f}  gap={gap:.2e}"
              f"  bound={2 / n * phi_poisson_r(model, n, 2):.2e}")

# a geometric law with ratio 2^(-1/k) has variance tending to k
for k in (1, 2, 3):
    print(f"q=2^(-1/{k}):  V(1e6) = {var_poisson(make_geometric(2 ** (-1 / k)), 1e6):.6f}")

# heavier tails make the variance grow without bound
ts = np.geomspace(1e2, 1e8, 7)
print("power law V(t):", np.round([var_poisson(make_power_law(0.5), t) for t in ts], 1))
