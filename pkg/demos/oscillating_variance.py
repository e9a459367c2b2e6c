"""
Variance that does not settle
=============================

Frequencies made of sparse blocks of equal atoms let Var K(t) swing between
about 1 and about 0 forever.  The ex11 preset shows it on a dyadic grid.
"""
import numpy as np

from occupancy import make_block, run_experiment, ExperimentConfig, var_poisson

m = make_block(example="ex11")
for e in range(8, 33, 2):
    t = 2.0 ** e
    v = var_poisson(m, t)
    print(f"t=2^{e:<3d} V={v:.4f} " + "#" * int(40 * v))

# the same scan through the harness, with band extrema between atom levels
s = run_experiment(ExperimentConfig("scan_variance", "block:preset=ex11",
                                    grid=list(2.0 ** np.arange(8, 33, 0.5))))
print("V range on the grid:", min(r["V"] for r in s.stats["grid"]),
      max(r["V"] for r in s.stats["grid"]))
