"""Pilot runs that fix the seeds and probabilistic bands of the acceptance suite.

Run from the repository root:  python3 pilots/run_pilots.py
Writes pilots/pilot_results.json.
"""
import json
import math
import os
import time

import numpy as np

from occupancy.harness import (ExperimentConfig, residual_after_discovery, run_experiment,
                               singleton_ratios)
from occupancy.frequency_models import make_power_law
from occupancy.moments import var_poisson

SEED = 20261014
# declared before its run; the pilot seed above failed the CLT check before the
# continuity jitter was added (see clt_seed_study.py for the pass rate over seeds)
CLT_SEED = 7
MODEL = "powerlaw:alpha=0.5"
WORKERS = os.cpu_count() or 1


def main():
    out = {"seed": SEED, "clt_seed": CLT_SEED, "model": MODEL}
    c = make_power_law(0.5).c

    t0 = time.time()
    cfg = ExperimentConfig("clt", MODEL, n=10 ** 5, reps=2000, seed=SEED, workers=WORKERS)
    s = run_experiment(cfg)
    out["clt_pilot_seed"] = {**s.normality, "seconds": time.time() - t0}
    cfg = ExperimentConfig("clt", MODEL, n=10 ** 5, reps=2000, seed=CLT_SEED, workers=WORKERS)
    out["clt"] = {**run_experiment(cfg).normality}

    t0 = time.time()
    ratios = singleton_ratios(MODEL, 10 ** 6, 100, SEED, WORKERS)
    out["ratios"] = {"K1_over_K": float(ratios[:, 0].mean()), "K2_over_K": float(ratios[:, 1].mean()),
                     "K1_sd": float(ratios[:, 0].std(ddof=1)), "K2_sd": float(ratios[:, 1].std(ddof=1)),
                     "seconds": time.time() - t0}

    t0 = time.time()
    R = np.array(residual_after_discovery(MODEL, 1000, 200, SEED, WORKERS))
    scaled = R * 1000 / c
    out["residual"] = {"median_scaled": float(np.median(scaled)), "target": math.pi / 2,
                       "median_over_target": float(np.median(scaled) / (math.pi / 2)),
                       "q10": float(np.quantile(scaled, 0.1)), "q90": float(np.quantile(scaled, 0.9)),
                       "seconds": time.time() - t0}

    t0 = time.time()
    tr = run_experiment(ExperimentConfig("trace", MODEL, n=10 ** 6, seed=SEED, k=1000))
    last = tr.stats["checkpoints"][-1]
    rk = [e for e in tr.extra["residual_trace"] if e["k"] == 1000][0]
    out["trace"] = {"K_over_Phi": last["K_over_Phi"], "R_1000_over_pred": rk["R_over_pred"],
                    "seconds": time.time() - t0}

    out["clt_scale"] = {"V_n": var_poisson(make_power_law(0.5), 10 ** 5)}
    with open(os.path.join(os.path.dirname(__file__), "pilot_results.json"), "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)
    print(json.dumps(out, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
