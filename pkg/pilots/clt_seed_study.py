"""Pass rate of the CLT acceptance verdict over independent seeds.

Run from the repository root:  python3 pilots/clt_seed_study.py
Writes pilots/clt_seed_study.json.
"""
import json
import os

from occupancy.harness import ExperimentConfig, run_experiment

SEEDS = list(range(100, 130))


def main():
    rows = []
    for seed in SEEDS:
        s = run_experiment(ExperimentConfig("clt", "powerlaw:alpha=0.5", n=10 ** 5, reps=2000,
                                            seed=seed, workers=os.cpu_count() or 1))
        n = s.normality
        rows.append({"seed": seed, "ad": n["anderson_darling"], "skewness": n["skewness"],
                     "excess_kurtosis": n["excess_kurtosis"], "pass": s.verdict})
        print(rows[-1], flush=True)
    summary = {"seeds": len(rows), "pass_rate": sum(r["pass"] for r in rows) / len(rows),
               "ad_fail": sum(not r["ad"] < 1.09 for r in rows),
               "skew_fail": sum(abs(r["skewness"]) > 0.15 for r in rows),
               "kurt_fail": sum(abs(r["excess_kurtosis"]) > 0.3 for r in rows), "runs": rows}
    with open(os.path.join(os.path.dirname(__file__), "clt_seed_study.json"), "w") as fh:
        json.dump(summary, fh, indent=1)
    print({k: v for k, v in summary.items() if k != "runs"})


if __name__ == "__main__":
    main()
