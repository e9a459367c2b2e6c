"""Acceptance suite: one recorded pass/fail line per criterion.

Seeds and probabilistic bands are frozen from pilots/pilot_results.json.
"""
import math
import os

import numpy as np
import pytest

from conftest import SMALL_MODELS, enumerated_moments
from occupancy.asymptotics import predict_discovery, predict_mean
from occupancy.frequency_models import make_block, make_explicit, make_geometric, make_power_law
from occupancy.harness import (ExperimentConfig, residual_after_discovery, run_experiment,
                               singleton_ratios)
from occupancy.moments import (exact_k_distribution, phi_fixed, phi_fixed_r, phi_poisson,
                               phi_poisson_r, var_fixed, var_fixed_r, var_poisson)
from occupancy.regvar import RegularVariationSpec, SlowVariation
from occupancy.sampler import quantile_sets, run_fixed

SEED = 20261014
CLT_SEED = 7
MODEL = "powerlaw:alpha=0.5"
C2 = 6 / math.pi ** 2
WORKERS = os.cpu_count() or 1

EXTRA_MODELS = [list(np.sort(np.random.default_rng(s).dirichlet(np.ones(m)))[::-1])
                for s, m in ((1, 2), (2, 3), (3, 4), (4, 4))]


def test_01_enumeration_oracle(record_acceptance):
    worst, worst_pmf = 0.0, 0.0
    for p in SMALL_MODELS + EXTRA_MODELS:
        m = make_explicit(p)
        for n in range(1, 7):
            e = enumerated_moments(p, n)
            worst = max(worst, abs(phi_fixed(m, n) - e["K"][0]), abs(var_fixed(m, n) - e["K"][1]))
            for r in range(1, n + 1):
                worst = max(worst, abs(phi_fixed_r(m, n, r) - e[r][0]),
                            abs(var_fixed_r(m, n, r) - e[r][1]))
            d = exact_k_distribution(m, len(p), n)
            k = min(len(d.pmf), len(e["pmf"]))
            worst_pmf = max(worst_pmf, float(np.max(np.abs(d.pmf[:k] - e["pmf"][:k]))),
                            float(np.sum(d.pmf[k:])))
    ok = worst <= 1e-12 and worst_pmf <= 1e-12
    record_acceptance(1, "enumeration oracle", ok,
                      f"max moment error {worst:.2e}, max pmf error {worst_pmf:.2e}")
    assert ok


def test_02_depoissonization_bound(record_acceptance):
    zoo = [make_geometric(q) for q in (0.3, 0.5, 0.9)] + [make_power_law(a) for a in (0.25, 0.5, 0.75)]
    worst = 0.0
    for m in zoo:
        for n in (10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5):
            gap = abs(phi_poisson(m, n) - phi_fixed(m, n))
            worst = max(worst, gap / (2 / n * phi_poisson_r(m, n, 2)))
    ok = worst <= 1
    record_acceptance(2, "mean gap within (2/n) Phi_2(n)", ok, f"worst gap/bound {worst:.3f}")
    assert ok


def test_03_geometric_variance_limits(record_acceptance):
    devs = [abs(var_poisson(make_geometric(2 ** (-1 / k)), 1e6) - k) for k in (1, 2, 3)]
    ok = max(devs) <= 0.05
    record_acceptance(3, "geometric variance limits k=1,2,3", ok,
                      "|V(1e6)-k| = " + ", ".join(f"{d:.2e}" for d in devs))
    assert ok


def test_04_block_variance_oscillation(record_acceptance):
    m = make_block(example="ex11")
    hi, lo = var_poisson(m, 2.0 ** 16), var_poisson(m, 2.0 ** 20)
    ok = hi >= 0.9 and lo <= 0.1
    record_acceptance(4, "ex11 variance oscillation", ok, f"V(2^16)={hi:.4f}, V(2^20)={lo:.2e}")
    assert ok


def test_05_tauberian_mean(record_acceptance):
    ratio = phi_poisson(make_power_law(0.5), 1e6) / 1381.98
    ok = 0.99 <= ratio <= 1.01
    record_acceptance(5, "power-law mean against sqrt(pi c t)", ok, f"Phi(1e6)/1381.98 = {ratio:.5f}")
    assert ok


def test_06_clt(record_acceptance):
    s = run_experiment(ExperimentConfig("clt", MODEL, n=10 ** 5, reps=2000, seed=CLT_SEED,
                                        workers=WORKERS))
    z = s.normality
    ok = z["ad_pass"] and abs(z["skewness"]) <= 0.15 and abs(z["excess_kurtosis"]) <= 0.3
    record_acceptance(6, "CLT for K_n", ok,
                      f"seed {CLT_SEED}: AD {z['anderson_darling']:.3f} < {z['ad_critical_1pct']}, "
                      f"skew {z['skewness']:.3f}, kurt {z['excess_kurtosis']:.3f}")
    assert ok


def test_07_singleton_ratios(record_acceptance):
    r = singleton_ratios(MODEL, 10 ** 6, 100, SEED, WORKERS).mean(axis=0)
    ok = 0.45 <= r[0] <= 0.55 and 0.10 <= r[1] <= 0.15
    record_acceptance(7, "K_1/K and K_2/K ratios", ok, f"K_1/K {r[0]:.4f}, K_2/K {r[1]:.4f}")
    assert ok


def test_08_residual_after_discovery(record_acceptance):
    R = np.array(residual_after_discovery(MODEL, 1000, 200, SEED, WORKERS))
    med = float(np.median(R * 1000 / C2))
    ok = math.pi / 2 * 0.85 <= med <= math.pi / 2 * 1.15
    record_acceptance(8, "R_k k / c median near pi/2", ok, f"median {med:.4f} (pi/2 = {math.pi / 2:.4f})")
    assert ok


def test_09_discovery_round_trip(record_acceptance):
    spec = RegularVariationSpec(0.5, SlowVariation(C2 ** 0.5, 0.0))
    devs = [abs(predict_mean(spec, predict_discovery(spec, k)) / k - 1) for k in (1e2, 1e4, 1e6)]
    ok = max(devs) <= 1e-6
    record_acceptance(9, "discovery prediction round trip", ok, f"max deviation {max(devs):.2e}")
    assert ok


def test_10_quantile_sets(record_acceptance):
    g = make_geometric(0.5)
    d = quantile_sets(g, run_fixed(g, 10 ** 4, SEED)).d_H
    ok = d <= 0.05
    record_acceptance(10, "quantile set Hausdorff distance", ok, f"d_H = {d:.4f}")
    assert ok


DETERMINISM_CASES = [
    ("mc_vs_exact", "explicit:p=0.6|0.4", dict(n=3, reps=400, r_max=3)),
    ("mc_vs_exact", "geometric:q=0.5", dict(n=1000, reps=64)),
    ("clt", MODEL, dict(n=10 ** 4, reps=64)),
    ("trace", MODEL, dict(n=10 ** 5, k=100)),
    ("scan_variance", "block:preset=ex11", dict(grid=[2.0 ** 12, 2.0 ** 16, 2.0 ** 20])),
    ("power_law", "gem:alpha=0.5,theta=0", dict(n=10 ** 4, reps=12, inner_reps=3)),
    ("power_law", "gem:alpha=0,theta=1", dict(n=10 ** 4, reps=8, inner_reps=2)),
]


def test_11_determinism_across_workers(record_acceptance):
    bad = []
    for kind, model, kw in DETERMINISM_CASES:
        payloads = {w: run_experiment(ExperimentConfig(kind, model, seed=11, workers=w, **kw)).to_json()
                    for w in (1, 4, 8)}
        if len(set(payloads.values())) != 1:
            bad.append(f"{kind}:{model}")
    ok = not bad
    record_acceptance(11, "byte-identical payloads at 1, 4, 8 workers", ok,
                      f"{len(DETERMINISM_CASES)} experiments" + (f", differing: {bad}" if bad else ""))
    assert ok
