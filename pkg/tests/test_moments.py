import math

import numpy as np
import pytest
from scipy import optimize

from conftest import SMALL_MODELS, enumerated_moments
from occupancy.errors import (AccuracyError, DegenerateVarianceError, GuardExceededError,
                              ParameterDomainError)
from occupancy.frequency_models import (make_block, make_explicit, make_geometric,
                                        make_power_law, make_rapid, make_slow_variation)
from occupancy.moments import (FAILS, HOLDS, cov_poisson, depoissonization_gap,
                               diagnose_variance, exact_k_distribution, moment_report,
                               phi_fixed, phi_fixed_r, phi_poisson, phi_poisson_r,
                               poissonization_check, solve_tau, var_fixed, var_fixed_r,
                               var_poisson, var_poisson_direct, var_poisson_r)
from occupancy.regvar import SlowVariation

TWO = make_explicit([0.6, 0.4])


# -- fixed n ------------------------------------------------------------------
def test_phi_hand_values():
    assert phi_fixed(TWO, 3) == pytest.approx(1.72, abs=1e-14)
    assert phi_fixed(make_geometric(0.5), 2) == pytest.approx(5 / 3, abs=1e-9)
    for m in (TWO, make_geometric(0.3), make_power_law(0.5)):
        assert phi_fixed(m, 1) == pytest.approx(1.0, abs=1e-9)


def test_var_hand_values():
    assert var_fixed(TWO, 3) == pytest.approx(0.2016, abs=1e-12)
    assert var_fixed(make_explicit([0.5, 0.5]), 2) == pytest.approx(0.25, abs=1e-14)
    assert var_fixed(make_explicit([1.0]), 7) == 0.0


@pytest.mark.parametrize("p", SMALL_MODELS)
@pytest.mark.parametrize("n", [1, 2, 3, 5, 6])
def test_fixed_moments_match_enumeration(p, n):
    m = make_explicit(p)
    e = enumerated_moments(p, n)
    assert phi_fixed(m, n) == pytest.approx(e["K"][0], abs=1e-12)
    assert var_fixed(m, n) == pytest.approx(e["K"][1], abs=1e-12)
    for r in range(1, n + 1):
        assert phi_fixed_r(m, n, r) == pytest.approx(e[r][0], abs=1e-12)
        assert var_fixed_r(m, n, r) == pytest.approx(e[r][1], abs=1e-12)


def test_phi_r_sums_to_phi_and_n():
    for m in (TWO, make_geometric(0.5), make_power_law(0.5)):
        n = 9
        parts = [phi_fixed_r(m, n, r) for r in range(1, n + 1)]
        assert math.fsum(parts) == pytest.approx(phi_fixed(m, n), rel=1e-8)
        assert math.fsum(r * v for r, v in enumerate(parts, 1)) == pytest.approx(n, rel=1e-8)


def test_phi_concave_and_sublinear():
    for m in (make_geometric(0.5), make_power_law(0.5), make_slow_variation(SlowVariation(2, 2))):
        ns = np.arange(1, 200)
        phi = np.array([phi_fixed(m, int(n)) for n in ns])
        d = np.diff(phi)
        assert np.all(d >= -1e-9) and np.all(np.diff(d) <= 1e-9)
        assert np.all(phi <= ns + 1e-9)


def test_domain_errors():
    with pytest.raises(ParameterDomainError):
        phi_fixed(TWO, 0)
    with pytest.raises(ParameterDomainError):
        phi_fixed_r(TWO, 3, 4)
    with pytest.raises(ParameterDomainError):
        phi_poisson(TWO, -1.0)


def test_power_law_var_fixed_is_infeasible():
    with pytest.raises(AccuracyError):
        var_fixed(make_power_law(0.5), 10 ** 4)


# -- poisson ------------------------------------------------------------------
def test_poisson_hand_values():
    assert phi_poisson(TWO, 1.0) == pytest.approx(2 - math.exp(-0.6) - math.exp(-0.4), abs=1e-14)
    assert phi_poisson(TWO, 1.0) == pytest.approx(0.780868, abs=1e-6)
    assert var_poisson(TWO, 1.0) == pytest.approx(0.468609, abs=1e-6)
    assert var_poisson_direct(TWO, 1.0) == pytest.approx(var_poisson(TWO, 1.0), abs=1e-14)
    assert cov_poisson(TWO, 1.0, 1, 2) == pytest.approx(-0.0469075, abs=1e-7)


def test_poisson_direct_formulas():
    p = np.array([0.6, 0.4])
    t = 1.7
    for r in (1, 2, 3):
        direct = t ** r / math.factorial(r) * np.sum(p ** r * np.exp(-t * p))
        assert phi_poisson_r(TWO, t, r) == pytest.approx(direct, rel=1e-13)
        pr = (t * p) ** r / math.factorial(r) * np.exp(-t * p)
        assert var_poisson_r(TWO, t, r) == pytest.approx(np.sum(pr * (1 - pr)), rel=1e-12)
    # covariance of independent Poisson counts
    p1 = t * p * np.exp(-t * p)
    p2 = (t * p) ** 2 / 2 * np.exp(-t * p)
    assert cov_poisson(TWO, t, 1, 2) == pytest.approx(-np.sum(p1 * p2), rel=1e-12)


def test_geometric_poisson_growth():
    g = make_geometric(0.5)
    devs = [abs(phi_poisson(g, 2.0 ** k) / k - 1) for k in (10, 20, 30, 40)]
    assert all(b < a for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.03


@pytest.mark.parametrize("k", [1, 2, 3])
def test_geometric_variance_limit(k):
    g = make_geometric(2 ** (-1 / k))
    assert var_poisson(g, 1e6) == pytest.approx(k, abs=1e-6)


def test_var_routes_agree(  ):
    for m in (make_geometric(0.3), make_power_law(0.5), make_power_law(0.5, SlowVariation(1, 1)),
              make_block(example="ex11")):
        for t in (1.0, 1e3, 1e6):
            assert var_poisson_direct(m, t) == pytest.approx(var_poisson(m, t), rel=1e-8, abs=1e-12)


def test_ex11_variance_oscillates():
    m = make_block(example="ex11")
    assert var_poisson(m, 2.0 ** 16) == pytest.approx(0.930, abs=2e-3)
    assert var_poisson(m, 2.0 ** 20) < 2e-3


def test_ex12_singletons_grow_while_doubletons_oscillate():
    m = make_block(example="ex12")
    mins1, mins2, maxs2 = [], [], []
    # band i spans [1/q_i, 1/q_{i+1}] with q_i = 2^-(2^(i+1))
    for i in range(1, 7):
        ts = 2.0 ** np.linspace(2 ** (i + 1), 2 ** (i + 2), 400)
        v1 = [phi_poisson_r(m, float(t), 1) for t in ts]
        v2 = [phi_poisson_r(m, float(t), 2) for t in ts]
        mins1.append(min(v1))
        mins2.append(min(v2))
        maxs2.append(max(v2))
    assert all(b > a for a, b in zip(mins1, mins1[1:]))
    assert min(mins2[1:]) < 0.1
    assert max(maxs2) > 10


# -- depoissonization and poissonization -------------------------------------
def test_depoissonization_gap_power_law():
    m = make_power_law(0.5)
    rep = depoissonization_gap(m, 10 ** 4, with_variance=False)
    assert rep.ok
    assert rep.gaps["phi"] / phi_fixed(m, 10 ** 4) < 1e-3


def test_depoissonization_gap_geometric_all_moments():
    for q in (0.3, 0.5, 0.9):
        rep = depoissonization_gap(make_geometric(q), 1000)
        assert rep.ok, rep.violations


def test_poissonization_check():
    res, tail = poissonization_check(TWO, 5.0, 60)
    assert res < 1e-12 and tail < 1e-6
    res, tail = poissonization_check(make_geometric(0.5), 20.0, 100)
    assert res < 1e-10
    with pytest.raises(AccuracyError):
        poissonization_check(TWO, 50.0, 10)


# -- exact distribution -------------------------------------------------------
@pytest.mark.parametrize("p", SMALL_MODELS)
def test_exact_distribution_matches_enumeration(p):
    n = 5
    d = exact_k_distribution(make_explicit(p), len(p), n)
    e = enumerated_moments(p, n)["pmf"]
    assert np.allclose(d.pmf[: len(e)], e[: len(d.pmf)], atol=1e-12)
    assert d.pmf.sum() == pytest.approx(1.0, abs=1e-12)


def test_exact_distribution_mean_tracks_phi():
    g = make_geometric(0.5)
    d = exact_k_distribution(g, 64, 50)
    assert d.mean == pytest.approx(phi_fixed(g, 50), abs=1e-9)


def test_exact_distribution_guard():
    with pytest.raises(GuardExceededError):
        exact_k_distribution(make_geometric(0.5), 1000, 1000)


# -- tau ----------------------------------------------------------------------
def test_tau_single_box():
    m = make_explicit([1.0])
    with pytest.raises(DegenerateVarianceError):
        solve_tau(m, 1e3)
    sol = solve_tau(m, 1.0)
    oracle = optimize.brentq(lambda s: math.exp(-s) - (math.exp(-1) - math.exp(-2)), 1, 2,
                             xtol=1e-14)
    assert sol.tau == pytest.approx(oracle, abs=1e-8)
    assert sol.tau == pytest.approx(1.45868, abs=1e-5)


@pytest.mark.parametrize("model", [make_geometric(0.5), make_power_law(0.5),
                                   make_power_law(0.5, SlowVariation(1, 1))],
                         ids=lambda m: m.kind)
def test_tau_ratio_in_range_and_monotone(model):
    ts = np.geomspace(1, 1e6, 25)
    taus = np.array([solve_tau(model, float(t)).tau for t in ts])
    r = taus / ts
    assert np.all(r > 1) and np.all(r < 2)
    assert np.all(np.diff(taus) > 0)
    for t, tau in zip(ts, taus):
        v = var_poisson(model, float(t))
        assert t * model.sum_f(lambda p: p * np.exp(-tau * p), lambda q: 1.0,
                               p_crit=1 / tau)[0] == pytest.approx(v, rel=1e-8)


# -- variance diagnosis -------------------------------------------------------
@pytest.mark.parametrize("k", [1, 2, 3])
def test_diagnosis_geometric_limit(k):
    d = diagnose_variance(make_geometric(2 ** (-1 / k)))
    assert d.limit_k == k


def test_diagnosis_geometric_bounded():
    d = diagnose_variance(make_geometric(0.4))
    assert d.bound_k == 1
    assert d.variance_diverges == FAILS


def test_diagnosis_power_law_diverges():
    d = diagnose_variance(make_power_law(0.5))
    assert d.variance_diverges == HOLDS
    assert d.nabla_growth.status == HOLDS
    assert d.ratio_liminf.status == HOLDS
    assert d.local_tail_ratio.status == HOLDS


def test_diagnosis_rapid():
    d = diagnose_variance(make_rapid(SlowVariation(1.0, -2.0)))
    s = d.summary()
    assert set(s) >= {"nabla_growth", "ratio_liminf", "local_tail_ratio", "variance_diverges"}


# -- report -------------------------------------------------------------------
def test_moment_report():
    rep = moment_report(TWO, n=3)
    assert rep.phi == pytest.approx(1.72) and rep.var == pytest.approx(0.2016)
    assert set(rep.phi_r) == {1, 2, 3}
    rep = moment_report(TWO, t=1.0)
    assert rep.cov[(1, 2)] == pytest.approx(-0.0469075, abs=1e-7)
    d = rep.to_dict()
    assert d["cov"]["1,2"] == rep.cov[(1, 2)]
    with pytest.raises(ParameterDomainError):
        moment_report(TWO)


def test_gap_constants_cover_zoo_with_margin():
    from calibrate_gap_constants import worst_ratios
    from occupancy.moments import GAP_CONSTANTS
    for key, (ratio, case) in worst_ratios().items():
        assert GAP_CONSTANTS[key] >= 2 * ratio - 0.05, case
        assert ratio > 0
