"""Exact first and second moments of occupancy counts.

Fixed-n scheme (``n`` balls) and poissonized scheme (time ``t``).  Every
infinite sum goes through ``FrequencyModel.sum_f`` so the returned values
carry an absolute truncation bound.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special, stats

from .errors import (AccuracyError, DegenerateVarianceError, GuardExceededError,
                     ParameterDomainError, SchemeMismatchError)
from .frequency_models import EPS_TRUNC, delta_nu

# depoissonization constants, frozen at twice the worst observed gap/bound ratio
# over the model zoo at n = 10..1e4 (tests/calibrate_gap_constants.py)
GAP_CONSTANTS = {"phi_r": 5.7, "var": 3.3, "var_r": 15.3}

TAU_RTOL = 1e-10
TAU_MAX_STEPS = 200
VAR_FLOOR = 1e-300
PAIR_BLOCK_CAP = 4096


def _require_normalized(model):
    if not model.normalized:
        raise SchemeMismatchError(
            f"fixed-n operations need total mass 1, model has mass {model.mass!r}")


def _check_n(n):
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"ball count must be a positive integer, got {n}")
    return int(n)


def _check_r(r, n=None):
    if int(r) != r or r < 1:
        raise ParameterDomainError(f"r must be a positive integer, got {r}")
    if n is not None and r > n:
        raise ParameterDomainError(f"r={r} exceeds n={n}")
    return int(r)


def _log_binom(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


# ---------------------------------------------------------------------------
# fixed-n scheme
# ---------------------------------------------------------------------------
def _occupied_fixed(n):
    return lambda p: -np.expm1(n * np.log1p(-np.minimum(p, 1.0)))


def _exact_r_fixed(n, r):
    lc = _log_binom(n, r)

    def f(p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            return np.exp(lc + r * np.log(p) + special.xlog1py(n - r, -p))
    return f


def phi_fixed_bounded(model, n):
    """``(Phi_n, bound)`` with ``Phi_n = sum_j 1 - (1 - p_j)**n``."""
    _require_normalized(model)
    n = _check_n(n)
    if n == 0:
        return 0.0, 0.0
    return model.sum_f(_occupied_fixed(n), lambda q: float(n), p_crit=1.0 / n)


def phi_fixed(model, n):
    """Expected number of occupied boxes after ``n`` balls."""
    return phi_fixed_bounded(model, n)[0]


def phi_fixed_r_bounded(model, n, r):
    _require_normalized(model)
    n = _check_n(n)
    r = _check_r(r, n)
    lc = _log_binom(n, r)
    return model.sum_f(_exact_r_fixed(n, r),
                       lambda q: math.exp(lc + (r - 1) * math.log(min(q, 1.0))),
                       p_crit=1.0 / n)


def phi_fixed_r(model, n, r):
    """Expected number of boxes holding exactly ``r`` of ``n`` balls."""
    return phi_fixed_r_bounded(model, n, r)[0]


def _pair_blocks(model, bound_fn, tol):
    """Grow the head block count until the pair-remainder bound is below ``tol``."""
    nb = model.n_blocks
    J = 16
    while True:
        if nb is not None and J >= nb:
            return nb, 0.0
        tail = model.tail_mass(J)
        if tail <= 0:
            return J, 0.0
        bound = bound_fn(J, tail)
        if bound <= tol:
            return J, bound
        if J >= PAIR_BLOCK_CAP:
            raise AccuracyError(
                f"cross-term remainder bound {bound:.3g} exceeds tolerance {tol:.3g} "
                f"at the pair enumeration cap")
        J *= 2


def _pair_sum(values, mults, term):
    """``sum_{i != j} term(p_i, p_j)`` over blocks, in a fixed order."""
    total = []
    B = len(values)
    step = max(1, (1 << 22) // max(B, 1))
    for a in range(0, B, step):
        pi = values[a:a + step, None]
        mi = mults[a:a + step, None]
        T = term(pi, values[None, :])
        w = mi * mults[None, :]
        idx = np.arange(a, min(a + step, B))
        w[np.arange(len(idx)), idx] = mults[idx] * (mults[idx] - 1)
        total.append(np.sum(T * w, axis=1))
    return math.fsum(np.concatenate(total).tolist()) if total else 0.0


def var_fixed_bounded(model, n, tol=1e-8):
    """``(V_n, bound)``; raises :class:`AccuracyError` if the bound exceeds ``tol``."""
    _require_normalized(model)
    n = _check_n(n)
    if n <= 1:
        return 0.0, 0.0
    phi_n, b1 = phi_fixed_bounded(model, n)
    phi_2n, b2 = phi_fixed_bounded(model, 2 * n)
    phi_n1, _ = phi_fixed_r_bounded(model, n, 1)
    # |a^n - b^n| <= n p_i p_j a^(n-1); summing j beyond the head gives 2 tail Phi_{n,1}
    J, b3 = _pair_blocks(model, lambda J, tail: 2.0 * tail * (phi_n1 + 1e-300), tol)
    values, mults = model.blocks(J)

    def term(pi, pj):
        with np.errstate(divide="ignore", invalid="ignore"):
            la = n * (np.log1p(-pi) + np.log1p(-pj))
            a = (1 - pi) * (1 - pj)
            ratio = np.where(a > 0, np.clip(pi * pj / a, 0.0, 1.0), 1.0)
            return np.where(a > 0, -np.exp(la) * -np.expm1(n * np.log1p(-ratio)), 0.0)
    cross = _pair_sum(values, mults, term)
    return phi_2n - phi_n + cross, b1 + b2 + b3


def var_fixed(model, n, tol=1e-8):
    """Variance of the number of occupied boxes after ``n`` balls."""
    return var_fixed_bounded(model, n, tol)[0]


def var_fixed_r_bounded(model, n, r, tol=1e-8):
    _require_normalized(model)
    n = _check_n(n)
    r = _check_r(r, n)
    phi, b1 = phi_fixed_r_bounded(model, n, r)
    phi2, b2 = phi_fixed_r_bounded(model, 2 * n, 2 * r)
    coef = math.exp(2 * _log_binom(n, r) - _log_binom(2 * n, 2 * r))
    lc = _log_binom(n, r)
    lcc = _log_binom(n - r, r) if 2 * r <= n else None

    def tail_bound(J, tail):
        q = float(model.blocks(J)[0][-1])
        T = math.exp(lc + (r - 1) * math.log(min(q, 1.0))) * tail
        return 2.0 * (phi + n / r) * T

    J, b3 = _pair_blocks(model, tail_bound, tol)
    values, mults = model.blocks(J)

    def term(pi, pj):
        with np.errstate(divide="ignore", invalid="ignore"):
            base = lc + r * (np.log(pi) + np.log(pj))
            second = np.exp(base + lc + special.xlog1py(n - r, -pi) + special.xlog1py(n - r, -pj))
            if lcc is None:
                return -second
            b = np.clip(1.0 - pi - pj, 0.0, 1.0)
            first = np.exp(base + lcc + special.xlogy(n - 2 * r, b))
            return first - second
    cross = _pair_sum(values, mults, term)
    return phi - coef * phi2 + cross, b1 + coef * b2 + b3


def var_fixed_r(model, n, r, tol=1e-8):
    """Variance of the number of boxes holding exactly ``r`` of ``n`` balls."""
    return var_fixed_r_bounded(model, n, r, tol)[0]


# ---------------------------------------------------------------------------
# poissonized scheme
# ---------------------------------------------------------------------------
def _check_t(t):
    if not t >= 0 or not math.isfinite(t):
        raise ParameterDomainError(f"time must be finite and nonnegative, got {t}")
    return float(t)


def phi_poisson_bounded(model, t):
    t = _check_t(t)
    if t == 0:
        return 0.0, 0.0
    return model.sum_f(lambda p: -np.expm1(-t * p), lambda q: t, p_crit=1.0 / t)


def phi_poisson(model, t):
    """``Phi(t) = sum_j 1 - exp(-t p_j)``."""
    return phi_poisson_bounded(model, t)[0]


def phi_poisson_r_bounded(model, t, r):
    t = _check_t(t)
    r = _check_r(r)
    if t == 0:
        return 0.0, 0.0
    lg = special.gammaln(r + 1)

    def f(p):
        with np.errstate(divide="ignore"):
            return np.exp(r * np.log(t * p) - t * p - lg)
    return model.sum_f(f, lambda q: math.exp(r * math.log(t) + (r - 1) * math.log(q) - lg),
                       p_crit=1.0 / t)


def phi_poisson_r(model, t, r):
    """``Phi_r(t) = t**r / r! sum_j p_j**r exp(-t p_j)``."""
    return phi_poisson_r_bounded(model, t, r)[0]


def var_poisson_bounded(model, t):
    a, ba = phi_poisson_bounded(model, 2 * t)
    b, bb = phi_poisson_bounded(model, t)
    return a - b, ba + bb


def var_poisson(model, t):
    """``V(t) = Phi(2t) - Phi(t)``."""
    return var_poisson_bounded(model, t)[0]


def var_poisson_direct(model, t):
    """``V(t)`` as ``sum_j exp(-t p_j) - exp(-2 t p_j)``."""
    t = _check_t(t)
    if t == 0:
        return 0.0
    return model.sum_f(lambda p: np.exp(-t * p) * -np.expm1(-t * p), lambda q: t,
                       p_crit=1.0 / t)[0]


def var_poisson_r(model, t, r):
    """``V_r(t) = Phi_r(t) - 4**-r C(2r, r) Phi_2r(2t)``."""
    r = _check_r(r)
    coef = special.comb(2 * r, r, exact=False) * 4.0 ** -r
    return phi_poisson_r(model, t, r) - coef * phi_poisson_r(model, 2 * t, 2 * r)


def cov_poisson(model, t, r, s):
    """``Cov[K_r(t), K_s(t)]``; equal indices give the variance."""
    r = _check_r(r)
    s = _check_r(s)
    if r == s:
        return var_poisson_r(model, t, r)
    coef = special.comb(r + s, r, exact=False) * 2.0 ** -(r + s)
    return -coef * phi_poisson_r(model, 2 * t, r + s)


@dataclass
class MomentReport:
    scheme: str
    param: float
    phi: float
    phi_r: dict = field(default_factory=dict)
    var: float = None
    var_r: dict = field(default_factory=dict)
    cov: dict = field(default_factory=dict)
    truncation_bound: float = 0.0

    def to_dict(self):
        return {
            "scheme": self.scheme, "param": self.param, "phi": self.phi,
            "phi_r": {str(k): v for k, v in self.phi_r.items()},
            "var": self.var,
            "var_r": {str(k): v for k, v in self.var_r.items()},
            "cov": {f"{r},{s}": v for (r, s), v in self.cov.items()},
            "truncation_bound": self.truncation_bound,
        }


def moment_report(model, n=None, t=None, rs=(1, 2, 3), tol=1e-8):
    """Collect means, variances and (Poisson only) covariances in one report."""
    if (n is None) == (t is None):
        raise ParameterDomainError("give exactly one of n or t")
    if n is not None:
        phi, bound = phi_fixed_bounded(model, n)
        rs = [r for r in rs if r <= n]
        phi_r, var_r = {}, {}
        for r in rs:
            v, b = phi_fixed_r_bounded(model, n, r)
            phi_r[r] = v
            bound += b
        var, b = var_fixed_bounded(model, n, tol)
        bound += b
        for r in rs:
            v, b = var_fixed_r_bounded(model, n, r, tol)
            var_r[r] = v
            bound += b
        return MomentReport("fixed", n, phi, phi_r, var, var_r, {}, bound)
    phi, bound = phi_poisson_bounded(model, t)
    phi_r = {r: phi_poisson_r(model, t, r) for r in rs}
    var, b = var_poisson_bounded(model, t)
    var_r = {r: var_poisson_r(model, t, r) for r in rs}
    cov = {(r, s): cov_poisson(model, t, r, s) for r in rs for s in rs if r < s}
    return MomentReport("poisson", t, phi, phi_r, var, var_r, cov, bound + b)


# ---------------------------------------------------------------------------
# depoissonization
# ---------------------------------------------------------------------------
@dataclass
class GapReport:
    n: int
    gaps: dict
    bounds: dict

    @property
    def violations(self):
        return [k for k, g in self.gaps.items()
                if g is not None and not g <= self.bounds[k]]

    @property
    def ok(self):
        return not self.violations


def depoissonization_gap(model, n, rs=(1, 2), with_variance=True, tol=1e-8):
    """Gaps between poissonized and fixed-n moments at ``t = n`` and their bounds.

    Keys: ``phi``, ``phi_r{r}``, ``var`` and ``var_r{r}``.  Variance gaps are
    ``None`` when the fixed-n variance cannot be evaluated to ``tol``.
    """
    _require_normalized(model)
    n = _check_n(n)
    if n < 2:
        raise ParameterDomainError("depoissonization gaps need n >= 2")
    P = {r: phi_poisson_r(model, n, r) for r in set(rs) | {1, 2} | {r + 1 for r in rs}
         | {r + 2 for r in rs}}
    gaps, bounds = {}, {}
    gaps["phi"] = abs(phi_poisson(model, n) - phi_fixed(model, n))
    bounds["phi"] = 2.0 / n * P[2]
    c = GAP_CONSTANTS
    for r in rs:
        gaps[f"phi_r{r}"] = abs(P[r] - phi_fixed_r(model, n, r))
        bounds[f"phi_r{r}"] = c["phi_r"] / n * max(P[r], P[r + 2])
    if with_variance:
        try:
            vn = var_fixed(model, n, tol)
        except AccuracyError:
            vn = None
        gaps["var"] = None if vn is None else abs(var_poisson(model, n) - vn)
        bounds["var"] = c["var"] / n * max(P[1], P[1] ** 2)
        for r in rs:
            try:
                vnr = var_fixed_r(model, n, r, tol)
            except AccuracyError:
                vnr = None
            gaps[f"var_r{r}"] = None if vnr is None else abs(var_poisson_r(model, n, r) - vnr)
            p2r = phi_poisson_r(model, 2 * n, 2 * r)
            bounds[f"var_r{r}"] = c["var_r"] / n * max(P[r] ** 2, P[r + 1] ** 2, P[r + 1],
                                                        P[r + 2], p2r)
    return GapReport(n, gaps, bounds)


def poissonization_check(model, t, n_max, tol=1e-6):
    """``(residual, tail_bound)`` for ``Phi(t) = sum_n e^-t t^n/n! Phi_n``.

    The neglected terms are bounded by ``t P(N >= n_max)`` because
    ``Phi_n <= n``.  Raises :class:`AccuracyError` if that exceeds ``tol``.
    """
    _require_normalized(model)
    t = _check_t(t)
    n_max = _check_n(n_max)
    tail = t * float(stats.poisson.sf(n_max - 1, t)) if t > 0 else 0.0
    if tail > tol:
        raise AccuracyError(f"n_max={n_max} leaves Poisson tail bound {tail:.3g} > {tol:.3g}")
    ns = np.arange(n_max + 1)
    w = stats.poisson.pmf(ns, t) if t > 0 else (ns == 0).astype(float)
    phis = [0.0] + [phi_fixed(model, int(k)) for k in ns[1:]]
    mix = math.fsum((w * np.array(phis)).tolist())
    return abs(phi_poisson(model, t) - mix), tail


# ---------------------------------------------------------------------------
# exact distribution of K_n
# ---------------------------------------------------------------------------
@dataclass
class ExactDistribution:
    n: int
    support: np.ndarray
    pmf: np.ndarray

    @property
    def mean(self):
        return float(np.dot(self.support, self.pmf))

    @property
    def var(self):
        m = self.mean
        return float(np.dot((self.support - m) ** 2, self.pmf))

    def as_dict(self):
        return {int(k): float(p) for k, p in zip(self.support, self.pmf) if p > 0}


def exact_k_distribution(model, J, n):
    """Law of the number of distinct boxes among the first ``J`` after ``n`` balls.

    Boxes beyond ``J`` are merged into one residual box that is not counted.
    Box ``j`` receives a binomial share of the balls still unplaced, so the
    recursion runs on (balls left, boxes occupied).
    """
    _require_normalized(model)
    n = _check_n(n)
    if J * n * n > 1e7:
        raise GuardExceededError(f"J*n^2 = {J * n * n} exceeds the 1e7 guard")
    p = model.ranked(J)
    J = len(p)
    residual = max(model.mass - math.fsum(p.tolist()), 0.0)
    kmax = min(J, n)
    dp = np.zeros((n + 1, kmax + 1))
    dp[n, 0] = 1.0
    remaining = math.fsum(p.tolist()) + residual
    m = np.arange(n + 1)
    for pj in p:
        pi = min(pj / remaining, 1.0) if remaining > 0 else 1.0
        # T[m, x] = P(box takes x of the m balls left)
        T = stats.binom.pmf(m[None, :], m[:, None], pi)
        new = np.zeros_like(dp)
        # x = 0 keeps k; x > 0 bumps k
        new += dp * T[:, 0:1]
        for mm in range(1, n + 1):
            row = dp[mm]
            if not row.any():
                continue
            take = T[mm, 1:mm + 1]  # x = 1..mm
            left = mm - np.arange(1, mm + 1)
            new[left, 1:] += take[:, None] * row[None, :-1]
        dp = new
        remaining -= pj
        remaining = max(remaining, 0.0)
    if residual <= 0:
        pmf = dp[0]
    else:
        pmf = dp.sum(axis=0)
    return ExactDistribution(n, np.arange(kmax + 1), pmf)


# ---------------------------------------------------------------------------
# tau function and variance diagnostics
# ---------------------------------------------------------------------------
@dataclass
class TauSolution:
    t: float
    tau: float
    residual: float
    variance: float


def solve_tau(model, t):
    """Solve ``V(t) = t sum_j p_j exp(-tau p_j)`` for ``tau`` in ``(t, 2t)``."""
    t = _check_t(t)
    if t <= 0:
        raise ParameterDomainError("solve_tau needs t > 0")
    V = var_poisson(model, t)
    if not V > VAR_FLOOR or V < 1e-14 * max(phi_poisson(model, t), 1.0):
        raise DegenerateVarianceError(f"V({t}) = {V!r} is below the numeric floor")

    def F(tau):
        return t * model.sum_f(lambda p: p * np.exp(-tau * p), lambda q: 1.0,
                               p_crit=1.0 / tau)[0]
    lo, hi = t, 2.0 * t
    tau = 0.5 * (lo + hi)
    res = F(tau) - V
    for _ in range(TAU_MAX_STEPS):
        if abs(res) <= TAU_RTOL * V:
            break
        if res > 0:
            lo = tau
        else:
            hi = tau
        tau = 0.5 * (lo + hi)
        res = F(tau) - V
    return TauSolution(t, tau, abs(res), V)


HOLDS = "holds-on-grid"
FAILS = "fails-on-grid"
INCONCLUSIVE = "inconclusive"


@dataclass
class Verdict:
    status: str
    evidence: dict

    def __bool__(self):
        return self.status == HOLDS


@dataclass
class VarianceDiagnosis:
    nabla_growth: Verdict
    ratio_liminf: Verdict
    local_tail_ratio: Verdict
    limit_k: int = None
    bound_k: int = None
    limit_evidence: dict = None
    bound_evidence: dict = None

    @property
    def variance_diverges(self):
        verdicts = (self.nabla_growth, self.ratio_liminf, self.local_tail_ratio)
        if any(v.status == HOLDS for v in verdicts):
            return HOLDS
        if self.bound_k is not None:
            return FAILS
        return INCONCLUSIVE

    @property
    def predicted_limit(self):
        return self.limit_k

    def summary(self):
        return {
            "nabla_growth": self.nabla_growth.status,
            "ratio_liminf": self.ratio_liminf.status,
            "local_tail_ratio": self.local_tail_ratio.status,
            "limit_k": self.limit_k, "bound_k": self.bound_k,
            "variance_diverges": self.variance_diverges,
        }


def _growth_verdict(series, grows_factor=4.0):
    s = np.asarray(series, dtype=float)
    m = max(len(s) // 3, 1)
    first, last = s[:m], s[-m:]
    if last.min() > first.max() and s[-1] >= grows_factor * max(s[0], 1.0):
        return HOLDS
    if last.max() <= first.max():
        return FAILS
    return INCONCLUSIVE


def diagnose_variance(model, depth=2048, k_max=8, limit_tol=1e-3):
    """Grid evaluation of the sufficient and characterizing variance criteria.

    ``depth`` ranked frequencies are examined.  Criteria: growth of
    ``delta_nu`` on a dyadic grid, ``liminf p_{j+k}/p_j >= 1/2`` for every
    ``k <= k_max``, decay of ``p_j / sum_{i >= j} p_i``, the smallest ``k``
    with ``p_{j+k}/p_j -> 1/2`` (limit of the variance) and the smallest ``k``
    with ``p_{j+k}/p_j <= 1/2`` throughout (bound on the variance).
    """
    p = model.ranked(depth + k_max)
    p = p[p > 1e-280]
    depth = len(p) - k_max
    if depth < 8:
        raise ParameterDomainError("too few frequencies for a diagnosis")
    # (i) delta_nu on a dyadic grid
    xs = p[0] * 2.0 ** -np.arange(0, max(int(math.log2(p[0] / p[depth - 1])), 1) + 1)
    nab = [delta_nu(model, float(x)) for x in xs]
    v1 = Verdict(_growth_verdict(nab), {"x": xs.tolist(), "delta_nu": nab})
    # (ii) liminf of p_{j+k}/p_j over the second half
    half = np.arange(depth // 2, depth)
    mins = {k: float(np.min(p[half + k] / p[half])) for k in range(1, k_max + 1)}
    if all(v >= 0.5 for v in mins.values()):
        s2 = HOLDS
    elif any(v < 0.5 - 1e-9 for v in mins.values()):
        s2 = FAILS
    else:
        s2 = INCONCLUSIVE
    v2 = Verdict(s2, {"min_ratio": mins})
    # (iii) p_j / sum_{i >= j} p_i on a log grid of j
    js = np.unique(np.geomspace(1, depth, 16).astype(int))
    ratios = [float(p[j - 1] / model.tail_sum(int(j) - 1)) for j in js]
    r = np.asarray(ratios)
    m = max(len(r) // 3, 1)
    if r[-1] <= 0.1 * r[0] and r[-m:].max() < r[:m].min():
        s3 = HOLDS
    elif r[-1] >= 0.5 * r[0]:
        s3 = FAILS
    else:
        s3 = INCONCLUSIVE
    v3 = Verdict(s3, {"j": js.tolist(), "ratio": ratios})
    # limit and bound candidates
    window = np.arange(3 * depth // 4, depth)
    limit_k, limit_ev = None, {}
    bound_k, bound_ev = None, {}
    for k in range(1, k_max + 1):
        rk = p[window + k] / p[window]
        dev = float(np.max(np.abs(rk - 0.5)))
        limit_ev[k] = dev
        if limit_k is None and dev <= limit_tol:
            limit_k = k
        allr = float(np.max(p[k:depth + k] / p[:depth]))
        bound_ev[k] = allr
        if bound_k is None and allr <= 0.5 + 1e-12:
            bound_k = k
    return VarianceDiagnosis(v1, v2, v3, limit_k, bound_k, limit_ev, bound_ev)
