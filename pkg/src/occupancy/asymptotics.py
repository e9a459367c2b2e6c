"""Asymptotic predictions under regular variation of the frequency tail.

With ``nu_bar(x) ~ ell(1/x) x**-alpha`` the mean occupancy counts, discovery
times and unseen masses have closed-form leading terms.  Inverse (frequency
side) quantities go through the numeric inverse ``g`` of
``h(y) = y**alpha ell(y)``, so ``p_j ~ 1/g(j)`` and
``ell*(k) = k**(1/alpha) / g(k)``.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .errors import ParameterDomainError, UnsupportedSpecError
from .regvar import RegularVariationSpec, SlowVariation

INVERSE_RTOL = 1e-12


def gamma(x):
    return float(special.gamma(x))


def _require_proper(spec):
    if spec.regime != "proper":
        raise UnsupportedSpecError(f"needs 0 < alpha < 1, got alpha={spec.alpha}")


def _check_proper_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise UnsupportedSpecError(f"needs 0 < alpha < 1, got alpha={alpha}")


# ---------------------------------------------------------------------------
# mean counts
# ---------------------------------------------------------------------------
def predict_mean(spec, t, r=0):
    """Leading term of ``Phi(t)`` (``r = 0``) or ``Phi_r(t)``."""
    if int(r) != r or r < 0:
        raise ParameterDomainError("r must be a nonnegative integer")
    a = spec.alpha
    ell = spec.ell
    if spec.regime == "proper":
        base = t ** a * float(ell(t))
        if r == 0:
            return gamma(1 - a) * base
        return a * gamma(r - a) * base / math.factorial(r)
    if spec.regime == "rapid":
        if r <= 1:
            return t * float(spec.ell_1(t))
        return t * float(ell(t)) / (r * (r - 1))
    if r == 0:
        return float(ell(t))
    return float(spec.ell_0(t)) / r


def ratio_limit(alpha, r):
    """``lim Phi_r(t)/Phi(t) = alpha Gamma(r - alpha) / (r! Gamma(1 - alpha))``."""
    _check_proper_alpha(alpha)
    if int(r) != r or r < 1:
        raise ParameterDomainError("r must be a positive integer")
    return float(np.exp(math.log(alpha) + special.gammaln(r - alpha)
                        - special.gammaln(r + 1) - special.gammaln(1 - alpha)))


def ratio_limit_remainder(alpha, R):
    """``sum_{r > R} ratio_limit(alpha, r) = Gamma(R+1-alpha) / (Gamma(1-alpha) R!)``."""
    _check_proper_alpha(alpha)
    return float(np.exp(special.gammaln(R + 1 - alpha) - special.gammaln(1 - alpha)
                        - special.gammaln(R + 1)))


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------
def asymptotic_inverse(h, y, y_min=1.0, rtol=INVERSE_RTOL, max_doublings=2000):
    """``g(y)`` with ``h(g(y)) = y`` for ``h`` increasing on ``[y_min, inf)``.

    Bisection on ``log x`` after growing the bracket geometrically.
    """
    y = float(y)
    lo = math.log(y_min)
    if not h(y_min) < y:
        raise ParameterDomainError(f"h(y_min) = {h(y_min)!r} is not below the target {y!r}")
    log_max = math.log(np.finfo(float).max)
    step = 1.0
    hi = min(lo + step, log_max)
    for _ in range(max_doublings):
        try:
            if h(math.exp(hi)) >= y:
                break
        except OverflowError:
            raise ParameterDomainError("no bracket found for the inverse") from None
        if hi >= log_max:
            raise ParameterDomainError("no bracket found below the float range")
        lo = hi
        step *= 2.0
        hi = min(lo + step, log_max)
    else:
        raise ParameterDomainError("no bracket found for the inverse")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        x = math.exp(mid)
        v = h(x)
        if abs(v - y) <= rtol * y:
            return x
        if v < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(abs(hi), 1.0):
            break
    return math.exp(0.5 * (lo + hi))


def de_bruijn_conjugate(ell, z, y_min=None):
    """Numeric ``ell#(z) = 1/ell(x)`` where ``x ell(x) = z``."""
    y_min = ell.y_min if y_min is None and hasattr(ell, "y_min") else (y_min or 1.0)
    x = asymptotic_inverse(lambda u: u * float(ell(u)), z, y_min)
    return 1.0 / float(ell(x))


def tail_inverse(spec, z):
    """Inverse ``g`` of ``h(y) = y**alpha ell(y)`` at ``z`` (``p_j ~ 1/g(j)``)."""
    _require_proper(spec)
    ell = spec.ell
    if ell.is_constant:
        return (z / ell.C) ** (1.0 / spec.alpha)
    a = spec.alpha
    if ell.is_log_power:
        y_min = math.exp(max(1.0, 2.0 * abs(ell.beta) / a))
    else:
        y_min = ell.y_min
    return asymptotic_inverse(lambda y: y ** a * float(ell(y)), z, y_min)


def ell_star(spec, k, closed=False):
    """Slowly varying factor of the ranked frequencies, ``p_j ~ ell*(j) j**(-1/alpha)``.

    The default evaluates ``k**(1/alpha) / g(k)`` by numeric inversion; with
    ``closed=True`` the leading-order log-power formula is used instead.
    """
    _require_proper(spec)
    if closed or spec.ell.is_constant:
        return float(spec.ell_star_closed()(k))
    return k ** (1.0 / spec.alpha) / tail_inverse(spec, k)


# ---------------------------------------------------------------------------
# discovery, unseen mass and residual tails
# ---------------------------------------------------------------------------
def predict_discovery(spec, k):
    """Leading term of the discovery times ``N_k`` and ``T_k``.

    Equals ``(k/G)**(1/alpha) / ell*(k/G)`` with ``G = Gamma(1-alpha)``, i.e.
    the time at which the predicted mean count reaches ``k``.
    """
    _require_proper(spec)
    return tail_inverse(spec, k / gamma(1 - spec.alpha))


def predict_unseen(spec, n):
    """Leading term of the expected unseen mass after ``n`` balls."""
    _require_proper(spec)
    a = spec.alpha
    return a * gamma(1 - a) * n ** (a - 1) * float(spec.ell(n))


def predict_residual(spec, k, closed=False):
    """Leading term of the undiscovered mass ``R_k`` after ``k`` discoveries."""
    _require_proper(spec)
    a = spec.alpha
    return a * gamma(1 - a) ** (1 / a) * k ** (1 - 1 / a) * ell_star(spec, k, closed)


def predict_tail_sum(spec, k, closed=False):
    """Leading term of ``sum_{j > k} p_j`` over the ranked frequencies."""
    _require_proper(spec)
    a = spec.alpha
    return a / (1 - a) * ell_star(spec, k, closed) * k ** (1 - 1 / a)


def size_biased_ratio_limit(alpha):
    """``lim R_k / sum_{j>k} p_j = Gamma(2-alpha)**(1/alpha) (1-alpha)**(1-1/alpha)``."""
    _check_proper_alpha(alpha)
    return gamma(2 - alpha) ** (1 / alpha) * (1 - alpha) ** (1 - 1 / alpha)


# ---------------------------------------------------------------------------
# power laws parametrized by the diversity
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PowerLawDiversity:
    D: float
    alpha: float

    def __post_init__(self):
        if not self.D > 0:
            raise ParameterDomainError("diversity must be positive")
        _check_proper_alpha(self.alpha)

    @classmethod
    def from_constant(cls, alpha, c):
        """Diversity of ``p_j ~ c j**(-1/alpha)``: ``D = Gamma(1-alpha) c**alpha``."""
        return cls(gamma(1 - alpha) * c ** alpha, alpha)

    @property
    def spec(self):
        a = self.alpha
        return RegularVariationSpec(a, SlowVariation(self.D / gamma(1 - a), 0.0))


def count_coefficient(alpha, r):
    """``alpha (1-alpha) ... (r-1-alpha) / r!``."""
    return float(alpha * np.prod([j - alpha for j in range(1, r)]) / math.factorial(r))


def power_law_predictions(D, alpha, n, k, r_max=3):
    """Prediction bundle for ``K_n ~ D n**alpha``."""
    pld = PowerLawDiversity(D, alpha)
    a = pld.alpha
    G = gamma(1 - a)
    na = n ** a
    return {
        "D": D, "alpha": a, "n": n, "k": k,
        "K_n": D * na,
        "nu_bar_coefficient": D / G,
        "p_coefficient": (D / G) ** (1 / a),
        "p_k": (D / G) ** (1 / a) * k ** (-1 / a),
        "K_nr": {r: count_coefficient(a, r) * D * na for r in range(1, r_max + 1)},
        "residual_k": a * D ** (1 / a) * k ** (1 - 1 / a),
    }


# ---------------------------------------------------------------------------
# limit covariance and index estimation
# ---------------------------------------------------------------------------
@dataclass
class LimitCovariance:
    alpha: float
    sigma: np.ndarray

    def __getitem__(self, rs):
        r, s = rs
        return float(self.sigma[r - 1, s - 1])


def limit_covariance(alpha, r_max=3):
    """Limit of ``Cov[K_r(t), K_s(t)] / (t**alpha ell(t))``, ``1 <= r, s <= r_max``."""
    _check_proper_alpha(alpha)
    a = alpha
    S = np.empty((r_max, r_max))
    for r in range(1, r_max + 1):
        for s in range(1, r_max + 1):
            v = -a * gamma(r + s - a) * 2.0 ** (a - r - s) / (math.factorial(r) * math.factorial(s))
            if r == s:
                v += a * gamma(r - a) / math.factorial(r)
            S[r - 1, s - 1] = v
    return LimitCovariance(alpha, S)


def estimate_alpha(state):
    """Singleton ratio ``K_{n,1} / K_n``."""
    if state.K == 0:
        raise ParameterDomainError("cannot estimate the index from an empty state")
    return state.K_r(1) / state.K
