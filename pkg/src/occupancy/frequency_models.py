"""Frequency sequences ``p_1 >= p_2 >= ... > 0`` and their counting measures.

Every model exposes its atoms as *blocks*: a nonincreasing array of distinct
values together with integer multiplicities.  Sums ``sum_j f(p_j)`` over the
infinite sequence are evaluated by :meth:`FrequencyModel.sum_f`, which adds the
head blocks exactly and controls the remainder with the bound
``sup_{p <= p_J} f(p)/p * sum_{j>J} p_j``.  Families with a smooth index
function (power laws and other regularly varying constructions) replace the
remainder by an Euler-Maclaurin evaluation of the tail integral.

Constructors
------------
make_geometric, make_power_law, make_slow_variation, make_rapid,
make_block, make_explicit, realize_stick_breaking

Measures
--------
tail_count (nu_bar), nu_r_mass (nu_r[0, x]), delta_nu, tail_sum
"""
from dataclasses import dataclass
import json
import math
import threading

import numpy as np
from scipy import integrate, special

from ._rng import stream
from .errors import (DepthExhaustedError, DivergenceError, ParameterDomainError)
from .regvar import RegularVariationSpec, SlowVariation

EPS_TRUNC = 1e-9
HEAD_MIN = 1 << 16
SUM_CAP = 1 << 24
SAMPLE_HEAD = 1 << 20
MAX_BOX_ID = 1 << 62


def _fsum(a):
    return math.fsum(np.asarray(a, dtype=float).ravel().tolist())


class FrequencyModel:
    """Base class.  Subclasses are immutable after construction."""

    kind = "abstract"
    n_blocks = None  # number of blocks, None when infinite

    def __init__(self, params, mass):
        self.params = dict(params)
        self.mass = float(mass)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"<{self.kind} {args}>"

    @property
    def normalized(self):
        return abs(self.mass - 1.0) <= 1e-12

    @property
    def normalization(self):
        return self.mass

    @property
    def p1(self):
        return float(self.blocks(1)[0][0])

    # -- block access ------------------------------------------------------
    def blocks(self, J):
        """First ``J`` blocks as ``(values, multiplicities)`` float arrays."""
        raise NotImplementedError

    def tail_mass(self, J):
        """Total mass carried by blocks beyond the first ``J``."""
        raise NotImplementedError

    def ranked(self, J):
        """First ``J`` atoms in nonincreasing order, multiplicities expanded."""
        values, mults = self.blocks(J)
        reps = np.minimum(mults, J).astype(np.int64)
        return np.repeat(values, reps)[:J]

    @property
    def rv(self):
        """Regular-variation spec satisfied by the model, when known."""
        return None

    # -- summation ---------------------------------------------------------
    def sum_f(self, f, ratio_bound, p_crit=None, eps=EPS_TRUNC, cap=SUM_CAP):
        """Return ``(sum_j f(p_j), error_bound)``.

        ``f`` is vectorized in ``p`` with ``f(0) = 0``; ``ratio_bound(q)``
        must dominate ``f(p)/p`` for all ``p <= q``.  ``p_crit`` is ignored by
        enumerated models.
        """
        J = 64
        nb = self.n_blocks
        while True:
            if nb is not None and J >= nb:
                J = nb
                break
            tail = self.tail_mass(J)
            if tail <= 0:
                break
            q = self._tail_ceiling(J)
            if ratio_bound(q) * tail <= eps or J >= cap:
                break
            J *= 2
        values, mults = self.blocks(J)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
            terms = mults * f(values)
        value = _fsum(terms)
        tail = self.tail_mass(J)
        bound = ratio_bound(self._tail_ceiling(J)) * tail if tail > 0 else 0.0
        return value, bound

    def _tail_ceiling(self, J):
        # largest value an atom beyond block J can take
        return float(self.blocks(J)[0][-1])

    # -- measures ----------------------------------------------------------
    def _count_ge(self, x):
        J = 64
        while True:
            values, mults = self.blocks(J)
            if values[-1] < x or (self.n_blocks is not None and J >= self.n_blocks):
                break
            J *= 2
        keep = values >= x
        return sum(int(m) for m in mults[keep])

    def tail_count(self, x):
        return self._count_ge(x)

    def nu_r_mass(self, r, x):
        xr1 = x ** (r - 1)
        value, _ = self.sum_f(lambda p: np.where(p <= x, p ** r, 0.0),
                              lambda q: xr1 if q > x else q ** (r - 1))
        return value

    def tail_sum(self, k):
        if k == 0:
            return self.mass
        values, mults = self.blocks(64)
        J = 64
        while np.sum(mults) < k and (self.n_blocks is None or J < self.n_blocks):
            J *= 2
            values, mults = self.blocks(J)
        cum = np.cumsum(mults)
        b = int(np.searchsorted(cum, k, side="left"))
        if b >= len(values):
            return self.tail_mass(len(values))
        left_in_block = cum[b] - k
        return float(left_in_block * values[b]) + self.tail_mass(b + 1)

    # -- sampling ----------------------------------------------------------
    def draw(self, size, rng):
        """Box ids (1-based, native labeling) of ``size`` independent balls."""
        raise NotImplementedError

    def prob(self, ids):
        """Frequencies of the boxes with the given native ids."""
        raise NotImplementedError

    def prepare_sampling(self, n):
        """Hook to materialize enough atoms before throwing ``n`` balls."""


# ---------------------------------------------------------------------------
# geometric
# ---------------------------------------------------------------------------
class GeometricModel(FrequencyModel):
    kind = "geometric"

    def __init__(self, q):
        super().__init__({"q": q}, 1.0)
        self.q = float(q)
        self._logq = math.log(self.q)

    def blocks(self, J):
        j = np.arange(J, dtype=float)
        return (1.0 - self.q) * self.q ** j, np.ones(J)

    def tail_mass(self, J):
        return self.q ** J

    @property
    def rv(self):
        return RegularVariationSpec(0.0, SlowVariation(1.0 / -self._logq, 1.0))

    def tail_count(self, x):
        if x > 1.0 - self.q:
            return 0
        k = int(math.floor(math.log(x / (1.0 - self.q)) / self._logq)) + 1
        while (1.0 - self.q) * self.q ** k >= x:
            k += 1
        while k > 0 and (1.0 - self.q) * self.q ** (k - 1) < x:
            k -= 1
        return k

    def nu_r_mass(self, r, x):
        # first atom with p_j <= x
        j1 = self._count_gt(x) + 1
        return (1.0 - self.q) ** r * self.q ** (r * (j1 - 1)) / (1.0 - self.q ** r)

    def _count_gt(self, x):
        k = self.tail_count(x)
        while k > 0 and (1.0 - self.q) * self.q ** (k - 1) <= x:
            k -= 1
        return k

    def tail_sum(self, k):
        return self.q ** k

    def draw(self, size, rng):
        u = rng.random(size)
        j = np.ceil(np.log1p(-u) / self._logq)
        return np.maximum(j, 1).astype(np.int64)

    def prob(self, ids):
        return (1.0 - self.q) * self.q ** (np.asarray(ids, dtype=float) - 1)


def make_geometric(q):
    """Geometric frequencies ``p_j = (1-q) q**(j-1)``."""
    if not 0.0 < q < 1.0:
        raise ParameterDomainError(f"geometric ratio must lie in (0, 1), got {q}")
    return GeometricModel(q)


# ---------------------------------------------------------------------------
# smooth index families
# ---------------------------------------------------------------------------
class _SmoothModel(FrequencyModel):
    """Models with ``p_j = p(j)`` for a smooth, decreasing, convex ``p(x)``."""

    def p_cont(self, x):
        raise NotImplementedError

    def _index_below(self, p):
        """Smallest ``j`` with ``p_j <= p``."""
        raise NotImplementedError

    def blocks(self, J):
        x = np.arange(1, J + 1, dtype=float)
        return self.p_cont(x), np.ones(J)

    def _head(self, J):
        cache = self.__dict__.setdefault("_head_cache", {})
        if J not in cache:
            if len(cache) > 4:
                cache.clear()
            cache[J] = self.blocks(J)[0]
        return cache[J]

    def _euler_maclaurin_tail(self, g, J):
        """``sum_{j > J} g(j)`` with an error bound, ``g`` convex decreasing."""
        def integrand(u):
            if u > 690.0:
                return 0.0
            x = J * math.exp(u)
            return float(g(np.array([x]))[0]) * x
        with np.errstate(all="ignore"):
            integral, qerr = integrate.quad(integrand, 0.0, np.inf, limit=400,
                                            epsabs=1e-300, epsrel=1e-13)
            h = J * 1e-3
            gJ = float(g(np.array([float(J)]))[0])
            gp = float((g(np.array([J + h])) - g(np.array([J - h])))[0]) / (2 * h)
        tail = integral - gJ / 2.0 - gp / 12.0
        return tail, abs(gp) / 12.0 * 1.01 + abs(qerr)

    def sum_f(self, f, ratio_bound, p_crit=None, eps=EPS_TRUNC, cap=SUM_CAP):
        J = HEAD_MIN
        if p_crit is not None and p_crit > 0:
            J = max(J, self._index_below(p_crit))
        J = min(J, cap)
        head = self._head(J)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
            value = _fsum(f(head))
        tail, bound = self._euler_maclaurin_tail(lambda x: f(self.p_cont(x)), J)
        return value + tail, bound

    def tail_mass(self, J):
        return self._suffix_sum(J + 1, lambda p: p)

    def _suffix_sum(self, j1, f):
        """``sum_{j >= j1} f(p_j)`` for ``f`` increasing with ``f(0) = 0``."""
        J = max(j1 - 1, HEAD_MIN)
        head = 0.0
        if J >= j1:
            head = _fsum(f(self.p_cont(np.arange(j1, J + 1, dtype=float))))
        tail, _ = self._euler_maclaurin_tail(lambda x: f(self.p_cont(x)), J)
        return head + tail

    def tail_count(self, x):
        if x <= 0:
            raise ParameterDomainError("tail_count needs x > 0")
        j = self._index_below(x)  # p_j <= x
        # count of p_j >= x
        while j >= 1 and self.p_cont(np.array([float(j)]))[0] < x:
            j -= 1
        while self.p_cont(np.array([float(j + 1)]))[0] >= x:
            j += 1
        return j

    def nu_r_mass(self, r, x):
        j1 = self._index_below(x)
        while j1 > 1 and self.p_cont(np.array([float(j1 - 1)]))[0] <= x:
            j1 -= 1
        return self._suffix_sum(j1, lambda p: p ** r)

    def tail_sum(self, k):
        if k == 0:
            return self.mass
        return self.tail_mass(k)

    def prob(self, ids):
        return self.p_cont(np.asarray(ids, dtype=float))

    # sampling: inverse-cdf head plus exact rejection sampling of the tail
    @property
    def _sampling_table(self):
        tab = self.__dict__.get("_cum")
        if tab is None:
            tab = self._build_cum(SAMPLE_HEAD)
            self.__dict__["_cum"] = tab
        return tab

    def _build_cum(self, J):
        p = self.blocks(J)[0] / self.mass
        cum = np.cumsum(p)
        cum = np.minimum(cum, 1.0 - self.tail_mass(J) / self.mass)
        return np.maximum.accumulate(cum)

    def draw(self, size, rng):
        cum = self._sampling_table
        u = rng.random(size)
        ids = np.searchsorted(cum, u, side="right").astype(np.int64) + 1
        J = len(cum)
        in_tail = ids > J
        if in_tail.any():
            ids[in_tail] = self._draw_tail(int(in_tail.sum()), J, rng)
        return ids

    def _draw_tail(self, size, J, rng):
        """Exact draws from ``p_j`` restricted to ``j > J`` by rejection.

        A continuous proposal with density proportional to ``p(x)`` on
        ``[J + 1/2, inf)`` is rounded to the nearest integer ``j`` and accepted
        with probability ``p(j) / int_{j-1/2}^{j+1/2} p``, which is at most 1
        by convexity.
        """
        out = np.empty(size, dtype=np.int64)
        filled = 0
        while filled < size:
            need = size - filled
            x = self._tail_proposal(need, J + 0.5, rng)
            j = np.floor(x + 0.5)
            acc = self.p_cont(j) / self._cell_integral(j)
            ok = rng.random(need) < acc
            j = j[ok]
            if np.any(j >= MAX_BOX_ID):
                raise DepthExhaustedError("tail draw beyond the box-id range")
            out[filled:filled + len(j)] = j.astype(np.int64)
            filled += len(j)
        return out


class PowerLawModel(_SmoothModel):
    """``p_j = c j**(-1/alpha)`` with ``c = 1/zeta(1/alpha)``."""

    kind = "power-law"

    def __init__(self, alpha):
        self.alpha = float(alpha)
        self.s = 1.0 / self.alpha
        self.c = 1.0 / float(special.zeta(self.s, 1.0))
        super().__init__({"alpha": alpha}, 1.0)

    def p_cont(self, x):
        return self.c * np.asarray(x, dtype=float) ** (-self.s)

    def _index_below(self, p):
        return max(1, int(math.ceil((self.c / p) ** self.alpha)))

    def tail_mass(self, J):
        return self.c * float(special.zeta(self.s, J + 1.0))

    def _count_gt(self, x):
        k = int(math.floor((self.c / x) ** self.alpha))
        while k >= 1 and self.c * k ** (-self.s) <= x:
            k -= 1
        while self.c * (k + 1) ** (-self.s) > x:
            k += 1
        return k

    def nu_r_mass(self, r, x):
        j1 = self._count_gt(x) + 1
        return self.c ** r * float(special.zeta(r * self.s, float(j1)))

    @property
    def rv(self):
        return RegularVariationSpec(self.alpha, SlowVariation(self.c ** self.alpha, 0.0))

    def _tail_proposal(self, size, a, rng):
        return a * rng.random(size) ** (-1.0 / (self.s - 1.0))

    def _cell_integral(self, j):
        s = self.s
        return self.c * ((j - 0.5) ** (1 - s) - (j + 0.5) ** (1 - s)) / (s - 1)


def _newton_log_inverse(z, alpha, C, beta, u_min):
    """Solve ``alpha u + beta log u = log(z/C)`` for ``u >= u_min``."""
    L = np.log(np.asarray(z, dtype=float) / C)
    u = np.maximum(L / alpha, u_min)
    for _ in range(100):
        F = alpha * u + beta * np.log(u) - L
        step = F / (alpha + beta / u)
        u_new = np.maximum(u - step, u_min)
        if np.all(np.abs(u_new - u) <= 1e-15 * np.abs(u_new)):
            u = u_new
            break
        u = u_new
    return u


def _bisect_log_inverse(z, alpha, ell, u_min):
    """Solve ``alpha u + log ell(e**u) = log z`` by vectorized bisection."""
    L = np.log(np.asarray(z, dtype=float))
    H = lambda u: alpha * u + np.log(ell(np.exp(u)))
    lo = np.full_like(L, u_min)
    hi = np.maximum(lo + 1.0, 2.0 * L / max(alpha, 1e-3))
    for _ in range(200):
        bad = H(hi) < L
        if not bad.any():
            break
        hi = np.where(bad, 2.0 * hi, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        up = H(mid) < L
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
        if np.all(hi - lo <= 1e-15 * hi):
            break
    return 0.5 * (lo + hi)


class InverseTailModel(_SmoothModel):
    """Frequencies whose tail count is exactly ``floor(h(lam/x) - h0)``.

    With ``h(y) = y**alpha ell(y)`` increasing on ``y >= y_min``, set
    ``p_j = lam / g(j + h0)`` where ``g`` inverts ``h`` and ``h0 = h(y_min)``.
    ``lam`` enforces total mass 1.  Covers log-power power laws
    (``0 < alpha < 1``), slow variation (``alpha = 0``, where ``g`` is explicit
    and ``h0 = 0``) and rapid variation (``alpha = 1``).
    """

    def __init__(self, kind, alpha, ell):
        self.kind = kind
        self.alpha = float(alpha)
        self.ell = ell
        if self.alpha == 0:
            self.u_min = 0.0
            self.h0 = 0.0
        else:
            if ell.is_log_power:
                self.u_min = max(1.0, 2.0 * abs(ell.beta) / self.alpha)
            else:
                self.u_min = math.log(ell.y_min)
            self.h0 = float(self.h(math.exp(self.u_min)))
        self.lam = 1.0
        params = {"alpha": alpha}
        if ell.is_log_power:
            params.update(C=ell.C, beta=ell.beta)
        super().__init__(params, 1.0)
        raw, _ = self.sum_f(lambda p: p, lambda q: 1.0)
        if not np.isfinite(raw) or raw <= 0:
            raise DivergenceError("frequency specification has infinite mass")
        self.lam = 1.0 / raw
        self.__dict__.pop("_head_cache", None)

    def h(self, y):
        y = np.asarray(y, dtype=float)
        return y ** self.alpha * self.ell(y)

    def g(self, z):
        z = np.asarray(z, dtype=float)
        ell = self.ell
        if self.alpha == 0:
            u = (z / ell.C) ** (1.0 / ell.beta)
        elif ell.is_log_power:
            u = _newton_log_inverse(z, self.alpha, ell.C, ell.beta, self.u_min)
        else:
            u = _bisect_log_inverse(z, self.alpha, ell, self.u_min)
        # slowly varying inverses leave the float range; inf gives p = 0
        with np.errstate(over="ignore"):
            return np.exp(u)

    def p_cont(self, x):
        return self.lam / self.g(np.asarray(x, dtype=float) + self.h0)

    def _index_below(self, p):
        # p_j <= p  <=>  j + h0 >= h(lam/p)
        y = self.lam / p
        if self.alpha > 0 and y < math.exp(self.u_min):
            return 1
        return max(1, int(math.ceil(float(self.h(y)) - self.h0)))

    @property
    def rv(self):
        if not self.ell.is_log_power:
            return RegularVariationSpec(self.alpha, SlowVariation(
                func=lambda y: self.ell(self.lam * y) * self.lam ** self.alpha, y_min=self.ell.y_min))
        return RegularVariationSpec(self.alpha, self.ell.scale(self.lam ** self.alpha))

    def _tail_proposal(self, size, a, rng):
        # invert I(x) = int_x^inf p(u) du numerically; tail draws are rare
        Ia, _ = self._integral_from(a)
        out = np.empty(size)
        for i, v in enumerate(rng.random(size)):
            target = v * Ia
            lo, hi = math.log(a), math.log(a) + 1.0
            while self._integral_from(math.exp(hi))[0] > target:
                hi = 2.0 * hi
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if self._integral_from(math.exp(mid))[0] > target:
                    lo = mid
                else:
                    hi = mid
            out[i] = math.exp(0.5 * (lo + hi))
        return out

    def _integral_from(self, a):
        def integrand(u):
            if u > 690:
                return 0.0
            x = a * math.exp(u)
            return float(self.p_cont(np.array([x]))[0]) * x
        return integrate.quad(integrand, 0.0, np.inf, limit=400)

    def _cell_integral(self, j):
        return np.array([integrate.quad(lambda x: float(self.p_cont(np.array([x]))[0]),
                                        v - 0.5, v + 0.5)[0] for v in np.atleast_1d(j)])


def make_power_law(alpha, ell=None):
    """Power-law frequencies with ``nu_bar(x) ~ ell(1/x) x**-alpha``.

    With ``ell`` omitted or constant, ``p_j = c j**(-1/alpha)`` with ``c`` fixed
    by total mass 1 (the shape of ``ell`` is immaterial up to that constant).
    A log-power or callable ``ell`` produces an :class:`InverseTailModel`,
    rescaled to mass 1; the realized factor is available as ``model.rv``.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterDomainError(f"power-law index must lie in (0, 1), got {alpha}")
    if ell is None or ell.is_constant:
        return PowerLawModel(alpha)
    return InverseTailModel("power-law", alpha, ell)


def make_slow_variation(ell):
    """Slowly varying tail ``nu_bar(x) = floor(C (log(lam/x))**beta)``.

    Frequencies are ``p_j = lam exp(-(j/C)**(1/beta))``; ``beta > 1`` gives a
    smooth sequence obeying ``nu_1[0, x] ~ x ell_0(1/x)``.
    """
    if not ell.is_log_power or not ell.beta > 0:
        raise ParameterDomainError("slow variation needs a log-power factor with beta > 0")
    return InverseTailModel("slow-variation", 0.0, ell)


def make_rapid(ell):
    """Rapidly varying tail ``nu_bar(x) ~ x**-1 ell(1/x)``; needs ``beta < -1``."""
    if ell.is_log_power and not ell.beta < -1:
        raise DivergenceError("rapid variation needs beta < -1 for finite mass")
    return InverseTailModel("rapid-variation", 1.0, ell)


# ---------------------------------------------------------------------------
# block models
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BlockSpec:
    """Atoms ``(q_i, m_i)``: ``m_i`` boxes of frequency ``q_i``."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(q), int(m)) for q, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ParameterDomainError("a block spec needs at least one atom")
        qs = [q for q, _ in atoms]
        if any(not 0.0 < q < 1.0 for q in qs):
            raise ParameterDomainError("block frequencies must lie in (0, 1)")
        if any(b >= a for a, b in zip(qs, qs[1:])):
            raise ParameterDomainError("block frequencies must be strictly decreasing")
        if any(m < 1 for _, m in atoms):
            raise ParameterDomainError("multiplicities must be positive integers")
        mass = math.fsum(q * m for q, m in atoms)
        if not math.isfinite(mass):
            raise DivergenceError("block spec has infinite mass")

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            records = json.load(fh)
        return cls(tuple((r["q"], r["m"]) for r in records))


def _preset_atoms(name, levels=None, q=0.25):
    atoms = []
    if name == "ex10":
        if not 0.0 < q < 0.5:
            raise ParameterDomainError("ex10 needs 0 < q < 1/2")
        i = 1
        while q ** i > 1e-300 and (levels is None or i <= levels):
            atoms.append((q ** i, i))
            i += 1
    elif name == "ex11":
        for i in range(1, 10 if levels is None else levels + 1):
            atoms.append((2.0 ** -(2 ** i), i))
    elif name == "ex12":
        for i in range(1, 9 if levels is None else levels + 1):
            atoms.append((2.0 ** -(2 ** (i + 1)), 2 ** (2 ** i)))
    elif name == "ex12-half":
        # multiplicity of each level equals the number of larger atoms
        total = 0
        for i in range(1, 10 if levels is None else levels + 1):
            m = 1 if i == 1 else total
            atoms.append((2.0 ** -(2 ** i), m))
            total += m
    else:
        raise ParameterDomainError(f"unknown block preset {name!r}")
    return tuple(atoms)


class BlockModel(FrequencyModel):
    kind = "block"

    def __init__(self, spec, params):
        self.spec = spec
        self.q = np.array([a for a, _ in spec.atoms])
        self.m_int = [m for _, m in spec.atoms]
        self.m = np.array([float(m) for m in self.m_int])
        self.n_blocks = len(self.q)
        mass = math.fsum(q * m for q, m in spec.atoms)
        super().__init__(params, mass)
        suffix = [0.0] * (self.n_blocks + 1)
        for i in range(self.n_blocks - 1, -1, -1):
            suffix[i] = suffix[i + 1] + spec.atoms[i][0] * spec.atoms[i][1]
        self._suffix = suffix
        offsets = [0]
        for m in self.m_int:
            offsets.append(offsets[-1] + m)
        # levels whose ids fit in int64 are sampleable
        self._n_sample = sum(1 for o in offsets[1:] if o < MAX_BOX_ID)
        self._offsets = np.array(offsets[: self._n_sample + 1], dtype=np.int64)
        self._m_sample = np.array(self.m_int[: self._n_sample], dtype=np.int64)
        w = self.q[: self._n_sample] * self.m[: self._n_sample] / mass
        self._cum = np.cumsum(w)

    def blocks(self, J):
        J = min(J, self.n_blocks)
        return self.q[:J].copy(), self.m[:J].copy()

    def tail_mass(self, J):
        return self._suffix[min(J, self.n_blocks)]

    def tail_sum(self, k):
        if k == 0:
            return self.mass
        total = 0
        for i, (q, m) in enumerate(self.spec.atoms):
            if total + m >= k:
                return (total + m - k) * q + self._suffix[i + 1]
            total += m
        return 0.0

    def draw(self, size, rng):
        u = rng.random(size)
        b = np.searchsorted(self._cum, u, side="right")
        if np.any(b >= self._n_sample):
            raise DepthExhaustedError("ball landed in a level beyond the box-id range")
        off = np.floor(rng.random(size) * self.m[b]).astype(np.int64)
        off = np.minimum(off, self._m_sample[b] - 1)
        return self._offsets[b] + off + 1

    def prob(self, ids):
        b = np.searchsorted(self._offsets, np.asarray(ids, dtype=np.int64), side="left") - 1
        return self.q[b]


def make_block(spec=None, example=None, levels=None, q=0.25):
    """Superposition of ``m_i`` boxes of frequency ``q_i``.

    Presets (``example``): ``ex10`` (``q**i`` with multiplicity ``i``),
    ``ex11`` (``2**-2**i``, multiplicity ``i``), ``ex12``
    (``2**-2**(i+1)``, multiplicity ``2**2**i``) and ``ex12-half``
    (``2**-2**i`` with multiplicity equal to the number of larger atoms).
    ``levels`` truncates a preset.  Block models keep their raw mass and are
    not renormalized.
    """
    if example is not None:
        spec = BlockSpec(_preset_atoms(example, levels, q))
        params = {"preset": example}
        if levels is not None:
            params["levels"] = levels
    else:
        if spec is None:
            raise ParameterDomainError("make_block needs a spec or a preset")
        if not isinstance(spec, BlockSpec):
            spec = BlockSpec(tuple(spec))
        params = {"atoms": spec.atoms}
    return BlockModel(spec, params)


# ---------------------------------------------------------------------------
# explicit and stick-breaking models
# ---------------------------------------------------------------------------
class ExplicitModel(FrequencyModel):
    kind = "explicit"

    def __init__(self, p):
        self.p = np.asarray(p, dtype=float)
        self.n_blocks = len(self.p)
        super().__init__({"p": tuple(self.p.tolist())}, _fsum(self.p))
        self._suffix = np.concatenate([np.cumsum(self.p[::-1])[::-1], [0.0]])
        self._cum = np.cumsum(self.p / self.mass)
        self._cum[-1] = 1.0

    def blocks(self, J):
        J = min(J, self.n_blocks)
        return self.p[:J].copy(), np.ones(J)

    def tail_mass(self, J):
        J = min(J, self.n_blocks)
        return _fsum(self.p[J:]) if J < self.n_blocks else 0.0

    def draw(self, size, rng):
        ids = np.searchsorted(self._cum, rng.random(size), side="right") + 1
        return np.minimum(ids, self.n_blocks).astype(np.int64)

    def prob(self, ids):
        return self.p[np.asarray(ids, dtype=np.int64) - 1]


def make_explicit(p):
    """Finite explicit frequency list, nonincreasing and positive."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise ParameterDomainError("explicit model needs a nonempty 1-d list")
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise ParameterDomainError("frequencies must be positive and finite")
    if np.any(np.diff(p) > 0):
        raise ParameterDomainError("frequencies must be nonincreasing")
    return ExplicitModel(p)


def load_explicit(path):
    with open(path) as fh:
        vals = [float(line) for line in fh if line.strip() and not line.startswith("#")]
    return make_explicit(vals)


class StickBreakingModel(FrequencyModel):
    """Realized GEM(alpha, theta) frequencies.

    Sticks ``W_i = V_i prod_{l<i} (1 - V_l)`` with ``V_i ~ Beta(1-alpha,
    theta + i alpha)`` are kept in emission (size-biased) order; box ``i`` is
    the ``i``-th stick.  The unbroken remainder is a virtual tail atom.  Stick
    ``i`` is a deterministic function of ``(seed, i)``, so lazy extension never
    changes already-realized values.

    The first ``dense_cap`` sticks are stored as arrays.  A ball landing beyond
    them is resolved by streaming later chunks, keeping only the residual at
    each chunk end and the sticks actually hit, up to ``max_depth`` sticks.
    """

    kind = "stick-breaking-realized"
    CHUNK = 1 << 12

    def __init__(self, alpha, theta, seed, depth, max_depth=10 ** 8, dense_cap=1 << 22):
        self.alpha = float(alpha)
        self.theta = float(theta)
        self.seed = int(seed)
        self.max_depth = int(max_depth)
        self.dense_cap = min(int(dense_cap), self.max_depth)
        super().__init__({"alpha": alpha, "theta": theta, "seed": seed, "depth": depth}, 1.0)
        self._lock = threading.Lock()
        self._W = np.empty(0)
        self._R = np.empty(0)  # residual after each stick
        self._chunk_end = {}  # chunk index -> residual after its last stick
        self._deep = {}  # stick index -> value, beyond the stored arrays
        self._extend(int(depth))

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_lock", None)
        state.pop("_ranked", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @property
    def depth(self):
        return len(self._W)

    @property
    def residual(self):
        return float(self._R[-1]) if len(self._R) else 1.0

    @property
    def sticks(self):
        return self._W.copy()

    def _chunk(self, c, r0):
        rng = stream(self.seed, c)
        C = self.CHUNK
        i = np.arange(c * C + 1, (c + 1) * C + 1, dtype=float)
        V = rng.beta(1.0 - self.alpha, self.theta + i * self.alpha)
        R = r0 * np.cumprod(1.0 - V)
        return V * np.concatenate([[r0], R[:-1]]), R

    def _extend(self, depth):
        # products restart at chunk boundaries so the realized values do not
        # depend on how the extension was split into steps
        with self._lock:
            cur = len(self._W)
            if depth <= cur:
                return
            if depth > self.dense_cap:
                raise DepthExhaustedError(f"stick-breaking storage cap {self.dense_cap} reached")
            C = self.CHUNK
            first = cur // C
            start = first * C
            r0 = float(self._R[start - 1]) if start else 1.0
            Ws, Rs = [self._W[:start]], [self._R[:start]]
            for c in range(first, (depth - 1) // C + 1):
                W, R = self._chunk(c, r0)
                Ws.append(W)
                Rs.append(R)
                r0 = float(R[-1])
            self._W = np.concatenate(Ws)[:depth]
            self._R = np.concatenate(Rs)[:depth]
            self.__dict__.pop("_ranked", None)
            self._cum = 1.0 - self._R

    def _walk(self, stop):
        """Stream chunks past the stored sticks until ``stop(c, W, R)`` returns an index."""
        C = self.CHUNK
        c = self.depth // C
        r0 = float(self._R[c * C - 1]) if c else 1.0
        while True:
            if c * C >= self.max_depth:
                raise DepthExhaustedError(f"ball landed beyond the depth cap {self.max_depth}")
            found = stop(c, r0)
            if found is not None:
                return found
            r0 = self._chunk_end[c]
            c += 1

    def _locate_deep(self, v):
        # first stick whose residual drops below v = 1 - u
        def stop(c, r0):
            end = self._chunk_end.get(c)
            if end is not None and end >= v:
                return None
            W, R = self._chunk(c, r0)
            self._chunk_end[c] = float(R[-1])
            if R[-1] >= v:
                return None
            i = int(np.argmax(R < v))
            j = c * self.CHUNK + i + 1
            if j > self.depth:
                self._deep[j] = float(W[i])
            return j
        return self._walk(stop)

    def _deep_value(self, j):
        v = self._deep.get(j)
        if v is None:
            c_target = (j - 1) // self.CHUNK

            def stop(c, r0):
                if c < c_target:
                    if c not in self._chunk_end:
                        self._chunk_end[c] = float(self._chunk(c, r0)[1][-1])
                    return None
                W, R = self._chunk(c, r0)
                self._chunk_end[c] = float(R[-1])
                return float(W[j - 1 - c * self.CHUNK])
            v = self._deep[j] = self._walk(stop)
        return v

    def _ranked_values(self):
        r = self.__dict__.get("_ranked")
        if r is None:
            r = np.sort(self._W)[::-1]
            self.__dict__["_ranked"] = r
        return r

    @property
    def n_blocks(self):
        return self.depth

    def blocks(self, J):
        r = self._ranked_values()
        J = min(J, len(r))
        return r[:J].copy(), np.ones(J)

    def tail_mass(self, J):
        r = self._ranked_values()
        if J >= len(r):
            return self.residual
        return _fsum(r[J:]) + self.residual

    def _tail_ceiling(self, J):
        r = self._ranked_values()
        last = r[min(J, len(r)) - 1]
        return max(float(last), self.residual)

    def sum_f(self, f, ratio_bound, p_crit=None, eps=EPS_TRUNC, cap=SUM_CAP):
        while True:
            value, _ = FrequencyModel.sum_f(self, f, ratio_bound, p_crit, eps, cap)
            bound = ratio_bound(self.residual) * self.residual
            if bound <= eps or 2 * self.depth > min(cap, self.dense_cap):
                return value, bound
            self._extend(2 * self.depth)

    def draw(self, size, rng):
        u = rng.random(size)
        while True:
            ids = np.searchsorted(self._cum, u, side="right") + 1
            deep = np.flatnonzero(ids > self.depth)
            if len(deep) == 0:
                return ids.astype(np.int64)
            if 2 * self.depth <= self.dense_cap:
                self._extend(2 * self.depth)
                continue
            for k in deep:
                ids[k] = self._locate_deep(1.0 - float(u[k]))
            return ids.astype(np.int64)

    def prob(self, ids):
        ids = np.asarray(ids, dtype=np.int64)
        out = np.empty(ids.shape)
        inside = ids <= self.depth
        out[inside] = self._W[ids[inside] - 1]
        for k in np.flatnonzero(~inside):
            out[k] = self._deep_value(int(ids[k]))
        return out


def realize_stick_breaking(theta, alpha, seed, depth=1 << 12, max_depth=10 ** 8):
    """Freeze a GEM(alpha, theta) frequency realization at ``depth`` sticks."""
    if not 0.0 <= alpha < 1.0 or not theta > -alpha:
        raise ParameterDomainError(f"invalid GEM parameters alpha={alpha}, theta={theta}")
    return StickBreakingModel(alpha, theta, seed, depth, max_depth)


# ---------------------------------------------------------------------------
# measure operations
# ---------------------------------------------------------------------------
def tail_count(model, x):
    """``nu_bar(x) = #{j : p_j >= x}``."""
    if not x > 0:
        raise ParameterDomainError("tail_count needs x > 0")
    if x > model.p1:
        return 0
    return model.tail_count(float(x))


def nu_r_mass(model, r, x):
    """``nu_r[0, x] = sum_j p_j**r 1(p_j <= x)``."""
    if int(r) != r or r < 1:
        raise ParameterDomainError("r must be a positive integer")
    if not 0.0 < x <= 1.0:
        raise ParameterDomainError("x must lie in (0, 1]")
    return model.nu_r_mass(int(r), float(x))


def delta_nu(model, x):
    """``nu_bar(x/2) - nu_bar(x)``: number of frequencies in ``[x/2, x)``."""
    if not 0.0 < x <= 1.0:
        raise ParameterDomainError("x must lie in (0, 1]")
    return tail_count(model, x / 2.0) - tail_count(model, x)


def tail_sum(model, k):
    """``sum_{j > k} p_j`` over the ranked sequence."""
    if int(k) != k or k < 0:
        raise ParameterDomainError("k must be a nonnegative integer")
    return model.tail_sum(int(k))
