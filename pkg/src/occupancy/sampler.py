"""Monte Carlo realizations of the occupancy scheme.

Balls are drawn in ball order as native box ids; an :class:`OccupancyState`
keeps only occupied boxes, listed in discovery order.  All entry points take a
``seed`` accepted by :func:`occupancy._rng.stream` (an int, a
``SeedSequence`` or a ready ``Generator``).
"""
from dataclasses import dataclass
import itertools
import math

import numpy as np

from ._rng import stream
from .errors import (DepthExhaustedError, GuardExceededError, ParameterDomainError,
                     SchemeMismatchError)

CHUNK = 1 << 20


def _longsum(a):
    return np.sum(np.asarray(a, dtype=np.longdouble))


class OccupancyState:
    """One allocation of ``n`` balls.

    ``boxes``, ``counts``, ``first_hit`` and ``probs`` are aligned arrays in
    discovery order; ``first_hit[k-1]`` is the ball index ``N_k``.
    """

    def __init__(self, n, boxes, counts, first_hit, probs, mass=1.0, t=None):
        self.n = int(n)
        self.boxes = boxes
        self.counts = counts
        self.first_hit = first_hit
        self.probs = probs / mass
        self.t = t

    @classmethod
    def from_draws(cls, model, ids, t=None):
        ids = np.asarray(ids, dtype=np.int64)
        if len(ids) == 0:
            e = np.empty(0, dtype=np.int64)
            return cls(0, e, e, e, np.empty(0), model.mass, t)
        boxes, first, counts = np.unique(ids, return_index=True, return_counts=True)
        order = np.argsort(first, kind="stable")
        boxes = boxes[order]
        return cls(len(ids), boxes, counts[order], first[order] + 1,
                   model.prob(boxes), model.mass, t)

    @property
    def K(self):
        return len(self.boxes)

    def K_r(self, r):
        return int(np.count_nonzero(self.counts == r))

    @property
    def K_hist(self):
        """``K_hist[r] = K_{n,r}`` for ``r = 0..max count`` (entry 0 unused)."""
        if self.K == 0:
            return np.zeros(1, dtype=np.int64)
        return np.bincount(self.counts)

    @property
    def S(self):
        """Unseen mass ``1 - sum of occupied frequencies``."""
        return float(1 - _longsum(self.probs))

    @property
    def count_map(self):
        return dict(zip(self.boxes.tolist(), self.counts.tolist()))

    @property
    def ranked_view(self):
        return np.sort(self.counts)[::-1]

    @property
    def discovery_view(self):
        return self.counts.copy()

    def stats(self, r_max=3):
        out = {"n": self.n, "K": self.K, "S": self.S}
        for r in range(1, r_max + 1):
            out[f"K_{r}"] = self.K_r(r)
        return out

    def check_invariants(self):
        assert int(self.counts.sum()) == self.n
        h = self.K_hist
        assert int(h[1:].sum()) == self.K
        assert int(np.dot(np.arange(len(h)), h)) == self.n
        assert 0.0 <= self.S < 1.0 or self.K == 0


def sample_box(model, rng):
    """One box index drawn with probability ``p_j``."""
    if not model.normalized:
        raise SchemeMismatchError("sampling a box needs a normalized model")
    return int(model.draw(1, rng)[0])


def _draw(model, n, rng):
    model.prepare_sampling(n)
    parts = []
    left = n
    while left > 0:
        m = min(left, CHUNK)
        parts.append(model.draw(m, rng))
        left -= m
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def run_fixed(model, n, seed):
    """Multinomial allocation of ``n`` balls; deterministic given ``seed``."""
    if not model.normalized:
        raise SchemeMismatchError("fixed-n sampling needs a normalized model")
    if int(n) != n or n < 0:
        raise ParameterDomainError(f"ball count must be a nonnegative integer, got {n}")
    rng = stream(seed)
    return OccupancyState.from_draws(model, _draw(model, int(n), rng))


def run_poisson(model, t, seed):
    """Poissonized allocation at time ``t``.

    The ball count is Poisson with mean ``t * mass``; an unnormalized model is
    sampled through its normalized version (a time change).
    """
    if not t >= 0:
        raise ParameterDomainError(f"time must be nonnegative, got {t}")
    rng = stream(seed)
    N = int(rng.poisson(t * model.mass)) if t > 0 else 0
    return OccupancyState.from_draws(model, _draw(model, N, rng), t=t)


@dataclass
class DiscoveryRecord:
    N: np.ndarray
    T: np.ndarray
    p_tilde: np.ndarray
    R: np.ndarray
    boxes: np.ndarray

    @property
    def k_max(self):
        return len(self.N)

    def rows(self):
        for k in range(self.k_max):
            yield {"k": k + 1, "N_k": int(self.N[k]), "T_k": float(self.T[k]),
                   "p_tilde_k": float(self.p_tilde[k]), "R_k": float(self.R[k])}


def residual_tails(p_tilde):
    """``R_k = 1 - p_tilde_1 - ... - p_tilde_k`` accumulated in extended precision."""
    return (1 - np.cumsum(np.asarray(p_tilde, dtype=np.longdouble))).astype(float)


def discovery_process(model, k_max, seed):
    """Discovery times and size-biased frequencies of the first ``k_max`` boxes.

    Balls and Poisson inter-arrival times come from two independent streams
    derived from ``seed``, so ``N`` does not depend on the arrival times.
    """
    if not model.normalized:
        raise SchemeMismatchError("discovery needs a normalized model")
    if int(k_max) != k_max or k_max < 1:
        raise ParameterDomainError("k_max must be a positive integer")
    k_max = int(k_max)
    if model.n_blocks is not None and model.kind != "stick-breaking-realized":
        total = int(np.sum(model.blocks(model.n_blocks)[1]))
        if total < k_max:
            raise DepthExhaustedError(f"model has only {total} boxes, cannot discover {k_max}")
    ball_rng = stream(seed, 0) if not isinstance(seed, np.random.Generator) else seed
    boxes = np.empty(0, dtype=np.int64)
    first = np.empty(0, dtype=np.int64)
    size = max(4 * k_max, 1024)
    seen = 0
    while True:
        # only first hits are kept, so memory grows with discoveries, not balls
        b, f = np.unique(model.draw(size, ball_rng), return_index=True)
        new = ~np.isin(b, boxes)
        boxes = np.concatenate([boxes, b[new]])
        first = np.concatenate([first, f[new] + seen])
        seen += size
        if len(boxes) >= k_max:
            break
        if seen > 1 << 30:
            raise DepthExhaustedError(f"fewer than {k_max} boxes after {seen} balls")
        size = min(seen, CHUNK)
    order = np.argsort(first, kind="stable")[:k_max]
    N = first[order] + 1
    disc = boxes[order]
    if isinstance(seed, np.random.Generator):
        arr_rng = seed
    else:
        arr_rng = stream(seed, 1)
    arrivals = np.cumsum(arr_rng.exponential(1.0, int(N[-1])))
    p = model.prob(disc) / model.mass
    return DiscoveryRecord(N, arrivals[N - 1], p, residual_tails(p), disc)


# ---------------------------------------------------------------------------
# exact arrangement probabilities
# ---------------------------------------------------------------------------
def exact_arrangement_prob(model, J, counts, view="ranked"):
    """Probability that the nonzero occupancy counts equal ``counts``.

    ``view="ranked"`` compares with the counts in nonincreasing order;
    ``view="discovery"`` with the counts in the order boxes were discovered.
    Only the first ``J`` boxes carry balls; boxes are enumerated explicitly.
    """
    counts = [int(c) for c in counts]
    if any(c <= 0 for c in counts):
        raise ParameterDomainError("counts must be positive")
    n = sum(counts)
    if J > 6 or n > 8:
        raise GuardExceededError("exact arrangements need J <= 6 and n <= 8")
    p = model.ranked(J)
    k = len(counts)
    if k > len(p):
        return 0.0
    terms = []
    for tup in itertools.permutations(range(len(p)), k):
        terms.append(math.prod(p[j] ** c for j, c in zip(tup, counts)))
    total = math.fsum(terms)
    if view == "ranked":
        if any(a < b for a, b in zip(counts, counts[1:])):
            raise ParameterDomainError("ranked counts must be nonincreasing")
        coef = math.factorial(n) / math.prod(math.factorial(c) for c in counts)
        # ordered tuples over equal parts count the same allocation repeatedly
        ties = math.prod(math.factorial(len(list(g))) for _, g in itertools.groupby(counts))
        return coef * total / ties
    if view == "discovery":
        denom = 1
        for i, c in enumerate(counts):
            denom *= math.factorial(c - 1) * sum(counts[i:])
        return math.factorial(n) / denom * total
    raise ParameterDomainError(f"unknown view {view!r}")


# ---------------------------------------------------------------------------
# quantile sets
# ---------------------------------------------------------------------------
def hausdorff(a, b):
    """Hausdorff distance between two finite nonempty subsets of the line."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))

    def directed(x, y):
        i = np.clip(np.searchsorted(y, x), 1, len(y) - 1) if len(y) > 1 else np.zeros(len(x), int)
        if len(y) == 1:
            return float(np.max(np.abs(x - y[0])))
        d = np.minimum(np.abs(x - y[i - 1]), np.abs(x - y[i]))
        return float(np.max(d))
    return max(directed(a, b), directed(b, a))


@dataclass
class QuantileSets:
    C: np.ndarray
    C_n: np.ndarray
    d_H: float
    truncation: float


def _ordered(ids, order):
    ids = np.asarray(ids)
    if order is None:
        return ids[np.argsort(ids, kind="stable")]
    keys = [order(int(j)) for j in ids]
    return ids[sorted(range(len(ids)), key=keys.__getitem__)]


def quantile_sets(model, state, order=None, eps=1e-9):
    """Model set ``C`` and empirical set ``C_n`` under a box order.

    ``order`` maps a box index to a sort key; ``None`` is the natural order.
    ``C`` is represented by the interval endpoints of the boxes enumerated
    until the remaining mass is below ``eps``, which is then an upper bound
    on the Hausdorff error of that representation.
    """
    J = 16
    while True:
        if model.n_blocks is not None:
            J = min(J, int(np.sum(model.blocks(model.n_blocks)[1])))
        prob = model.prob(np.arange(1, J + 1)) / model.mass
        rest = float(1 - _longsum(prob))
        if rest <= eps or (model.n_blocks is not None and J >= np.sum(model.blocks(model.n_blocks)[1])):
            break
        J *= 2
    ids = np.arange(1, J + 1)
    p_ord = prob[_ordered(ids, order) - 1]
    C = np.unique(np.clip(np.concatenate([[0.0], np.cumsum(p_ord), [1.0]]), 0.0, 1.0))
    occ = _ordered(state.boxes, order)
    cm = state.count_map
    x = np.array([cm[int(j)] for j in occ], dtype=float) / max(state.n, 1)
    C_n = np.unique(np.clip(np.concatenate([[0.0], np.cumsum(x), [1.0]]), 0.0, 1.0))
    return QuantileSets(C, C_n, hausdorff(C, C_n), max(rest, 0.0))
