import math

import numpy as np
from hypothesis import assume, given, settings, strategies as st

from occupancy.frequency_models import make_explicit
from occupancy.moments import (phi_fixed, phi_fixed_r, phi_poisson, phi_poisson_r, var_fixed,
                               var_poisson)
from occupancy.sampler import run_fixed

weights = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8)


def model_of(w):
    p = np.sort(np.array(w) / sum(w))[::-1]
    return make_explicit(p / p.sum())


@given(weights, st.integers(1, 60))
@settings(max_examples=80, deadline=None)
def test_fixed_moment_identities(w, n):
    m = model_of(w)
    phi = phi_fixed(m, n)
    assert 1 - 1e-9 <= phi <= min(n, len(w)) + 1e-9
    parts = [phi_fixed_r(m, n, r) for r in range(1, n + 1)]
    assert abs(math.fsum(parts) - phi) < 1e-9
    assert abs(math.fsum(r * v for r, v in enumerate(parts, 1)) - n) < 1e-8 * n
    assert var_fixed(m, n) >= -1e-12


@given(weights, st.floats(0.0, 1e4))
@settings(max_examples=80, deadline=None)
def test_poisson_moments(w, t):
    m = model_of(w)
    assert 0 <= phi_poisson(m, t) <= len(w) + 1e-12
    assert var_poisson(m, t) >= -1e-12
    # sum_r r Phi_r(t) = t; r up to 400 covers t <= 100 to double precision
    assume(0 < t <= 100)
    s = math.fsum(r * phi_poisson_r(m, t, r) for r in range(1, 400))
    # the floor absorbs underflow at subnormal t
    assert abs(s - t) <= 1e-9 * t + 1e-300


@given(weights, st.integers(1, 2000), st.integers(0, 2 ** 32))
@settings(max_examples=40, deadline=None)
def test_sampled_state_is_consistent(w, n, seed):
    m = model_of(w)
    s = run_fixed(m, n, seed)
    assert s.n == n
    assert 1 <= s.K <= min(n, len(w))
    assert sum(r * s.K_r(r) for r in range(1, n + 1)) == n
    assert -1e-12 <= s.S <= 1
