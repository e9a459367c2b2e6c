import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def enumerate_allocations(p, n):
    """All ``len(p)**n`` allocations as ``(probability, counts)`` pairs."""
    p = list(p)
    out = []
    for a in itertools.product(range(len(p)), repeat=n):
        w = 1.0
        for i in a:
            w *= p[i]
        out.append((w, np.bincount(a, minlength=len(p))))
    return out


def enumerated_moments(p, n):
    """Mean and variance of ``K_n`` and of every ``K_{n,r}`` by brute force."""
    al = enumerate_allocations(p, n)
    res = {}
    occ = [(w, int((c > 0).sum())) for w, c in al]
    m = sum(w * k for w, k in occ)
    res["K"] = (m, sum(w * k * k for w, k in occ) - m * m)
    for r in range(1, n + 1):
        vals = [(w, int((c == r).sum())) for w, c in al]
        m = sum(w * k for w, k in vals)
        res[r] = (m, sum(w * k * k for w, k in vals) - m * m)
    pmf = np.zeros(len(p) + 1)
    for w, k in occ:
        pmf[k] += w
    res["pmf"] = pmf
    return res


SMALL_MODELS = [
    [1.0],
    [0.5, 0.5],
    [0.6, 0.4],
    [0.7, 0.2, 0.1],
    [0.5, 0.3, 0.15, 0.05],
    [0.25, 0.25, 0.25, 0.25],
]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_acceptance():
    def record(number, name, ok, detail):
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record
