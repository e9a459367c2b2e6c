"""Calibrate the depoissonization gap constants over the model zoo.

Each bound is ``c / n * envelope``; this script reports the smallest ``c`` that
covers every observed gap and the frozen value ``2 * worst``.  Run by hand:

    python tests/calibrate_gap_constants.py
"""
import json
import sys

from occupancy.frequency_models import make_explicit, make_geometric, make_power_law
from occupancy.moments import GAP_CONSTANTS, depoissonization_gap

ZOO = {
    "geometric:q=0.3": make_geometric(0.3),
    "geometric:q=0.5": make_geometric(0.5),
    "geometric:q=0.9": make_geometric(0.9),
    "powerlaw:alpha=0.25": make_power_law(0.25),
    "powerlaw:alpha=0.5": make_power_law(0.5),
    "powerlaw:alpha=0.75": make_power_law(0.75),
    "explicit:p=0.6|0.4": make_explicit([0.6, 0.4]),
}
NS = (10, 100, 1000, 10 ** 4)
RS = (1, 2, 3)


def worst_ratios(zoo=ZOO, ns=NS, rs=RS):
    """Largest ``gap / (bound / c)`` per constant, with the case attaining it."""
    worst = {k: (0.0, None) for k in GAP_CONSTANTS}
    for name, model in zoo.items():
        for n in ns:
            rep = depoissonization_gap(model, n, rs=rs)
            for key, gap in rep.gaps.items():
                if gap is None or key == "phi":
                    continue
                const = key.rstrip("0123456789")
                unit = rep.bounds[key] / GAP_CONSTANTS[const]
                if unit > 0 and gap / unit > worst[const][0]:
                    worst[const] = (gap / unit, f"{name} n={n} {key}")
    return worst


if __name__ == "__main__":
    w = worst_ratios()
    out = {k: {"worst": r, "case": case, "frozen": GAP_CONSTANTS[k], "suggested": 2 * r}
           for k, (r, case) in w.items()}
    json.dump(out, sys.stdout, indent=2)
    print()
