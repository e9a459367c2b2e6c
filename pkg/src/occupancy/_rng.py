"""Counter-based random streams.

Replication ``r`` of an experiment with master seed ``s`` always draws from
the Philox stream keyed by ``(s, r)``, so results do not depend on the order
in which replications are scheduled.
"""
import numpy as np


def stream(seed, *key):
    """Return a Philox generator for ``seed`` and an optional spawn key."""
    if isinstance(seed, np.random.Generator):
        if key:
            raise TypeError("a Generator cannot be re-keyed")
        return seed
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
