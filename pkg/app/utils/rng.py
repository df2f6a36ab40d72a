"""Random streams for simulations.

A stream is keyed by (seed, replication, stream) and never by strategy, so
every strategy in a replication sees the same observations: comparisons
between strategies use common random numbers.
"""
import numpy as np

DATA_STREAM = 0
AUDIT_STREAM = 1


def replication_rng(seed: int, replication: int, stream: int = DATA_STREAM) -> np.random.Generator:
    """Counter-based generator for one (seed, replication, stream) triple.

    Streams are independent of each other and of how many replications run.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, replication, stream])))
