"""Reproducible random streams.

Every stochastic routine takes a master seed and derives one independent
stream per replica via ``numpy.random.SeedSequence([seed, replica])``, so the
result of replica ``i`` does not depend on how many replicas run, in what
order, or on which worker.  PCG64 is the generator; its output stream is
stable across numpy versions.
"""
from __future__ import annotations

import numpy as np


def replica_stream(seed: int, replica: int) -> np.random.Generator:
    """Independent generator for one (seed, replica) pair."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replica)]))


def replica_streams(seed: int, n: int) -> list[np.random.Generator]:
    return [replica_stream(seed, i) for i in range(n)]
