"""planarwalk: exact potential theory and instrumented Monte Carlo for
symmetric random walks on Z^2.

The package has three layers:

* an exact layer (``laws``, ``solve``, ``potential``, ``harnack``,
  ``localtime``, ``histories``) where every number comes from validated
  linear algebra, convolutions, or big-integer combinatorics;
* a simulation layer (``walk``, ``excursions``, ``census``) with seeded,
  replica-indexed random streams;
* a statistics/orchestration layer (``acceptance``, ``config``, ``cli``)
  that checks the exact and simulated routes against each other.
"""

from .laws import JumpLaw, preset, validate_law, load_law
from .walk import DiskDomain, LocalTimeField, run_until_exit, sample_step
from .solve import GreenOperator
from .potential import (
    crossing_probability,
    escape_time,
    gaussian_kernel,
    green_disk,
    hitting_distribution,
    potential_kernel,
    transition_probabilities,
)

__all__ = [
    "JumpLaw", "preset", "validate_law", "load_law",
    "DiskDomain", "LocalTimeField", "run_until_exit", "sample_step",
    "GreenOperator", "green_disk", "escape_time", "crossing_probability",
    "hitting_distribution", "potential_kernel", "transition_probabilities",
    "gaussian_kernel",
]

__version__ = "0.1.0"
