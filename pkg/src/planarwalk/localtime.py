"""Distribution of the local time at the origin up to exit of a disk.

For a start x0 in D(0,R), the number of visits L to 0 before exit is a
mixture: L = 0 with probability 1-h, and conditionally on hitting
(probability h = P^x0(T_0 < T_exit) = G(x0,0)/G(0,0)) a geometric variable
on {1,2,...} with success parameter q = 1/G(0,0), i.e. mean g = G(0,0).
Everything here is exact given the two solver numbers (h, g); the
simulation routines provide the independent stochastic route.

Moment conventions.  The classical display E L^k = k! G(x0,0) G(0,0)^{k-1}
overcounts tied visit times for k >= 2; the exact discrete identity is the
falling-factorial one,

    E[L (L-1) ... (L-k+1)] = k! G(x0,0) (G(0,0) - 1)^{k-1},

which the mixture-geometric law reproduces exactly.  `local_time_moments`
returns the classical displayed value (it is the k=1 identity, and an upper
bound for k >= 2); `LocalTimeLaw.moment` returns the exact moment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .laws import JumpLaw
from .potential import green_disk
from .rng import replica_stream
from .walk import DiskDomain


@lru_cache(maxsize=None)
def _stirling2(k: int, j: int) -> int:
    if j == k:
        return 1
    if j == 0 or j > k:
        return 0
    return j * _stirling2(k - 1, j) + _stirling2(k - 1, j - 1)


@dataclass(frozen=True)
class LocalTimeLaw:
    """Mixture law of L = visits to `target` before exiting the disk."""

    h: float                 # P^x0(T_target < T_exit)
    g: float                 # G(target, target) = conditional mean, >= 1
    radius: float
    source: tuple[int, int]

    @property
    def q(self) -> float:
        """Success parameter of the conditional geometric on {1,2,...}."""
        return 1.0 / self.g

    def pmf(self, m: int) -> float:
        if m == 0:
            return 1.0 - self.h
        return self.h * self.q * (1.0 - self.q) ** (m - 1)

    def sf(self, m: int) -> float:
        """P(L >= m) for m >= 1."""
        if m <= 0:
            return 1.0
        return self.h * (1.0 - self.q) ** (m - 1)

    def falling_moment(self, k: int) -> float:
        """E[L (L-1) ... (L-k+1)] = k! h g (g-1)^{k-1}, exactly."""
        return math.factorial(k) * self.h * self.g * (self.g - 1.0) ** (k - 1)

    def moment(self, k: int) -> float:
        """Exact E[L^k] via Stirling numbers of the second kind."""
        return sum(_stirling2(k, j) * self.falling_moment(j)
                   for j in range(1, k + 1))

    def laplace(self, lam: float) -> float:
        """E[exp(-lam L)] in closed form:
        1 - h + h / ((e^lam - 1) g + 1)."""
        return 1.0 - self.h + self.h / ((math.exp(lam) - 1.0) * self.g + 1.0)

    def laplace_direct(self, lam: float, tol: float = 1e-18) -> float:
        """The same expectation summed term by term (verification route)."""
        total = 1.0 - self.h
        m = 1
        while True:
            term = self.pmf(m) * math.exp(-lam * m)
            total += term
            if term < tol and m > 10:
                return total
            m += 1


def local_time_law(law: JumpLaw, radius: float, x0,
                   center=(0, 0)) -> LocalTimeLaw:
    """Exact (h, g) from the Green solve: h = G(x0,0)/G(0,0), g = G(0,0)."""
    g = green_disk(law, DiskDomain(center, radius))
    col = g.column(center)
    i0 = g.domain.locate(np.asarray([center]))[0]
    ix = g.domain.locate(np.asarray([x0]))[0]
    if ix < 0:
        raise ValueError(f"{x0} outside the disk")
    g00 = float(col[i0])
    gx0 = float(col[ix])
    return LocalTimeLaw(h=gx0 / g00, g=g00, radius=radius,
                        source=(int(x0[0]), int(x0[1])))


def local_time_moments(law: JumpLaw, domain: DiskDomain, x0, k: int) -> float:
    """The classical displayed moment value k! G(x0,0) G(0,0)^{k-1}
    (exact for k = 1; an upper bound on E L^k for k >= 2, see module doc)."""
    g = green_disk(law, domain)
    col = g.column(domain.center)
    i0 = g.domain.locate(np.asarray([domain.center]))[0]
    ix = g.domain.locate(np.asarray([x0]))[0]
    if ix < 0:
        raise ValueError(f"{x0} outside the disk")
    return math.factorial(k) * float(col[ix]) * float(col[i0]) ** (k - 1)


def simulate_local_times(law: JumpLaw, radius: float, x0, replicas: int,
                         seed: int, center=(0, 0), max_steps: int = 10_000_000
                         ) -> np.ndarray:
    """Visits to `center` before exiting D(center, radius), per replica.

    All replicas advance in lockstep with vectorized sampling; each exited
    replica is frozen.  One stream drives the batch (replica-resolved
    streams are unnecessary here because the batch is produced atomically
    by a single call; the seed fixes the whole array).
    """
    rng = replica_stream(seed, 0)
    cx = np.asarray(center, dtype=np.int64)
    pos = np.tile(np.asarray(x0, dtype=np.int64), (replicas, 1))
    counts = np.zeros(replicas, dtype=np.int64)
    if tuple(np.asarray(x0).tolist()) == tuple(cx.tolist()):
        counts += 1
    alive = np.arange(replicas)
    r2 = radius * radius
    steps = 0
    while len(alive):
        steps += 1
        if steps > max_steps:
            raise RuntimeError("lockstep simulation exceeded max_steps")
        moves = law.sample(rng, len(alive))
        pos[alive] += moves
        rel = pos[alive] - cx
        inside = (rel[:, 0] ** 2 + rel[:, 1] ** 2) < r2
        at0 = inside & (rel[:, 0] == 0) & (rel[:, 1] == 0)
        counts[alive[at0]] += 1
        alive = alive[inside]
    return counts


def tail_bound_check(law: JumpLaw, radius: float, z_grid, x0,
                     center=(0, 0)) -> dict:
    """Exact P(L >= z g) against the envelope c sqrt(z) e^{-z}.

    Returns the per-z table and the minimal c making the envelope valid on
    the grid (the paper's c is existential; this fits it).
    """
    ltl = local_time_law(law, radius, x0, center)
    rows = []
    c_min = 0.0
    for z in z_grid:
        m = int(math.ceil(z * ltl.g))
        p = ltl.sf(m)
        env_shape = math.sqrt(z) * math.exp(-z)
        c_needed = p / env_shape
        c_min = max(c_min, c_needed)
        rows.append({"z": float(z), "threshold": m, "prob": p,
                     "envelope_shape": env_shape, "c_needed": c_needed})
    return {"radius": radius, "x0": tuple(np.asarray(x0).tolist()),
            "h": ltl.h, "g": ltl.g, "rows": rows, "c_min": c_min}


def laplace_transform_check(law: JumpLaw, R: float, x0, phi_grid,
                            center=(0, 0)) -> dict:
    """Exact E[e^{-lam L}] at lam = phi/G(0,0) vs the first-order expression
    1 - (log(R/|x0|)/log R) * phi/(1+phi)."""
    ltl = local_time_law(law, R, x0, center)
    ax = math.hypot(float(x0[0]), float(x0[1]))
    rows = []
    for phi in phi_grid:
        if not 0.0 < phi <= 1.0:
            raise ValueError("phi must lie in (0, 1]")
        lam = phi / ltl.g
        exact = ltl.laplace(lam)
        direct = ltl.laplace_direct(lam)
        leading = 1.0 - (math.log(R / ax) / math.log(R)) * phi / (1.0 + phi)
        rows.append({"phi": phi, "lambda": lam, "exact": exact,
                     "direct": direct, "leading": leading,
                     "deviation": abs(exact - leading)})
    return {"R": R, "x0": tuple(np.asarray(x0).tolist()), "g": ltl.g,
            "h": ltl.h, "rows": rows}
