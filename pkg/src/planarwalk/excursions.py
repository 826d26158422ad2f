"""Excursion instrumentation on a ladder of nested disks.

Geometry.  A ladder holds radii r_0 > r_1 > ... > r_n around a center x,
with a band of width b attached to each level: band k is the closed shell
r_k <= |y - x| <= r_k + b.  The radius axis splits into zones

    0 | band n | gap | band n-1 | gap | ... | band 0 | outer space
  (inner)                                               (beyond r_0+b)

and every path event below is a function of the zone sequence alone.

Counting.  N_k is the number of completed inward crossings: the counter for
level k arms whenever the walker is outside D(x, r_{k-1}) and fires when it
next enters D(x, r_k + b).  Re-entries within one excursion do not double
count (the counter stays disarmed until the walker leaves D(x, r_{k-1})
again); this is the streaming reading of the band-visit conditions.

Skips.  From context band k the walker may land in band k+-1 or in the two
adjacent gaps; landing outward past band k-1 is a skip of kind "skip",
landing inward past band k+1 (deeper than the adjacent shell) is kind
"deep".  After a skip the context moves to the band governing the landing
zone, so later crossings are still classified.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import (InsufficientSamples, LadderInvalid, MaxStepsExceeded,
                     TraceIncomplete)
from .laws import JumpLaw
from .rng import replica_stream
from .solve import AbsorbedOperator, annulus_set
from .walk import walk_blocks


@dataclass(frozen=True)
class RadiiLadder:
    """Nested radii r_0 > r_1 > ... > r_n with disjoint bands."""

    levels: tuple[float, ...]
    band_width: float
    center: tuple[int, int] = (0, 0)
    tag: str = "custom"

    def __post_init__(self):
        r = self.levels
        if len(r) < 2:
            raise LadderInvalid("need at least two levels")
        for k in range(1, len(r)):
            if not r[k] < r[k - 1]:
                raise LadderInvalid("radii must decrease strictly")
            if not r[k] + self.band_width < r[k - 1]:
                raise LadderInvalid(
                    f"bands overlap: r_{k}+band = {r[k] + self.band_width} "
                    f">= r_{k-1} = {r[k-1]}")
        if r[-1] <= 0:
            raise LadderInvalid("innermost radius must be positive")

    @property
    def n(self) -> int:
        """Deepest level index (levels are 0..n)."""
        return len(self.levels) - 1

    @classmethod
    def geometric(cls, r0: float, lam: float, n: int,
                  band_width: Optional[float] = None, center=(0, 0),
                  law: Optional[JumpLaw] = None) -> "RadiiLadder":
        """Desk ladder r_k = r0 * lam^-k; band defaults to max(2, law range)."""
        if band_width is None:
            band_width = max(2.0, law.support_range if law is not None else 2.0)
        levels = tuple(r0 * lam ** -k for k in range(n + 1))
        return cls(levels, band_width, center, tag=f"geometric:lam={lam}")

    @classmethod
    def classic(cls, n: int, center=(0, 0)) -> "RadiiLadder":
        """The analysis ladder r_k = e^n n^{3(n-k)} with band n^4, when it is
        representable in floats (it grows hyper-exponentially in n)."""
        r0 = math.exp(n) * float(n) ** (3 * n)
        if not math.isfinite(r0) or r0 > 1e15:
            raise LadderInvalid(f"classic ladder at n={n} is not representable")
        levels = tuple(math.exp(n) * float(n) ** (3 * (n - k))
                       for k in range(n + 1))
        return cls(levels, float(n) ** 4, center, tag=f"classic:n={n}")

    @property
    def outer_exit_radius(self) -> float:
        """Radius whose crossing completes a trace (the big-disk analogue
        K = 16 r_0 of the analysis; any radius beyond r_0 + band works)."""
        return 16.0 * self.levels[0]

    # -- zone machinery ----------------------------------------------------

    def zone_bounds_sq(self) -> np.ndarray:
        """Ascending squared-radius bounds; zone = searchsorted(bounds, rho2,
        'right').  Band k is zone 2(n-k)+1 (closed on both edges: the upper
        bound is nudged by +0.49 so integer rho2 equal to (r_k+b)^2 stays in
        the band)."""
        b = []
        for k in range(self.n, -1, -1):
            b.append(self.levels[k] ** 2)
            b.append((self.levels[k] + self.band_width) ** 2 + 0.49)
        return np.asarray(b)

    def band_zone(self, k: int) -> int:
        return 2 * (self.n - k) + 1

    def zone_level(self, zone: int) -> Optional[int]:
        if zone % 2 == 1:
            return self.n - (zone - 1) // 2
        return None

    @property
    def outer_zone(self) -> int:
        return 2 * self.n + 2

    def zones_of(self, pts: np.ndarray) -> np.ndarray:
        rel = np.asarray(pts, dtype=np.int64).reshape(-1, 2) - \
            np.asarray(self.center, dtype=np.int64)
        rho2 = rel[:, 0] ** 2 + rel[:, 1] ** 2
        return np.searchsorted(self.zone_bounds_sq(), rho2, side="right")


@dataclass
class BandVisit:
    level: int
    t_in: int
    entry_point: Optional[tuple[int, int]]
    t_out: Optional[int] = None


@dataclass
class SkipEvent:
    time: int
    from_level: int
    to_zone: int
    kind: str               # "skip" (outward past a band) or "deep" (inward)


@dataclass
class ExcursionTrace:
    ladder: RadiiLadder
    counts: np.ndarray               # counts[k] = N_k for k = 1..n (index 0 unused)
    events: list[BandVisit]
    skip_events: list[SkipEvent]
    complete: bool
    total_steps: int
    opened_at: Optional[int]

    @property
    def n_counts(self) -> dict[int, int]:
        return {k: int(self.counts[k]) for k in range(1, self.ladder.n + 1)}

    @property
    def has_skips(self) -> bool:
        return len(self.skip_events) > 0


class ZoneMachine:
    """Streaming fold over a zone sequence; O(1) state per level."""

    def __init__(self, ladder: RadiiLadder):
        self.ladder = ladder
        n = ladder.n
        self.counts = np.zeros(n + 1, dtype=np.int64)
        self.armed = np.zeros(n + 1, dtype=bool)
        self.events: list[BandVisit] = []
        self.skips: list[SkipEvent] = []
        self.ctx: Optional[int] = None
        self.opened_at: Optional[int] = None
        self.last_zone: Optional[int] = None
        self.steps: int = 0
        # zone thresholds for the N_k machinery
        self._arm_zone = np.array([0] + [ladder.band_zone(k - 1)
                                         for k in range(1, n + 1)])
        self._fire_zone = np.array([0] + [ladder.band_zone(k)
                                          for k in range(1, n + 1)])

    def _n_update(self, zone: int):
        ks = np.arange(1, self.ladder.n + 1)
        fire = self.armed[1:] & (zone <= self._fire_zone[1:])
        self.counts[ks[fire]] += 1
        self.armed[ks[fire]] = False
        arm = zone >= self._arm_zone[1:]
        self.armed[1:] |= arm

    def _enter_band(self, level: int, t: int, point):
        self.events.append(BandVisit(level, t, tuple(point) if point is not None else None))
        self.ctx = level

    def _governing_band(self, zone: int) -> int:
        """Band whose conditions govern a non-band zone (its outward
        neighbour; the innermost interior belongs to band n)."""
        lad = self.ladder
        if zone == 0:
            return lad.n
        if zone >= lad.outer_zone:
            return 0
        return lad.zone_level(zone + 1)

    def start(self, zone: int, point=None):
        zone = int(zone)
        self.last_zone = zone
        self._n_update(zone)
        lvl = self.ladder.zone_level(zone)
        if lvl is not None:
            self.opened_at = 0
            self._enter_band(lvl, 0, point)
        elif zone < self.ladder.outer_zone:
            # starting inside the ladder: adopt the governing band as
            # context without recording a visit
            self.ctx = self._governing_band(zone)

    def transition(self, t: int, zone: int, point=None):
        zone = int(zone)
        lad = self.ladder
        if self.last_zone is None:
            raise RuntimeError("machine not started")
        prev = self.last_zone
        self.last_zone = zone
        self._n_update(zone)
        lvl = lad.zone_level(zone)
        if self.ctx is None:
            # approaching from outer space: the first entry past r_0 + band
            # must land in band 0, anything deeper skips it
            if zone >= lad.outer_zone:
                return
            if lvl == 0:
                self.opened_at = t
                self._enter_band(0, t, point)
                return
            self.skips.append(SkipEvent(t, -1, zone, "deep"))
            if lvl is not None:
                self.opened_at = t
                self._enter_band(lvl, t, point)
            else:
                self.ctx = self._governing_band(zone)
            return
        ctx_zone = lad.band_zone(self.ctx)
        # first departure from the context band closes the open visit
        if prev == ctx_zone and zone != ctx_zone and self.events \
                and self.events[-1].level == self.ctx \
                and self.events[-1].t_out is None:
            self.events[-1].t_out = t
        if zone == ctx_zone:
            return
        if lvl is not None:
            if abs(lvl - self.ctx) > 1:
                kind = "deep" if lvl > self.ctx else "skip"
                self.skips.append(SkipEvent(t, self.ctx, zone, kind))
            self._enter_band(lvl, t, point)
            return
        # non-band landing: the two gaps flanking the context band are legal
        if zone in (ctx_zone - 1, ctx_zone + 1):
            return
        if zone < ctx_zone - 1:
            self.skips.append(SkipEvent(t, self.ctx, zone, "deep"))
            # governing band of the landing gap is its outward neighbour
            self.ctx = lad.n if zone == 0 else lad.zone_level(zone + 1)
        else:
            self.skips.append(SkipEvent(t, self.ctx, zone, "skip"))
            self.ctx = 0 if zone >= lad.outer_zone else lad.zone_level(zone - 1)

    def feed(self, zones: np.ndarray, t0: int, points: Optional[np.ndarray] = None):
        """Consume a block of zones for times t0..t0+len-1 (compressed to
        change points internally)."""
        if self.last_zone is None:
            raise RuntimeError("call start() first")
        prev = np.concatenate([[self.last_zone], zones[:-1]])
        chg = np.nonzero(zones != prev)[0]
        for i in chg.tolist():
            self.transition(t0 + i, int(zones[i]),
                            None if points is None else points[i])
        self.steps = t0 + len(zones) - 1
        self.last_zone = int(zones[-1])

    def finish(self) -> ExcursionTrace:
        complete = self.last_zone is not None and self.last_zone >= self.ladder.outer_zone
        return ExcursionTrace(self.ladder, self.counts.copy(), self.events,
                              self.skips, complete, self.steps, self.opened_at)


def decompose(path: np.ndarray, ladder: RadiiLadder) -> ExcursionTrace:
    """Deterministic excursion trace of a stored path (positions at times
    0..T, shape (T+1, 2))."""
    path = np.asarray(path, dtype=np.int64)
    zones = ladder.zones_of(path)
    m = ZoneMachine(ladder)
    m.start(zones[0], tuple(path[0].tolist()))
    if len(zones) > 1:
        m.feed(zones[1:], 1, path[1:])
    return m.finish()


# ---------------------------------------------------------------------------
# success predicate
# ---------------------------------------------------------------------------

def target_count(a: float, k: int) -> float:
    """Per-level excursion target 3 a k^2 log k (natural log)."""
    return 3.0 * a * k * k * math.log(k) if k >= 1 else 0.0


@dataclass(frozen=True)
class SuccessPredicate:
    """Window test: N_k = 1 below k0; |N_k - target| <= k from k0 up."""

    a: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.a < 2.0:
            raise ValueError("frequency level a must lie in (0, 2)")

    @property
    def k0(self) -> int:
        k = 1
        while target_count(self.a, k) < 2 * k:
            k += 1
        return max(4, k)

    def window(self, k: int) -> tuple[float, float]:
        if k < self.k0:
            return (1.0, 1.0)
        t = target_count(self.a, k)
        return (t - k, t + k)


def is_n_successful(trace: ExcursionTrace, predicate: SuccessPredicate
                    ) -> tuple[bool, dict]:
    """True iff the trace is complete, has no skips, and every level count
    sits in its window.  Also returns per-level verdicts."""
    if not trace.complete:
        raise TraceIncomplete("outer exit not reached")
    n = min(predicate.n, trace.ladder.n)
    verdicts = {}
    ok = not trace.has_skips
    for k in range(1, n + 1):
        lo, hi = predicate.window(k)
        good = lo <= trace.counts[k] <= hi
        verdicts[k] = {"count": int(trace.counts[k]), "window": (lo, hi),
                       "ok": good}
        ok = ok and good
    verdicts["skips"] = len(trace.skip_events)
    return ok, verdicts


# ---------------------------------------------------------------------------
# exact per-level crossing probabilities
# ---------------------------------------------------------------------------

def _band_start(ladder: RadiiLadder, k: int) -> np.ndarray:
    r = ladder.levels[k] + ladder.band_width / 2.0
    return np.asarray([int(round(r)), 0], dtype=np.int64) + \
        np.asarray(ladder.center, dtype=np.int64)


def crossing_probability_matrix(law: JumpLaw, ladder: RadiiLadder) -> list[dict]:
    """For each level k = 1..n-1, the exact outcome split of one sojourn
    started at the mid-band point of level k, run until it either enters
    D(r_{k+1}+b) (inward) or leaves D(r_{k-1}) (outward):

    inward_band / inward_deep / outward_band / outward_far, summing to 1.
    """
    out = []
    cx = np.asarray(ladder.center, dtype=np.int64)
    for k in range(1, ladder.n):
        r_in = ladder.levels[k + 1] + ladder.band_width
        r_out = ladder.levels[k - 1]
        dom = annulus_set(r_in, r_out, tuple(cx.tolist()))
        op = AbsorbedOperator(law, dom)

        def rho2(pts):
            rel = pts - cx
            return rel[:, 0] ** 2 + rel[:, 1] ** 2

        lo_band = ladder.levels[k + 1] ** 2
        hi_band = r_out ** 2, (r_out + ladder.band_width) ** 2
        masses = {
            "inward_band": lambda p: (rho2(p) < r_in ** 2) & (rho2(p) >= lo_band),
            "inward_deep": lambda p: rho2(p) < lo_band,
            "outward_band": lambda p: (rho2(p) >= hi_band[0]) & (rho2(p) <= hi_band[1]),
            "outward_far": lambda p: rho2(p) > hi_band[1],
        }
        x = _band_start(ladder, k)
        i = dom.locate(x.reshape(1, 2))[0]
        row = {"level": k, "start": tuple(x.tolist())}
        for name, ind in masses.items():
            u = op.solve(op.one_step_mass(ind))
            row[name] = float(u[i])
        row["inward"] = row["inward_band"] + row["inward_deep"]
        row["outward"] = row["outward_band"] + row["outward_far"]
        row["total"] = row["inward"] + row["outward"]
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# simulation driver and the decoupling diagnostic
# ---------------------------------------------------------------------------

def simulate_trace(law: JumpLaw, ladder: RadiiLadder, rng, start,
                   exit_radius: Optional[float] = None,
                   max_steps: int = 200_000_000,
                   block: int = 16384) -> tuple[ExcursionTrace, int]:
    """Stream one walk from `start` until it leaves D(center, exit_radius);
    returns (trace, steps spent outside D(center, r_1 + band))."""
    K = exit_radius if exit_radius is not None else ladder.outer_exit_radius
    cx = np.asarray(ladder.center, dtype=np.int64)
    K2 = K * K
    machine = ZoneMachine(ladder)
    z0 = ladder.zones_of(np.asarray([start]))[0]
    machine.start(z0, tuple(np.asarray(start).tolist()))
    outer_zone_thresh = ladder.band_zone(1)
    outer_steps = 0
    t_done = 0
    for path in walk_blocks(law, rng, tuple(np.asarray(start).tolist()), block):
        rel = path - cx
        rho2 = rel[:, 0] ** 2 + rel[:, 1] ** 2
        out = rho2 >= K2
        cut = int(np.argmax(out)) + 1 if out.any() else len(path)
        zones = np.searchsorted(ladder.zone_bounds_sq(), rho2[:cut], side="right")
        machine.feed(zones, t_done + 1, path[:cut])
        outer_steps += int((zones > outer_zone_thresh).sum())
        t_done += cut
        if out.any():
            return machine.finish(), outer_steps
        if t_done >= max_steps:
            raise MaxStepsExceeded(f"no outer exit within {max_steps} steps")


def decoupling_diagnostic(law: JumpLaw, ladder: RadiiLadder, level: int,
                          replicas: int, seed: int, *,
                          exit_radius: Optional[float] = None,
                          bootstrap: int = 200) -> dict:
    """Empirical dependence of inner counts on the outer environment.

    Replicas start at the mid-band point of level-1 (one band above the
    conditioning level).  Conditioning on the modal value m* >= 1 of
    N_level, replicas are split by a feature of the outer path (total
    steps spent outside D(center, r_level + band), a function of the outer
    excursions only), and the total-variation distance between the two
    conditional laws of N_{level+1} is estimated, with a bootstrap error
    bar and a same-distribution control split (whose mean is the
    finite-sample bias floor of the TV estimator).
    """
    if replicas < 1000:
        raise InsufficientSamples("need at least 1e3 replicas")
    if level + 1 > ladder.n or level < 1:
        raise LadderInvalid("need 1 <= level < deepest")
    start = _band_start(ladder, level - 1)
    n_l = np.empty(replicas, dtype=np.int64)
    n_inner = np.empty(replicas, dtype=np.int64)
    env = np.empty(replicas, dtype=np.int64)
    for i in range(replicas):
        tr, outer = simulate_trace(law, ladder, replica_stream(seed, i), start,
                                   exit_radius=exit_radius)
        n_l[i] = tr.counts[level]
        n_inner[i] = tr.counts[level + 1]
        env[i] = outer
    pos = n_l >= 1
    if not pos.any():
        raise InsufficientSamples("no replica completed an excursion")
    vals, freq = np.unique(n_l[pos], return_counts=True)
    m_star = int(vals[np.argmax(freq)])
    sel = n_l == m_star
    inner = n_inner[sel]
    feat = env[sel]
    med = np.median(feat)
    lo, hi = inner[feat <= med], inner[feat > med]
    if min(len(lo), len(hi)) < 30:
        raise InsufficientSamples(f"class sizes {len(lo)}/{len(hi)} too small")

    def tv(x, y):
        support = np.unique(np.concatenate([x, y]))
        px = np.array([(x == s).mean() for s in support])
        py = np.array([(y == s).mean() for s in support])
        return 0.5 * float(np.abs(px - py).sum())

    rng = replica_stream(seed, replicas + 1)
    boots = []
    for _ in range(bootstrap):
        boots.append(tv(rng.choice(lo, len(lo)), rng.choice(hi, len(hi))))
    # control: random split of the pooled conditional sample
    pool = inner.copy()
    ctrl = []
    for _ in range(bootstrap):
        perm = rng.permutation(pool)
        ctrl.append(tv(perm[:len(lo)], perm[len(lo):]))
    return {"level": level, "m_star": m_star,
            "class_sizes": (int(len(lo)), int(len(hi))),
            "tv": tv(lo, hi), "tv_bootstrap_sd": float(np.std(boots)),
            "control_tv_mean": float(np.mean(ctrl)),
            "control_tv_sd": float(np.std(ctrl)),
            "replicas": replicas, "conditioned": int(sel.sum())}


def top_level_factors(law: JumpLaw, ladder: RadiiLadder, start,
                      exit_radius: Optional[float] = None) -> dict:
    """Exact top-of-ladder factors for the success-probability sandwich:
    probability of entering the ladder (in band) from `start` before the
    outer exit, of descending one more level, and of final escape."""
    K = exit_radius if exit_radius is not None else ladder.outer_exit_radius
    cx = np.asarray(ladder.center, dtype=np.int64)
    b = ladder.band_width

    def enter_probs(r_target: float, x) -> tuple[float, float]:
        dom = annulus_set(r_target + b, K, tuple(cx.tolist()))
        op = AbsorbedOperator(law, dom)

        def rho2(pts):
            rel = pts - cx
            return rel[:, 0] ** 2 + rel[:, 1] ** 2

        t2 = (r_target + b) ** 2
        lo2 = r_target ** 2
        u_any = op.solve(op.one_step_mass(lambda p: rho2(p) < t2))
        u_band = op.solve(op.one_step_mass(
            lambda p: (rho2(p) < t2) & (rho2(p) >= lo2)))
        i = dom.locate(np.asarray(x).reshape(1, 2))[0]
        return float(u_band[i]), float(u_any[i])

    e_band0, e_any0 = enter_probs(ladder.levels[0], start)
    s1 = _band_start(ladder, 0)
    e_band1, e_any1 = enter_probs(ladder.levels[1], s1)
    # escape: from the level-1 mid band, reach the outer exit before
    # re-entering D(r_1 + b)
    dom = annulus_set(ladder.levels[1] + b, K, tuple(cx.tolist()))
    op = AbsorbedOperator(law, dom)
    rel_out2 = K * K

    def rho2(pts):
        rel = pts - cx
        return rel[:, 0] ** 2 + rel[:, 1] ** 2

    u_esc = op.solve(op.one_step_mass(lambda p: rho2(p) >= rel_out2))
    edge = np.asarray([int(math.ceil(ladder.levels[1] + b)) + 1, 0]) + cx
    i = dom.locate(edge.reshape(1, 2))[0]
    p_esc = float(u_esc[i])
    return {"enter_band": e_band0, "enter_any": e_any0,
            "descend_band": e_band1, "descend_any": e_any1,
            "escape": p_esc,
            "lower": e_band0 * e_band1 * p_esc,
            "upper": e_any0 * e_any1}
