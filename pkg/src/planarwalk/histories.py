"""Exact combinatorics of excursion histories.

A history of depth n with upcrossing vector m = (m_2, ..., m_n) is a map
phi on {0, ..., |m|} with phi(0) = 1, steps +-1 in {0, ..., n}, first hit
of 0 exactly at time |m| = 2 sum m_j + 1, and m_l upcrossings from l-1 to
l for every l.  The number of such maps is the exact product

    prod_{l=2}^{n-1} C(m_{l+1} + m_l - 1, m_l - 1),

counted here in arbitrary precision, with a brute-force path enumerator as
the independent oracle.  The ladder sum over the per-level windows
(m_l = 1 below k0, |m_l - 3 a l^2 log l| <= l above) is evaluated by a
sum-product pass along the chain in outward-rounded interval arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np

from .errors import (CapExceeded, DegenerateW, OutOfWindow,
                     PrecisionBudgetExceeded)
from .excursions import SuccessPredicate, target_count


@dataclass(frozen=True)
class HistorySpec:
    """Depth n >= 2 and upcrossing counts m = (m_2, ..., m_n), each >= 1."""

    n: int
    m: tuple[int, ...]

    def __post_init__(self):
        if self.n < 2 or len(self.m) != self.n - 1:
            raise ValueError("need m = (m_2, ..., m_n)")
        if any(v < 1 for v in self.m):
            raise ValueError("upcrossing counts must be >= 1")

    @property
    def length(self) -> int:
        """|m| = 2 sum m_j + 1, the first-hit time of 0; always odd."""
        return 2 * sum(self.m) + 1

    def m_at(self, level: int) -> int:
        return self.m[level - 2]


def count_histories(spec: HistorySpec) -> int:
    """Exact history count (empty product = 1 for n = 2)."""
    total = 1
    for l in range(2, spec.n):
        total *= math.comb(spec.m_at(l + 1) + spec.m_at(l) - 1,
                           spec.m_at(l) - 1)
    return total


def enumerate_histories(spec: HistorySpec, cap: int = 15) -> list[tuple[int, ...]]:
    """All histories as explicit level sequences, by depth-first search.

    Cardinality equals count_histories (the exhaustive oracle for it).
    Raises CapExceeded when |m| > cap.
    """
    if spec.length > cap:
        raise CapExceeded(f"|m| = {spec.length} exceeds cap {cap}")
    want = spec.length
    out: list[tuple[int, ...]] = []
    target_up = {l: spec.m_at(l) for l in range(2, spec.n + 1)}

    def up_ok(ups: dict[int, int], final: bool) -> bool:
        for l, m in target_up.items():
            if ups.get(l, 0) > m or (final and ups.get(l, 0) != m):
                return False
        return True

    def rec(path: list[int], ups: dict[int, int]):
        t = len(path) - 1
        cur = path[-1]
        if cur == 0:
            if t == want and up_ok(ups, final=True):
                out.append(tuple(path))
            return
        if t >= want:
            return
        # remaining steps must at least bring the walker down to 0
        if want - t < cur:
            return
        for step in (1, -1):
            nxt = cur + step
            if nxt < 0 or nxt > spec.n:
                continue
            if step == 1:
                ups2 = dict(ups)
                ups2[nxt] = ups2.get(nxt, 0) + 1
                if nxt >= 2 and ups2[nxt] > target_up[nxt]:
                    continue
                rec(path + [nxt], ups2)
            else:
                rec(path + [nxt], ups)

    rec([1], {})
    return out


def history_specs_up_to(length_cap: int, n_max: int = 8) -> list[HistorySpec]:
    """Every HistorySpec with |m| <= length_cap (for exhaustive cross-checks)."""
    specs = []
    budget = (length_cap - 1) // 2
    for n in range(2, n_max + 1):
        k = n - 1

        def rec(prefix, remaining):
            if len(prefix) == k:
                specs.append(HistorySpec(n, tuple(prefix)))
                return
            slots_left = k - len(prefix) - 1
            for v in range(1, remaining - slots_left + 1):
                rec(prefix + [v], remaining - v)

        if k <= budget:
            rec([], budget)
    return specs


# ---------------------------------------------------------------------------
# Stirling-regime bracket
# ---------------------------------------------------------------------------

def rate_function(lam: float) -> float:
    """I(lam) = -(1+lam) log(1+lam) + lam log lam + lam log 2 + log 2;
    vanishes to second order at 1 with I''(1) = 1/2."""
    return (-(1.0 + lam) * math.log1p(lam) + lam * math.log(lam)
            + lam * math.log(2.0) + math.log(2.0))


@dataclass
class StirlingBand:
    value: mpmath.mpf
    interval: tuple[float, float]
    comparison: float              # k^{-3a-1} / sqrt(log k)
    ratio: float

    def __iter__(self):
        yield from (self.value, self.interval[0], self.interval[1])


def stirling_band(k: int, a: float, m: int, l: int, dps: int = 60) -> StirlingBand:
    """High-precision C(m+l, l) 2^{-(m+l+1)} with its k-scale comparison.

    Requires the Stirling-regime windows |m - N_{k+1}| <= k+1 and
    |l + 1 - N_k| <= k, N_j = 3 a j^2 log j.
    """
    if k < 2:
        raise OutOfWindow("k must be >= 2")
    if abs(m - target_count(a, k + 1)) > k + 1:
        raise OutOfWindow(f"m = {m} outside the N_(k+1) window")
    if abs(l + 1 - target_count(a, k)) > k:
        raise OutOfWindow(f"l = {l} outside the N_k window")
    old = mpmath.mp.dps, mpmath.iv.dps
    try:
        mpmath.mp.dps = dps
        mpmath.iv.dps = dps
        iv = mpmath.iv.mpf
        val = _interval_binomial(m + l, l) * iv(2) ** (-(m + l + 1))
        mid = mpmath.mpf(val.a) / 2 + mpmath.mpf(val.b) / 2
        comparison = k ** (-3.0 * a - 1.0) / math.sqrt(math.log(k))
        return StirlingBand(mid, (float(mpmath.mpf(val.a)),
                                  float(mpmath.mpf(val.b))), comparison,
                            float(mid) / comparison)
    finally:
        mpmath.mp.dps, mpmath.iv.dps = old


# ---------------------------------------------------------------------------
# window ladder sum (sum-product along the chain)
# ---------------------------------------------------------------------------

def level_window(a: float, l: int, k0: int) -> range:
    """Integers allowed for m_l: {1} below k0, else the closed window
    [N_l - l, N_l + l] intersected with [1, inf)."""
    if l < k0:
        return range(1, 2)
    t = target_count(a, l)
    lo = max(1, int(math.ceil(t - l)))
    hi = int(math.floor(t + l))
    return range(lo, hi + 1)


@dataclass
class LadderSumResult:
    a: float
    n: int
    value: mpmath.mpf
    interval: tuple[mpmath.mpf, mpmath.mpf]
    log_value: float
    delta1: float                  # value = (n!)^{-3a - delta1}
    delta2: float                  # value = r_{n,0}^{-a - delta2}
    per_level_factors: list[float]
    dps: int


def _interval_binomial(n: int, k: int):
    """Enclosing interval for C(n, k).

    Exact from math.comb while cheap; for the huge Stirling-regime
    arguments (math.comb is quadratic-time in CPython) the anchor comes
    from mpmath's arbitrary-precision binomial, computed with 10 guard
    digits and padded by a relative 10^-dps on both sides, which dominates
    its few-ulp rounding error.
    """
    iv = mpmath.iv.mpf
    if n <= 4000:
        return iv(math.comb(n, k))
    dps = mpmath.mp.dps
    with mpmath.workdps(dps + 10):
        mid = mpmath.binomial(n, k)
    pad = mpmath.mpf(10) ** (-dps)
    return iv(mid) * (iv(1) + iv([-1, 1]) * pad)


def _interval_binomial_rect(ms: Sequence[int], mps: Sequence[int]):
    """Intervals for C(m' + m - 1, m - 1) over the rectangle ms x mps.

    One corner anchors the rectangle; neighbours follow by the exact
    rational ratios
      C(m+m', m) / C(m+m'-1, m-1)   = (m+m') / m       (m -> m+1)
      C(m+m', m-1) / C(m+m'-1, m-1) = (m+m') / (m'+1)  (m' -> m'+1),
    each one interval multiply/divide (ms and mps are consecutive ranges).
    """
    iv = mpmath.iv.mpf
    m0 = ms[0]
    row = [_interval_binomial(m0 + mps[0] - 1, m0 - 1)]
    for j in range(1, len(mps)):
        mp = mps[j - 1]
        row.append(row[-1] * iv(m0 + mp) / iv(mp + 1))
    rect = [row]
    for i in range(1, len(ms)):
        m = ms[i - 1]
        prev = rect[-1]
        row = [prev[j] * iv(m + mps[j]) / iv(m) for j in range(len(mps))]
        rect.append(row)
    return rect


def ladder_sum(a: float, n: int, *, dps: int = 60, max_dps: int = 400,
               level_range: Optional[tuple[int, int]] = None) -> LadderSumResult:
    """Sum over window vectors m of prod_{l=2}^{n-1}
    C(m_{l+1}+m_l-1, m_l-1) 2^{-(m_{l+1}+m_l)}, by dynamic programming
    along the chain in interval arithmetic (factor l couples only
    m_l, m_{l+1}; cost O(n w^2) for window width w).

    `level_range` restricts the chain to factors l in [lo, hi] (suffix and
    prefix sums of the conditional lemmas are these restrictions).
    """
    if not 0.0 < a < 2.0:
        raise ValueError("a must lie in (0, 2)")
    if n > 60:
        raise PrecisionBudgetExceeded("n > 60 exceeds the precision budget")
    k0 = SuccessPredicate(a, max(n, 4)).k0
    lo_l, hi_l = level_range if level_range else (2, n - 1)
    if not 2 <= lo_l <= hi_l <= n - 1:
        raise ValueError("invalid level range")
    def _mid(v):
        return mpmath.mpf(v.a) / 2 + mpmath.mpf(v.b) / 2

    while True:
        old = mpmath.mp.dps, mpmath.iv.dps
        try:
            mpmath.mp.dps = dps
            mpmath.iv.dps = dps
            iv = mpmath.iv.mpf
            windows = {l: list(level_window(a, l, k0))
                       for l in range(lo_l, hi_l + 2)}
            f = {m: iv(1) for m in windows[lo_l]}
            per_level = []
            for l in range(lo_l, hi_l + 1):
                ms, mps = windows[l], windows[l + 1]
                rect = _interval_binomial_rect(ms, mps)
                half = iv(0.5)
                g = {}
                for j, mp in enumerate(mps):
                    acc = iv(0)
                    for i, m in enumerate(ms):
                        acc += f[m] * rect[i][j] * half ** (m + mp)
                    g[mp] = acc
                level_mass = math.fsum(float(_mid(v)) for v in g.values())
                prev_mass = math.fsum(float(_mid(v)) for v in f.values())
                per_level.append(level_mass / prev_mass if prev_mass else 0.0)
                f = g
            total = iv(0)
            for v in f.values():
                total += v
            mid = _mid(total)
            rel = (float((mpmath.mpf(total.b) - mpmath.mpf(total.a)) / mid)
                   if mid > 0 else math.inf)
            if rel < 1e-50:
                logv = float(mpmath.log(mid))
                lognfact = float(mpmath.log(mpmath.factorial(n)))
                log_r0 = n + 3.0 * n * math.log(n)
                return LadderSumResult(
                    a, n, mid, (mpmath.mpf(total.a), mpmath.mpf(total.b)),
                    logv,
                    delta1=-logv / lognfact - 3.0 * a,
                    delta2=-logv / log_r0 - a,
                    per_level_factors=per_level, dps=dps)
        finally:
            mpmath.mp.dps, mpmath.iv.dps = old
        dps *= 2
        if dps > max_dps:
            raise PrecisionBudgetExceeded(
                f"interval width {rel:.2e} at dps {dps // 2}")


def ladder_sum_bruteforce(a: float, n: int) -> float:
    """Direct enumeration over the window grid (oracle for small n)."""
    k0 = SuccessPredicate(a, max(n, 4)).k0
    windows = [list(level_window(a, l, k0)) for l in range(2, n + 1)]
    total = 0.0
    import itertools
    for combo in itertools.product(*windows):
        term = 1.0
        for i in range(len(combo) - 1):
            m, mp = combo[i], combo[i + 1]
            term *= math.comb(mp + m - 1, m - 1) * 0.5 ** (m + mp)
        total += term
    return total


def success_probability_band(a: float, n: int, top_factors: dict) -> tuple[float, float]:
    """Sandwich for the n-successful probability on a desk ladder.

    The inner-window mass is (1/4) * ladder_sum (the 1/4 is the m_2 = 1
    bookkeeping of the exponent |m| - m_n = 2 + sum (m_{l+1}+m_l)); the
    outer factors (entering the ladder in band, descending once, final
    escape) come from exact solves supplied by
    excursions.top_level_factors.
    """
    if n >= 3:
        s = float(ladder_sum(a, n).value) * 0.25
    else:
        s = 0.25
    lower = top_factors["lower"] * s
    upper = top_factors["upper"] * s
    if lower > upper:
        lower, upper = upper, lower
    return lower, upper


def paley_zygmund_bound(samples=None, lam: float = 0.5, *,
                        mean: Optional[float] = None,
                        second_moment: Optional[float] = None) -> dict:
    """(1-lam)^2 (E W)^2 / E(W^2), with the empirical P(W >= lam E W) when
    samples are given."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    if samples is not None:
        w = np.asarray(samples, dtype=float)
        mean = float(w.mean())
        second_moment = float((w * w).mean())
    if mean is None or second_moment is None:
        raise ValueError("need samples or both moments")
    if mean == 0.0:
        raise DegenerateW("E W = 0")
    bound = (1.0 - lam) ** 2 * mean * mean / second_moment
    out = {"lam": lam, "mean": mean, "second_moment": second_moment,
           "bound": bound}
    if samples is not None:
        w = np.asarray(samples, dtype=float)
        emp = float((w >= lam * mean).mean())
        n = len(w)
        out["empirical"] = emp
        out["empirical_sd"] = math.sqrt(max(emp * (1 - emp), 1e-12) / n)
    return out
