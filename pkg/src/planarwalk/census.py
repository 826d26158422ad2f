"""Frequent-point statistics: local-time maxima and threshold censuses.

Thresholds follow the two standard normalizations (natural logs):

* time census at step n:    sites with L^x_n    >= alpha/pi   * (log n)^2
* exit census at radius n:  sites with L^x_T    >= 2 a / pi   * (log n)^2
  (T the exit time of D(0, n))

The limits behind these (ratio of the maximum to (log n)^2, and the
cardinality exponents 1 - alpha resp. 2 - a) are asymptotic; at reachable
scales the suite asserts trends and wide empirical bands, never the limit
values themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import MaxStepsExceeded
from .laws import JumpLaw
from .rng import replica_stream
from .walk import encode_points, walk_blocks


@dataclass
class CensusResult:
    mode: str                   # "time" or "exit"
    size: float                 # n (steps) or radius
    threshold: float            # alpha (time mode) or a (exit mode)
    count: int                  # |Theta| or |Psi|
    lstar: int
    top_site: tuple[int, int]
    distinct_sites: int
    exit_time: Optional[int]
    replica: int
    seed: int


def _collect_path(law: JumpLaw, rng, *, n_steps: Optional[int] = None,
                  radius: Optional[float] = None,
                  max_steps: int = 200_000_000,
                  block: int = 65536) -> tuple[np.ndarray, Optional[int]]:
    """Encoded site keys of X_0..X_T (fixed-step or exit-of-disk stopping)."""
    keys = [encode_points(np.asarray([[0, 0]]))]
    done = 0
    r2 = radius * radius if radius is not None else None
    for path in walk_blocks(law, rng, (0, 0), block):
        if r2 is not None:
            out = (path[:, 0] ** 2 + path[:, 1] ** 2) >= r2
            if out.any():
                hit = int(np.argmax(out))
                keys.append(encode_points(path[:hit + 1]))
                return np.concatenate(keys), done + hit + 1
        if n_steps is not None and done + len(path) >= n_steps:
            keys.append(encode_points(path[:n_steps - done]))
            return np.concatenate(keys), None
        keys.append(encode_points(path))
        done += len(path)
        if done >= max_steps:
            raise MaxStepsExceeded(f"no stop within {max_steps} steps")


def census_from_counts(counts: np.ndarray, size: float, mode: str,
                       threshold: float) -> tuple[int, float]:
    """Count of sites meeting the threshold, and the threshold value used."""
    if size <= 1:
        return 0, math.inf
    log2 = math.log(size) ** 2
    cut = (threshold / math.pi) * log2 if mode == "time" \
        else (2.0 * threshold / math.pi) * log2
    return int((counts >= cut).sum()), cut


def run_census(law: JumpLaw, mode: str, size: float, threshold: float,
               replicas: int, seed: int) -> list[CensusResult]:
    """Per-replica frequent-point census.

    mode "time": walk `size` steps; threshold alpha in (0, 1).
    mode "exit": walk to the exit of D(0, size); threshold a in (0, 2).
    A degenerate size (n = 0) yields an empty census with L* = 1.
    """
    if mode == "time" and not 0.0 < threshold < 1.0:
        raise ValueError("alpha must lie in (0,1) for the time census")
    if mode == "exit" and not 0.0 < threshold < 2.0:
        raise ValueError("a must lie in (0,2) for the exit census")
    out = []
    for rep in range(replicas):
        rng = replica_stream(seed, rep)
        if size < 1:
            out.append(CensusResult(mode, size, threshold, 0, 1, (0, 0), 1,
                                    0 if mode == "exit" else None, rep, seed))
            continue
        if mode == "time":
            keys, exit_time = _collect_path(law, rng, n_steps=int(size))
        elif mode == "exit":
            keys, exit_time = _collect_path(law, rng, radius=float(size))
        else:
            raise ValueError(mode)
        uniq, counts = np.unique(keys, return_counts=True)
        cnt, _ = census_from_counts(counts, size, mode, threshold)
        top = int(np.argmax(counts))
        from .walk import decode_points
        out.append(CensusResult(mode, size, threshold, cnt,
                                int(counts.max()),
                                tuple(decode_points(uniq[top:top + 1])[0].tolist()),
                                len(uniq), exit_time, rep, seed))
    return out


def et_ratio_series(law: JumpLaw, checkpoints: Sequence[int], replicas: int,
                    seed: int) -> dict:
    """Per-replica trajectory of L*_n / (log n)^2 at the checkpoints,
    measured along one path per replica (the statements are pathwise), with
    median and IQR summaries."""
    checkpoints = sorted(int(c) for c in checkpoints)
    n_max = checkpoints[-1]
    ratios = np.zeros((replicas, len(checkpoints)))
    for rep in range(replicas):
        rng = replica_stream(seed, rep)
        keys, _ = _collect_path(law, rng, n_steps=n_max)
        for j, n in enumerate(checkpoints):
            _, counts = np.unique(keys[:n + 1], return_counts=True)
            ratios[rep, j] = counts.max() / math.log(n) ** 2
    med = np.median(ratios, axis=0)
    q1, q3 = np.percentile(ratios, [25, 75], axis=0)
    return {"checkpoints": checkpoints, "ratios": ratios,
            "median": med, "iqr": (q1, q3)}


def time_exponent(law: JumpLaw, radii: Sequence[float], replicas: int,
                  seed: int, max_steps: int = 200_000_000) -> dict:
    """log T_exit / log n per replica and radius, with medians."""
    radii = [float(r) for r in radii]
    if min(radii) < 10:
        raise ValueError("radii must be >= 10")
    expo = np.zeros((replicas, len(radii)))
    for rep in range(replicas):
        for j, r in enumerate(radii):
            rng = replica_stream(seed, rep * len(radii) + j)
            _, t = _collect_path(law, rng, radius=r, max_steps=max_steps)
            expo[rep, j] = math.log(t) / math.log(r)
    return {"radii": radii, "exponents": expo,
            "median": np.median(expo, axis=0)}


def psi_slope(law: JumpLaw, radii: Sequence[float], a_values: Sequence[float],
              replicas: int, seed: int) -> dict:
    """Fitted slope of log |Psi_n(a)| against log n over the given radii.

    One set of walks serves every `a` (thresholds reuse the same local-time
    fields).  Replicas with an empty census at some radius are excluded
    from that radius's mean (logged in the result).
    """
    counts = {a: np.zeros((replicas, len(radii))) for a in a_values}
    exit_times = np.zeros((replicas, len(radii)), dtype=np.int64)
    for rep in range(replicas):
        for j, r in enumerate(radii):
            rng = replica_stream(seed, rep * len(radii) + j)
            keys, t = _collect_path(law, rng, radius=float(r))
            _, cnt = np.unique(keys, return_counts=True)
            exit_times[rep, j] = t
            for a in a_values:
                c, _ = census_from_counts(cnt, float(r), "exit", a)
                counts[a][rep, j] = c
    slopes = {}
    for a in a_values:
        mean_log = []
        for j in range(len(radii)):
            col = counts[a][:, j]
            col = col[col > 0]
            mean_log.append(np.log(col).mean())
        coef = np.polyfit(np.log(np.asarray(radii, float)), mean_log, 1)
        slopes[a] = float(coef[0])
    return {"radii": list(radii), "a_values": list(a_values),
            "counts": counts, "slopes": slopes, "exit_times": exit_times}
