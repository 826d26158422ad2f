"""Path generation: disks, local-time fields, stopping-time-driven runs.

Conventions (used consistently everywhere):

* Disk membership is strict: ``y in D(c, r)``  iff  ``|y - c| < r``.
* Local time counts visits at times ``0..exit_time`` inclusive, so the sum
  of all counts equals ``steps + 1``.  The (exterior) exit point is counted
  in the field; it never affects statistics of interior sites.
* Walk generation is blocked: offsets are sampled in vectorized batches and
  positions accumulated with cumulative sums, which keeps throughput at
  tens of millions of steps per second without losing exactness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import MaxStepsExceeded
from .laws import JumpLaw
from .rng import replica_stream

_ENC_OFF = 1 << 28
_ENC_MUL = 1 << 29


def encode_points(pts: np.ndarray) -> np.ndarray:
    """Pack (n,2) integer coordinates into one int64 key per point."""
    x = pts[..., 0].astype(np.int64)
    y = pts[..., 1].astype(np.int64)
    if len(x) and max(np.abs(x).max(), np.abs(y).max()) >= _ENC_OFF:
        raise OverflowError("coordinate exceeds encoding range")
    return (x + _ENC_OFF) * _ENC_MUL + (y + _ENC_OFF)


def decode_points(keys: np.ndarray) -> np.ndarray:
    x = keys // _ENC_MUL - _ENC_OFF
    y = keys % _ENC_MUL - _ENC_OFF
    return np.stack([x, y], axis=-1)


@dataclass(frozen=True)
class DiskDomain:
    """Open lattice disk D(center, radius) = {y : |y - center| < radius}."""

    center: tuple[int, int] = (0, 0)
    radius: float = 1.0

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.int64)
        rel = pts.reshape(-1, 2) - np.asarray(self.center, dtype=np.int64)
        return (rel[:, 0] ** 2 + rel[:, 1] ** 2) < self.radius ** 2

    def boundary_band(self, s: float) -> np.ndarray:
        """The s-band: exterior points within distance s of the disk,
        realized as the shell radius <= |y - c| <= radius + s."""
        hi = int(math.ceil(self.radius + s))
        xs, ys = np.mgrid[-hi:hi + 1, -hi:hi + 1]
        r2 = xs * xs + ys * ys
        m = (r2 >= self.radius ** 2) & (r2 <= (self.radius + s) ** 2)
        pts = np.argwhere(m) - hi
        return pts + np.asarray(self.center, dtype=np.int64)


class LocalTimeField:
    """Sparse map site -> number of visits, over times 0..total_steps."""

    def __init__(self, sites: np.ndarray, counts: np.ndarray, total_steps: int):
        self.sites = sites
        self.counts = counts
        self.total_steps = int(total_steps)

    @classmethod
    def from_encoded_path(cls, keys: np.ndarray) -> "LocalTimeField":
        uniq, counts = np.unique(keys, return_counts=True)
        return cls(decode_points(uniq), counts, len(keys) - 1)

    @property
    def lstar(self) -> int:
        return int(self.counts.max()) if len(self.counts) else 0

    @property
    def top_site(self) -> tuple[int, int]:
        i = int(np.argmax(self.counts))
        return tuple(self.sites[i].tolist())

    def count_at(self, point) -> int:
        key = encode_points(np.asarray([point]))[0]
        keys = encode_points(self.sites)
        idx = np.searchsorted(keys, key)
        if idx < len(keys) and keys[idx] == key:
            return int(self.counts[idx])
        return 0

    def as_dict(self) -> dict[tuple[int, int], int]:
        return {tuple(s.tolist()): int(c) for s, c in zip(self.sites, self.counts)}


@dataclass
class ExitResult:
    exit_point: tuple[int, int]
    exit_time: int
    local_time: Optional[LocalTimeField] = None


def sample_step(law: JumpLaw, rng: np.random.Generator) -> tuple[int, int]:
    """One offset drawn from the law (alias method)."""
    return tuple(law.sample(rng, 1)[0].tolist())


def walk_blocks(law: JumpLaw, rng: np.random.Generator,
                start: tuple[int, int] = (0, 0), block: int = 16384
                ) -> Iterator[np.ndarray]:
    """Endless stream of position blocks; block b holds X_{t+1..t+block}."""
    pos = np.asarray(start, dtype=np.int64)
    while True:
        steps = law.sample(rng, block)
        path = pos + np.cumsum(steps, axis=0)
        pos = path[-1].copy()
        yield path


def run_until_exit(start, domain: DiskDomain, law: JumpLaw,
                   rng: np.random.Generator, *, record_local_time: bool = False,
                   max_steps: int = 100_000_000, block: int = 16384) -> ExitResult:
    """Run from `start` until the first time outside `domain`.

    Returns the exit point, the exit time T = inf{i >= 0 : X_i not in D},
    and (optionally) the local-time field over times 0..T.  A start outside
    the domain exits instantly at time 0.  Exceeding `max_steps` raises
    MaxStepsExceeded; there is no silent truncation.
    """
    start = (int(start[0]), int(start[1]))
    if not domain.contains(np.asarray([start]))[0]:
        field = None
        if record_local_time:
            field = LocalTimeField(np.asarray([start]), np.asarray([1]), 0)
        return ExitResult(start, 0, field)
    cx, cy = domain.center
    r2 = domain.radius ** 2
    keys: list[np.ndarray] = []
    if record_local_time:
        keys.append(encode_points(np.asarray([start])))
    done = 0
    for path in walk_blocks(law, rng, start, block):
        rel = path - np.asarray([cx, cy], dtype=np.int64)
        out = (rel[:, 0] ** 2 + rel[:, 1] ** 2) >= r2
        hit = int(np.argmax(out)) if out.any() else -1
        if hit >= 0:
            if record_local_time:
                keys.append(encode_points(path[:hit + 1]))
                field = LocalTimeField.from_encoded_path(np.concatenate(keys))
            else:
                field = None
            return ExitResult(tuple(path[hit].tolist()), done + hit + 1, field)
        if record_local_time:
            keys.append(encode_points(path))
        done += len(path)
        if done >= max_steps:
            raise MaxStepsExceeded(f"no exit within {max_steps} steps of "
                                   f"D({domain.center}, {domain.radius})")


def exit_times_batch(law: JumpLaw, domain: DiskDomain, start, n: int,
                     seed: int, max_steps: int = 100_000_000) -> np.ndarray:
    """Exit times for n independent replicas (streams derived per replica)."""
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        res = run_until_exit(start, domain, law, replica_stream(seed, i),
                             max_steps=max_steps)
        out[i] = res.exit_time
    return out
