"""Start-point independence of hitting laws at scale separation.

At desk scale the content of the interior/exterior Harnack inequalities is
a trend: the spread of H(x, y) over source points x shrinks as the scale
ratio R/r grows.  Reports carry ratio extremes over a source/target grid;
nothing about the asymptotic error rates is asserted here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryInvalid, TruncationBudgetExceeded
from .laws import JumpLaw
from .solve import AbsorbedOperator, annulus_set, disk_set


@dataclass
class HarnackReport:
    geometry: dict
    max_ratio: float        # max over targets y of max_x H(x,y) / min_x H(x,y)
    min_ratio: float        # min over targets of the same spread (>= 1)
    per_target: np.ndarray  # spread per target
    sources: np.ndarray
    targets: np.ndarray
    truncation_gap: float = 0.0
    notes: dict = field(default_factory=dict)


def _ring_points(radius: float, band: float, count: int, *,
                 inside: bool = False) -> np.ndarray:
    """`count` lattice points spread over the shell radius..radius+band
    (or the disk of that radius when inside=True)."""
    pts = []
    for j in range(count):
        th = 2.0 * math.pi * j / count + 0.35
        rr = radius if inside else radius + band / 2.0
        cand = np.array([round(rr * math.cos(th)), round(rr * math.sin(th))],
                        dtype=np.int64)
        if inside:
            while cand[0] ** 2 + cand[1] ** 2 >= radius ** 2:
                cand = (cand * 0.9).astype(np.int64)
        else:
            # push outward until inside [radius, radius+band]
            k = 0
            while cand[0] ** 2 + cand[1] ** 2 < radius ** 2 and k < 10:
                cand += np.sign(cand) | np.array([1, 0], dtype=np.int64)
                k += 1
        pts.append(cand)
    return np.unique(np.stack(pts), axis=0)


def _hitting_rows(op: AbsorbedOperator, law: JumpLaw, sources: np.ndarray,
                  targets: np.ndarray) -> np.ndarray:
    """H(x, y) = sum_z G(x,z) p1(z,y) for x in sources, y in targets
    (targets outside the solve domain)."""
    dom = op.domain
    rows = np.zeros((len(sources), len(targets)))
    for i, x in enumerate(sources):
        j = dom.locate(x.reshape(1, 2))[0]
        if j < 0:
            raise GeometryInvalid(f"source {x.tolist()} outside solve domain")
        e = np.zeros(dom.size)
        e[j] = 1.0
        col = op.solve(e)          # G(x, .) by symmetry
        for t, y in enumerate(targets):
            zs = y[None, :] - law.offsets            # z with z + offset = y
            idx = dom.locate(zs)
            ok = idx >= 0
            rows[i, t] = float((law.probs[ok] * col[idx[ok]]).sum())
    return rows


def _spread_report(rows: np.ndarray, geometry: dict, sources, targets,
                   gap: float = 0.0) -> HarnackReport:
    pos = rows.min(axis=0) > 0
    if not pos.any():
        raise GeometryInvalid("no target receives positive mass from every source")
    spread = rows[:, pos].max(axis=0) / rows[:, pos].min(axis=0)
    return HarnackReport(geometry, float(spread.max()), float(spread.min()),
                         spread, sources, targets[pos], gap,
                         notes={"dropped_targets": int((~pos).sum())})


def interior_harnack_ratio(law: JumpLaw, r: float, R: float, band: float = 2.0,
                           n_sources: int = 8, n_targets: int = 16
                           ) -> HarnackReport:
    """Spread of H_{D(0,R)^c}(x, y) over sources x in D(0, r), targets y in
    the exterior band of D(0,R), all from exact solves on the R-disk."""
    if not 0 < r < R:
        raise GeometryInvalid("need 0 < r < R")
    dom = disk_set(R)
    op = AbsorbedOperator(law, dom)
    sources = _ring_points(r * 0.8, 0, n_sources, inside=True)
    targets = _ring_points(R, min(band, max(law.support_range, 1.0)), n_targets)
    rows = _hitting_rows(op, law, sources, targets)
    geom = {"side": "interior", "r": r, "R": R, "band": band,
            "scale_ratio": R / r}
    return _spread_report(rows, geom, sources, targets)


def exterior_harnack_ratio(law: JumpLaw, r: float, R: float, band: float = 2.0,
                           truncation_radius: float | None = None,
                           n_sources: int = 8, n_targets: int = 16, *,
                           conditional: bool = False,
                           truncation_budget: float = 0.10
                           ) -> HarnackReport:
    """Spread of H_{D(0, r+band)}(x, y) over sources x near radius R in the
    exterior, targets y in the band of D(0, r).

    The exterior is truncated (absorbing) at `truncation_radius`; two
    truncations quantify the effect on the reported max ratio.  With
    `conditional=True` each row is normalized by its total hitting mass,
    which is the hitting law conditioned on reaching the inner disk before
    the truncation boundary.
    """
    if not 0 < r < R:
        raise GeometryInvalid("need 0 < r < R")
    rt = truncation_radius or 4.0 * R
    if rt <= 1.5 * R:
        raise GeometryInvalid("truncation radius must exceed 1.5 R")
    sources = _ring_points(R, band, n_sources)
    inner_band = min(band, max(law.support_range, 1.0))
    targets = _ring_points(r, inner_band, n_targets)
    reports = []
    for mult in (1.0, 1.4):
        dom = annulus_set(r + band, rt * mult)
        op = AbsorbedOperator(law, dom)
        rows = _hitting_rows(op, law, sources, targets)
        if conditional:
            # normalize by P^x(T_inner < T_truncation)
            i2 = (r + band) ** 2
            b = op.one_step_mass(
                lambda pts: (pts[:, 0] ** 2 + pts[:, 1] ** 2) < i2)
            tot = op.solve(b)
            for i, x in enumerate(sources):
                j = dom.locate(x.reshape(1, 2))[0]
                rows[i] /= max(float(tot[j]), 1e-300)
        geom = {"side": "exterior", "r": r, "R": R, "band": band,
                "scale_ratio": R / r, "truncation_radius": rt * mult,
                "conditional": conditional}
        reports.append(_spread_report(rows, geom, sources, targets))
    gap = abs(reports[1].max_ratio - reports[0].max_ratio)
    if gap > truncation_budget * reports[1].max_ratio:
        raise TruncationBudgetExceeded(
            f"max-ratio gap {gap:.3e} across truncations")
    final = reports[1]
    final.truncation_gap = gap
    return final
