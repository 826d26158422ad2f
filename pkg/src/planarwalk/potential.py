"""Exact potential theory: n-step laws, the potential kernel, Green's
functions of disks and annuli, hitting laws, and the boundary estimates.

Normalization note.  The classical leading term of the potential kernel is
``a(x) = (1/(pi*sqrt(det C))) log|x| + k + o(1)`` for a symmetric strongly
aperiodic walk with step covariance C; the widely quoted 2/pi is the SRW
case (per-coordinate variance 1/2).  All fits in this module use the law's
own coefficient, exposed as :func:`theoretical_log_slope`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft
from scipy.special import exp1, zeta

from .errors import BoxTooSmall, GeometryInvalid, NotAperiodic, TruncationBudgetExceeded
from .laws import JumpLaw
from .solve import GreenOperator, LatticeSet, annulus_set, disk_set
from .walk import DiskDomain

EULER_GAMMA = 0.5772156649015328606


# ---------------------------------------------------------------------------
# small fitting helpers shared across modules
# ---------------------------------------------------------------------------

def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


def linear_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)[0])


def theoretical_log_slope(law: JumpLaw) -> float:
    """Coefficient of log|x| in a(x) (= coefficient of log n in G_D(0,0))."""
    det = float(np.linalg.det(law.covariance))
    return 1.0 / (math.pi * math.sqrt(det))


# ---------------------------------------------------------------------------
# n-step transition probabilities and the Gaussian comparison kernel
# ---------------------------------------------------------------------------

def gaussian_kernel(n: int, x) -> float:
    """q_n(x) = exp(-|x|^2 / 2n) / (2 pi n); q_0 is the indicator of 0.

    This is the identity-covariance kernel; the covariance-matched variant
    used in comparisons is :func:`gaussian_grid`.
    """
    x = np.asarray(x, dtype=float)
    if n == 0:
        return 1.0 if np.all(x == 0) else 0.0
    return float(np.exp(-(x @ x) / (2.0 * n)) / (2.0 * math.pi * n))


def gaussian_grid(n: int, half: int, sigma2: float = 1.0) -> np.ndarray:
    """Covariance-matched heat kernel sigma2*n on a (2*half+1)^2 grid."""
    xs, ys = np.mgrid[-half:half + 1, -half:half + 1]
    r2 = (xs * xs + ys * ys).astype(float)
    return np.exp(-r2 / (2.0 * sigma2 * n)) / (2.0 * math.pi * sigma2 * n)


@dataclass
class TransitionTable:
    """p_n on a centered square grid with wrap accounting."""

    n: int
    half: int
    grid: np.ndarray            # (2*half+1)^2
    wrap_bound: float           # bound on probability mass aliased by the torus

    def value(self, x) -> float:
        i, j = int(x[0]) + self.half, int(x[1]) + self.half
        if not (0 <= i < self.grid.shape[0] and 0 <= j < self.grid.shape[1]):
            return 0.0
        return float(self.grid[i, j])


class _TorusConvolver:
    """Circular-convolution workspace on an L x L torus.

    Centered grids of half-width `half` are embedded with wrap-around;
    since every law here spreads like sqrt(n), taking `half` a few standard
    deviations beyond the target box makes aliasing negligible, and exactly
    zero while n * range < half for finite-range laws.
    """

    def __init__(self, law: JumpLaw, half: int):
        self.law = law
        self.half = half
        self.L = sfft.next_fast_len(2 * half + 1, real=True)
        base = np.zeros((self.L, self.L))
        for (dx, dy), p in zip(law.offsets.tolist(), law.probs):
            base[dx % self.L, dy % self.L] += p
        self.p_hat = sfft.rfft2(base)

    def to_centered(self, flat: np.ndarray, half: Optional[int] = None) -> np.ndarray:
        half = self.half if half is None else half
        idx = (np.arange(-half, half + 1)) % self.L
        return flat[np.ix_(idx, idx)]

    def power_grid(self, n: int) -> np.ndarray:
        """p_n by binary powering in the frequency domain."""
        return sfft.irfft2(self.p_hat ** n, s=(self.L, self.L))


def spread_halfwidth(law: JumpLaw, n: int, box: int = 0, z: float = 8.5) -> int:
    """Half-width needed so that mass beyond it after n steps is negligible
    (z standard deviations plus one support range plus the target box)."""
    sig = math.sqrt(max(law.sigma2, 1e-12))
    return int(math.ceil(box + z * sig * math.sqrt(max(n, 1)) + law.support_range + 2))


def transition_probabilities(law: JumpLaw, n: int, box_radius: int,
                             mass_budget: Optional[float] = 1e-12
                             ) -> TransitionTable:
    """Exact n-fold convolution of the one-step law.

    The convolution runs on an internal torus big enough that aliasing is
    below ~1e-15 (exactly zero while the finite-range support fits); the
    result is cropped to the requested box.  `mass_budget` bounds the mass
    allowed to fall outside the returned box; pass None to only report it.
    """
    if n == 0:
        grid = np.zeros((2 * box_radius + 1,) * 2)
        grid[box_radius, box_radius] = 1.0
        return TransitionTable(0, box_radius, grid, 0.0)
    need = spread_halfwidth(law, n)
    half = max(box_radius, need)
    conv = _TorusConvolver(law, half)
    grid = conv.to_centered(conv.power_grid(n), half=box_radius)
    if law.finite_range and n * law.support_range < half:
        wrap = 0.0
    else:
        sig = math.sqrt(law.sigma2)
        z = (half - law.support_range) / (sig * math.sqrt(n))
        wrap = 4.0 * math.exp(-0.5 * z * z)
    loss = max(1.0 - float(grid.sum()), 0.0) + wrap
    if mass_budget is not None and loss > mass_budget:
        raise BoxTooSmall(f"mass loss {loss:.3e} outside box {box_radius} "
                          f"exceeds budget {mass_budget:.0e} for p_{n}")
    return TransitionTable(n, box_radius, grid, loss)


def local_clt_errors(law: JumpLaw, ns: Sequence[int]) -> dict[int, float]:
    """sup_x |p_n(x) - q_n(x)| with the covariance-matched Gaussian kernel,
    for each n in ns (walked sequentially in the frequency domain)."""
    if not law.strongly_aperiodic:
        raise NotAperiodic(f"{law.name}: local CLT comparison needs strong aperiodicity")
    n_max = max(ns)
    half = spread_halfwidth(law, n_max)
    conv = _TorusConvolver(law, half)
    want = sorted(set(int(n) for n in ns))
    out: dict[int, float] = {}
    cur = np.ones_like(conv.p_hat)
    n_done = 0
    for n in want:
        cur = cur * conv.p_hat ** (n - n_done)
        n_done = n
        pn = conv.to_centered(sfft.irfft2(cur, s=(conv.L, conv.L)))
        qn = gaussian_grid(n, half, law.sigma2)
        out[n] = float(np.abs(pn - qn).max())
    return out


# ---------------------------------------------------------------------------
# potential kernel
# ---------------------------------------------------------------------------

def _gaussian_tail_sum(c: np.ndarray, n0: int, sigma2: float) -> np.ndarray:
    """sum_{n >= n0} (1 - exp(-c/n)) / (2 pi sigma2 n), vectorized in c,
    by Euler-Maclaurin with the exact integral term
    integral_N^inf = gamma + log(c/N) + E1(c/N).

    `c` is |x|^2 / (2 sigma2); valid for c >= 0 (zero yields zero).
    """
    c = np.asarray(c, dtype=float)
    out = np.zeros_like(c)
    pos = c > 0
    cp = c[pos]
    u = cp / n0
    integral = EULER_GAMMA + np.log(u) + exp1(u)
    E = np.exp(-u)
    n = float(n0)
    g0 = (1.0 - E) / n
    g1 = -E * cp / n ** 3 - (1.0 - E) / n ** 2
    g3 = (-E * cp ** 3 / n ** 7 + 9.0 * E * cp ** 2 / n ** 6
          - 18.0 * E * cp / n ** 5 - 6.0 * (1.0 - E) / n ** 4)
    out[pos] = (integral + 0.5 * g0 - g1 / 12.0 + g3 / 720.0)
    return out / (2.0 * math.pi * sigma2)


@dataclass
class PotentialKernelModel:
    """Table of a(x) on a centered box plus the fitted additive constant.

    a(x) is assembled as
      sum_{n < N} [p_n(0) - p_n(x)]            (exact, frequency-domain doubling)
      + sum_{n >= N} [q_n(0) - q_n(x)]         (covariance-matched Gaussian,
                                                Euler-Maclaurin closed form)
      + fitted n^-2 + n^-3 tail of the residual p_n - q_n difference,
    mirroring the I1+I2+I3 split that proves the log asymptotics.
    """

    law_name: str
    box: int
    table: np.ndarray              # (2*box+1)^2, a[x+box, y+box]
    slope: float                   # theoretical log coefficient used in the fit
    k_hat: float
    fit_residual_max: float        # max |a - slope*log|x| - k_hat| on the shell
    shell: tuple[float, float]
    truncation: dict = field(default_factory=dict)

    def value(self, x) -> float:
        return float(self.table[int(x[0]) + self.box, int(x[1]) + self.box])

    def harmonicity_residuals(self, law: JumpLaw, r_max: Optional[float] = None
                              ) -> tuple[float, float]:
        """(max residual over 0 < |x| <= r_max, residual at 0).

        Residual(x) = sum_y p(y-x) a(y) - a(x); the defining property is
        residual = 0 off the origin and = 1 at the origin.
        """
        rng = int(math.ceil(law.support_range))
        if r_max is None:
            r_max = self.box / 2
        if r_max + rng > self.box:
            raise BoxTooSmall("harmonicity window plus law range exceeds table box")
        from scipy.signal import fftconvolve
        pg, ph = law.prob_grid()
        sm = fftconvolve(self.table, pg, mode="same")
        res = sm - self.table
        b = self.box
        xs, ys = np.mgrid[-b:b + 1, -b:b + 1]
        r2 = xs * xs + ys * ys
        ring = (r2 > 0) & (r2 <= r_max * r_max)
        return float(np.abs(res[ring]).max()), float(res[b, b])


def potential_kernel(law: JumpLaw, box_radius: int, *,
                     n_cut: Optional[int] = None,
                     shell: Optional[tuple[float, float]] = None
                     ) -> PotentialKernelModel:
    """Compute a(x) = lim sum_{j<=n} [p_j(0) - p_j(x)] on a centered box."""
    if not law.strongly_aperiodic:
        raise NotAperiodic(f"{law.name}: potential kernel series needs strong aperiodicity")
    sigma2 = law.sigma2
    if n_cut is None:
        n_cut = 1 << 15
    k_top = max(int(math.ceil(math.log2(n_cut))), 4)
    n_cut = 1 << k_top
    # torus sized for the largest p_n we touch (4 * n_cut in the tail fit);
    # 5.5 sigma of margin suffices there because only the smooth, tiny
    # residual samples live at that scale, while the exact partial sum
    # (n < n_cut) then enjoys an 11 sigma margin
    half = spread_halfwidth(law, 4 * n_cut, box=box_radius, z=5.5)
    conv = _TorusConvolver(law, half)
    s_hat = np.ones_like(conv.p_hat)
    p_hat = conv.p_hat.copy()
    for _ in range(k_top):
        s_hat = s_hat * (1.0 + p_hat)
        p_hat = p_hat * p_hat
    S = conv.to_centered(sfft.irfft2(s_hat, s=(conv.L, conv.L)), half=box_radius)
    del s_hat
    b = box_radius
    partial = S[b, b] - S

    xs, ys = np.mgrid[-b:b + 1, -b:b + 1]
    r2 = (xs * xs + ys * ys).astype(float)
    c = r2 / (2.0 * sigma2)
    gauss_tail = _gaussian_tail_sum(c, n_cut, sigma2)

    # residual tail: d_n(x) = [p_n(0)-q_n(0)] - [p_n(x)-q_n(x)] sampled at
    # n_cut, 2 n_cut, 4 n_cut and fitted as c2/n^2 + c3/n^3
    ds = []
    ns = []
    for extra in range(3):
        n = n_cut << extra
        pn = conv.to_centered(sfft.irfft2(p_hat, s=(conv.L, conv.L)), half=b)
        qn = gaussian_grid(n, b, sigma2)
        e = pn - qn
        ds.append(e[b, b] - e)
        ns.append(n)
        if extra < 2:
            p_hat = p_hat * p_hat
    A = np.array([[1.0 / n ** 2, 1.0 / n ** 3] for n in ns])
    D = np.stack([d.ravel() for d in ds])
    coef, *_ = np.linalg.lstsq(A, D, rcond=None)
    e_tail = (coef[0] * zeta(2, n_cut) + coef[1] * zeta(3, n_cut)).reshape(partial.shape)

    table = partial + gauss_tail + e_tail
    table = 0.5 * (table + table[::-1, ::-1])   # exact central symmetry
    table[b, b] = 0.0

    slope = theoretical_log_slope(law)
    if shell is None:
        shell = (box_radius * 5.0 / 16.0, box_radius * 10.0 / 16.0)
    ring = (r2 >= shell[0] ** 2) & (r2 <= shell[1] ** 2)
    dev = table[ring] - slope * 0.5 * np.log(r2[ring])
    k_hat = float(dev.mean())
    fit_res = float(np.abs(dev - k_hat).max())
    trunc = {"n_cut": n_cut, "torus": conv.L,
             "tail_fit_ns": ns, "gauss_tail": "euler-maclaurin+exp1",
             "sigma2": sigma2}
    return PotentialKernelModel(law.name, box_radius, table, slope, k_hat,
                                fit_res, shell, trunc)


# ---------------------------------------------------------------------------
# Green's functions and hitting laws
# ---------------------------------------------------------------------------

def green_disk(law: JumpLaw, domain: DiskDomain,
               residual_target: float = 1e-10) -> GreenOperator:
    """Green operator of the open disk (direct sparse solver; FFT-matvec CG
    for wide-support laws)."""
    dom = disk_set(domain.radius, domain.center)
    return GreenOperator(law, dom, residual_target=residual_target)


def escape_time(law: JumpLaw, domain: DiskDomain, x) -> float:
    """E^x T_{D^c} = row sum of the Green operator at x."""
    g = green_disk(law, domain)
    i = g.domain.locate(np.asarray([x]))[0]
    if i < 0:
        raise GeometryInvalid(f"{x} not inside {domain}")
    return float(g.expected_exit_times()[i])


def hit_zero_probability(law: JumpLaw, radius: float, x,
                         center=(0, 0)) -> float:
    """P^x(T_0 < T_exit) for the open disk, via the solve on D minus {0}."""
    hi = int(math.ceil(radius))
    xs, ys = np.mgrid[-hi:hi + 1, -hi:hi + 1]
    mask = (xs * xs + ys * ys) < radius * radius
    mask[hi, hi] = False
    dom = LatticeSet.from_mask(np.asarray(center) - hi, mask)
    from .solve import AbsorbedOperator
    op = AbsorbedOperator(law, dom)
    cz = np.asarray(center, dtype=np.int64)
    b = op.one_step_mass(lambda pts: (pts == cz).all(axis=1))
    u = op.solve(b)
    i = dom.locate(np.asarray([x]))[0]
    if i < 0:
        raise GeometryInvalid(f"{x} not in punctured disk")
    return float(u[i])


@dataclass
class HittingDistribution:
    """First-exit law on the exterior: mass function y -> H(x, y)."""

    source: tuple[int, int]
    description: str
    points: np.ndarray
    masses: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def radial_tail(self, t: float) -> float:
        """Mass landing at |y| >= t."""
        r2 = (self.points.astype(float) ** 2).sum(axis=1)
        return float(self.masses[r2 >= t * t].sum())


def hitting_distribution(law: JumpLaw, source, domain: DiskDomain
                         ) -> HittingDistribution:
    """Exterior hitting law assembled by last exit: H(x,y) = sum_z G(x,z) p1(z,y)."""
    g = green_disk(law, domain)
    i = g.domain.locate(np.asarray([source]))[0]
    if i < 0:
        raise GeometryInvalid(f"{source} not inside the disk")
    col = g.column(tuple(np.asarray(source).tolist()))
    rng = int(math.ceil(law.support_range))
    hi = int(math.ceil(domain.radius)) + rng
    pts = g.domain.points - np.asarray(domain.center, dtype=np.int64)
    if len(law.offsets) <= 64:
        acc = np.zeros((2 * hi + 1, 2 * hi + 1))
        for (dx, dy), p in zip(law.offsets.tolist(), law.probs):
            tx, ty = pts[:, 0] + dx + hi, pts[:, 1] + dy + hi
            np.add.at(acc, (tx, ty), p * col)
    else:
        # wide-support laws: one FFT convolution of the G column with p
        from scipy.signal import fftconvolve
        colg = np.zeros((2 * hi + 1, 2 * hi + 1))
        colg[pts[:, 0] + hi, pts[:, 1] + hi] = col
        pg, _ = law.prob_grid()
        acc = fftconvolve(colg, pg, mode="same")
        acc[acc < 0] = 0.0
    xs, ys = np.mgrid[-hi:hi + 1, -hi:hi + 1]
    outside = (xs * xs + ys * ys) >= domain.radius ** 2
    sel = outside & (acc > 0)
    points = np.stack([xs[sel], ys[sel]], axis=1) + np.asarray(domain.center)
    return HittingDistribution(tuple(np.asarray(source).tolist()),
                               f"exterior of D({domain.center},{domain.radius})",
                               points, acc[sel])


def crossing_probability(law: JumpLaw, r: float, R: float, x,
                         direction: str = "outward") -> float:
    """Exact annulus crossing probability from x with r < |x| < R.

    "outward": P^x(T_{D(0,R)^c} < T_{D(0,r)});  "inward": the complement
    event's probability, computed from its own one-step mass.
    """
    x = np.asarray(x, dtype=np.int64)
    ax = math.hypot(float(x[0]), float(x[1]))
    if not (r < ax < R):
        raise GeometryInvalid(f"need r < |x| < R, got |x|={ax:.3f}")
    dom = annulus_set(r, R)
    from .solve import AbsorbedOperator
    op = AbsorbedOperator(law, dom)
    if direction == "outward":
        b = op.one_step_mass(
            lambda pts: (pts[:, 0] ** 2 + pts[:, 1] ** 2) >= R * R)
    elif direction == "inward":
        b = op.one_step_mass(
            lambda pts: (pts[:, 0] ** 2 + pts[:, 1] ** 2) < r * r)
    else:
        raise ValueError(direction)
    u = op.solve(b)
    i = dom.locate(x.reshape(1, 2))[0]
    return float(u[i])


def gambler_ruin_profile(law: JumpLaw, n: int, delta: float = 0.25,
                         eps: float = 0.5) -> dict:
    """P^x(T_{D(0, delta n)} < T_{D(0,n)^c}) for every x in the outer ring
    eps*n <= |x| < n, paired with the depth rho(x) = n - |x|."""
    if not 0.0 < delta < eps < 1.0:
        raise GeometryInvalid("need 0 < delta < eps < 1")
    dom = annulus_set(delta * n, n)
    from .solve import AbsorbedOperator
    op = AbsorbedOperator(law, dom)
    rin2 = (delta * n) ** 2
    b = op.one_step_mass(lambda pts: (pts[:, 0] ** 2 + pts[:, 1] ** 2) < rin2)
    u = op.solve(b)
    pts = dom.points
    absx = np.sqrt((pts.astype(float) ** 2).sum(axis=1))
    ring = absx >= eps * n
    rho = n - absx[ring]
    prob = u[ring]
    normalized = prob * n / np.maximum(rho, 1.0)
    return {"n": n, "delta": delta, "eps": eps,
            "points": pts[ring], "abs_x": absx[ring], "rho": rho,
            "prob": prob, "normalized": normalized,
            "c1": float(normalized.min()), "c2": float(normalized.max())}


def band_skip_probability(law: JumpLaw, n: int, s: float,
                          side: str = "interior", *,
                          start_radius: Optional[float] = None,
                          truncation_radius: Optional[float] = None,
                          truncation_budget: float = 0.05) -> dict:
    """sup over starts of P(first exit skips the s-band).

    interior: starts in D(0, start_radius) (default n/2), skip means the
    first point outside D(0,n) lies beyond |y| = n + s.
    exterior: starts outside D(0, n+s) (truncated at truncation_radius),
    skip means the first point inside D(0, n+s) lies inside D(0, n).
    """
    from .solve import AbsorbedOperator
    if side == "interior":
        dom = disk_set(n)
        op = AbsorbedOperator(law, dom)
        t2 = float(n + s) ** 2
        w = op.one_step_mass(lambda pts: (pts[:, 0] ** 2 + pts[:, 1] ** 2) > t2)
        u = op.solve(w)
        sr = n / 2 if start_radius is None else start_radius
        absx2 = (dom.points.astype(float) ** 2).sum(axis=1)
        sel = absx2 <= sr * sr
        return {"side": side, "n": n, "s": s, "sup": float(u[sel].max()),
                "start_radius": sr}
    if side != "exterior":
        raise ValueError(side)
    rt = truncation_radius or 8.0 * n
    vals = []
    n2 = float(n) ** 2
    for mult in (1.0, 1.5):
        dom = annulus_set(n + s, rt * mult)
        op = AbsorbedOperator(law, dom)
        w = op.one_step_mass(lambda pts: (pts[:, 0] ** 2 + pts[:, 1] ** 2) < n2)
        u = op.solve(w)
        vals.append(float(u.max()))
    gap = abs(vals[1] - vals[0])
    if gap > truncation_budget * max(vals[1], 1e-30):
        raise TruncationBudgetExceeded(
            f"exterior skip truncation gap {gap:.3e} vs value {vals[1]:.3e}")
    return {"side": side, "n": n, "s": s, "sup": vals[1],
            "truncation_radius": rt * 1.5, "truncation_gap": gap}


def ring_green_sum(law: JumpLaw, r: float, R: float, k: int) -> float:
    """max over x in the annulus A = D(0,R) \\ D(0,r) of
    sum over the ring U_k = {r+k-1 < |y| <= r+k} of G_A(x, y)."""
    dom = annulus_set(r, R)
    pts = dom.points.astype(float)
    r2 = (pts ** 2).sum(axis=1)
    ring = (r2 > (r + k - 1) ** 2) & (r2 <= (r + k) ** 2)
    if not ring.any():
        return 0.0
    g = GreenOperator(law, dom)
    v = g.weighted_sum(ring.astype(float))
    return float(v.max())


def one_ring_hit_probability(law: JumpLaw, r: float, k: int) -> float:
    """min over annulus points with |x| <= r+k-2 of
    P^x(T_{D(0,r)} < T_{D(0,r+k)}) (exact solve on the one-ring annulus)."""
    dom = annulus_set(r, r + k)
    from .solve import AbsorbedOperator
    op = AbsorbedOperator(law, dom)
    rin2 = float(r) ** 2
    b = op.one_step_mass(lambda pts: (pts[:, 0] ** 2 + pts[:, 1] ** 2) < rin2)
    u = op.solve(b)
    absx2 = (dom.points.astype(float) ** 2).sum(axis=1)
    sel = absx2 <= (r + k - 2) ** 2
    if not sel.any():
        raise GeometryInvalid("no annulus points with |x| <= r+k-2")
    return float(u[sel].min())


def exterior_green(law: JumpLaw, n: float, x, y, truncation_radius: float,
                   truncation_budget: float = 0.05) -> dict:
    """G_{D(0,n)^c}(x, y) via truncated-annulus solves.

    Truncation absorbs at |z| >= truncation_radius, so the value is a lower
    bound increasing in the truncation; two radii give the reported gap.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    for p in (x, y):
        if float((p ** 2).sum()) < n * n:
            raise GeometryInvalid(f"{tuple(p.tolist())} inside D(0,{n})")
    if truncation_radius <= 2 * max(np.hypot(*x.astype(float)), np.hypot(*y.astype(float))):
        raise GeometryInvalid("truncation radius should far exceed |x|, |y|")
    vals = []
    for mult in (1.0, 1.4):
        dom = annulus_set(n, truncation_radius * mult)
        g = GreenOperator(law, dom)
        vals.append(g.value(tuple(x.tolist()), tuple(y.tolist())))
    gap = abs(vals[1] - vals[0])
    if gap > truncation_budget * max(abs(vals[1]), 1e-30):
        raise TruncationBudgetExceeded(
            f"exterior Green truncation gap {gap:.3e} vs value {vals[1]:.3e}")
    return {"value": vals[1], "lower": vals[0], "gap": gap,
            "truncation_radius": truncation_radius * 1.4}


def p23_crosscheck(law: JumpLaw, radius: float, pkm: PotentialKernelModel,
                   x, z) -> dict:
    """Compare G_D(x,z) from the linear solve against the potential-kernel
    identity sum_y H_{D^c}(x,y) a(y-z) - a(x-z) (a from the fitted table)."""
    dom = DiskDomain((0, 0), radius)
    g = green_disk(law, dom)
    direct = g.value(tuple(x), tuple(z))
    hd = hitting_distribution(law, x, dom)
    diffs = hd.points - np.asarray(z, dtype=np.int64)
    if np.abs(diffs).max() > pkm.box:
        raise BoxTooSmall("potential-kernel table too small for the identity sum")
    avals = pkm.table[diffs[:, 0] + pkm.box, diffs[:, 1] + pkm.box]
    via_kernel = float((hd.masses * avals).sum()) - pkm.value(
        np.asarray(x, dtype=np.int64) - np.asarray(z, dtype=np.int64))
    return {"direct": direct, "via_kernel": via_kernel,
            "abs_error": abs(direct - via_kernel)}
