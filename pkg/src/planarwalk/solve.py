"""Exact linear algebra for absorbed walks on finite lattice sets.

For a finite set A and the sub-stochastic restriction P_A of the step law,
the Green's matrix is G = (I - P_A)^{-1}.  Everything in the exact layer
reduces to solves against M = I - P_A:

* Green columns        M g = e_y          (g(x) = G(x, y))
* expected exit times  M t = 1            (t(x) = E^x T)
* harmonic measure     M u = b_S,  b_S(x) = P(x + X_1 in S)
  (u(x) = P^x(first exit lands in S))

M is symmetric positive definite for symmetric laws, so both a direct
sparse factorization and conjugate gradients apply.  Narrow-stencil laws
assemble M in CSR and go through SuperLU (CG above a size cap); the heavy
preset has ~3e5 support points, which would make CSR assembly quadratic,
so its matvec is computed by FFT convolution over the bounding box and the
system is solved with CG.  Residuals are checked on every solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainTooLarge, SolverDivergence
from .laws import JumpLaw

_LU_CAP = 700_000          # unknowns beyond this go to CG even for stencils
_STENCIL_CAP = 64          # offsets beyond this use the FFT matvec
_DEFAULT_RESIDUAL = 1e-10


@dataclass(frozen=True)
class LatticeSet:
    """A finite subset of Z^2 with O(1) membership lookup.

    Stored as a boolean mask over its bounding box; `index` maps grid cells
    to solver indices (-1 outside the set).
    """

    lo: np.ndarray          # (2,) lower corner of the bounding box
    mask: np.ndarray        # bool, bounding-box occupancy
    index: np.ndarray       # int64, -1 outside
    points: np.ndarray      # (N,2) int64, ordered by solver index

    @property
    def size(self) -> int:
        return len(self.points)

    def locate(self, pts: np.ndarray) -> np.ndarray:
        """Solver indices of pts (-1 where outside the set)."""
        pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
        rel = pts - self.lo
        ok = ((rel >= 0) & (rel < np.asarray(self.mask.shape))).all(axis=1)
        out = np.full(len(pts), -1, dtype=np.int64)
        out[ok] = self.index[rel[ok, 0], rel[ok, 1]]
        return out

    @classmethod
    def from_mask(cls, lo, mask) -> "LatticeSet":
        index = np.full(mask.shape, -1, dtype=np.int64)
        n = int(mask.sum())
        index[mask] = np.arange(n)
        pts = np.argwhere(mask) + np.asarray(lo, dtype=np.int64)
        return cls(np.asarray(lo, dtype=np.int64), mask, index, pts)


def disk_set(radius: float, center=(0, 0)) -> LatticeSet:
    """Open disk D(center, radius)."""
    hi = int(math.ceil(radius))
    xs, ys = np.mgrid[-hi:hi + 1, -hi:hi + 1]
    mask = (xs * xs + ys * ys) < radius * radius
    lo = np.asarray(center, dtype=np.int64) - hi
    return LatticeSet.from_mask(lo, mask)


def annulus_set(r_in: float, r_out: float, center=(0, 0)) -> LatticeSet:
    """Points with r_in <= |y - c| < r_out (the open outer disk minus the
    open inner disk)."""
    hi = int(math.ceil(r_out))
    xs, ys = np.mgrid[-hi:hi + 1, -hi:hi + 1]
    r2 = xs * xs + ys * ys
    mask = (r2 >= r_in * r_in) & (r2 < r_out * r_out)
    lo = np.asarray(center, dtype=np.int64) - hi
    return LatticeSet.from_mask(lo, mask)


class AbsorbedOperator:
    """M = I - P_A on a LatticeSet, with solve and matvec services."""

    def __init__(self, law: JumpLaw, domain: LatticeSet, *,
                 residual_target: float = _DEFAULT_RESIDUAL,
                 size_cap: int = 40_000_000):
        if domain.size == 0:
            raise DomainTooLarge("empty domain")
        if domain.size > size_cap:
            raise DomainTooLarge(f"{domain.size} points exceeds cap {size_cap}")
        self.law = law
        self.domain = domain
        self.residual_target = residual_target
        self._lu = None
        self._csr: Optional[sp.csr_matrix] = None
        self._fft: Optional[tuple] = None
        if len(law.offsets) <= _STENCIL_CAP:
            self._csr = self._assemble_csr()
            if domain.size <= _LU_CAP:
                self._lu = spla.splu(self._csr.tocsc())
        else:
            self._fft = self._prepare_fft()

    # -- assembly ---------------------------------------------------------

    def _assemble_csr(self) -> sp.csr_matrix:
        dom = self.domain
        n = dom.size
        rows, cols, vals = [], [], []
        for (dx, dy), p in zip(self.law.offsets.tolist(), self.law.probs):
            tgt = dom.locate(dom.points + np.asarray([dx, dy], dtype=np.int64))
            ok = tgt >= 0
            rows.append(np.arange(n, dtype=np.int64)[ok])
            cols.append(tgt[ok])
            vals.append(np.full(int(ok.sum()), p))
        P = sp.csr_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
        return (sp.eye(n, format="csr") - P).tocsr()

    def _prepare_fft(self):
        pg, ph = self.law.prob_grid()
        shape = self.domain.mask.shape
        full = (shape[0] + 2 * ph, shape[1] + 2 * ph)
        fshape = tuple(sfft.next_fast_len(s) for s in full)
        kernel = np.zeros(fshape)
        # wrap-around placement of the centered kernel
        for (dx, dy), p in zip(self.law.offsets.tolist(), self.law.probs):
            kernel[dx % fshape[0], dy % fshape[1]] += p
        return (sfft.rfft2(kernel), fshape, ph)

    # -- services ---------------------------------------------------------

    def apply_P(self, v: np.ndarray) -> np.ndarray:
        """(P_A v)(x) = sum_y p(y - x) v(y) over y in A."""
        if self._csr is not None:
            return v - self._csr.dot(v)
        kf, fshape, ph = self._fft
        grid = np.zeros(fshape)
        m = self.domain.mask
        grid[:m.shape[0], :m.shape[1]][m] = v
        # symmetric law: correlation equals convolution
        conv = sfft.irfft2(sfft.rfft2(grid) * kf, s=fshape)
        return conv[:m.shape[0], :m.shape[1]][m]

    def apply_M(self, v: np.ndarray) -> np.ndarray:
        if self._csr is not None:
            return self._csr.dot(v)
        return v - self.apply_P(v)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve M x = b to the residual target; raises SolverDivergence."""
        b = np.asarray(b, dtype=float)
        if self._lu is not None:
            x = self._lu.solve(b)
        else:
            linop = spla.LinearOperator((self.domain.size,) * 2,
                                        matvec=self.apply_M, dtype=float)
            x, info = spla.cg(linop, b, rtol=1e-14, atol=self.residual_target * 1e-3,
                              maxiter=20000)
            if info != 0:
                raise SolverDivergence(f"CG failed (info={info})")
        scale = max(float(np.abs(b).max()), 1.0)
        res = float(np.abs(self.apply_M(x) - b).max()) / scale
        if res > self.residual_target:
            raise SolverDivergence(f"residual {res:.2e} above target "
                                   f"{self.residual_target:.0e}")
        return x

    def one_step_mass(self, indicator: Callable[[np.ndarray], np.ndarray]
                      ) -> np.ndarray:
        """b(x) = P(x + X_1 in S) for every x in the domain, where S is given
        by a vectorized point indicator.  Evaluated by FFT over the box for
        wide-support laws, directly for stencils."""
        dom = self.domain
        if self._csr is not None:
            b = np.zeros(dom.size)
            for (dx, dy), p in zip(self.law.offsets.tolist(), self.law.probs):
                tgt = dom.points + np.asarray([dx, dy], dtype=np.int64)
                b += p * indicator(tgt).astype(float)
            return b
        pg, ph = self.law.prob_grid()
        m = dom.mask
        nx, ny = m.shape
        xs, ys = np.mgrid[-ph:nx + ph, -ph:ny + ph]
        pts = np.stack([xs.ravel(), ys.ravel()], axis=1) + dom.lo
        ind = indicator(pts).astype(float).reshape(nx + 2 * ph, ny + 2 * ph)
        from scipy.signal import fftconvolve
        conv = fftconvolve(ind, pg, mode="same")[ph:nx + ph, ph:ny + ph]
        return conv[m]

    def exit_mass(self) -> np.ndarray:
        """b(x) = P(x + X_1 leaves A) = 1 - row sum of P_A."""
        ones = np.ones(self.domain.size)
        return ones - self.apply_P(ones)


class GreenOperator:
    """Green's function of a finite absorbing set, backed by solves.

    `matrix()` materializes the dense N x N Green matrix (small domains
    only); all identities are available without it via solves.
    """

    def __init__(self, law: JumpLaw, domain: LatticeSet, *,
                 residual_target: float = _DEFAULT_RESIDUAL):
        self.op = AbsorbedOperator(law, domain, residual_target=residual_target)
        self.law = law
        self.domain = domain
        self._matrix: Optional[np.ndarray] = None

    @property
    def residual_target(self) -> float:
        return self.op.residual_target

    def column(self, y) -> np.ndarray:
        """G(., y) as a vector over the domain ordering."""
        i = self.domain.locate(np.asarray([y]))[0]
        if i < 0:
            raise ValueError(f"{y} not in domain")
        b = np.zeros(self.domain.size)
        b[i] = 1.0
        return self.op.solve(b)

    def value(self, x, y) -> float:
        i = self.domain.locate(np.asarray([x]))[0]
        if i < 0:
            raise ValueError(f"{x} not in domain")
        return float(self.column(y)[i])

    def expected_exit_times(self) -> np.ndarray:
        """E^x T_{A^c} = row sums of G, via M t = 1."""
        return self.op.solve(np.ones(self.domain.size))

    def weighted_sum(self, weights: np.ndarray) -> np.ndarray:
        """v(x) = sum_y G(x, y) w(y) via one solve (G is symmetric)."""
        return self.op.solve(np.asarray(weights, dtype=float))

    def matrix(self, cap: int = 6000) -> np.ndarray:
        """Dense Green matrix; refuses beyond `cap` unknowns."""
        n = self.domain.size
        if n > cap:
            raise DomainTooLarge(f"dense G with {n} points exceeds cap {cap}")
        if self._matrix is None:
            eye = np.eye(n)
            if self.op._lu is not None:
                self._matrix = self.op._lu.solve(eye)
            else:
                cols = [self.op.solve(eye[:, j]) for j in range(n)]
                self._matrix = np.stack(cols, axis=1)
        return self._matrix

    def residual_of_matrix(self) -> float:
        """max |(I - P_A) G - I| entrywise, for the materialized matrix."""
        G = self.matrix()
        n = self.domain.size
        if self.op._csr is not None:
            R = self.op._csr.dot(G)
        else:
            R = np.stack([self.op.apply_M(G[:, j]) for j in range(n)], axis=1)
        return float(np.abs(R - np.eye(n)).max())
