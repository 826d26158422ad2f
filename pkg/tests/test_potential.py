"""Exact potential theory: Green operators, the potential kernel, hitting
laws, crossing probabilities, and the boundary estimates."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planarwalk import DiskDomain, preset
from planarwalk.errors import BoxTooSmall, GeometryInvalid, NotAperiodic
from planarwalk.potential import (
    band_skip_probability, crossing_probability, escape_time, exterior_green,
    gambler_ruin_profile, gaussian_kernel, green_disk, hit_zero_probability,
    hitting_distribution, local_clt_errors, loglog_slope, one_ring_hit_probability,
    p23_crosscheck, potential_kernel, ring_green_sum, theoretical_log_slope,
    transition_probabilities)
from planarwalk.rng import replica_stream
from planarwalk.solve import GreenOperator, annulus_set, disk_set
from planarwalk.walk import exit_times_batch

IDA = preset("id-a")
LAZY = preset("lazy-srw")
SRW = preset("srw")

K_SRW = (2 * 0.5772156649015329 + 3 * math.log(2)) / math.pi  # SRW kernel constant


@pytest.fixture(scope="module")
def pkm_lazy():
    return potential_kernel(LAZY, 64)


@pytest.fixture(scope="module")
def pkm_ida():
    return potential_kernel(IDA, 64)


# --- Green operator basics -------------------------------------------------

def test_green_single_point_domain():
    g = green_disk(IDA, DiskDomain((0, 0), 1))
    assert g.value((0, 0), (0, 0)) == pytest.approx(1.25, abs=1e-12)
    assert escape_time(IDA, DiskDomain((0, 0), 1), (0, 0)) == pytest.approx(1.25)


def test_green_matrix_identities_small_disk():
    g = green_disk(IDA, DiskDomain((0, 0), 9))
    G = g.matrix()
    assert g.residual_of_matrix() < 1e-10
    assert np.abs(G - G.T).max() < 1e-9
    assert G.min() >= 0
    t = g.expected_exit_times()
    assert np.abs(G.sum(axis=1) - t).max() < 1e-9


def test_mark1_factorization():
    # G(x,0) = P^x(T_0 < T_exit) G(0,0)
    g = green_disk(IDA, DiskDomain((0, 0), 20))
    col = g.column((0, 0))
    i0 = g.domain.locate([[0, 0]])[0]
    for x in ((3, 2), (7, 0), (-5, 9)):
        ix = g.domain.locate([list(x)])[0]
        p = hit_zero_probability(IDA, 20, x)
        assert abs(col[ix] - p * col[i0]) < 1e-9


def test_escape_time_scaling_and_monte_carlo():
    vals = {n: escape_time(IDA, DiskDomain((0, 0), n), (0, 0))
            for n in (25, 50, 100)}
    ratios = [v / n ** 2 for n, v in vals.items()]
    assert max(ratios) / min(ratios) < 2.0
    ts = exit_times_batch(IDA, DiskDomain((0, 0), 25), (0, 0), 600, seed=4)
    se = ts.std() / math.sqrt(len(ts))
    assert abs(ts.mean() - vals[25]) < 3 * se


@settings(max_examples=8, deadline=None)
@given(st.integers(5, 14), st.integers(0, 10_000))
def test_green_properties_random_small_disks(radius, seed):
    rng = np.random.default_rng(seed)
    g = GreenOperator(IDA, disk_set(radius))
    pts = g.domain.points
    xi, yi = rng.integers(0, len(pts), 2)
    cx = g.column(tuple(pts[xi].tolist()))
    cy = g.column(tuple(pts[yi].tolist()))
    assert cx[yi] == pytest.approx(cy[xi], abs=1e-9)   # symmetry
    assert cx.min() >= -1e-12                          # nonnegativity
    t = g.expected_exit_times()
    assert t.min() >= 1.0 - 1e-9


# --- gaussian kernel and local CLT ------------------------------------------

def test_gaussian_kernel_values():
    assert gaussian_kernel(1, (0, 0)) == pytest.approx(1 / (2 * math.pi))
    assert gaussian_kernel(0, (0, 0)) == 1.0
    assert gaussian_kernel(0, (1, 0)) == 0.0
    assert gaussian_kernel(7, (3, -4)) == gaussian_kernel(7, (-3, 4))
    # Riemann-sum mass at n=25 within 0.01 of 1
    xs, ys = np.mgrid[-60:61, -60:61]
    total = sum(gaussian_kernel(25, (x, y))
                for x, y in zip(xs.ravel(), ys.ravel()))
    assert abs(total - 1.0) < 0.01


def test_transition_probabilities_exact_values():
    t0 = transition_probabilities(IDA, 0, 4)
    assert t0.value((0, 0)) == 1.0 and t0.grid.sum() == 1.0
    t2 = transition_probabilities(IDA, 2, 8)
    # p_2(0) = sum_x p_1(x)^2 = 0.2^2 + 8 * 0.1^2
    assert t2.value((0, 0)) == pytest.approx(0.12, abs=1e-14)
    assert t2.wrap_bound == 0.0
    with pytest.raises(BoxTooSmall):
        transition_probabilities(IDA, 50, 6)


def test_local_clt_decay_quick():
    ns = list(range(20, 101, 10))
    errs = local_clt_errors(IDA, ns)
    assert loglog_slope(ns, [errs[n] for n in ns]) <= -1.3
    with pytest.raises(NotAperiodic):
        local_clt_errors(SRW, [10, 20])


# --- potential kernel --------------------------------------------------------

def test_potential_kernel_exact_lazy_values(pkm_lazy):
    # independent oracle: a_lazy = a_srw / (1 - hold) with classical
    # a_srw(1,0) = 1, a_srw(1,1) = 4/pi, k_srw = (2 gamma + 3 log 2)/pi
    assert pkm_lazy.value((0, 0)) == 0.0
    assert pkm_lazy.value((1, 0)) == pytest.approx(4 / 3, abs=1e-9)
    assert pkm_lazy.value((1, 1)) == pytest.approx((4 / math.pi) / 0.75, abs=1e-9)
    assert pkm_lazy.k_hat == pytest.approx(K_SRW / 0.75, abs=1e-5)
    assert pkm_lazy.slope == pytest.approx(2 / (math.pi * 0.75))


def test_potential_kernel_invariants(pkm_lazy, pkm_ida):
    for pkm, law in ((pkm_lazy, LAZY), (pkm_ida, IDA)):
        assert (pkm.table >= -1e-12).all()
        assert np.array_equal(pkm.table, pkm.table[::-1, ::-1])
        hmax, h0 = pkm.harmonicity_residuals(law)
        assert hmax < 1e-6
        assert h0 == pytest.approx(1.0, abs=1e-9)
        assert pkm.fit_residual_max < 5e-3


def test_potential_kernel_requires_aperiodicity():
    with pytest.raises(NotAperiodic):
        potential_kernel(SRW, 16)


def test_green_growth_slope_matches_kernel_coefficient():
    ns = (50, 100, 200)
    for law, target in ((SRW, 2 / math.pi), (IDA, 1 / math.pi)):
        gs = [green_disk(law, DiskDomain((0, 0), n)).value((0, 0), (0, 0))
              for n in ns]
        slope = np.polyfit(np.log(ns), gs, 1)[0]
        assert abs(slope - target) / target < 0.05
        assert target == pytest.approx(theoretical_log_slope(law))


def test_p23_crosscheck_small_disk(pkm_ida):
    chk = p23_crosscheck(IDA, 14, pkm_ida, (3, 1), (0, 0))
    assert chk["abs_error"] < 1e-4
    chk2 = p23_crosscheck(IDA, 14, pkm_ida, (3, 1), (-2, 5))
    assert chk2["abs_error"] < 1e-4


# --- hitting distributions ---------------------------------------------------

def test_hitting_distribution_total_mass():
    hd = hitting_distribution(IDA, (0, 0), DiskDomain((0, 0), 50))
    assert hd.total_mass == pytest.approx(1.0, abs=1e-9)
    # finite range 2: no mass beyond radius n + 2
    assert hd.radial_tail(52.001) == 0.0


def test_hitting_distribution_overshoot_decay_heavy():
    heavy = preset("heavy-beta0.45")
    hd = hitting_distribution(heavy, (0, 0), DiskDomain((0, 0), 100))
    assert hd.total_mass == pytest.approx(1.0, abs=1e-9)
    n34 = 100 ** 0.75
    ks = (1, 2, 3, 4)
    tails = [hd.radial_tail(100 + k * n34) for k in ks]
    assert all(tails[i] > tails[i + 1] for i in range(3))
    # the exact overshoot integrates the linear boundary profile of G
    # against the jump tail, giving ~ k^-2; the cruder uniform bound
    # c k^-3 n^-(1/4+beta) then holds with a bounded constant on the grid
    assert loglog_slope(ks, tails) <= -2.0
    consts = [t * k ** 3 * 100 ** (0.25 + 0.45) for k, t in zip(ks, tails)]
    assert max(consts) < 50.0


def test_crossing_probability_formula_and_monotonicity():
    p = crossing_probability(LAZY, 10, 100, (32, 0), "outward")
    formula = math.log(32 / 10) / math.log(10)
    assert abs(p - formula) < 0.03
    q = crossing_probability(LAZY, 10, 100, (32, 0), "inward")
    assert p + q == pytest.approx(1.0, abs=1e-9)
    probs = [crossing_probability(LAZY, 10, 100, (x, 0), "outward")
             for x in (12, 32, 70, 97)]
    assert all(probs[i] < probs[i + 1] for i in range(3))
    with pytest.raises(GeometryInvalid):
        crossing_probability(LAZY, 10, 100, (5, 0))


def test_crossing_probability_vs_monte_carlo():
    # simulation oracle: lockstep replicas until either disk is reached
    law, r2_in, r2_out = LAZY, 10 ** 2, 100 ** 2
    n = 20_000
    rng = replica_stream(77, 0)
    pos = np.tile(np.array([32, 0], dtype=np.int64), (n, 1))
    alive = np.arange(n)
    outcome = np.zeros(n, dtype=bool)
    while len(alive):
        pos[alive] += law.sample(rng, len(alive))
        rr = pos[alive, 0] ** 2 + pos[alive, 1] ** 2
        out = rr >= r2_out
        inn = rr < r2_in
        outcome[alive[out]] = True
        alive = alive[~(out | inn)]
    est = outcome.mean()
    exact = crossing_probability(law, 10, 100, (32, 0), "outward")
    assert abs(est - exact) < 3 * math.sqrt(exact * (1 - exact) / n)


# --- ring estimates -----------------------------------------------------------

def test_gambler_ruin_profile_shape():
    prof = gambler_ruin_profile(IDA, 100)
    assert prof["c2"] / prof["c1"] < 3.0
    # monotone in depth along the positive x-axis ray
    on_axis = (prof["points"][:, 1] == 0) & (prof["points"][:, 0] > 0)
    order = np.argsort(prof["abs_x"][on_axis])
    probs = prof["prob"][on_axis][order]
    assert all(probs[i] >= probs[i + 1] for i in range(len(probs) - 1))
    prof2 = gambler_ruin_profile(IDA, 50)
    assert max(prof["c1"], prof2["c1"]) <= min(prof["c2"], prof2["c2"])


def test_ring_green_sum_and_one_ring_bound():
    assert ring_green_sum(LAZY, 30, 36, 10) == 0.0      # ring beyond annulus
    vals = [ring_green_sum(LAZY, 30, 90, k) for k in range(1, 11)]
    per_k = [v / k for v, k in zip(vals, range(1, 11))]
    mid = np.mean(per_k)
    assert max(per_k) <= 1.3 * mid and min(per_k) >= 0.7 * mid
    cs = [one_ring_hit_probability(LAZY, 30, k) * k for k in range(3, 11)]
    assert min(cs) > 0
    assert max(cs) / min(cs) < 2.0


def test_band_skip_zero_for_covered_band_and_bounds():
    rep = band_skip_probability(IDA, 50, 2, "interior")
    assert rep["sup"] == 0.0
    rep2 = band_skip_probability(IDA, 50, 1, "interior")
    assert 0.0 <= rep2["sup"] <= 1.0


@pytest.mark.slow
def test_band_skip_heavy_decay():
    heavy = preset("heavy-beta0.45")
    ss = [2, 4, 8, 16, 32]
    vals = [band_skip_probability(heavy, 200, s, "interior")["sup"] for s in ss]
    assert all(vals[i] > vals[i + 1] for i in range(len(vals) - 1))
    assert loglog_slope(ss, vals) <= -1.0


def test_exterior_band_skip_reports_truncation():
    heavy = preset("heavy-beta0.45")
    rep = band_skip_probability(heavy, 40, 8, "exterior", truncation_radius=160,
                                truncation_budget=0.15)
    assert 0.0 <= rep["sup"] <= 1.0
    assert rep["truncation_gap"] >= 0.0
    from planarwalk.errors import TruncationBudgetExceeded
    with pytest.raises(TruncationBudgetExceeded):
        band_skip_probability(heavy, 40, 8, "exterior", truncation_radius=160,
                              truncation_budget=1e-9)


# --- exterior Green -----------------------------------------------------------

def test_exterior_green_symmetry_and_geometry_guard():
    rep = exterior_green(IDA, 20, (45, 0), (40, 12), truncation_radius=150)
    rep2 = exterior_green(IDA, 20, (40, 12), (45, 0), truncation_radius=150)
    assert rep["value"] == pytest.approx(rep2["value"], rel=1e-8)
    with pytest.raises(GeometryInvalid):
        exterior_green(IDA, 20, (45, 0), (3, 0), truncation_radius=150)


def test_exterior_green_diagonal_log_growth():
    vals = []
    for x in (40, 80):
        rep = exterior_green(IDA, 20, (x, 0), (x, 0), truncation_radius=300)
        assert rep["gap"] < 0.05 * rep["value"]
        vals.append(rep["value"])
    assert vals[1] > vals[0]
    slope = (vals[1] - vals[0]) / (math.log(80) - math.log(40))
    assert slope > 0
