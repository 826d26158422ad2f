"""Hitting-law spread reports and their scale-separation trend."""
import numpy as np
import pytest

from planarwalk import preset
from planarwalk.errors import GeometryInvalid
from planarwalk.harnack import exterior_harnack_ratio, interior_harnack_ratio

LAZY = preset("lazy-srw")


def test_identical_source_gives_unit_ratio():
    rep = interior_harnack_ratio(LAZY, 10, 60, n_sources=1)
    assert rep.max_ratio == pytest.approx(1.0)
    assert rep.min_ratio == pytest.approx(1.0)


def test_interior_ratios_positive_and_finite():
    rep = interior_harnack_ratio(LAZY, 12, 60)
    assert np.isfinite(rep.per_target).all()
    assert rep.max_ratio >= 1.0 >= 0
    assert rep.min_ratio >= 1.0  # spread per target is max/min >= 1


def test_interior_trend_with_scale_separation():
    wide = interior_harnack_ratio(LAZY, 3, 60)     # ratio 20
    narrow = interior_harnack_ratio(LAZY, 12, 60)  # ratio 5
    assert wide.max_ratio < narrow.max_ratio
    assert wide.max_ratio > 1.0


def test_interior_deterministic():
    a = interior_harnack_ratio(LAZY, 8, 48)
    b = interior_harnack_ratio(LAZY, 8, 48)
    assert a.max_ratio == b.max_ratio
    assert np.array_equal(a.per_target, b.per_target)


def test_geometry_guard():
    with pytest.raises(GeometryInvalid):
        interior_harnack_ratio(LAZY, 60, 10)


def test_exterior_trend_and_conditional_variant():
    kwargs = dict(n_sources=6, n_targets=12, truncation_budget=0.2)
    narrow = exterior_harnack_ratio(LAZY, 6, 30, truncation_radius=150, **kwargs)
    wide = exterior_harnack_ratio(LAZY, 6, 120, truncation_radius=420, **kwargs)
    assert wide.max_ratio < narrow.max_ratio
    ncond = exterior_harnack_ratio(LAZY, 6, 30, truncation_radius=150,
                                   conditional=True, **kwargs)
    wcond = exterior_harnack_ratio(LAZY, 6, 120, truncation_radius=420,
                                   conditional=True, **kwargs)
    assert wcond.max_ratio < ncond.max_ratio
    assert wcond.truncation_gap >= 0.0
