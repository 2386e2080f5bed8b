import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from welfarebounds.errors import (
    EmptyConfidenceSet,
    InfeasibleConstraint,
    InvalidTheta,
    NegativePriceChange,
)
from welfarebounds.regress import Interval
from welfarebounds.welfare import (
    POSITIVITY_FLOOR,
    ConstraintSet,
    WelfareQuery,
    bounds_box,
    kl_div,
    max_constrained,
    welfare_loss,
)

THREE_GOOD_QUERY = WelfareQuery(
    delta=np.array([0.5, 0.8, 0.2]), y_star=np.array([0.2, 0.6, 0.8]), alpha=0.1
)


def _box(lo, hi, K, level=1.0):
    return tuple(Interval(lo, hi, level, "BOX") for _ in range(K))


def brute_force_max(c, lo, hi, target, step=1e-3):
    """Dense grid search over the sum-constrained slice.

    Besides the raw step grid, each axis also gets the points where another
    coordinate lands exactly on one of its bounds; otherwise bound-activated
    optima are only approached linearly and the grid undershoots by O(step).
    """

    def axis(k, extra):
        pts = np.concatenate([np.arange(lo[k], hi[k], step), [hi[k]], extra])
        pts = pts[(pts >= lo[k] - 1e-12) & (pts <= hi[k] + 1e-12)]
        return np.unique(np.clip(pts, lo[k], hi[k]))

    def terms(t, ck):
        return np.where(ck > 0, t * np.log1p(ck / np.maximum(t, 1e-300)), 0.0)

    if len(lo) == 2:
        t1 = axis(0, np.array([target - lo[1], target - hi[1]]))
        t2 = target - t1
        ok = (t2 >= lo[1] - 1e-12) & (t2 <= hi[1] + 1e-12)
        vals = terms(t1[ok], c[0]) + terms(np.clip(t2[ok], lo[1], hi[1]), c[1])
        return float(vals.max()), float(vals.min())
    corners = [target - b2 - b3 for b2 in (lo[1], hi[1]) for b3 in (lo[2], hi[2])]
    best_max, best_min = -math.inf, math.inf
    for t1 in axis(0, np.asarray(corners)):
        t2 = axis(1, np.array([target - t1 - lo[2], target - t1 - hi[2]]))
        t3 = target - t1 - t2
        ok = (t3 >= lo[2] - 1e-12) & (t3 <= hi[2] + 1e-12)
        if not ok.any():
            continue
        vals = (
            terms(np.full(int(ok.sum()), t1), c[0])
            + terms(t2[ok], c[1])
            + terms(np.clip(t3[ok], lo[2], hi[2]), c[2])
        )
        best_max = max(best_max, float(vals.max()))
        best_min = min(best_min, float(vals.min()))
    return best_max, best_min


def test_point_value_three_goods():
    wl = welfare_loss(np.array([0.2, 0.3, 0.5]), THREE_GOOD_QUERY)
    assert_allclose(wl, 0.5065623234290035, atol=1e-12)
    assert round(wl, 3) == 0.507


def test_zero_price_change_contributes_nothing():
    q = WelfareQuery(delta=np.zeros(3), y_star=np.array([0.2, 0.6, 0.8]), alpha=0.1)
    assert welfare_loss(np.array([0.2, 0.3, 0.5]), q) == 0.0
    q2 = WelfareQuery(delta=np.array([0.5, 0.0]), y_star=np.array([1.0, 1.0]), alpha=0.1)
    assert welfare_loss(np.array([0.4, 0.6]), q2) == pytest.approx(
        0.4 * math.log1p(0.5 / 0.4), abs=1e-15
    )


def test_all_ones_theta():
    wl = welfare_loss(np.ones(3), THREE_GOOD_QUERY)
    assert_allclose(wl, math.log(1.1) + math.log(1.48) + math.log(1.16), atol=1e-12)
    assert_allclose(wl, 0.6357722726986219, atol=1e-12)


def test_invalid_inputs():
    with pytest.raises(InvalidTheta):
        welfare_loss(np.array([0.2, -0.3, 0.5]), THREE_GOOD_QUERY)
    with pytest.raises(InvalidTheta):
        welfare_loss(np.array([0.2, 0.3]), THREE_GOOD_QUERY)
    with pytest.raises(NegativePriceChange):
        WelfareQuery(delta=np.array([-0.1, 0.2]), y_star=np.ones(2), alpha=0.1)
    with pytest.raises(ValueError):
        WelfareQuery(delta=np.array([0.1, 0.2]), y_star=np.array([1.0, 0.0]), alpha=0.1)


def test_kl_div_identity():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        K = int(rng.integers(1, 7))
        theta = rng.uniform(1e-3, 2.0, K)
        q = WelfareQuery(rng.uniform(0, 2, K), rng.uniform(0.1, 2, K), 0.1)
        gamma = theta + q.spend_change
        mask = q.spend_change > 0
        lhs = -kl_div(theta[mask], gamma[mask]).sum() + q.spend_change.sum()
        worst = max(worst, abs(lhs - welfare_loss(theta, q)))
    assert worst <= 1e-12


def test_bounds_box_degenerate():
    theta = np.array([0.2, 0.3, 0.5])
    box = tuple(Interval(t, t, 1 - 0.1 / 3, "BOX") for t in theta)
    wb = bounds_box(ConstraintSet(box), THREE_GOOD_QUERY)
    true_wl = welfare_loss(theta, THREE_GOOD_QUERY)
    assert wb.wl_min == wb.wl_max == true_wl
    assert wb.level == pytest.approx(0.9)
    assert np.array_equal(wb.gamma, wb.argmax_theta + THREE_GOOD_QUERY.spend_change)


def test_bounds_box_fixed_unit_box():
    wb = bounds_box(ConstraintSet(_box(POSITIVITY_FLOOR, 1.0, 3)), THREE_GOOD_QUERY)
    assert_allclose(wb.wl_max, 0.6357722726986219, atol=1e-12)
    assert wb.wl_min < 1e-4  # theta*log(1 + c/theta) vanishes at the floor
    assert wb.level == 1.0


def test_bounds_box_rejects_sum_target_and_empty_interval():
    with pytest.raises(ValueError):
        bounds_box(ConstraintSet(_box(0.1, 0.9, 3), sum_to=1.0), THREE_GOOD_QUERY)
    box = (Interval.make_empty(0.9, "XI"),) + _box(0.1, 0.9, 2)
    with pytest.raises(EmptyConfidenceSet):
        bounds_box(ConstraintSet(box), THREE_GOOD_QUERY)


def test_simplex_max_matches_analytic_solution():
    # interior optimum: all coordinates share c_k/theta_k, so the value is
    # log(1 + sum(c)) with sum(c) = 0.74
    wb = max_constrained(ConstraintSet(_box(POSITIVITY_FLOOR, 1.0, 3), sum_to=1.0), THREE_GOOD_QUERY)
    assert_allclose(wb.wl_max, math.log(1.74), atol=1e-9)
    assert_allclose(wb.argmax_theta, THREE_GOOD_QUERY.spend_change / 0.74, atol=1e-7)
    assert abs(wb.argmax_theta.sum() - 1.0) < 1e-10
    assert wb.kkt_residual <= 1e-8
    assert wb.min_certified


def test_symmetric_two_goods():
    q = WelfareQuery(delta=np.array([0.3, 0.3]), y_star=np.array([1.0, 1.0]), alpha=0.1)
    wb = max_constrained(ConstraintSet(_box(0.1, 0.9, 2), sum_to=1.0), q)
    assert_allclose(wb.argmax_theta, [0.5, 0.5], atol=1e-8)
    assert_allclose(wb.wl_max, math.log(1.6), atol=1e-10)


def test_tight_box_with_sum():
    theta = np.array([0.2, 0.3, 0.5])
    box = tuple(Interval(t, t, 1.0, "BOX") for t in theta)
    wb = max_constrained(ConstraintSet(box, sum_to=1.0), THREE_GOOD_QUERY)
    true_wl = welfare_loss(theta, THREE_GOOD_QUERY)
    assert_allclose(wb.wl_max, true_wl, atol=1e-12)
    assert_allclose(wb.wl_min, true_wl, atol=1e-12)


def test_infeasible_sum_raises():
    with pytest.raises(InfeasibleConstraint):
        max_constrained(ConstraintSet(_box(0.1, 0.2, 3), sum_to=1.0), THREE_GOOD_QUERY)
    with pytest.raises(InfeasibleConstraint):
        max_constrained(ConstraintSet(_box(0.4, 0.9, 3), sum_to=1.0), THREE_GOOD_QUERY)


def _random_instance(rng, K):
    lo = rng.uniform(0.05, 0.3, K)
    hi = lo + rng.uniform(0.2, 0.7, K)
    target = float(rng.uniform(lo.sum(), hi.sum()))
    q = WelfareQuery(rng.uniform(0.05, 1.5, K), rng.uniform(0.1, 2.0, K), 0.1)
    box = tuple(Interval(l, h, 1.0, "BOX") for l, h in zip(lo, hi))
    return ConstraintSet(box, sum_to=target), q, lo, hi, target


@pytest.mark.parametrize("K", [2, 3])
def test_solver_matches_brute_force(K):
    rng = np.random.default_rng(100 + K)
    for _ in range(20):
        constraints, q, lo, hi, target = _random_instance(rng, K)
        wb = max_constrained(constraints, q)
        ref_max, ref_min = brute_force_max(q.spend_change, lo, hi, target)
        assert abs(wb.wl_max - ref_max) <= 1e-4
        assert abs(wb.wl_min - ref_min) <= 1e-4
        assert wb.kkt_residual <= 1e-8


def test_zero_delta_with_sum_constraint():
    q = WelfareQuery(delta=np.zeros(3), y_star=np.ones(3), alpha=0.1)
    wb = max_constrained(ConstraintSet(_box(0.1, 0.9, 3), sum_to=1.0), q)
    assert wb.wl_max == 0.0 and wb.wl_min == 0.0
    assert abs(wb.argmax_theta.sum() - 1.0) < 1e-12


def test_dropping_sum_constraint_cannot_shrink_max():
    rng = np.random.default_rng(77)
    for _ in range(20):
        constraints, q, lo, hi, target = _random_instance(rng, 3)
        with_sum = max_constrained(constraints, q)
        box_only = bounds_box(ConstraintSet(constraints.box), q)
        assert box_only.wl_max >= with_sum.wl_max - 1e-12


def test_large_k_min_is_flagged_uncertified():
    K = 25
    rng = np.random.default_rng(4)
    lo = rng.uniform(0.01, 0.02, K)
    hi = lo + rng.uniform(0.05, 0.1, K)
    q = WelfareQuery(rng.uniform(0.1, 1.0, K), rng.uniform(0.2, 1.2, K), 0.1)
    box = tuple(Interval(l, h, 1.0, "BOX") for l, h in zip(lo, hi))
    wb = max_constrained(ConstraintSet(box, sum_to=float((lo.sum() + hi.sum()) / 2)), q)
    assert not wb.min_certified
    assert wb.wl_min <= wb.wl_max


def test_monotonicity_and_concavity_by_finite_differences():
    rng = np.random.default_rng(50)
    for _ in range(20):
        K = int(rng.integers(1, 5))
        theta = rng.uniform(0.2, 1.5, K)
        q = WelfareQuery(rng.uniform(0.3, 1.5, K), rng.uniform(0.3, 1.5, K), 0.1)
        for k in range(K):
            h = 5e-3 * theta[k]

            def at(t):
                shifted = theta.copy()
                shifted[k] = t
                return welfare_loss(shifted, q)

            t = theta[k]
            first = (at(t + h) - at(t - h)) / (2 * h)
            second = (
                -at(t + 2 * h) + 16 * at(t + h) - 30 * at(t) + 16 * at(t - h) - at(t - 2 * h)
            ) / (12 * h * h)
            assert first > 0
            c = q.spend_change[k]
            analytic = -(c**2) / (t * (c + t) ** 2)
            assert abs(second - analytic) / abs(analytic) < 1e-5
