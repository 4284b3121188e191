"""Calibration: sweep correctness, crossing-point recovery, inverse solves, curve IO."""

import math

import numpy as np
import pytest

from elang.calibration import (
    CURVE_HEADER,
    CalibrationError,
    InfeasibleTargetError,
    ScoreHistogramPair,
    accuracy_swift_ratio_auc,
    crossing_point_threshold,
    read_curve,
    silverman_bandwidth,
    split_by_swift_correctness,
    sweep,
    threshold_for_accuracy,
    threshold_for_budget,
    write_curve,
)
from elang.records import SynthSpec, generate_synthetic
from elang.router import route_dataset
from elang.scoring import ScoreKind, score_dataset

from conftest import score_controlled_dataset


@pytest.fixture
def bench():
    ds = generate_synthetic(SynthSpec(n_samples=2000, seed=7))
    scores = score_dataset(ds, ScoreKind("energy"))
    return ds, scores


class TestSweep:
    def test_swift_always_correct_keeps_accuracy_flat(self, reference_cost):
        rng = np.random.default_rng(4)
        ds = score_controlled_dataset(rng.normal(size=50), [True] * 50, [True] * 50)
        curve = sweep(ds, score_dataset(ds, ScoreKind("energy")), reference_cost)
        assert all(p.accuracy == 1.0 for p in curve.points)
        assert curve.points[0].threshold == -math.inf
        assert curve.points[0].expected_flops == min(p.expected_flops for p in curve.points)

    def test_two_point_sentinel_grid_is_exactly_the_endpoints(self, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost, grid=[-math.inf, math.inf])
        assert len(curve) == 2
        _, swift_report = route_dataset(ds, scores, -math.inf, reference_cost)
        _, super_report = route_dataset(ds, scores, math.inf, reference_cost)
        assert curve.points[0].swift_ratio == swift_report.swift_ratio == 1.0
        assert curve.points[0].accuracy == swift_report.accuracy
        assert curve.points[0].expected_flops == swift_report.expected_flops
        assert curve.points[1].swift_ratio == super_report.swift_ratio == 0.0
        assert curve.points[1].accuracy == super_report.accuracy
        assert curve.points[1].expected_flops == super_report.expected_flops

    def test_matches_per_threshold_routing_bit_for_bit(self, reference_cost):
        ds = generate_synthetic(SynthSpec(n_samples=500, seed=23))
        scores = score_dataset(ds, ScoreKind("energy"))
        curve = sweep(ds, scores, reference_cost)
        assert len(curve) == len(np.unique(scores)) + 2
        for point in curve.points:
            _, report = route_dataset(ds, scores, point.threshold, reference_cost)
            assert point.swift_ratio == report.swift_ratio
            assert point.accuracy == report.accuracy
            assert point.expected_flops == report.expected_flops
            assert point.flops_speedup == report.flops_speedup

    def test_monotone_in_threshold(self, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost)
        ratios = [p.swift_ratio for p in curve.points]
        flops = [p.expected_flops for p in curve.points]
        assert all(b <= a for a, b in zip(ratios, ratios[1:]))
        assert all(b >= a for a, b in zip(flops, flops[1:]))

    def test_random_scores_dominated_by_energy(self, reference_cost):
        ds = generate_synthetic(SynthSpec(n_samples=10_000, seed=7))
        energy = sweep(ds, score_dataset(ds, ScoreKind("energy")), reference_cost)
        random_curve = sweep(ds, score_dataset(ds, ScoreKind("random", seed=7)), reference_cost)
        energy_by_ratio = {p.swift_ratio: p.accuracy for p in energy.points}
        shared = 0
        for p in random_curve.points:
            if p.swift_ratio in energy_by_ratio:
                shared += 1
                assert energy_by_ratio[p.swift_ratio] >= p.accuracy - 0.005
        assert shared >= 10_000  # continuous scores: every ratio k/n appears in both
        assert accuracy_swift_ratio_auc(energy) > accuracy_swift_ratio_auc(random_curve)

    def test_empty_grid_rejected(self, bench, reference_cost):
        ds, scores = bench
        with pytest.raises(CalibrationError):
            sweep(ds, scores, reference_cost, grid=[])


class TestCrossingPoint:
    def test_equal_weight_gaussians_cross_at_midpoint(self):
        rng = np.random.default_rng(31)
        pair = ScoreHistogramPair(
            group_a=rng.normal(0.0, 1.0, size=10_000),
            group_b=rng.normal(2.0, 1.0, size=10_000),
        )
        assert crossing_point_threshold(pair) == pytest.approx(1.0, abs=0.1)

    def test_three_to_one_weights_shift_the_crossing(self):
        # analytic solve: 0.75 N(0,1) = 0.25 N(2,1)  =>  x = 1 + ln(3)/2
        rng = np.random.default_rng(32)
        pair = ScoreHistogramPair(
            group_a=rng.normal(0.0, 1.0, size=10_000),
            group_b=rng.normal(2.0, 1.0, size=10_000),
        )
        expected = 1 + math.log(3) / 2
        assert crossing_point_threshold(pair, weights=(0.75, 0.25)) == pytest.approx(expected, abs=0.1)

    def test_prevalence_weighting_matches_explicit_weights(self):
        # same mixture realized by group sizes instead of explicit weights
        rng = np.random.default_rng(33)
        pair = ScoreHistogramPair(
            group_a=rng.normal(0.0, 1.0, size=7_500),
            group_b=rng.normal(2.0, 1.0, size=2_500),
        )
        expected = 1 + math.log(3) / 2
        assert crossing_point_threshold(pair) == pytest.approx(expected, abs=0.1)

    def test_disjoint_groups_get_gap_midpoint(self):
        pair = ScoreHistogramPair(group_a=np.array([0.0, 0.1]), group_b=np.array([5.0, 5.1]))
        threshold = crossing_point_threshold(pair)
        assert threshold == 2.55
        assert all(a < threshold for a in pair.group_a)
        assert all(b > threshold for b in pair.group_b)

    def test_disjoint_groups_order_independent(self):
        pair = ScoreHistogramPair(group_a=np.array([5.0, 5.1]), group_b=np.array([0.0, 0.1]))
        assert crossing_point_threshold(pair) == 2.55

    def test_zero_variance_group_falls_back_to_means_midpoint(self):
        pair = ScoreHistogramPair(group_a=np.array([1.0, 1.0, 1.0]),
                                  group_b=np.array([0.0, 2.0, 1.5]))
        threshold = crossing_point_threshold(pair)
        assert threshold == pytest.approx((1.0 + np.mean([0.0, 2.0, 1.5])) / 2)

    def test_empty_group_rejected(self):
        with pytest.raises(CalibrationError):
            ScoreHistogramPair(group_a=np.array([]), group_b=np.array([1.0]))

    def test_bandwidth_override_used(self):
        rng = np.random.default_rng(34)
        a = rng.normal(0.0, 1.0, size=5_000)
        b = rng.normal(2.0, 1.0, size=5_000)
        default = crossing_point_threshold(ScoreHistogramPair(a, b))
        wide = crossing_point_threshold(ScoreHistogramPair(a, b, kde_bandwidth=0.8))
        assert default == pytest.approx(1.0, abs=0.1)
        assert wide == pytest.approx(1.0, abs=0.15)
        assert default != wide

    def test_silverman_bandwidth_value(self):
        rng = np.random.default_rng(35)
        x = rng.normal(size=4096)
        std = float(np.std(x))
        q75, q25 = np.percentile(x, [75, 25])
        expected = 0.9 * min(std, (q75 - q25) / 1.34) * 4096 ** -0.2
        assert silverman_bandwidth(x) == expected

    def test_split_by_swift_correctness(self, bench):
        ds, scores = bench
        pair = split_by_swift_correctness(ds, scores)
        ok = ds.swift_correct()
        assert pair.group_a.size == int(ok.sum())
        assert pair.group_b.size == int((~ok).sum())
        assert pair.group_a.size + pair.group_b.size == len(ds)
        # correct group should sit higher on the score axis by construction
        assert pair.group_a.mean() > pair.group_b.mean()


class TestInverseSolves:
    def test_budget_endpoints_resolve_to_sentinels(self, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost)
        assert threshold_for_budget(curve, reference_cost.super_path_flops) == math.inf
        assert threshold_for_budget(curve, reference_cost.swift_path_flops) == -math.inf

    def test_budget_below_swift_endpoint_infeasible(self, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost)
        with pytest.raises(InfeasibleTargetError):
            threshold_for_budget(curve, reference_cost.swift_path_flops * 0.99)

    def test_mid_curve_budget_matches_linear_scan(self, reference_cost):
        ds = generate_synthetic(SynthSpec(n_samples=10, seed=41))
        scores = score_dataset(ds, ScoreKind("energy"))
        curve = sweep(ds, scores, reference_cost)
        budget = (reference_cost.swift_path_flops + reference_cost.super_path_flops) / 2
        expected = max(
            (p.threshold for p in curve.points if p.expected_flops <= budget and p.threshold > -math.inf),
        )
        assert threshold_for_budget(curve, budget) == expected

    def test_budget_result_respects_budget_when_routed(self, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost)
        budget = reference_cost.swift_path_flops * 3.0
        threshold = threshold_for_budget(curve, budget)
        _, report = route_dataset(ds, scores, threshold, reference_cost)
        assert report.expected_flops <= budget

    def test_accuracy_target_at_swift_accuracy_is_minus_inf(self, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost)
        swift_accuracy = curve.points[0].accuracy
        assert threshold_for_accuracy(curve, swift_accuracy) == -math.inf

    def test_unattainable_accuracy_is_infeasible(self, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost)
        best = max(p.accuracy for p in curve.points)
        with pytest.raises(InfeasibleTargetError):
            threshold_for_accuracy(curve, best + 1e-9)

    def test_mid_range_accuracy_matches_scan(self, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost)
        target = curve.points[-1].accuracy  # the pure-Super accuracy
        feasible = [p for p in curve.points if p.accuracy >= target]
        expected = min(feasible, key=lambda p: (p.expected_flops, p.threshold))
        assert threshold_for_accuracy(curve, target) == expected.threshold


class TestCurveIO:
    def test_round_trip(self, tmp_path, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost, grid=np.linspace(0, 6, 20))
        path = tmp_path / "curve.csv"
        write_curve(path, curve)
        text = path.read_text()
        assert text.splitlines()[0] == CURVE_HEADER
        again = read_curve(path)
        assert len(again) == len(curve)
        for a, b in zip(curve.points, again.points):
            assert b.threshold == pytest.approx(a.threshold, rel=1e-11)
            assert b.swift_ratio == pytest.approx(a.swift_ratio, rel=1e-11)
            assert b.accuracy == pytest.approx(a.accuracy, rel=1e-11)
            assert b.expected_flops == pytest.approx(a.expected_flops, rel=1e-11)

    def test_sentinel_thresholds_survive_round_trip(self, tmp_path, bench, reference_cost):
        ds, scores = bench
        curve = sweep(ds, scores, reference_cost, grid=[-math.inf, math.inf])
        path = tmp_path / "curve.csv"
        write_curve(path, curve)
        again = read_curve(path)
        assert again.points[0].threshold == -math.inf
        assert again.points[-1].threshold == math.inf

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "curve.csv"
        path.write_text("nope\n1,2,3,4,5\n")
        with pytest.raises(CalibrationError):
            read_curve(path)
