"""Threshold selection: trade-off curve sweeps, density crossing points, inverse solves.

The sweep evaluates the routing rule at every threshold on a grid (default:
every distinct score, plus -inf/+inf sentinels — lossless, since the curve
is piecewise constant between observed scores) using one sort plus prefix
sums, so 100k-record sweeps stay fast while matching a per-threshold
re-route exactly.

The crossing-point selector fits a Gaussian KDE to the scores of two sample
groups (by default Swift-correct vs Swift-incorrect on a labeled calibration
split) and returns the score between the group means where the
prevalence-weighted densities are equal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from ._util import atomic_write_text, format_float, parse_threshold
from .records import Dataset
from .router import CostModel, RoutingError, make_report


class CalibrationError(Exception):
    """Invalid calibration inputs."""


class InfeasibleTargetError(CalibrationError):
    """No curve point satisfies the requested budget or accuracy target."""


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    swift_ratio: float
    accuracy: float | None
    expected_flops: float
    flops_speedup: float


@dataclass(frozen=True)
class TradeoffCurve:
    """Per-threshold routing outcomes, sorted by threshold ascending."""

    points: tuple[CurvePoint, ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise CalibrationError("curve must have at least one point")
        thresholds = [p.threshold for p in self.points]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise CalibrationError("curve thresholds must be strictly increasing")
        ratios = [p.swift_ratio for p in self.points]
        if any(b > a for a, b in zip(ratios, ratios[1:])):
            raise CalibrationError("swift_ratio must be non-increasing in threshold")
        flops = [p.expected_flops for p in self.points]
        if any(b < a for a, b in zip(flops, flops[1:])):
            raise CalibrationError("expected_flops must be non-decreasing in threshold")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def has_accuracy(self) -> bool:
        return all(p.accuracy is not None for p in self.points)


def sweep(dataset: Dataset, scores, cost: CostModel, grid=None) -> TradeoffCurve:
    """One routed report per grid threshold.

    A custom grid is deduplicated and sorted; the default grid is every
    distinct score value plus the -inf and +inf sentinels.
    """
    score_arr = np.asarray(scores, dtype=np.float64)
    if score_arr.ndim != 1 or score_arr.shape[0] != len(dataset):
        raise RoutingError(
            f"scores (shape {score_arr.shape}) are not aligned with the {len(dataset)}-record dataset"
        )
    if grid is None:
        thresholds = np.concatenate(([-np.inf], np.unique(score_arr), [np.inf]))
    else:
        thresholds = np.unique(np.asarray(list(grid), dtype=np.float64))
        if thresholds.size == 0:
            raise CalibrationError("threshold grid must be non-empty")
        if np.any(np.isnan(thresholds)):
            raise CalibrationError("threshold grid may not contain NaN")

    order = np.argsort(score_arr, kind="stable")
    sorted_scores = score_arr[order]
    n = len(dataset)

    if dataset.has_labels:
        swift_ok = dataset.swift_correct()[order].astype(np.int64)
        super_ok = dataset.super_correct()[order].astype(np.int64)
        # suffix_swift[i] = correct Swift answers among samples with rank >= i
        suffix_swift = np.concatenate((np.cumsum(swift_ok[::-1])[::-1], [0]))
        prefix_super = np.concatenate(([0], np.cumsum(super_ok)))
    else:
        suffix_swift = prefix_super = None

    points = []
    for t in thresholds:
        i = int(np.searchsorted(sorted_scores, t, side="left"))
        n_swift = n - i
        n_correct = None
        if suffix_swift is not None:
            n_correct = int(suffix_swift[i] + prefix_super[i])
        report = make_report(float(t), n_swift, i, n_correct, cost)
        points.append(
            CurvePoint(
                threshold=report.threshold,
                swift_ratio=report.swift_ratio,
                accuracy=report.accuracy,
                expected_flops=report.expected_flops,
                flops_speedup=report.flops_speedup,
            )
        )
    return TradeoffCurve(points=tuple(points))


CURVE_HEADER = "threshold,swift_ratio,accuracy,expected_flops,flops_speedup"


def write_curve(path: str | Path, curve: TradeoffCurve) -> None:
    lines = [CURVE_HEADER]
    for p in curve.points:
        acc = "" if p.accuracy is None else format_float(p.accuracy)
        lines.append(
            ",".join(
                (
                    format_float(p.threshold),
                    format_float(p.swift_ratio),
                    acc,
                    format_float(p.expected_flops),
                    format_float(p.flops_speedup),
                )
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_curve(path: str | Path) -> TradeoffCurve:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CURVE_HEADER:
        raise CalibrationError(f"curve file {path}: missing header {CURVE_HEADER!r}")
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 5:
            raise CalibrationError(f"curve file {path}: line {lineno} has {len(cells)} cells")
        points.append(
            CurvePoint(
                threshold=parse_threshold(cells[0]),
                swift_ratio=float(cells[1]),
                accuracy=None if cells[2] == "" else float(cells[2]),
                expected_flops=float(cells[3]),
                flops_speedup=float(cells[4]),
            )
        )
    return TradeoffCurve(points=tuple(points))


@dataclass(frozen=True)
class ScoreHistogramPair:
    """Scores of two sample groups whose density crossing picks the threshold.

    kde_bandwidth overrides Silverman's rule when set; the groups are
    expected to partition a labeled calibration set.
    """

    group_a: np.ndarray  # conventionally: Swift-correct samples
    group_b: np.ndarray  # conventionally: Swift-incorrect samples
    kde_bandwidth: float | None = None

    def __post_init__(self) -> None:
        a = np.asarray(self.group_a, dtype=np.float64)
        b = np.asarray(self.group_b, dtype=np.float64)
        if a.ndim != 1 or b.ndim != 1:
            raise CalibrationError("score groups must be 1-D arrays")
        if a.size == 0 or b.size == 0:
            raise CalibrationError("both score groups must be non-empty")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise CalibrationError("scores must be finite")
        if self.kde_bandwidth is not None and self.kde_bandwidth <= 0:
            raise CalibrationError("kde_bandwidth must be > 0")
        object.__setattr__(self, "group_a", a)
        object.__setattr__(self, "group_b", b)


def split_by_swift_correctness(dataset: Dataset, scores) -> ScoreHistogramPair:
    """Group a labeled calibration split into Swift-correct vs Swift-incorrect scores."""
    score_arr = np.asarray(scores, dtype=np.float64)
    if score_arr.shape[0] != len(dataset):
        raise CalibrationError("scores are not aligned with the dataset")
    ok = dataset.swift_correct()
    if ok.all() or not ok.any():
        raise CalibrationError(
            "calibration split must contain both Swift-correct and Swift-incorrect samples"
        )
    return ScoreHistogramPair(group_a=score_arr[ok], group_b=score_arr[~ok])


def silverman_bandwidth(values: np.ndarray) -> float:
    """Rule-of-thumb Gaussian KDE bandwidth: 0.9 * min(std, IQR/1.34) * n^(-1/5)."""
    values = np.asarray(values, dtype=np.float64)
    std = float(np.std(values))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = q75 - q25
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * spread * len(values) ** -0.2


def _kde_eval(samples: np.ndarray, bandwidth: float, grid: np.ndarray) -> np.ndarray:
    """Gaussian KDE evaluated at each grid point, chunked to bound memory."""
    norm = 1.0 / (samples.size * bandwidth * np.sqrt(2.0 * np.pi))
    out = np.empty(grid.shape[0])
    chunk = max(1, 2**20 // max(1, samples.size))
    for start in range(0, grid.shape[0], chunk):
        z = (grid[start : start + chunk, None] - samples[None, :]) / bandwidth
        out[start : start + chunk] = norm * np.exp(-0.5 * z * z).sum(axis=1)
    return out


def crossing_point_threshold(
    pair: ScoreHistogramPair, weights: tuple[float, float] | None = None
) -> float:
    """Score between the two group means where the weighted densities are equal.

    Weights default to group prevalence. With several crossings the one
    closest to the midpoint of the means wins; groups with disjoint score
    ranges (or a zero-variance group) fall back to the midpoint of the gap
    between them.
    """
    a, b = pair.group_a, pair.group_b
    if weights is None:
        wa = a.size / (a.size + b.size)
        wb = 1.0 - wa
    else:
        wa, wb = float(weights[0]), float(weights[1])
        if wa <= 0 or wb <= 0:
            raise CalibrationError("weights must be positive")

    # disjoint sample ranges: any point in the gap separates them perfectly
    if a.max() < b.min():
        return float((a.max() + b.min()) / 2.0)
    if b.max() < a.min():
        return float((b.max() + a.min()) / 2.0)

    bw_a = pair.kde_bandwidth if pair.kde_bandwidth is not None else silverman_bandwidth(a)
    bw_b = pair.kde_bandwidth if pair.kde_bandwidth is not None else silverman_bandwidth(b)
    mean_a, mean_b = float(a.mean()), float(b.mean())
    mid = (mean_a + mean_b) / 2.0
    if bw_a <= 0 or bw_b <= 0:
        # a zero-variance group has no usable density; overlapping ranges
        # leave only the means to separate
        return mid

    def diff(x: float) -> float:
        g = np.asarray([x], dtype=np.float64)
        return float(wa * _kde_eval(a, bw_a, g)[0] - wb * _kde_eval(b, bw_b, g)[0])

    def crossings_on(lo: float, hi: float) -> list[float]:
        if not hi > lo:
            return []
        grid = np.linspace(lo, hi, 1024)
        diffs = wa * _kde_eval(a, bw_a, grid) - wb * _kde_eval(b, bw_b, grid)
        found = []
        for i in range(len(grid) - 1):
            if diffs[i] == 0.0:
                found.append(float(grid[i]))
            elif diffs[i] * diffs[i + 1] < 0:
                found.append(float(brentq(diff, grid[i], grid[i + 1], xtol=1e-10)))
        if diffs[-1] == 0.0:
            found.append(float(grid[-1]))
        return found

    crossings = crossings_on(min(mean_a, mean_b), max(mean_a, mean_b))
    if not crossings:
        pad = 3.0 * max(bw_a, bw_b)
        crossings = crossings_on(min(a.min(), b.min()) - pad, max(a.max(), b.max()) + pad)
    if not crossings:
        return mid
    return min(crossings, key=lambda x: abs(x - mid))


def _routing_distinct_points(curve: TradeoffCurve) -> list[CurvePoint]:
    """Drop points whose routing duplicates the previous one (keep the lowest threshold).

    The -inf sentinel and the minimum observed score route identically, so
    endpoint queries resolve to the sentinel.
    """
    out: list[CurvePoint] = []
    for p in curve.points:
        if out and p.swift_ratio == out[-1].swift_ratio and p.expected_flops == out[-1].expected_flops:
            continue
        out.append(p)
    return out


def threshold_for_budget(curve: TradeoffCurve, flops_budget: float) -> float:
    """Largest threshold whose expected FLOPs fit the budget (most Super usage)."""
    candidates = [p for p in _routing_distinct_points(curve) if p.expected_flops <= flops_budget]
    if not candidates:
        raise InfeasibleTargetError(
            f"budget {flops_budget} is below the cheapest curve point "
            f"({min(p.expected_flops for p in curve.points)})"
        )
    return max(candidates, key=lambda p: p.threshold).threshold


def threshold_for_accuracy(curve: TradeoffCurve, target: float) -> float:
    """Cheapest curve point whose accuracy reaches the target."""
    if not curve.has_accuracy:
        raise CalibrationError("curve has no accuracy column (unlabeled dataset)")
    candidates = [p for p in _routing_distinct_points(curve) if p.accuracy >= target]
    if not candidates:
        raise InfeasibleTargetError(
            f"target accuracy {target} exceeds the curve maximum "
            f"({max(p.accuracy for p in curve.points)})"
        )
    best = min(candidates, key=lambda p: (p.expected_flops, p.threshold))
    return best.threshold


def accuracy_swift_ratio_auc(curve: TradeoffCurve) -> float:
    """Area under accuracy as a function of swift ratio (trapezoid rule)."""
    if not curve.has_accuracy:
        raise CalibrationError("curve has no accuracy column (unlabeled dataset)")
    ratios = np.array([p.swift_ratio for p in curve.points])[::-1]
    accs = np.array([p.accuracy for p in curve.points])[::-1]
    return float(np.trapezoid(accs, ratios))
