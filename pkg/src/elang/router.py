"""Threshold routing over a scored dataset, with accuracy and cost accounting.

A sample whose score is >= the threshold (ties included) keeps the Swift
prediction; everything else escalates to the Super prediction. Cost is the
usage-weighted average of the two paths: escalated samples still pay the
Swift encoder + head, since those ran to produce the score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .records import Dataset, Pred


class RoutingError(Exception):
    """Invalid routing inputs (misaligned scores, bad threshold, bad costs)."""


@dataclass(frozen=True)
class CostModel:
    """Per-sample FLOPs of each component, plus optional mean latencies (ms).

    The head cost default reflects a single linear layer: negligible next to
    either model. The cascade only makes sense when the Super model costs
    more than the whole Swift model, which is enforced.
    """

    flops_super: float
    flops_swift_encoder: float
    flops_swift_decoder: float
    flops_head: float = 1.0e6
    latency_super: float | None = None
    latency_swift: float | None = None

    def __post_init__(self) -> None:
        for name in ("flops_super", "flops_swift_encoder", "flops_swift_decoder", "flops_head"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise RoutingError(f"{name} must be finite and >= 0, got {v}")
        if self.flops_super <= self.flops_swift_encoder + self.flops_swift_decoder:
            raise RoutingError(
                "flops_super must exceed the total Swift cost "
                f"({self.flops_super} <= {self.flops_swift_encoder + self.flops_swift_decoder})"
            )
        for name in ("latency_super", "latency_swift"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise RoutingError(f"{name} must be finite and > 0 when given, got {v}")

    @property
    def swift_path_flops(self) -> float:
        return self.flops_swift_encoder + self.flops_head + self.flops_swift_decoder

    @property
    def super_path_flops(self) -> float:
        return self.flops_swift_encoder + self.flops_head + self.flops_super


@dataclass(frozen=True)
class RoutingDecision:
    record_id: str
    score: float
    route: str  # "swift" | "super"
    emitted_pred: Pred


@dataclass(frozen=True)
class RoutingReport:
    threshold: float
    n_swift: int
    n_super: int
    swift_ratio: float
    accuracy: float | None
    expected_flops: float
    flops_speedup: float
    latency_speedup: float | None

    def to_json_obj(self) -> dict:
        from ._util import encode_threshold

        return {
            "threshold": encode_threshold(self.threshold),
            "n_swift": self.n_swift,
            "n_super": self.n_super,
            "swift_ratio": self.swift_ratio,
            "accuracy": self.accuracy,
            "expected_flops": self.expected_flops,
            "flops_speedup": self.flops_speedup,
            "latency_speedup": self.latency_speedup,
        }


def expected_flops(n_swift: int, n_super: int, cost: CostModel) -> float:
    """Usage-weighted FLOPs per sample across the two routes."""
    if n_swift < 0 or n_super < 0 or n_swift + n_super < 1:
        raise RoutingError("population must contain at least one sample")
    total = n_swift + n_super
    return (n_swift * cost.swift_path_flops + n_super * cost.super_path_flops) / total


def expected_latency(n_swift: int, n_super: int, cost: CostModel) -> float | None:
    """Usage-weighted latency: every sample pays the Swift pass, escalations add the Super pass."""
    if cost.latency_super is None or cost.latency_swift is None:
        return None
    total = n_swift + n_super
    return cost.latency_swift + (n_super / total) * cost.latency_super


def _check_threshold(threshold: float) -> float:
    t = float(threshold)
    if math.isnan(t):
        raise RoutingError("threshold must be a number or +/-inf, not NaN")
    return t


def make_report(
    threshold: float,
    n_swift: int,
    n_super: int,
    n_correct: int | None,
    cost: CostModel,
) -> RoutingReport:
    total = n_swift + n_super
    flops = expected_flops(n_swift, n_super, cost)
    latency = expected_latency(n_swift, n_super, cost)
    return RoutingReport(
        threshold=threshold,
        n_swift=n_swift,
        n_super=n_super,
        swift_ratio=n_swift / total,
        accuracy=None if n_correct is None else n_correct / total,
        expected_flops=flops,
        flops_speedup=cost.flops_super / flops,
        latency_speedup=None if latency is None else cost.latency_super / latency,
    )


def route_dataset(
    dataset: Dataset,
    scores,
    threshold: float,
    cost: CostModel,
) -> tuple[list[RoutingDecision], RoutingReport]:
    """Apply the >= threshold rule to every record and aggregate the outcome.

    Accuracy (exact match for sequence predictions) is reported only when
    every record carries a gold label.
    """
    threshold = _check_threshold(threshold)
    score_arr = np.asarray(scores, dtype=np.float64)
    if score_arr.ndim != 1 or score_arr.shape[0] != len(dataset):
        raise RoutingError(
            f"scores (shape {score_arr.shape}) are not aligned with the {len(dataset)}-record dataset"
        )

    swift_mask = score_arr >= threshold
    decisions = []
    n_correct = 0 if dataset.has_labels else None
    for record, score, to_swift in zip(dataset.records, score_arr, swift_mask):
        emitted = record.swift_pred if to_swift else record.super_pred
        decisions.append(
            RoutingDecision(
                record_id=record.id,
                score=float(score),
                route="swift" if to_swift else "super",
                emitted_pred=emitted,
            )
        )
        if n_correct is not None and emitted == record.label:
            n_correct += 1

    n_swift = int(swift_mask.sum())
    report = make_report(threshold, n_swift, len(dataset) - n_swift, n_correct, cost)
    return decisions, report
