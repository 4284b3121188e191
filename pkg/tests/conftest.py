"""Shared builders for test datasets."""

from __future__ import annotations

import numpy as np
import pytest

from elang.records import Dataset, SampleRecord, build_dataset


def classification_record(
    rid: str,
    logits_row,
    super_pred: int = 0,
    label: int | None = None,
    features=None,
) -> SampleRecord:
    """Build a valid single-position record; swift_pred is forced to the argmax."""
    row = np.asarray(logits_row, dtype=np.float64)[None, :]
    return SampleRecord(
        id=rid,
        swift_logits=row,
        swift_pred=int(np.argmax(row[0])),
        super_pred=super_pred,
        label=label,
        encoder_features=None if features is None else np.asarray(features, dtype=np.float64),
    )


def score_controlled_dataset(scores, swift_correct, super_correct) -> Dataset:
    """Two-class dataset whose energy score equals `scores` to ~1e-16.

    The second logit sits 50 below the first, so log-sum-exp of the row is
    the first logit up to an e^-50 correction that vanishes in float64.
    """
    records = []
    for i, (s, sw_ok, su_ok) in enumerate(zip(scores, swift_correct, super_correct)):
        label = 0 if sw_ok else 1
        super_pred = label if su_ok else 1 - label
        records.append(
            classification_record(f"r{i:05d}", [s, s - 50.0], super_pred=super_pred, label=label)
        )
    return build_dataset(records)


def gaussian_feature_dataset(
    n: int,
    seed: int,
    center: float = 2.0,
    spread: float = 1.0,
    min_margin: float | None = None,
) -> Dataset:
    """Two 2-D Gaussian classes split along the x axis for head training.

    With min_margin set, class c sits at sign(c) * (min_margin + |noise|), so
    the classes are separated by a gap of 2 * min_margin around x = 0;
    without it the classes are overlapping Gaussians centered at +/-center.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n)
    signs = np.where(labels == 1, 1.0, -1.0)
    if min_margin is not None:
        x = signs * (min_margin + np.abs(spread * rng.normal(size=n)))
    else:
        x = signs * center + spread * rng.normal(size=n)
    y = rng.normal(size=n)
    records = []
    for i in range(n):
        records.append(
            classification_record(
                f"f{i:05d}",
                [1.0, 0.0] if labels[i] == 0 else [0.0, 1.0],
                super_pred=int(labels[i]),
                label=int(labels[i]),
                features=[x[i], y[i]],
            )
        )
    return build_dataset(records)


def perceptron_separable(features: np.ndarray, labels: np.ndarray, max_epochs: int = 2000) -> bool:
    """Exact separability oracle: the perceptron converges iff the data is separable."""
    aug = np.hstack([features, np.ones((features.shape[0], 1))])
    signs = np.where(labels == 1, 1.0, -1.0)
    w = np.zeros(aug.shape[1])
    for _ in range(max_epochs):
        mistakes = 0
        for x, s in zip(aug, signs):
            if s * (w @ x) <= 0:
                w += s * x
                mistakes += 1
        if mistakes == 0:
            return True
    return False


@pytest.fixture
def reference_cost():
    from elang.router import CostModel

    # Super 87e11, Swift total 4.25e11 split evenly across encoder/decoder
    return CostModel(
        flops_super=87e11,
        flops_swift_encoder=2.125e11,
        flops_swift_decoder=2.125e11,
        flops_head=1e6,
    )
