"""Routing-score functions over recorded Swift logits.

Every kind shares one orientation: higher score means the input is more
suitable for the Swift model, so a single `score >= threshold` rule routes
all of them.

- energy:       negative free energy, log(sum(exp(logits))); for multi-position
                logits, the mean of the per-position values.
- energy-head:  same, but on logits produced by a linear head over encoder
                features (no decoder logits needed).
- softmax:      maximum softmax probability.
- entropy:      negated Shannon entropy of the softmax distribution.
- random:       uniform in [0, 1), keyed by (seed, record index).

All evaluation is max-shifted so nothing overflows for |logits| up to ~1e4,
and the residual term goes through log1p so near-saturated distributions
keep full relative accuracy. Scorers are pure and stateless.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .energy_head import EnergyHead
    from .records import Dataset, SampleRecord

ENERGY = "energy"
ENERGY_HEAD = "energy-head"
SOFTMAX = "softmax"
ENTROPY = "entropy"
RANDOM = "random"

SCORE_KIND_NAMES = (ENERGY, ENERGY_HEAD, SOFTMAX, ENTROPY, RANDOM)


class ScoringError(Exception):
    """Invalid input to a scorer (shape, non-finite values, missing features)."""


@dataclass(frozen=True)
class ScoreKind:
    """A routing-score family plus whatever state it needs.

    `head` is required for energy-head scoring; `seed` only matters for
    random scoring, which derives each value from (seed, record index) so
    there is no shared generator state.
    """

    name: str
    head: EnergyHead | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.name not in SCORE_KIND_NAMES:
            raise ScoringError(f"unknown score kind {self.name!r}; expected one of {SCORE_KIND_NAMES}")
        if self.name == ENERGY_HEAD and self.head is None:
            raise ScoringError("energy-head scoring requires a trained head")


@dataclass(frozen=True)
class Score:
    value: float
    kind: ScoreKind


def _as_logit_rows(logits: object) -> np.ndarray:
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ScoringError(f"logits must be a non-empty vector or M x C matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ScoringError("logits must be finite")
    return arr


def _shift_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (row max, shifted logits, sum of exp over non-argmax entries).

    Excluding the argmax entry from the residual sum (its exp is exactly 1)
    lets log1p recover the tiny tail instead of losing it to 1.0 + tail.
    """
    idx = np.argmax(rows, axis=1)
    rows_arange = np.arange(rows.shape[0])
    top = rows[rows_arange, idx]
    shifted = rows - top[:, None]
    expd = np.exp(shifted)
    expd[rows_arange, idx] = 0.0
    return top, shifted, expd.sum(axis=1)


def _lse_rows(rows: np.ndarray) -> np.ndarray:
    top, _, rest = _shift_rows(rows)
    return top + np.log1p(rest)


def _softmax_rows(rows: np.ndarray) -> np.ndarray:
    _, _, rest = _shift_rows(rows)
    return np.exp(-np.log1p(rest))


def _entropy_rows(rows: np.ndarray) -> np.ndarray:
    _, shifted, rest = _shift_rows(rows)
    logz = np.log1p(rest)
    logp = shifted - logz[:, None]
    p = np.exp(logp)
    return -np.sum(p * logp, axis=1)


def neg_free_energy(logits) -> float:
    """log(sum(exp(logits))) for a single C-vector of logits.

    For C = 1 this is exactly the lone logit. Satisfies the sandwich bound
    max(logits) <= value <= max(logits) + ln(C) and shifts covariantly:
    adding a constant to every logit adds that constant to the value.
    """
    arr = _as_logit_rows(logits)
    if arr.shape[0] != 1:
        raise ScoringError("neg_free_energy expects a single logit row; use neg_free_energy_seq")
    return float(_lse_rows(arr)[0])


def neg_free_energy_seq(logits) -> float:
    """Mean over sequence positions of the per-position log-sum-exp.

    Reduces exactly to neg_free_energy for M = 1.
    """
    arr = _as_logit_rows(logits)
    return float(np.mean(_lse_rows(arr)))


def softmax_score(logits) -> float:
    """Maximum softmax probability; lies in [1/C, 1] and is shift-invariant."""
    arr = _as_logit_rows(logits)
    if arr.shape[0] != 1:
        raise ScoringError("softmax_score expects a single logit row")
    return float(_softmax_rows(arr)[0])


def shannon_entropy(logits) -> float:
    """Entropy of the softmax distribution, in nats, with 0*log(0) := 0.

    Lies in [0, ln(C)] and is invariant under constant logit shifts.
    """
    arr = _as_logit_rows(logits)
    if arr.shape[0] != 1:
        raise ScoringError("shannon_entropy expects a single logit row")
    return float(_entropy_rows(arr)[0])


def entropy_score(logits) -> float:
    """Negated entropy, so that higher still means more Swift-suitable."""
    return -shannon_entropy(logits)


def random_score(seed: int, index: int) -> float:
    """Uniform in [0, 1), fully determined by (seed, index)."""
    if index < 0:
        raise ScoringError("record index must be >= 0")
    return float(np.random.default_rng((seed % 2**64, index)).random())


def score_logits(logits, kind: ScoreKind, *, features=None, index: int = 0) -> float:
    """Score one sample's raw arrays under `kind`.

    Multi-position logits are supported for every logit-based kind by
    averaging the per-position score, matching the sequence energy rule.
    """
    if kind.name == RANDOM:
        return random_score(kind.seed, index)
    if kind.name == ENERGY_HEAD:
        if features is None:
            raise ScoringError("energy-head scoring requires encoder features")
        from .energy_head import head_logits

        logits = head_logits(kind.head, features)
    arr = _as_logit_rows(logits)
    if kind.name == SOFTMAX:
        return float(np.mean(_softmax_rows(arr)))
    if kind.name == ENTROPY:
        return float(np.mean(-_entropy_rows(arr)))
    return float(np.mean(_lse_rows(arr)))


def score_record(record: SampleRecord, kind: ScoreKind, *, index: int = 0) -> Score:
    """Score one record; deterministic per (record, kind, index)."""
    value = score_logits(
        record.swift_logits, kind, features=record.encoder_features, index=index
    )
    return Score(value=value, kind=kind)


def score_dataset(dataset: Dataset, kind: ScoreKind) -> np.ndarray:
    """Score every record, in file order. Vectorized for single-position datasets."""
    records = dataset.records
    if kind.name == RANDOM:
        seed = kind.seed
        return np.array([random_score(seed, i) for i in range(len(records))])
    if kind.name == ENERGY_HEAD:
        if not dataset.has_features:
            raise ScoringError("energy-head scoring requires a dataset with encoder features")
        from .energy_head import head_logits_batch

        feats = np.stack([r.encoder_features for r in records])
        return _lse_rows(head_logits_batch(kind.head, feats))

    if all(r.num_positions == 1 for r in records):
        rows = np.stack([r.swift_logits[0] for r in records])
        if not np.all(np.isfinite(rows)):
            raise ScoringError("logits must be finite")
        if kind.name == SOFTMAX:
            return _softmax_rows(rows)
        if kind.name == ENTROPY:
            return -_entropy_rows(rows)
        return _lse_rows(rows)
    return np.array(
        [score_logits(r.swift_logits, kind, index=i) for i, r in enumerate(records)]
    )
