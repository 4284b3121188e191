"""On-disk record format for exported model outputs, plus a synthetic benchmark generator.

A record file is UTF-8 text with one JSON object per line:

    {"id": str, "swift_logits": [[num]], "encoder_features": [num]?,
     "swift_pred": num | [num], "super_pred": num | [num], "label": (num | [num])?}

`swift_logits` is an M x C matrix (M sequence positions, C classes; M = 1 for
classification). Predictions and labels are class ids for classification and
token-id lists for seq2seq. A sidecar manifest (same stem, ".manifest" suffix)
declares {"num_classes", "feature_dim", "task_kind"} and is cross-checked on
load when present.

Loading and generation are pure functions; the returned Dataset and its
records are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_text

CLASSIFICATION = "classification"
SEQ2SEQ = "seq2seq"

_RECORD_FIELDS = {"id", "swift_logits", "encoder_features", "swift_pred", "super_pred", "label"}

Pred = int | tuple[int, ...]


class DatasetError(Exception):
    """Base class for record/dataset validation failures."""


class RecordParseError(DatasetError):
    """A line is not a well-formed record object."""


class RecordShapeError(DatasetError):
    """Shapes are inconsistent within a record or across the dataset."""


class RecordValueError(DatasetError):
    """A numeric field holds an invalid value (non-finite, out of range)."""


@dataclass(frozen=True)
class SampleRecord:
    """One input's recorded artifacts from the Swift and Super models."""

    id: str
    swift_logits: np.ndarray  # (M, C) float64
    swift_pred: Pred
    super_pred: Pred
    encoder_features: np.ndarray | None = None  # (D,) float64
    label: Pred | None = None

    @property
    def num_positions(self) -> int:
        return self.swift_logits.shape[0]

    @property
    def num_classes(self) -> int:
        return self.swift_logits.shape[1]


@dataclass(frozen=True)
class Dataset:
    """A validated, shape-homogeneous collection of records."""

    records: tuple[SampleRecord, ...]
    num_classes: int
    feature_dim: int | None
    task_kind: str

    def __len__(self) -> int:
        return len(self.records)

    @property
    def has_features(self) -> bool:
        return self.feature_dim is not None

    @property
    def has_labels(self) -> bool:
        return all(r.label is not None for r in self.records)

    def swift_correct(self) -> np.ndarray:
        """Boolean vector: Swift prediction matches the gold label (exact match)."""
        self._require_labels()
        return np.array([r.swift_pred == r.label for r in self.records], dtype=bool)

    def super_correct(self) -> np.ndarray:
        self._require_labels()
        return np.array([r.super_pred == r.label for r in self.records], dtype=bool)

    def _require_labels(self) -> None:
        if not self.has_labels:
            raise DatasetError("dataset has unlabeled records")


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the synthetic two-class benchmark generator.

    Samples are a mixture of "easy" and "hard" inputs. Easy samples draw
    their Swift logit margin from a higher-mean distribution and are
    correct with `swift_accuracy_easy`; hard samples use the lower-mean
    margin distribution and `swift_accuracy_hard`. Super correctness is
    drawn independently at `super_accuracy` for every sample.
    """

    n_samples: int = 10_000
    swift_accuracy_easy: float = 0.98
    swift_accuracy_hard: float = 0.60
    super_accuracy: float = 0.95
    easy_fraction: float = 0.60
    score_separation: float = 4.0
    seed: int = 7

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        for name in ("swift_accuracy_easy", "swift_accuracy_hard", "super_accuracy", "easy_fraction"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1], got {p}")
        if not np.isfinite(self.score_separation):
            raise ValueError("score_separation must be finite")


def _parse_pred(value: object, field: str) -> Pred:
    if isinstance(value, bool):
        raise RecordParseError(f"field {field!r} must be an integer or integer list")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise RecordParseError(f"field {field!r} must hold integer ids, got {value}")
        return int(value)
    if isinstance(value, list):
        if not value:
            raise RecordShapeError(f"field {field!r} must be a non-empty token list")
        out = []
        for tok in value:
            if isinstance(tok, bool) or not isinstance(tok, (int, float)):
                raise RecordParseError(f"field {field!r} must hold integer token ids")
            if isinstance(tok, float) and not tok.is_integer():
                raise RecordParseError(f"field {field!r} must hold integer token ids, got {tok}")
            tok = int(tok)
            if tok < 0:
                raise RecordValueError(f"field {field!r} holds a negative token id: {tok}")
            out.append(tok)
        return tuple(out)
    raise RecordParseError(f"field {field!r} must be a number or list of numbers")


def _parse_matrix(value: object, field: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise RecordShapeError(f"field {field!r} must be a non-empty list of rows")
    width = None
    for row in value:
        if not isinstance(row, list) or not row:
            raise RecordShapeError(f"field {field!r} rows must be non-empty lists")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise RecordShapeError(f"field {field!r} has ragged rows")
        for x in row:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise RecordParseError(f"field {field!r} must hold numbers")
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise RecordValueError(f"field {field!r} holds a non-finite value")
    return arr


def _parse_vector(value: object, field: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise RecordShapeError(f"field {field!r} must be a non-empty list of numbers")
    for x in value:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise RecordParseError(f"field {field!r} must hold numbers")
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise RecordValueError(f"field {field!r} holds a non-finite value")
    return arr


def parse_record(obj: object) -> SampleRecord:
    """Validate one decoded JSON object against the record schema."""
    if not isinstance(obj, dict):
        raise RecordParseError("record line must be a JSON object")
    unknown = set(obj) - _RECORD_FIELDS
    if unknown:
        raise RecordParseError(f"unknown record fields: {sorted(unknown)}")
    for required in ("id", "swift_logits", "swift_pred", "super_pred"):
        if required not in obj:
            raise RecordParseError(f"missing required field {required!r}")
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise RecordParseError("field 'id' must be a non-empty string")

    logits = _parse_matrix(obj["swift_logits"], "swift_logits")
    features = None
    if obj.get("encoder_features") is not None:
        features = _parse_vector(obj["encoder_features"], "encoder_features")
    swift_pred = _parse_pred(obj["swift_pred"], "swift_pred")
    super_pred = _parse_pred(obj["super_pred"], "super_pred")
    label = None
    if obj.get("label") is not None:
        label = _parse_pred(obj["label"], "label")
    return SampleRecord(
        id=obj["id"],
        swift_logits=logits,
        swift_pred=swift_pred,
        super_pred=super_pred,
        encoder_features=features,
        label=label,
    )


def _check_class_id(value: Pred, num_classes: int, field: str) -> None:
    if not isinstance(value, int):
        raise RecordShapeError(f"{field} must be a class id in a classification dataset")
    if not 0 <= value < num_classes:
        raise RecordValueError(f"{field} {value} outside [0, {num_classes})")


def _check_token_seq(value: Pred, field: str) -> None:
    if not isinstance(value, tuple):
        raise RecordShapeError(f"{field} must be a token sequence in a seq2seq dataset")


def build_dataset(records: list[SampleRecord] | tuple[SampleRecord, ...]) -> Dataset:
    """Assemble records into a Dataset, enforcing the dataset-level invariants.

    The task kind is inferred: seq2seq iff any record has M > 1 or a
    sequence-valued prediction. Shapes must be homogeneous — one C for all
    records, one D when features are present (features are all-or-none).
    """
    if not records:
        raise RecordShapeError("dataset must be non-empty")
    num_classes = records[0].num_classes
    feature_dim = records[0].encoder_features.shape[0] if records[0].encoder_features is not None else None

    seq2seq = any(
        r.num_positions > 1 or isinstance(r.swift_pred, tuple) or isinstance(r.super_pred, tuple)
        for r in records
    )
    task_kind = SEQ2SEQ if seq2seq else CLASSIFICATION

    for i, rec in enumerate(records):
        where = f"record {i} (id={rec.id!r})"
        if rec.num_classes != num_classes:
            raise RecordShapeError(f"{where}: C={rec.num_classes} differs from dataset C={num_classes}")
        has_feat = rec.encoder_features is not None
        if has_feat != (feature_dim is not None):
            raise RecordShapeError(f"{where}: encoder_features must be present on all records or none")
        if has_feat and rec.encoder_features.shape[0] != feature_dim:
            raise RecordShapeError(f"{where}: D={rec.encoder_features.shape[0]} differs from dataset D={feature_dim}")
        if task_kind == CLASSIFICATION:
            if rec.num_positions != 1:
                raise RecordShapeError(f"{where}: classification records must have M=1")
            _check_class_id(rec.swift_pred, num_classes, f"{where}: swift_pred")
            _check_class_id(rec.super_pred, num_classes, f"{where}: super_pred")
            if rec.label is not None:
                _check_class_id(rec.label, num_classes, f"{where}: label")
            argmax = int(np.argmax(rec.swift_logits[0]))
            if rec.swift_pred != argmax:
                raise RecordValueError(
                    f"{where}: swift_pred={rec.swift_pred} is not the argmax "
                    f"({argmax}) of its logits"
                )
        else:
            _check_token_seq(rec.swift_pred, f"{where}: swift_pred")
            _check_token_seq(rec.super_pred, f"{where}: super_pred")
            if rec.label is not None:
                _check_token_seq(rec.label, f"{where}: label")

    return Dataset(
        records=tuple(records),
        num_classes=num_classes,
        feature_dim=feature_dim,
        task_kind=task_kind,
    )


def manifest_path_for(path: str | Path) -> Path:
    return Path(path).with_suffix(".manifest")


def load_dataset(path: str | Path, manifest: str | Path | None = None) -> Dataset:
    """Load and validate a record file.

    Errors carry 1-based line numbers. If the sidecar manifest exists (or an
    explicit path is given), its declared shapes must match the records.
    """
    path = Path(path)
    records: list[SampleRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            try:
                records.append(parse_record(obj))
            except DatasetError as exc:
                raise type(exc)(f"line {lineno}: {exc}") from None
    dataset = build_dataset(records)

    manifest_file = Path(manifest) if manifest is not None else manifest_path_for(path)
    if manifest is not None or manifest_file.exists():
        declared = _load_manifest(manifest_file)
        _check_manifest(dataset, declared, manifest_file)
    return dataset


def _load_manifest(path: Path) -> dict:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"manifest {path}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise RecordParseError(f"manifest {path}: must be a JSON object")
    for key in ("num_classes", "feature_dim", "task_kind"):
        if key not in obj:
            raise RecordParseError(f"manifest {path}: missing field {key!r}")
    return obj


def _check_manifest(dataset: Dataset, declared: dict, path: Path) -> None:
    if declared["num_classes"] != dataset.num_classes:
        raise RecordShapeError(
            f"manifest {path}: declares num_classes={declared['num_classes']}, "
            f"records have {dataset.num_classes}"
        )
    if declared["feature_dim"] != dataset.feature_dim:
        raise RecordShapeError(
            f"manifest {path}: declares feature_dim={declared['feature_dim']}, "
            f"records have {dataset.feature_dim}"
        )
    if declared["task_kind"] != dataset.task_kind:
        raise RecordShapeError(
            f"manifest {path}: declares task_kind={declared['task_kind']!r}, "
            f"records are {dataset.task_kind!r}"
        )


def record_to_json_obj(record: SampleRecord) -> dict:
    obj: dict = {
        "id": record.id,
        "swift_logits": record.swift_logits.tolist(),
    }
    if record.encoder_features is not None:
        obj["encoder_features"] = record.encoder_features.tolist()
    obj["swift_pred"] = list(record.swift_pred) if isinstance(record.swift_pred, tuple) else record.swift_pred
    obj["super_pred"] = list(record.super_pred) if isinstance(record.super_pred, tuple) else record.super_pred
    if record.label is not None:
        obj["label"] = list(record.label) if isinstance(record.label, tuple) else record.label
    return obj


def write_dataset(path: str | Path, dataset: Dataset) -> None:
    """Write the record file and its sidecar manifest (both atomically)."""
    path = Path(path)
    lines = [json.dumps(record_to_json_obj(r), allow_nan=False) for r in dataset.records]
    atomic_write_text(path, "\n".join(lines) + "\n")
    manifest = {
        "num_classes": dataset.num_classes,
        "feature_dim": dataset.feature_dim,
        "task_kind": dataset.task_kind,
    }
    atomic_write_text(manifest_path_for(path), json.dumps(manifest, allow_nan=False) + "\n")


def generate_synthetic(spec: SynthSpec) -> Dataset:
    """Generate a reproducible two-class benchmark per the SynthSpec mixture model.

    The routing-relevant structure: the Swift logit row puts its margin on the
    predicted class, so energy/softmax/entropy scores are all monotone in the
    margin, and easy (high-margin) samples are the ones Swift tends to get
    right. Identical specs produce identical datasets.
    """
    rng = np.random.default_rng(spec.seed % 2**64)
    n = spec.n_samples

    labels = rng.integers(0, 2, size=n)
    easy = rng.random(n) < spec.easy_fraction
    p_correct = np.where(easy, spec.swift_accuracy_easy, spec.swift_accuracy_hard)
    swift_correct = rng.random(n) < p_correct
    super_correct = rng.random(n) < spec.super_accuracy
    swift_preds = np.where(swift_correct, labels, 1 - labels)
    super_preds = np.where(super_correct, labels, 1 - labels)
    means = np.where(easy, spec.score_separation, 0.0)
    # half-normal margins keep the predicted-class logit strictly on top
    margins = np.maximum(np.abs(rng.normal(means, 1.0)), 1e-9)

    records = []
    for i in range(n):
        row = np.zeros((1, 2), dtype=np.float64)
        row[0, swift_preds[i]] = margins[i]
        records.append(
            SampleRecord(
                id=f"synth-{i:06d}",
                swift_logits=row,
                swift_pred=int(swift_preds[i]),
                super_pred=int(super_preds[i]),
                label=int(labels[i]),
            )
        )
    return build_dataset(records)
