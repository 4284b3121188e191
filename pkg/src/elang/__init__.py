"""Energy-based routed inference between a Swift and a Super model.

Library surface: record IO and synthetic benchmarks (`records`), routing
scores (`scoring`), the linear energy head (`energy_head`), threshold
routing with cost accounting (`router`), threshold calibration
(`calibration`), and the live HTTP gateway (`gateway`).
"""

from .calibration import (
    CalibrationError,
    CurvePoint,
    InfeasibleTargetError,
    ScoreHistogramPair,
    TradeoffCurve,
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
from .energy_head import (
    EnergyHead,
    HeadError,
    TrainConfig,
    TrainResult,
    head_energy_score,
    head_logits,
    load_head,
    loss_and_gradients,
    save_head,
    train_head,
)
from .gateway import Gateway, GatewayConfig, GatewayConfigError, create_app
from .records import (
    Dataset,
    DatasetError,
    RecordParseError,
    RecordShapeError,
    RecordValueError,
    SampleRecord,
    SynthSpec,
    build_dataset,
    generate_synthetic,
    load_dataset,
    write_dataset,
)
from .router import (
    CostModel,
    RoutingDecision,
    RoutingError,
    RoutingReport,
    expected_flops,
    expected_latency,
    route_dataset,
)
from .scoring import (
    SCORE_KIND_NAMES,
    Score,
    ScoreKind,
    ScoringError,
    entropy_score,
    neg_free_energy,
    neg_free_energy_seq,
    random_score,
    score_dataset,
    score_logits,
    score_record,
    shannon_entropy,
    softmax_score,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "CostModel",
    "CurvePoint",
    "Dataset",
    "DatasetError",
    "EnergyHead",
    "Gateway",
    "GatewayConfig",
    "GatewayConfigError",
    "HeadError",
    "InfeasibleTargetError",
    "RecordParseError",
    "RecordShapeError",
    "RecordValueError",
    "RoutingDecision",
    "RoutingError",
    "RoutingReport",
    "SampleRecord",
    "Score",
    "ScoreHistogramPair",
    "ScoreKind",
    "SCORE_KIND_NAMES",
    "ScoringError",
    "SynthSpec",
    "TradeoffCurve",
    "TrainConfig",
    "TrainResult",
    "accuracy_swift_ratio_auc",
    "build_dataset",
    "create_app",
    "crossing_point_threshold",
    "entropy_score",
    "expected_flops",
    "expected_latency",
    "generate_synthetic",
    "head_energy_score",
    "head_logits",
    "load_dataset",
    "load_head",
    "loss_and_gradients",
    "neg_free_energy",
    "neg_free_energy_seq",
    "random_score",
    "read_curve",
    "route_dataset",
    "save_head",
    "score_dataset",
    "score_logits",
    "score_record",
    "shannon_entropy",
    "silverman_bandwidth",
    "softmax_score",
    "split_by_swift_correctness",
    "sweep",
    "threshold_for_accuracy",
    "threshold_for_budget",
    "train_head",
    "write_curve",
    "write_dataset",
]
