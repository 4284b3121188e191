"""Command-line entry point for the routing toolkit.

One subcommand per pipeline stage, so runs compose in scripts:

    elang synth            generate a synthetic benchmark dataset
    elang train-head       fit the linear energy head on encoder features
    elang score            score every record under a score kind
    elang sweep            export the accuracy/FLOPs trade-off curve
    elang select-threshold pick a threshold (crossing point, budget, or accuracy target)
    elang route            route a dataset at a fixed threshold
    elang gateway          serve the live routing gateway

Every command prints a one-object JSON summary on stdout and writes output
files atomically. Exit codes: 0 success, 1 usage error, 2 data error,
3 infeasible calibration target. The ELANG_CONFIG environment variable may
name a JSON file of flag defaults (keys are flag names with dashes replaced
by underscores); explicit flags always win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from ._util import atomic_write_text, encode_threshold, parse_threshold
from .calibration import (
    CalibrationError,
    InfeasibleTargetError,
    crossing_point_threshold,
    split_by_swift_correctness,
    sweep,
    threshold_for_accuracy,
    threshold_for_budget,
    write_curve,
)
from .energy_head import HeadError, TrainConfig, load_head, save_head, train_head
from .gateway import GatewayConfig, GatewayConfigError, create_app
from .records import (
    DatasetError,
    SynthSpec,
    generate_synthetic,
    load_dataset,
    record_to_json_obj,
    write_dataset,
)
from .router import CostModel, RoutingError, route_dataset
from .scoring import RANDOM, SCORE_KIND_NAMES, ScoreKind, ScoringError, score_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3

_DATA_ERRORS = (DatasetError, ScoringError, HeadError, RoutingError, CalibrationError, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse default exits 2; we reserve 2 for data errors
        raise UsageError(message)


@dataclass
class RunConfig:
    """Flags of one run after merging ELANG_CONFIG defaults (flags win)."""

    command: str
    args: argparse.Namespace
    config: dict[str, Any]

    def get(self, key: str, fallback: Any = None) -> Any:
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        if key in self.config:
            return self.config[key]
        return fallback

    def require(self, key: str, flag: str) -> Any:
        value = self.get(key)
        if value is None:
            raise UsageError(f"missing {flag} (no flag and no ELANG_CONFIG default)")
        return value


def _load_env_config() -> dict[str, Any]:
    path = os.environ.get("ELANG_CONFIG")
    if not path:
        return {}
    try:
        obj = json.loads(open(path, encoding="utf-8").read())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read ELANG_CONFIG file {path!r}: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"ELANG_CONFIG file {path!r} must hold a JSON object")
    return obj


def build_parser() -> _Parser:
    parser = _Parser(prog="elang", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p: _Parser, out_required: bool = True) -> None:
        p.add_argument("--input", help="record file (one JSON object per line)")
        p.add_argument("--manifest", help="explicit manifest path (default: sidecar of --input)")
        if out_required:
            p.add_argument("--out", help="output path (written atomically)")

    def add_score(p: _Parser) -> None:
        p.add_argument("--score", choices=SCORE_KIND_NAMES, help="routing score kind")
        p.add_argument("--head", help="head checkpoint path (energy-head scoring)")
        p.add_argument("--seed", type=int, help="seed for random scoring")

    def add_cost(p: _Parser) -> None:
        p.add_argument("--cost-super", type=float, help="Super model FLOPs per sample")
        p.add_argument("--cost-swift-enc", type=float, help="Swift encoder FLOPs per sample")
        p.add_argument("--cost-swift-dec", type=float, help="Swift decoder FLOPs per sample")
        p.add_argument("--cost-head", type=float, help="energy head FLOPs per sample (default 1e6)")
        p.add_argument("--latency-super", type=float, help="mean Super latency in ms (optional)")
        p.add_argument("--latency-swift", type=float, help="mean Swift latency in ms (optional)")

    p = sub.add_parser("synth", help="generate a synthetic benchmark dataset")
    p.add_argument("--out", help="dataset path to write")
    p.add_argument("--n", type=int, help="number of samples (default 10000)")
    p.add_argument("--acc-easy", type=float, help="Swift accuracy on easy samples (default 0.98)")
    p.add_argument("--acc-hard", type=float, help="Swift accuracy on hard samples (default 0.60)")
    p.add_argument("--acc-super", type=float, help="Super accuracy (default 0.95)")
    p.add_argument("--easy-fraction", type=float, help="fraction of easy samples (default 0.60)")
    p.add_argument("--separation", type=float, help="easy-vs-hard margin mean gap (default 4.0)")
    p.add_argument("--seed", type=int, help="generator seed (default 7)")

    p = sub.add_parser("train-head", help="train the linear energy head")
    add_io(p)
    p.add_argument("--lr", type=float, help="learning rate (default 0.1)")
    p.add_argument("--epochs", type=int, help="training epochs (default 100)")
    p.add_argument("--batch-size", type=int, help="mini-batch size (default 32)")
    p.add_argument("--l2", type=float, help="L2 penalty on weights (default 0)")
    p.add_argument("--seed", type=int, help="shuffle seed (default 0)")

    p = sub.add_parser("score", help="score every record")
    add_io(p)
    add_score(p)

    p = sub.add_parser("sweep", help="export the trade-off curve over a threshold grid")
    add_io(p)
    add_score(p)
    add_cost(p)
    p.add_argument("--grid", type=int, help="N evenly spaced thresholds (default: every distinct score); sentinels always included")

    p = sub.add_parser("select-threshold", help="pick a routing threshold")
    add_io(p, out_required=False)
    add_score(p)
    add_cost(p)
    p.add_argument("--mode", choices=("crossing", "budget", "accuracy"), help="selection mode (inferred from --budget/--target-accuracy when omitted)")
    p.add_argument("--budget", type=float, help="FLOPs budget per sample")
    p.add_argument("--target-accuracy", type=float, help="accuracy floor")
    p.add_argument("--bandwidth", type=float, help="KDE bandwidth override for crossing mode")

    p = sub.add_parser("route", help="route a dataset at a fixed threshold")
    add_io(p, out_required=False)
    add_score(p)
    add_cost(p)
    p.add_argument("--threshold", help='routing threshold: number, "+inf", or "-inf" (write --threshold=-inf)')
    p.add_argument("--out", help="optional decisions file (record lines + route + score)")

    p = sub.add_parser("gateway", help="serve the live routing gateway")
    p.add_argument("--swift-url", help="Swift backend URL")
    p.add_argument("--super-url", help="Super backend URL")
    p.add_argument("--score", choices=SCORE_KIND_NAMES, help="routing score kind (default energy)")
    p.add_argument("--head", help="head checkpoint path (energy-head scoring)")
    p.add_argument("--threshold", help="initial threshold (default 0)")
    p.add_argument("--timeout-ms", type=float, help="per-backend timeout in ms (default 5000)")
    p.add_argument("--listen", help="host:port to bind (default 127.0.0.1:8080)")

    return parser


def _dataset(run: RunConfig):
    path = run.require("input", "--input")
    return load_dataset(path, manifest=run.get("manifest"))


def _score_kind(run: RunConfig) -> ScoreKind:
    name = run.require("score", "--score")
    head = None
    if name == "energy-head":
        head_path = run.require("head", "--head")
        head = load_head(head_path)
    seed = int(run.get("seed", 0))
    return ScoreKind(name=name, head=head, seed=seed)


def _cost_model(run: RunConfig) -> CostModel:
    return CostModel(
        flops_super=float(run.require("cost_super", "--cost-super")),
        flops_swift_encoder=float(run.require("cost_swift_enc", "--cost-swift-enc")),
        flops_swift_decoder=float(run.require("cost_swift_dec", "--cost-swift-dec")),
        flops_head=float(run.get("cost_head", 1.0e6)),
        latency_super=run.get("latency_super"),
        latency_swift=run.get("latency_swift"),
    )


def _grid(run: RunConfig, scores: np.ndarray):
    n = run.get("grid")
    if n is None:
        return None
    n = int(n)
    if n < 1:
        raise UsageError("--grid must be >= 1")
    inner = np.linspace(float(scores.min()), float(scores.max()), n)
    return np.concatenate(([-np.inf], inner, [np.inf]))


def _emit(summary: dict) -> None:
    print(json.dumps(summary, allow_nan=False))


def _cmd_synth(run: RunConfig) -> int:
    spec = SynthSpec(
        n_samples=int(run.get("n", SynthSpec.n_samples)),
        swift_accuracy_easy=float(run.get("acc_easy", SynthSpec.swift_accuracy_easy)),
        swift_accuracy_hard=float(run.get("acc_hard", SynthSpec.swift_accuracy_hard)),
        super_accuracy=float(run.get("acc_super", SynthSpec.super_accuracy)),
        easy_fraction=float(run.get("easy_fraction", SynthSpec.easy_fraction)),
        score_separation=float(run.get("separation", SynthSpec.score_separation)),
        seed=int(run.get("seed", SynthSpec.seed)),
    )
    out = run.require("out", "--out")
    dataset = generate_synthetic(spec)
    write_dataset(out, dataset)
    _emit(
        {
            "command": "synth",
            "out": str(out),
            "n": len(dataset),
            "seed": spec.seed,
            "swift_accuracy": float(np.mean(dataset.swift_correct())),
            "super_accuracy": float(np.mean(dataset.super_correct())),
        }
    )
    return EXIT_OK


def _cmd_train_head(run: RunConfig) -> int:
    dataset = _dataset(run)
    config = TrainConfig(
        learning_rate=float(run.get("lr", TrainConfig.learning_rate)),
        epochs=int(run.get("epochs", TrainConfig.epochs)),
        batch_size=int(run.get("batch_size", TrainConfig.batch_size)),
        l2=float(run.get("l2", TrainConfig.l2)),
        seed=int(run.get("seed", TrainConfig.seed)),
    )
    out = run.require("out", "--out")
    result = train_head(dataset, config)
    save_head(out, result.head)
    _emit(
        {
            "command": "train-head",
            "out": str(out),
            "initial_loss": result.initial_loss,
            "final_loss": result.final_loss,
            "train_accuracy": result.train_accuracy,
            "epochs": config.epochs,
        }
    )
    return EXIT_OK


def _cmd_score(run: RunConfig) -> int:
    dataset = _dataset(run)
    kind = _score_kind(run)
    out = run.require("out", "--out")
    scores = score_dataset(dataset, kind)
    lines = [
        json.dumps({"id": r.id, "score": float(s)}, allow_nan=False)
        for r, s in zip(dataset.records, scores)
    ]
    atomic_write_text(out, "\n".join(lines) + "\n")
    _emit(
        {
            "command": "score",
            "out": str(out),
            "score_kind": kind.name,
            "n": len(dataset),
            "score_min": float(scores.min()),
            "score_mean": float(scores.mean()),
            "score_max": float(scores.max()),
        }
    )
    return EXIT_OK


def _cmd_sweep(run: RunConfig) -> int:
    dataset = _dataset(run)
    kind = _score_kind(run)
    cost = _cost_model(run)
    out = run.require("out", "--out")
    scores = score_dataset(dataset, kind)
    curve = sweep(dataset, scores, cost, grid=_grid(run, scores))
    write_curve(out, curve)
    _emit(
        {
            "command": "sweep",
            "out": str(out),
            "score_kind": kind.name,
            "points": len(curve),
            "swift_endpoint_flops": curve.points[0].expected_flops,
            "super_endpoint_flops": curve.points[-1].expected_flops,
        }
    )
    return EXIT_OK


def _cmd_select_threshold(run: RunConfig) -> int:
    mode = run.get("mode")
    if mode is None:
        has_budget = run.get("budget") is not None
        has_target = run.get("target_accuracy") is not None
        if has_budget == has_target:
            raise UsageError("give --mode, or exactly one of --budget / --target-accuracy")
        mode = "budget" if has_budget else "accuracy"

    dataset = _dataset(run)
    kind = _score_kind(run)
    scores = score_dataset(dataset, kind)
    summary: dict[str, Any] = {"command": "select-threshold", "mode": mode, "score_kind": kind.name}

    if mode == "crossing":
        pair = split_by_swift_correctness(dataset, scores)
        bandwidth = run.get("bandwidth")
        if bandwidth is not None:
            pair = type(pair)(pair.group_a, pair.group_b, kde_bandwidth=float(bandwidth))
        threshold = crossing_point_threshold(pair)
        summary.update(
            {
                "threshold": encode_threshold(threshold),
                "n_swift_correct": int(pair.group_a.size),
                "n_swift_incorrect": int(pair.group_b.size),
            }
        )
    else:
        cost = _cost_model(run)
        curve = sweep(dataset, scores, cost, grid=_grid(run, scores))
        if mode == "budget":
            budget = float(run.require("budget", "--budget"))
            threshold = threshold_for_budget(curve, budget)
            summary["budget"] = budget
        else:
            target = float(run.require("target_accuracy", "--target-accuracy"))
            threshold = threshold_for_accuracy(curve, target)
            summary["target_accuracy"] = target
        point = next(p for p in curve.points if p.threshold == threshold)
        summary.update(
            {
                "threshold": encode_threshold(threshold),
                "swift_ratio": point.swift_ratio,
                "accuracy": point.accuracy,
                "expected_flops": point.expected_flops,
            }
        )
    _emit(summary)
    return EXIT_OK


def _cmd_route(run: RunConfig) -> int:
    dataset = _dataset(run)
    kind = _score_kind(run)
    cost = _cost_model(run)
    threshold = parse_threshold(run.require("threshold", "--threshold"))
    scores = score_dataset(dataset, kind)
    decisions, report = route_dataset(dataset, scores, threshold, cost)
    out = run.get("out")
    if out is not None:
        lines = []
        for record, decision in zip(dataset.records, decisions):
            obj = record_to_json_obj(record)
            obj["route"] = decision.route
            obj["score"] = decision.score
            lines.append(json.dumps(obj, allow_nan=False))
        atomic_write_text(out, "\n".join(lines) + "\n")
    summary = {"command": "route", "score_kind": kind.name}
    summary.update(report.to_json_obj())
    if out is not None:
        summary["out"] = str(out)
    _emit(summary)
    return EXIT_OK


def _cmd_gateway(run: RunConfig) -> int:
    listen = str(run.get("listen", "127.0.0.1:8080"))
    host, _, port_text = listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise UsageError(f"--listen must be host:port, got {listen!r}")
    threshold = parse_threshold(run.get("threshold", 0.0))
    config = GatewayConfig(
        swift_url=str(run.require("swift_url", "--swift-url")),
        super_url=str(run.require("super_url", "--super-url")),
        score_kind=str(run.get("score", "energy")),
        initial_threshold=threshold,
        head_path=run.get("head"),
        timeout_ms=float(run.get("timeout_ms", 5000.0)),
        listen_host=host,
        listen_port=int(port_text),
    )
    import uvicorn

    uvicorn.run(create_app(config), host=config.listen_host, port=config.listen_port)
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "train-head": _cmd_train_head,
    "score": _cmd_score,
    "sweep": _cmd_sweep,
    "select-threshold": _cmd_select_threshold,
    "route": _cmd_route,
    "gateway": _cmd_gateway,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        run = RunConfig(command=args.command, args=args, config=_load_env_config())
        return _COMMANDS[args.command](run)
    except UsageError as exc:
        print(f"elang: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, GatewayConfigError) as exc:
        print(f"elang: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleTargetError as exc:
        print(f"elang: infeasible target: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _DATA_ERRORS as exc:
        print(f"elang: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
