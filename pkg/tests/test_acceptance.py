"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one `[ACCEPTANCE] <criterion>: PASS|FAIL` line (visible
under `pytest -s` or in captured output), so a run doubles as a checklist.
"""

import json
import math
import time
from contextlib import contextmanager

import httpx
import numpy as np
import pytest
from fastapi.testclient import TestClient

from elang.calibration import (
    ScoreHistogramPair,
    accuracy_swift_ratio_auc,
    crossing_point_threshold,
    sweep,
)
from elang.energy_head import loss_and_gradients, train_head
from elang.gateway import GatewayConfig, create_app
from elang.records import SynthSpec, generate_synthetic
from elang.router import CostModel, expected_flops, route_dataset
from elang.scoring import (
    ScoreKind,
    neg_free_energy,
    neg_free_energy_seq,
    score_dataset,
    shannon_entropy,
    softmax_score,
)

from conftest import gaussian_feature_dataset, perceptron_separable
from test_scoring import oracle_entropy, oracle_lse, oracle_softmax, rel_err

PAPER_COST = CostModel(
    flops_super=87e11,
    flops_swift_encoder=2.125e11,
    flops_swift_decoder=2.125e11,
    flops_head=1e6,
)


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


def test_numeric_scorers_match_extended_precision_oracle():
    """10k random vectors, C in [1,64], entries in [-1e4, 1e4]: 1e-9 relative;
    shift identities within 1e-12 (checked at |values| <= 1000, where a
    float64 ulp still leaves room for the bound); scorer runtime < 5 s."""
    with criterion("numeric-scorers-vs-oracle"):
        rng = np.random.default_rng(20260809)
        vectors = [rng.uniform(-1e4, 1e4, size=int(rng.integers(1, 65))) for _ in range(10_000)]

        elapsed = 0.0
        worst_rel = 0.0
        for x in vectors:
            t0 = time.perf_counter()
            lse = neg_free_energy(x)
            soft = softmax_score(x)
            ent = shannon_entropy(x)
            elapsed += time.perf_counter() - t0
            worst_rel = max(
                worst_rel,
                rel_err(lse, oracle_lse(x)),
                rel_err(soft, oracle_softmax(x)),
                rel_err(ent, oracle_entropy(x)),
            )
        assert worst_rel < 1e-9, f"worst oracle disagreement {worst_rel}"
        assert elapsed < 5.0, f"scorer runtime {elapsed:.2f}s"

        worst_shift = 0.0
        for _ in range(10_000):
            x = rng.uniform(-1000, 1000, size=int(rng.integers(1, 65)))
            c = float(rng.uniform(-1000, 1000))
            worst_shift = max(
                worst_shift,
                abs(neg_free_energy(x + c) - (neg_free_energy(x) + c)),
                abs(softmax_score(x + c) - softmax_score(x)),
                abs(shannon_entropy(x + c) - shannon_entropy(x)),
            )
        assert worst_shift <= 1e-12, f"worst shift drift {worst_shift}"


def test_sequence_energy_reduces_and_averages():
    """M=1 equals the single-row scorer exactly; random M <= 32 matches the
    per-row average oracle within 1e-12."""
    with criterion("sequence-energy"):
        rng = np.random.default_rng(99)
        for _ in range(500):
            row = rng.uniform(-1e3, 1e3, size=int(rng.integers(1, 17)))
            assert neg_free_energy_seq(row[None, :]) == neg_free_energy(row)
        for _ in range(500):
            m = int(rng.integers(1, 33))
            c = int(rng.integers(1, 17))
            logits = rng.uniform(-10, 10, size=(m, c))
            oracle = sum(neg_free_energy(r) for r in logits) / m
            assert abs(neg_free_energy_seq(logits) - oracle) <= 1e-12


def test_cost_arithmetic_matches_reference_operating_point():
    """Super 87e11 / Swift 4.25e11 split evenly, head ~0, swift ratio 0.91:
    joint cost within 10% of the 11.5e11 reference value, whose speed-up
    rounds to the 7.6x reference."""
    with criterion("cost-arithmetic"):
        value = expected_flops(91, 9, PAPER_COST)
        assert abs(value - 11.5e11) / 11.5e11 <= 0.10, f"expected flops {value:.4g}"
        assert round(PAPER_COST.flops_super / 11.5e11, 1) == 7.6


def test_sweep_endpoints_and_monotonicity_on_100k_records():
    """Sweep is monotone (swift ratio down, flops up) and the +/-inf
    sentinels reproduce the pure-Swift / pure-Super reports exactly;
    scoring + sweeping 100k records takes < 10 s."""
    with criterion("sweep-endpoints-and-monotonicity"):
        dataset = generate_synthetic(SynthSpec(n_samples=100_000, seed=7))
        t0 = time.perf_counter()
        scores = score_dataset(dataset, ScoreKind("energy"))
        curve = sweep(dataset, scores, PAPER_COST)
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0, f"sweep runtime {elapsed:.2f}s"

        ratios = [p.swift_ratio for p in curve.points]
        flops = [p.expected_flops for p in curve.points]
        assert all(b <= a for a, b in zip(ratios, ratios[1:]))
        assert all(b >= a for a, b in zip(flops, flops[1:]))

        _, swift_report = route_dataset(dataset, scores, -math.inf, PAPER_COST)
        _, super_report = route_dataset(dataset, scores, math.inf, PAPER_COST)
        first, last = curve.points[0], curve.points[-1]
        assert first.threshold == -math.inf and last.threshold == math.inf
        assert first.swift_ratio == 1.0 and last.swift_ratio == 0.0
        assert first.accuracy == swift_report.accuracy
        assert first.expected_flops == swift_report.expected_flops
        assert last.accuracy == super_report.accuracy
        assert last.expected_flops == super_report.expected_flops


def test_scorer_ablation_direction():
    """On the seeded benchmark (n=10k, separation 4.0): AUC ordering is
    energy >= softmax/entropy >= random, and at accuracy matched to the
    pure-Super endpoint, energy routing needs >= 10% fewer FLOPs than
    random routing."""
    with criterion("scorer-ablation-direction"):
        dataset = generate_synthetic(SynthSpec(n_samples=10_000, score_separation=4.0, seed=7))
        curves = {}
        for name in ("energy", "softmax", "entropy", "random"):
            kind = ScoreKind(name, seed=7) if name == "random" else ScoreKind(name)
            curves[name] = sweep(dataset, score_dataset(dataset, kind), PAPER_COST)
        auc = {name: accuracy_swift_ratio_auc(c) for name, c in curves.items()}
        assert auc["energy"] >= auc["softmax"] - 1e-12
        assert auc["energy"] >= auc["entropy"] - 1e-12
        assert min(auc["softmax"], auc["entropy"]) >= auc["random"] + 0.005

        super_endpoint_accuracy = curves["energy"].points[-1].accuracy

        def min_flops_at_matched_accuracy(curve):
            feasible = [p for p in curve.points if p.accuracy >= super_endpoint_accuracy]
            return min(p.expected_flops for p in feasible)

        energy_flops = min_flops_at_matched_accuracy(curves["energy"])
        random_flops = min_flops_at_matched_accuracy(curves["random"])
        assert energy_flops <= 0.9 * random_flops, (
            f"energy {energy_flops:.4g} vs random {random_flops:.4g}"
        )


def test_head_training_criteria():
    """Separable suite >= 99% train accuracy (separability certified by a
    perceptron oracle); analytic gradients within 1e-4 of central finite
    differences over 100 draws; zero-init loss equals ln C within 1e-9."""
    with criterion("head-training"):
        dataset = gaussian_feature_dataset(500, seed=101, min_margin=0.5)
        features = np.stack([r.encoder_features for r in dataset.records])
        labels = np.array([r.label for r in dataset.records])
        assert perceptron_separable(features, labels)
        result = train_head(dataset)
        assert result.train_accuracy >= 0.99
        assert abs(result.initial_loss - math.log(dataset.num_classes)) <= 1e-9

        rng = np.random.default_rng(2024)
        eps = 1e-5
        worst = 0.0
        for _ in range(100):
            c, d, b = 3, 5, 8
            w = rng.normal(size=(c, d))
            bias = rng.normal(size=c)
            x = rng.normal(size=(b, d))
            y = rng.integers(0, c, size=b)
            _, gw, gb = loss_and_gradients(w, bias, x, y)

            def loss_at(wm, bm):
                return loss_and_gradients(wm, bm, x, y)[0]

            for idx in np.ndindex(w.shape):
                wp, wm = w.copy(), w.copy()
                wp[idx] += eps
                wm[idx] -= eps
                fd = (loss_at(wp, bias) - loss_at(wm, bias)) / (2 * eps)
                worst = max(worst, abs(gw[idx] - fd) / max(abs(gw[idx]), abs(fd), 1e-4))
            for i in range(c):
                bp, bm = bias.copy(), bias.copy()
                bp[i] += eps
                bm[i] -= eps
                fd = (loss_at(w, bp) - loss_at(w, bm)) / (2 * eps)
                worst = max(worst, abs(gb[i] - fd) / max(abs(gb[i]), abs(fd), 1e-4))
        assert worst < 1e-4, f"worst gradient disagreement {worst}"


def test_crossing_point_recovery():
    """Equal-weight N(0,1) vs N(2,1) crosses at 1.0 +/- 0.1; weights
    0.75/0.25 cross at 1 + ln(3)/2 +/- 0.1 (10k samples per group)."""
    with criterion("crossing-point-calibration"):
        rng = np.random.default_rng(31)
        group_a = rng.normal(0.0, 1.0, size=10_000)
        group_b = rng.normal(2.0, 1.0, size=10_000)
        pair = ScoreHistogramPair(group_a=group_a, group_b=group_b)
        assert crossing_point_threshold(pair) == pytest.approx(1.0, abs=0.1)
        expected = 1 + math.log(3) / 2
        weighted = crossing_point_threshold(pair, weights=(0.75, 0.25))
        assert weighted == pytest.approx(expected, abs=0.1)


def test_gateway_replay_matches_offline_routing():
    """1,000 recorded requests replayed through the gateway with a fixed
    threshold produce decisions identical to offline routing; conservation
    holds at every snapshot; endpoint thresholds give swift ratio 1.0/0.0
    exactly. (Runs with no console built.)"""
    with criterion("gateway-offline-equivalence"):
        dataset = generate_synthetic(SynthSpec(n_samples=1_000, seed=7))
        scores = score_dataset(dataset, ScoreKind("energy"))
        threshold = float(np.median(scores))
        offline_decisions, offline_report = route_dataset(dataset, scores, threshold, PAPER_COST)

        def handler(request: httpx.Request) -> httpx.Response:
            payload = json.loads(request.content)
            record = dataset.records[payload["input"]["index"]]
            if request.url.host == "swift":
                return httpx.Response(
                    200,
                    json={"prediction": record.swift_pred, "logits": record.swift_logits.tolist()},
                )
            return httpx.Response(200, json={"prediction": record.super_pred})

        config = GatewayConfig(
            swift_url="http://swift/infer",
            super_url="http://super/infer",
            initial_threshold=threshold,
        )
        app = create_app(config, transport=httpx.MockTransport(handler))
        with TestClient(app) as client:
            for i, offline in enumerate(offline_decisions):
                body = client.post("/v1/infer", json={"input": {"index": i}}).json()
                assert body["route"] == offline.route
                assert body["score"] == offline.score
                assert body["prediction"] == offline.emitted_pred
                if i % 100 == 0:
                    snap = client.get("/v1/metrics").json()
                    assert snap["swift_served"] + snap["super_served"] == snap["total_requests"]
            final = client.get("/v1/metrics").json()
            assert final["total_requests"] == len(dataset)
            assert final["swift_served"] == offline_report.n_swift
            assert final["super_served"] == offline_report.n_super

            # endpoint thresholds over a fresh window of the same stream
            client.put("/v1/threshold", json={"threshold": "-inf"})
            before = client.get("/v1/metrics").json()["swift_served"]
            for i in range(100):
                assert client.post("/v1/infer", json={"input": {"index": i}}).json()["route"] == "swift"
            assert client.get("/v1/metrics").json()["swift_served"] == before + 100

            client.put("/v1/threshold", json={"threshold": "+inf"})
            before_super = client.get("/v1/metrics").json()["super_served"]
            for i in range(100):
                assert client.post("/v1/infer", json={"input": {"index": i}}).json()["route"] == "super"
            assert client.get("/v1/metrics").json()["super_served"] == before_super + 100
