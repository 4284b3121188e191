"""Live routing gateway between a Swift and a Super inference backend.

Every request is POSTed to the Swift backend first; its response must carry
the prediction plus the logits (and encoder features, for energy-head
scoring) so the gateway can score it without any model knowledge. Requests
scoring >= the current threshold return the Swift prediction; the rest are
re-sent, payload unchanged, to the Super backend. The threshold is a live
knob: PUT /v1/threshold swaps it atomically, and each in-flight request uses
exactly one threshold value for both its decision and its metrics.

HTTP surface (all bodies single JSON objects):
    POST /v1/infer      {"input": ...} -> {"prediction", "route", "score"}
    PUT  /v1/threshold  {"threshold": number | "+inf" | "-inf"}
    GET  /v1/threshold
    GET  /v1/metrics
    GET  /healthz
"""

from __future__ import annotations

import math
import threading
import time
from collections import deque
from contextlib import asynccontextmanager
from dataclasses import dataclass

import httpx
import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ._util import encode_threshold, parse_threshold
from .energy_head import EnergyHead, load_head
from .scoring import ENERGY_HEAD, RANDOM, SCORE_KIND_NAMES, ScoreKind, ScoringError, score_logits

_LATENCY_WINDOW = 1024


class GatewayConfigError(Exception):
    pass


@dataclass(frozen=True)
class GatewayConfig:
    swift_url: str
    super_url: str
    score_kind: str = "energy"
    initial_threshold: float = 0.0
    head_path: str | None = None
    timeout_ms: float = 5000.0
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    histogram_bins: int = 32
    histogram_lo: float = -16.0
    histogram_hi: float = 16.0

    def __post_init__(self) -> None:
        for name in ("swift_url", "super_url"):
            url = getattr(self, name)
            if not isinstance(url, str) or not url.startswith(("http://", "https://")):
                raise GatewayConfigError(f"{name} must be an http(s) URL, got {url!r}")
        if self.score_kind not in SCORE_KIND_NAMES:
            raise GatewayConfigError(f"unknown score kind {self.score_kind!r}")
        if self.score_kind == ENERGY_HEAD and not self.head_path:
            raise GatewayConfigError("energy-head scoring requires a head checkpoint path")
        if not self.timeout_ms > 0:
            raise GatewayConfigError("timeout_ms must be > 0")
        if math.isnan(self.initial_threshold):
            raise GatewayConfigError("initial_threshold may not be NaN")
        if self.histogram_bins < 1 or not self.histogram_hi > self.histogram_lo:
            raise GatewayConfigError("bad histogram configuration")


class _Metrics:
    """Counters and rolling stats; every mutation and snapshot is under one lock."""

    def __init__(self, bins: int, lo: float, hi: float) -> None:
        self._lock = threading.Lock()
        self.swift_served = 0
        self.super_served = 0
        self.errors = 0
        self._bins = bins
        self._lo = lo
        self._hi = hi
        self._hist = np.zeros(bins, dtype=np.int64)
        self._latency: dict[str, deque[float]] = {
            "swift": deque(maxlen=_LATENCY_WINDOW),
            "super": deque(maxlen=_LATENCY_WINDOW),
        }

    def record(self, route: str, score: float, latency_ms: float) -> None:
        with self._lock:
            if route == "swift":
                self.swift_served += 1
            else:
                self.super_served += 1
            width = (self._hi - self._lo) / self._bins
            idx = int(np.clip((score - self._lo) // width, 0, self._bins - 1))
            self._hist[idx] += 1
            self._latency[route].append(latency_ms)

    def record_error(self) -> None:
        with self._lock:
            self.errors += 1

    def snapshot(self, current_threshold: float) -> dict:
        with self._lock:
            total = self.swift_served + self.super_served
            edges = np.linspace(self._lo, self._hi, self._bins + 1)
            latency = {}
            for route, window in self._latency.items():
                if window:
                    values = np.asarray(window)
                    latency[route] = {
                        "mean_ms": float(values.mean()),
                        "p95_ms": float(np.percentile(values, 95)),
                    }
                else:
                    latency[route] = {"mean_ms": None, "p95_ms": None}
            return {
                "total_requests": total,
                "swift_served": self.swift_served,
                "super_served": self.super_served,
                "swift_ratio": (self.swift_served / total) if total else 0.0,
                "errors": self.errors,
                "current_threshold": encode_threshold(current_threshold),
                "latency_ms": latency,
                "score_histogram": {
                    "bin_edges": edges.tolist(),
                    "counts": self._hist.tolist(),
                },
            }


class Gateway:
    def __init__(self, config: GatewayConfig, transport: httpx.AsyncBaseTransport | None = None):
        self.config = config
        head: EnergyHead | None = None
        if config.score_kind == ENERGY_HEAD:
            head = load_head(config.head_path)
        self._kind = ScoreKind(name=config.score_kind, head=head, seed=0)
        self._threshold = float(config.initial_threshold)
        self._threshold_lock = threading.Lock()
        self._request_index = 0
        self.metrics = _Metrics(config.histogram_bins, config.histogram_lo, config.histogram_hi)
        self._client = httpx.AsyncClient(
            transport=transport, timeout=config.timeout_ms / 1000.0
        )

    async def aclose(self) -> None:
        await self._client.aclose()

    @property
    def threshold(self) -> float:
        return self._threshold

    def set_threshold(self, value: float) -> float:
        # single reference swap: concurrent readers see old or new, never torn
        with self._threshold_lock:
            self._threshold = float(value)
        return self._threshold

    def _next_index(self) -> int:
        with self._threshold_lock:
            idx = self._request_index
            self._request_index += 1
        return idx

    async def _call_backend(self, route: str, url: str, payload: object) -> httpx.Response | JSONResponse:
        try:
            return await self._client.post(url, json=payload)
        except httpx.HTTPError as exc:
            self.metrics.record_error()
            return JSONResponse(
                status_code=502,
                content={"detail": f"{route} backend unreachable: {exc}", "route": route},
            )

    @staticmethod
    def _passthrough_error(route: str, response: httpx.Response) -> JSONResponse:
        try:
            body = response.json()
        except ValueError:
            body = response.text
        return JSONResponse(
            status_code=response.status_code,
            content={"detail": "backend error", "route": route, "backend_body": body},
        )

    async def handle_infer(self, payload: object) -> JSONResponse:
        started = time.perf_counter()
        index = self._next_index()

        swift_response = await self._call_backend("swift", self.config.swift_url, payload)
        if isinstance(swift_response, JSONResponse):
            return swift_response
        if swift_response.status_code >= 400:
            self.metrics.record_error()
            return self._passthrough_error("swift", swift_response)
        try:
            body = swift_response.json()
        except ValueError:
            body = None
        if not isinstance(body, dict) or "prediction" not in body or "logits" not in body:
            self.metrics.record_error()
            return JSONResponse(
                status_code=422,
                content={"detail": "Swift response must carry 'prediction' and 'logits'", "route": "swift"},
            )
        try:
            score = score_logits(
                body["logits"],
                self._kind,
                features=body.get("encoder_features"),
                index=index,
            )
        except (ScoringError, TypeError, ValueError) as exc:
            self.metrics.record_error()
            return JSONResponse(
                status_code=422,
                content={"detail": f"cannot score Swift response: {exc}", "route": "swift"},
            )

        threshold = self._threshold  # one consistent value per request
        if score >= threshold:
            latency_ms = (time.perf_counter() - started) * 1000.0
            self.metrics.record("swift", score, latency_ms)
            return JSONResponse(
                status_code=200,
                content={"prediction": body["prediction"], "route": "swift", "score": score},
            )

        super_response = await self._call_backend("super", self.config.super_url, payload)
        if isinstance(super_response, JSONResponse):
            return super_response
        if super_response.status_code >= 400:
            self.metrics.record_error()
            return self._passthrough_error("super", super_response)
        try:
            super_body = super_response.json()
        except ValueError:
            super_body = None
        if not isinstance(super_body, dict) or "prediction" not in super_body:
            self.metrics.record_error()
            return JSONResponse(
                status_code=422,
                content={"detail": "Super response must carry 'prediction'", "route": "super"},
            )
        latency_ms = (time.perf_counter() - started) * 1000.0
        self.metrics.record("super", score, latency_ms)
        return JSONResponse(
            status_code=200,
            content={"prediction": super_body["prediction"], "route": "super", "score": score},
        )


def create_app(config: GatewayConfig, transport: httpx.AsyncBaseTransport | None = None) -> FastAPI:
    """Build the gateway ASGI app; `transport` lets tests inject mock backends."""
    gateway = Gateway(config, transport=transport)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        await gateway.aclose()

    app = FastAPI(title="elang gateway", lifespan=lifespan)
    app.state.gateway = gateway
    # the operator console is a cross-origin browser client
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.post("/v1/infer")
    async def infer(request: Request):
        try:
            payload = await request.json()
        except ValueError:
            return JSONResponse(status_code=400, content={"detail": "body must be JSON"})
        return await gateway.handle_infer(payload)

    @app.put("/v1/threshold")
    async def put_threshold(request: Request):
        try:
            payload = await request.json()
        except ValueError:
            return JSONResponse(status_code=400, content={"detail": "body must be JSON"})
        if not isinstance(payload, dict) or "threshold" not in payload:
            return JSONResponse(status_code=400, content={"detail": "body must be {'threshold': ...}"})
        try:
            value = parse_threshold(payload["threshold"])
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        acknowledged = gateway.set_threshold(value)
        return {"threshold": encode_threshold(acknowledged)}

    @app.get("/v1/threshold")
    async def get_threshold():
        return {"threshold": encode_threshold(gateway.threshold)}

    @app.get("/v1/metrics")
    async def get_metrics():
        return gateway.metrics.snapshot(gateway.threshold)

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    return app
