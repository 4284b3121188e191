/** Wire types for the gateway HTTP API and the exported trade-off curve. */

export type ThresholdWire = number | "+inf" | "-inf";

export interface LatencyStats {
  mean_ms: number | null;
  p95_ms: number | null;
}

export interface GatewayMetrics {
  total_requests: number;
  swift_served: number;
  super_served: number;
  swift_ratio: number;
  errors: number;
  current_threshold: ThresholdWire;
  latency_ms: { swift: LatencyStats; super: LatencyStats };
  score_histogram: { bin_edges: number[]; counts: number[] };
}

export interface CurvePoint {
  threshold: number;
  swiftRatio: number;
  accuracy: number | null;
  expectedFlops: number;
  flopsSpeedup: number;
}

export interface TradeoffCurve {
  points: CurvePoint[];
}

/** Decode a threshold as the gateway serializes it. */
export function parseThreshold(value: ThresholdWire | string): number {
  if (typeof value === "number") {
    if (Number.isNaN(value)) throw new Error("threshold may not be NaN");
    return value;
  }
  const text = value.trim().toLowerCase();
  if (text === "+inf" || text === "inf") return Infinity;
  if (text === "-inf") return -Infinity;
  const parsed = Number(text);
  if (text === "" || Number.isNaN(parsed)) throw new Error(`not a threshold: ${value}`);
  return parsed;
}

/** Encode a threshold for PUT /v1/threshold. */
export function encodeThreshold(value: number): ThresholdWire {
  if (value === Infinity) return "+inf";
  if (value === -Infinity) return "-inf";
  if (Number.isNaN(value)) throw new Error("threshold may not be NaN");
  return value;
}
