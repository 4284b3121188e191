/** DOM rendering. Everything shown is read from gateway payloads or the
 * loaded curve file; this layer formats and positions, it never recomputes. */

import { operatingPointFor } from "./curve.js";
import { ConsoleState, conservationHolds } from "./state.js";
import { CurvePoint, GatewayMetrics } from "./types.js";

export function formatThreshold(value: number | null): string {
  if (value === null) return "—";
  if (value === Infinity) return "+inf";
  if (value === -Infinity) return "-inf";
  return value.toPrecision(4);
}

export function formatFlops(value: number): string {
  return value >= 1e9 ? `${(value / 1e11).toPrecision(4)}e11` : value.toPrecision(4);
}

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function renderThreshold(state: ConsoleState, dragging: boolean): void {
  const ack = state.acknowledgedThreshold;
  byId("threshold-readout").textContent = formatThreshold(ack);
  const slider = byId<HTMLInputElement>("threshold-slider");
  if (!dragging && ack !== null && Number.isFinite(ack)) {
    slider.value = String(ack);
  }
  const banner = byId("error-banner");
  banner.textContent = state.errorBanner ?? "";
  banner.classList.toggle("visible", state.errorBanner !== null);
}

export function renderStale(state: ConsoleState): void {
  byId("stale-indicator").classList.toggle("visible", state.stale);
}

function renderHistogram(metrics: GatewayMetrics): void {
  const host = byId("histogram");
  const counts = metrics.score_histogram.counts;
  const edges = metrics.score_histogram.bin_edges;
  const peak = Math.max(1, ...counts);
  host.replaceChildren(
    ...counts.map((count, i) => {
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.style.height = `${(100 * count) / peak}%`;
      bar.title = `[${edges[i].toFixed(2)}, ${edges[i + 1].toFixed(2)}): ${count}`;
      return bar;
    }),
  );
}

export function renderMetrics(state: ConsoleState): void {
  const metrics = state.latest;
  if (!metrics) return;
  byId("gauge-total").textContent = String(metrics.total_requests);
  byId("gauge-swift").textContent = String(metrics.swift_served);
  byId("gauge-super").textContent = String(metrics.super_served);
  byId("gauge-errors").textContent = String(metrics.errors);
  const pct = (100 * metrics.swift_ratio).toFixed(1);
  byId("gauge-ratio").textContent = `${pct}%`;
  byId<HTMLElement>("ratio-fill").style.width = `${pct}%`;

  for (const route of ["swift", "super"] as const) {
    const stats = metrics.latency_ms[route];
    byId(`latency-${route}`).textContent =
      stats.mean_ms === null
        ? "—"
        : `${stats.mean_ms.toFixed(1)} ms (p95 ${stats.p95_ms?.toFixed(1)} ms)`;
  }

  const badge = byId("conservation-badge");
  const ok = conservationHolds(metrics);
  badge.textContent = ok ? "counters consistent" : "counter mismatch";
  badge.classList.toggle("ok", ok);
  badge.classList.toggle("bad", !ok);

  renderHistogram(metrics);
  renderSparkline(state);
}

function renderSparkline(state: ConsoleState): void {
  const svg = byId("sparkline");
  const series = state.history.slice(-120).map((s) => s.metrics.swift_ratio);
  if (series.length < 2) return;
  const w = 280;
  const h = 48;
  const step = w / (series.length - 1);
  const points = series
    .map((r, i) => `${(i * step).toFixed(1)},${(h - r * h).toFixed(1)}`)
    .join(" ");
  svg.innerHTML = `<polyline fill="none" stroke="currentColor" stroke-width="1.5" points="${points}"/>`;
}

export function renderCurve(state: ConsoleState): void {
  const svg = byId("curve-plot");
  const readout = byId("curve-readout");
  if (!state.curve) {
    readout.textContent = "no curve loaded";
    return;
  }
  const points = state.curve.points.filter((p) => p.accuracy !== null);
  if (points.length === 0) {
    readout.textContent = "curve has no accuracy column";
    return;
  }
  const w = 420;
  const h = 180;
  const pad = 10;
  const xs = points.map((p) => p.expectedFlops);
  const ys = points.map((p) => p.accuracy as number);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (x: number) =>
    pad + (xMax === xMin ? 0 : ((x - xMin) / (xMax - xMin)) * (w - 2 * pad));
  const sy = (y: number) =>
    h - pad - (yMax === yMin ? 0 : ((y - yMin) / (yMax - yMin)) * (h - 2 * pad));

  const path = points.map((p) => `${sx(p.expectedFlops).toFixed(1)},${sy(p.accuracy as number).toFixed(1)}`).join(" ");
  let marker = "";
  let active: CurvePoint | null = null;
  if (state.acknowledgedThreshold !== null) {
    active = operatingPointFor(state.curve, state.acknowledgedThreshold);
    if (active.accuracy !== null) {
      marker = `<circle cx="${sx(active.expectedFlops).toFixed(1)}" cy="${sy(active.accuracy).toFixed(1)}" r="5" class="marker"/>`;
    }
  }
  svg.innerHTML = `<polyline fill="none" stroke="currentColor" stroke-width="1.5" points="${path}"/>${marker}`;
  readout.textContent = active
    ? `operating row: threshold ${formatThreshold(active.threshold)} · swift ${(100 * active.swiftRatio).toFixed(1)}% · ` +
      `accuracy ${active.accuracy === null ? "—" : (100 * active.accuracy).toFixed(2) + "%"} · ` +
      `${formatFlops(active.expectedFlops)} FLOPs · ${active.flopsSpeedup.toFixed(2)}x`
    : "curve loaded — set a threshold to place the marker";
}

/** Widen the slider range to cover the curve's finite thresholds. */
export function fitSliderToCurve(state: ConsoleState): void {
  if (!state.curve) return;
  const finite = state.curve.points.map((p) => p.threshold).filter((t) => Number.isFinite(t));
  if (finite.length === 0) return;
  const slider = byId<HTMLInputElement>("threshold-slider");
  slider.min = String(Math.floor(Math.min(...finite) - 1));
  slider.max = String(Math.ceil(Math.max(...finite) + 1));
}
