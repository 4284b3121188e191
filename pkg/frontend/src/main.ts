/** Bootstraps the console: connect, poll metrics, wire the threshold knob. */

import { GatewayClient } from "./client.js";
import { parseCurveCsv } from "./curve.js";
import { ConsoleState, ThresholdKnob } from "./state.js";
import {
  fitSliderToCurve,
  renderCurve,
  renderMetrics,
  renderStale,
  renderThreshold,
} from "./ui.js";

const state = new ConsoleState(1000);
let client: GatewayClient | null = null;
let knob: ThresholdKnob | null = null;
let pollTimer: number | null = null;
let dragging = false;

function renderAll(): void {
  renderThreshold(state, dragging);
  renderMetrics(state);
  renderCurve(state);
  renderStale(state);
}

async function poll(): Promise<void> {
  if (!client) return;
  try {
    state.recordSnapshot(await client.getMetrics());
  } catch {
    state.recordPollFailure();
  }
  renderAll();
}

function connect(): void {
  const url = (document.getElementById("gateway-url") as HTMLInputElement).value;
  client = new GatewayClient(url);
  knob = new ThresholdKnob(client, state, renderAll);
  void knob.sync();
  if (pollTimer !== null) clearInterval(pollTimer);
  pollTimer = setInterval(() => void poll(), state.pollIntervalMs) as unknown as number;
  void poll();
}

function wire(): void {
  document.getElementById("connect")!.addEventListener("click", connect);

  const slider = document.getElementById("threshold-slider") as HTMLInputElement;
  slider.addEventListener("pointerdown", () => {
    dragging = true;
  });
  slider.addEventListener("pointerup", () => {
    dragging = false;
  });
  slider.addEventListener("input", () => {
    void knob?.request(Number(slider.value));
  });
  document.getElementById("btn-minus-inf")!.addEventListener("click", () => {
    void knob?.request(-Infinity);
  });
  document.getElementById("btn-plus-inf")!.addEventListener("click", () => {
    void knob?.request(Infinity);
  });

  const fileInput = document.getElementById("curve-file") as HTMLInputElement;
  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      state.curve = parseCurveCsv(await file.text());
      state.errorBanner = null;
      fitSliderToCurve(state);
    } catch (error) {
      state.errorBanner = String(error);
    }
    renderAll();
  });
}

wire();
