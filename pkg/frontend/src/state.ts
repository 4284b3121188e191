/** Console state: acknowledged-threshold tracking, snapshot history, staleness.
 *
 * The displayed threshold is always the last value the gateway acknowledged;
 * a slider drag is only reflected once the PUT round-trips, and a failed
 * update reverts the slider to the acknowledged value.
 */

import { GatewayClient, GatewayError } from "./client.js";
import { GatewayMetrics, TradeoffCurve } from "./types.js";

export interface Snapshot {
  at: number; // ms epoch
  metrics: GatewayMetrics;
}

export const STALE_AFTER_MISSED_POLLS = 3;

export function conservationHolds(metrics: GatewayMetrics): boolean {
  return metrics.swift_served + metrics.super_served === metrics.total_requests;
}

export class ConsoleState {
  /** Append-only snapshot series for the session. */
  readonly history: Snapshot[] = [];
  acknowledgedThreshold: number | null = null;
  curve: TradeoffCurve | null = null;
  pollIntervalMs: number;
  errorBanner: string | null = null;
  private missedPolls = 0;

  constructor(pollIntervalMs = 1000) {
    this.pollIntervalMs = pollIntervalMs;
  }

  recordSnapshot(metrics: GatewayMetrics, at = Date.now()): Snapshot {
    const snapshot = { at, metrics };
    this.history.push(snapshot);
    this.missedPolls = 0;
    return snapshot;
  }

  recordPollFailure(): void {
    this.missedPolls += 1;
  }

  get stale(): boolean {
    return this.missedPolls >= STALE_AFTER_MISSED_POLLS;
  }

  get latest(): GatewayMetrics | null {
    return this.history.length ? this.history[this.history.length - 1].metrics : null;
  }
}

/** Serializes slider updates: at most one PUT in flight, later drags coalesce
 * to the newest value, and only acknowledged values update the state. */
export class ThresholdKnob {
  private inFlight = false;
  private pending: number | null = null;

  constructor(
    private readonly client: GatewayClient,
    private readonly state: ConsoleState,
    private readonly onSettled: () => void = () => {},
  ) {}

  async request(value: number): Promise<void> {
    if (this.inFlight) {
      this.pending = value;
      return;
    }
    this.inFlight = true;
    try {
      let next: number | null = value;
      while (next !== null) {
        const target: number = next;
        next = null;
        try {
          const acknowledged = await this.client.putThreshold(target);
          this.state.acknowledgedThreshold = acknowledged;
          this.state.errorBanner = null;
        } catch (error) {
          const message =
            error instanceof GatewayError ? error.message : `threshold update failed: ${String(error)}`;
          this.state.errorBanner = message;
        }
        this.onSettled();
        next = this.pending;
        this.pending = null;
      }
    } finally {
      this.inFlight = false;
    }
  }

  /** Re-read the live value, e.g. on connect; only then is it displayable. */
  async sync(): Promise<void> {
    try {
      this.state.acknowledgedThreshold = await this.client.getThreshold();
      this.state.errorBanner = null;
    } catch (error) {
      this.state.errorBanner = `cannot read threshold: ${String(error)}`;
    }
    this.onSettled();
  }
}
