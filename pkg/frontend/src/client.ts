/** Thin typed client for the gateway HTTP API; fetch is injectable for tests. */

import {
  GatewayMetrics,
  ThresholdWire,
  encodeThreshold,
  parseThreshold,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
    this.name = "GatewayError";
  }
}

export class GatewayClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (error) {
      throw new GatewayError(`gateway unreachable: ${String(error)}`);
    }
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body && body.detail) detail = `${response.status}: ${body.detail}`;
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new GatewayError(`gateway error ${detail}`, response.status);
    }
    return response.json();
  }

  async health(): Promise<boolean> {
    try {
      await this.request("/healthz");
      return true;
    } catch {
      return false;
    }
  }

  async getThreshold(): Promise<number> {
    const body = (await this.request("/v1/threshold")) as { threshold: ThresholdWire };
    return parseThreshold(body.threshold);
  }

  /** PUT the new value; resolves to the threshold the gateway acknowledged. */
  async putThreshold(value: number): Promise<number> {
    const body = (await this.request("/v1/threshold", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ threshold: encodeThreshold(value) }),
    })) as { threshold: ThresholdWire };
    return parseThreshold(body.threshold);
  }

  async getMetrics(): Promise<GatewayMetrics> {
    return (await this.request("/v1/metrics")) as GatewayMetrics;
  }
}
