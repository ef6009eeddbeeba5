// Thin client for the query service. Four endpoints, nothing else.

import { compileFilters } from "./filters";
import type {
  DelaySummaryPayload,
  FilterState,
  FlightStatus,
  GeoBounds,
  LiveResponse,
  MetricsPayload,
  SearchRequest,
  SearchResponse,
} from "./types";

/** Index that position documents land in. */
export const POSITIONS_INDEX = "flights_live";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface LiveParams {
  bbox?: GeoBounds;
  status?: FlightStatus;
  airline?: string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  async flightsLive(params: LiveParams = {}): Promise<LiveResponse> {
    const qs = new URLSearchParams();
    if (params.bbox) {
      const b = params.bbox;
      qs.set("bbox", `${b.tl_lat},${b.tl_lng},${b.br_lat},${b.br_lng}`);
    }
    if (params.status) qs.set("status", params.status);
    if (params.airline) qs.set("airline", params.airline);
    const suffix = qs.toString() ? `?${qs.toString()}` : "";
    return this.get(`/api/flights/live${suffix}`);
  }

  async search(body: SearchRequest): Promise<SearchResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/search`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return unwrap(resp);
  }

  async metrics(): Promise<MetricsPayload> {
    return this.get("/api/metrics");
  }

  async delaysSummary(dataset?: string): Promise<DelaySummaryPayload> {
    const suffix = dataset ? `?dataset=${encodeURIComponent(dataset)}` : "";
    return this.get(`/api/delays/summary${suffix}`);
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    return unwrap(resp);
  }
}

async function unwrap<T>(resp: Response): Promise<T> {
  if (resp.ok) {
    return (await resp.json()) as T;
  }
  let code = "internal";
  let message = `HTTP ${resp.status}`;
  try {
    const payload = (await resp.json()) as {
      error?: { code?: string; message?: string };
    };
    if (payload.error) {
      code = payload.error.code ?? code;
      message = payload.error.message ?? message;
    }
  } catch {
    // non-JSON error body, keep the status line
  }
  throw new ApiError(resp.status, code, message);
}

/**
 * The one search body the chart panels use: current filters plus the three
 * panel aggregations, no hits. Servers key replay fixtures off this exact
 * shape, so change it deliberately.
 */
export function panelsRequest(state: FilterState): SearchRequest {
  return {
    index: POSITIONS_INDEX,
    query: compileFilters(state),
    size: 0,
    aggs: {
      per_minute: { date_histogram: { field: "updated", interval_seconds: 60 } },
      by_airline: { terms: { field: "airline_icao", size: 10 } },
      cells: { geohash_grid: { field: "position", precision: 4 } },
    },
  };
}

/** Full-hit listing for a filter state; size null means no cap. */
export function listRequest(state: FilterState): SearchRequest {
  return { index: POSITIONS_INDEX, query: compileFilters(state), size: null };
}
