/** Shared types: filter state, query wire format, and service payloads. */

export type FlightStatus = "scheduled" | "en-route" | "landed";

export const FLIGHT_STATUSES: readonly FlightStatus[] = [
  "scheduled",
  "en-route",
  "landed",
];

/** Corner-addressed bounds, top-left and bottom-right (lat shrinks southward). */
export interface GeoBounds {
  tl_lat: number;
  tl_lng: number;
  br_lat: number;
  br_lng: number;
}

/** Half-open event-time span in epoch seconds. */
export interface TimeRange {
  from: number;
  to: number;
}

/**
 * Everything the user has currently selected. Each set field narrows the
 * query by exactly one clause; an all-unset state means "everything".
 * selected_state holds a map drill-down, a geohash cell identifier.
 */
export interface FilterState {
  airline?: string;
  status?: FlightStatus;
  bbox?: GeoBounds;
  time_range?: TimeRange;
  selected_state?: string;
}

// -- query wire format --------------------------------------------------

export interface TermClause {
  term: { field: string; value: string | number };
}

export interface RangeClause {
  range: { field: string; gte?: number; gt?: number; lte?: number; lt?: number };
}

export interface GeoBboxClause {
  geo_bbox: {
    field: string;
    tl_lat: number;
    tl_lng: number;
    br_lat: number;
    br_lng: number;
  };
}

export interface BoolClause {
  bool: { must?: Query[]; should?: Query[]; must_not?: Query[] };
}

export interface MatchAllClause {
  match_all: Record<string, never>;
}

export type Query =
  | MatchAllClause
  | TermClause
  | RangeClause
  | GeoBboxClause
  | BoolClause;

export type AggSpec =
  | { terms: { field: string; size?: number } }
  | { date_histogram: { field: string; interval_seconds: number } }
  | { stats: { field: string } }
  | { geohash_grid: { field: string; precision?: number; size?: number } };

export interface SearchRequest {
  index: string;
  query: Query;
  aggs?: Record<string, AggSpec>;
  size?: number | null;
}

// -- service payloads -----------------------------------------------------

export interface LiveFlight {
  flight_icao: string;
  airline_icao: string;
  dep_icao: string;
  arr_icao: string;
  position: { lat: number; lng: number };
  alt: number;
  dir: number;
  speed: number;
  status: FlightStatus;
  updated: number;
  reg_number?: string;
  flight_iata?: string;
}

export interface LiveResponse {
  as_of: number;
  count: number;
  flights: LiveFlight[];
}

export interface SearchHit {
  _id: string;
  _version: number;
  fields: Record<string, unknown>;
}

export interface Bucket {
  key: string | number;
  doc_count: number;
}

export interface BucketAggResult {
  buckets: Bucket[];
}

export interface SearchResponse {
  total: number;
  hits: SearchHit[];
  aggregations?: Record<string, BucketAggResult>;
}

export interface DelaySummaryPayload {
  dataset: string;
  total_flights: number;
  cancelled: number;
  on_time: number;
  delayed: number;
  on_time_pct: number;
  delayed_pct: number;
  cause_minutes: Record<string, number>;
  external_cause_minutes: Record<string, number>;
  by_weekday: Record<string, { on_time: number; delayed: number }>;
}

export type MetricsPayload = Record<string, number>;
