/**
 * Filter compilation: the one place UI state turns into a query.
 *
 * The mapping is fixed so the server sees a predictable shape. Each set
 * field contributes exactly one must clause, in declaration order:
 *
 *   airline        -> term on airline_icao
 *   status         -> term on status
 *   bbox           -> geo_bbox on position (the current map viewport)
 *   time_range     -> range on updated, half-open [from, to)
 *   selected_state -> geo_bbox on position from the drilled geohash cell
 *
 * An empty state compiles to match_all. The function is pure: no clocks,
 * no globals, no mutation of its argument.
 */

import { decodeBounds } from "./geohash";
import type { FilterState, Query } from "./types";

export function compileFilters(state: FilterState): Query {
  const must: Query[] = [];
  if (state.airline !== undefined) {
    must.push({ term: { field: "airline_icao", value: state.airline } });
  }
  if (state.status !== undefined) {
    must.push({ term: { field: "status", value: state.status } });
  }
  if (state.bbox !== undefined) {
    const b = state.bbox;
    must.push({
      geo_bbox: {
        field: "position",
        tl_lat: b.tl_lat,
        tl_lng: b.tl_lng,
        br_lat: b.br_lat,
        br_lng: b.br_lng,
      },
    });
  }
  if (state.time_range !== undefined) {
    must.push({
      range: {
        field: "updated",
        gte: state.time_range.from,
        lt: state.time_range.to,
      },
    });
  }
  if (state.selected_state !== undefined) {
    const cell = decodeBounds(state.selected_state);
    must.push({
      geo_bbox: {
        field: "position",
        tl_lat: cell.latHi,
        tl_lng: cell.lngLo,
        br_lat: cell.latLo,
        br_lng: cell.lngHi,
      },
    });
  }
  if (must.length === 0) {
    return { match_all: {} };
  }
  return { bool: { must } };
}
