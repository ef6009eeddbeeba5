/**
 * Wire-contract tests against a replay server. Every request the client
 * builds must match a recorded exchange byte-for-byte (canonicalized), and
 * every response must round-trip through the client unchanged. A recorded
 * snapshot of the whole index lets a naive reimplementation of the filter
 * semantics cross-check that compiled queries select exactly the right docs.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError, listRequest, panelsRequest } from "../src/api";
import type {
  DelaySummaryPayload,
  FilterState,
  MetricsPayload,
  SearchHit,
  SearchRequest,
  SearchResponse,
} from "../src/types";
import { loadFixture } from "./helpers";
import { MockServer, type Exchange } from "./mock_server";
import { naiveFilter } from "./naive";

interface RecordedSearch {
  state: FilterState;
  request: SearchRequest;
  response: SearchResponse;
}

interface SearchFixtures {
  index: string;
  snapshot: { request: SearchRequest; response: SearchResponse };
  cross_checks: RecordedSearch[];
  panels: Record<"initial" | "drill_airline" | "drill_cell", RecordedSearch>;
}

const fx = loadFixture<SearchFixtures>("search_fixtures.json");
const delays = loadFixture<{ response: DelaySummaryPayload }>("delays.json");
const metrics = loadFixture<{ response: MetricsPayload }>("metrics.json");

function searchExchange(request: SearchRequest, response: unknown): Exchange {
  return { method: "POST", path: "/api/search", body: request, response };
}

let server: MockServer;
let client: ApiClient;

beforeAll(async () => {
  const exchanges: Exchange[] = [
    searchExchange(fx.snapshot.request, fx.snapshot.response),
    ...fx.cross_checks.map((c) => searchExchange(c.request, c.response)),
    ...Object.values(fx.panels).map((p) => searchExchange(p.request, p.response)),
    { method: "GET", path: "/api/delays/summary", response: delays.response },
    { method: "GET", path: "/api/metrics", response: metrics.response },
  ];
  server = new MockServer(exchanges);
  await server.start();
  client = new ApiClient(server.url);
});

afterAll(async () => {
  await server.stop();
});

describe("search contract", () => {
  let snapshotHits: SearchHit[];

  it("fetches the full index snapshot unchanged", async () => {
    expect(listRequest({})).toStrictEqual(fx.snapshot.request);
    const resp = await client.search(listRequest({}));
    expect(resp).toStrictEqual(fx.snapshot.response);
    expect(resp.total).toBe(resp.hits.length);
    snapshotHits = resp.hits;
  });

  it("selects exactly the docs the filter semantics promise", async () => {
    expect(fx.cross_checks.length).toBeGreaterThanOrEqual(10);
    const byId = new Map(snapshotHits.map((h) => [h._id, h]));
    let nonEmpty = 0;
    for (const check of fx.cross_checks) {
      expect(listRequest(check.state)).toStrictEqual(check.request);
      const resp = await client.search(listRequest(check.state));
      expect(resp).toStrictEqual(check.response);

      const want = naiveFilter(snapshotHits, check.state);
      expect(resp.total).toBe(want.length);
      expect(resp.hits.map((h) => h._id)).toStrictEqual(want.map((h) => h._id));
      for (const hit of resp.hits) {
        expect(hit).toStrictEqual(byId.get(hit._id));
      }
      if (resp.total > 0) nonEmpty += 1;
    }
    // The corpus was built so most recorded filters actually match docs;
    // all-empty results would make this cross-check vacuous.
    expect(nonEmpty).toBeGreaterThanOrEqual(6);
  });

  it("round-trips the three recorded panel queries", async () => {
    for (const name of ["initial", "drill_airline", "drill_cell"] as const) {
      const rec = fx.panels[name];
      expect(panelsRequest(rec.state)).toStrictEqual(rec.request);
      const resp = await client.search(panelsRequest(rec.state));
      expect(resp).toStrictEqual(rec.response);
    }
  });
});

describe("scalar endpoints", () => {
  it("round-trips the delay summary", async () => {
    const summary = await client.delaysSummary();
    expect(summary).toStrictEqual(delays.response);
    const causes = Object.values(summary.cause_minutes);
    const external = Object.values(summary.external_cause_minutes);
    expect(Math.max(...causes)).toBeGreaterThan(0);
    expect(external.length).toBeLessThan(causes.length);
  });

  it("round-trips metrics", async () => {
    expect(await client.metrics()).toStrictEqual(metrics.response);
  });
});

describe("contract boundaries", () => {
  it("never sent a request outside the recordings", () => {
    expect(server.misses).toStrictEqual([]);
  });

  it("rejects an off-contract request with a typed error", async () => {
    const rogue = { ...listRequest({}), index: "no_such_index" };
    const err = await client.search(rogue).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).code).toBe("not_found");
    expect(server.misses.length).toBe(1);
  });
});
