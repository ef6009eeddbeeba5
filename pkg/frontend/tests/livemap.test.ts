/**
 * Live layer behaviour across recorded poll cycles: markers are added,
 * moved in place, and removed to mirror each response exactly; an outage
 * raises the staleness banner over the last good data and recovery clears
 * it. The poll loop itself keeps running either way.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Dashboard } from "../src/app";
import { LiveMap } from "../src/livemap";
import type { GeoBounds, LiveFlight, LiveResponse } from "../src/types";
import { loadFixture, makeDom } from "./helpers";
import { MockServer, type Exchange } from "./mock_server";

interface LiveCycle {
  params: { bbox: number[] };
  response: LiveResponse;
}

interface LiveFixtures {
  view: GeoBounds;
  empty_view: GeoBounds;
  empty: LiveCycle;
  cycles: LiveCycle[];
}

const fx = loadFixture<LiveFixtures>("live_fixtures.json");

function liveExchange(cycle: LiveCycle): Exchange {
  return {
    method: "GET",
    path: "/api/flights/live",
    params: { bbox: cycle.params.bbox },
    response: cycle.response,
  };
}

/** Every marker on the map must carry exactly the latest response values. */
function expectMarkersMatch(dash: Dashboard, flights: LiveFlight[]): void {
  expect(dash.map.markerCount).toBe(flights.length);
  for (const flight of flights) {
    const el = dash.map.marker(flight.flight_icao);
    expect(el, flight.flight_icao).toBeDefined();
    expect(el!.dataset.status).toBe(flight.status);
    expect(Number(el!.dataset.lat)).toBe(flight.position.lat);
    expect(Number(el!.dataset.lng)).toBe(flight.position.lng);
    expect(Number(el!.dataset.updated)).toBe(flight.updated);
  }
}

let server: MockServer;
let dash: Dashboard;

beforeAll(async () => {
  server = new MockServer([liveExchange(fx.empty), ...fx.cycles.map(liveExchange)]);
  await server.start();
  const { document } = makeDom();
  const root = document.createElement("div");
  document.body.appendChild(root);
  // Never start()ed: polls are driven by hand so each cycle can be inspected.
  dash = new Dashboard(root, {
    apiBase: server.url,
    tileUrl: "",
    pollMs: 5000,
  });
});

afterAll(async () => {
  await server.stop();
});

describe("live map polling", () => {
  it("shows an empty map for a view with no traffic", async () => {
    dash.state.bbox = { ...fx.empty_view };
    expect(await dash.poller.pollOnce()).toBe(true);
    expect(dash.map.markerCount).toBe(0);
    expect(dash.map.staleBannerVisible).toBe(false);
  });

  it("cycle 1 adds a marker per flight", async () => {
    dash.state.bbox = { ...fx.view };
    await dash.poller.pollOnce();
    expectMarkersMatch(dash, fx.cycles[0].response.flights);
  });

  it("cycle 2 adds, moves in place, and removes", async () => {
    const moved = dash.map.marker("UAL100")!;
    expect(dash.map.marker("JBU400")).toBeUndefined();
    await dash.poller.pollOnce();
    expectMarkersMatch(dash, fx.cycles[1].response.flights);
    // Same element object, new position: an update, not a replace.
    expect(dash.map.marker("UAL100")).toBe(moved);
    expect(Number(moved.dataset.lat)).toBe(41.0);
    // Out of the polled view now, so gone from the map.
    expect(dash.map.marker("DAL200")).toBeUndefined();
  });

  it("cycle 3 carries a status change through", async () => {
    await dash.poller.pollOnce();
    expectMarkersMatch(dash, fx.cycles[2].response.flights);
    expect(dash.map.marker("SWA300")!.dataset.status).toBe("landed");
  });

  it("an outage raises the banner and keeps the last data", async () => {
    server.down = true;
    await dash.poller.pollOnce();
    expect(dash.poller.stale).toBe(true);
    expect(dash.map.staleBannerVisible).toBe(true);
    expect(dash.map.staleBannerText).toMatch(/as of \d{2}:\d{2}:\d{2} UTC/);
    // The map still shows everything from the last good cycle.
    expectMarkersMatch(dash, fx.cycles[2].response.flights);
  });

  it("keeps polling and clears the banner on recovery", async () => {
    server.down = false;
    expect(await dash.poller.pollOnce()).toBe(true);
    expect(dash.poller.stale).toBe(false);
    expect(dash.map.staleBannerVisible).toBe(false);
    expectMarkersMatch(dash, fx.cycles[2].response.flights);
  });

  it("stayed on the recorded contract throughout", () => {
    expect(server.misses).toStrictEqual([]);
  });
});

describe("basemap", () => {
  it("uses the configured tile image, or an offline grid without one", () => {
    const { document } = makeDom();
    const withTile = new LiveMap(
      document.createElement("div"),
      { ...fx.view },
      "tiles/us.png",
    );
    expect(withTile.surface.style.backgroundImage).toContain("tiles/us.png");
    expect(withTile.surface.classList.contains("map-grid")).toBe(false);

    const offline = new LiveMap(document.createElement("div"), { ...fx.view });
    expect(offline.surface.style.backgroundImage).toBe("");
    expect(offline.surface.classList.contains("map-grid")).toBe(true);
  });
});
