/**
 * Page wiring. One Dashboard instance owns the filter state, the live map
 * poller, and the chart panels. Any filter change, whether typed into the
 * rail or clicked into a chart, re-queries everything through the same path.
 */

import { ApiClient, listRequest, panelsRequest } from "./api";
import { renderBarChart, renderLineChart, renderPanelError, renderTreemap } from "./charts";
import { defaultConfig, type DashConfig } from "./config";
import { LiveMap } from "./livemap";
import { Poller } from "./poller";
import type {
  Bucket,
  FilterState,
  FlightStatus,
  GeoBounds,
  LiveResponse,
  SearchResponse,
} from "./types";

export { listRequest };

/** Continental-US default view, overridden as soon as the user pans. */
const HOME_VIEW: GeoBounds = {
  tl_lat: 50.0,
  tl_lng: -126.0,
  br_lat: 24.0,
  br_lng: -66.0,
};

export class Dashboard {
  state: FilterState = {};
  readonly client: ApiClient;
  readonly map: LiveMap;
  readonly poller: Poller<LiveResponse>;
  /** Settles when the most recent filter-triggered re-query is done. */
  pending: Promise<void> = Promise.resolve();
  private polling = false;

  private readonly panelLine: HTMLElement;
  private readonly panelBar: HTMLElement;
  private readonly panelTree: HTMLElement;
  private readonly delayHeadline: HTMLElement;
  private readonly metricsStrip: HTMLElement;
  private readonly pills: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly cfg: DashConfig = defaultConfig,
    client?: ApiClient,
  ) {
    this.client = client ?? new ApiClient(cfg.apiBase);
    const doc = root.ownerDocument;

    root.classList.add("dash");
    const rail = el(doc, "div", "filter-rail");
    const main = el(doc, "div", "dash-main");
    const mapHost = el(doc, "div", "panel panel-map");
    this.panelLine = el(doc, "div", "panel panel-line");
    this.panelBar = el(doc, "div", "panel panel-bar");
    this.panelTree = el(doc, "div", "panel panel-treemap");
    this.delayHeadline = el(doc, "div", "delay-headline");
    this.metricsStrip = el(doc, "div", "metrics-strip");
    this.pills = el(doc, "div", "filter-pills");

    rail.appendChild(this.buildControls(doc));
    rail.appendChild(this.pills);
    main.appendChild(mapHost);
    main.appendChild(this.panelLine);
    main.appendChild(this.panelBar);
    const treeWrap = el(doc, "div", "panel panel-delays");
    treeWrap.appendChild(this.delayHeadline);
    treeWrap.appendChild(this.panelTree);
    main.appendChild(treeWrap);
    root.appendChild(this.metricsStrip);
    root.appendChild(rail);
    root.appendChild(main);

    this.map = new LiveMap(mapHost, { ...HOME_VIEW }, cfg.tileUrl);
    this.map.onCellClick = (cell) => {
      this.applyFilter({ selected_state: cell });
    };

    this.poller = new Poller(() => this.client.flightsLive(this.liveParams()), {
      onData: (resp) => {
        this.map.updateFlights(resp.flights);
        this.map.setStale(null);
      },
      onError: () => {
        this.map.setStale(this.poller.lastSuccess ?? 0);
      },
    });
  }

  async start(): Promise<void> {
    await Promise.all([
      this.refreshPanels(),
      this.loadDelays(),
      this.refreshMetrics(),
    ]);
    this.polling = true;
    await this.poller.pollOnce();
    this.poller.start(this.cfg.pollMs);
  }

  stop(): void {
    this.polling = false;
    this.poller.stop();
  }

  private liveParams() {
    return {
      bbox: this.state.bbox ?? this.map.viewport,
      status: this.state.status,
      airline: this.state.airline,
    };
  }

  /** Merge a patch into the filter state and re-query every panel. */
  applyFilter(patch: Partial<FilterState>): void {
    for (const [key, value] of Object.entries(patch)) {
      if (value === undefined) {
        delete this.state[key as keyof FilterState];
      } else {
        (this.state as Record<string, unknown>)[key] = value;
      }
    }
    this.renderPills();
    this.requery();
  }

  clearFilters(): void {
    this.state = {};
    this.renderPills();
    this.requery();
  }

  /** Panels always re-query; the live layer only while polling is on. */
  private requery(): void {
    const jobs: Promise<unknown>[] = [this.refreshPanels()];
    if (this.polling) {
      jobs.push(this.poller.pollOnce());
    }
    this.pending = Promise.all(jobs).then(() => undefined);
  }

  /** One search drives the three aggregation panels. */
  async refreshPanels(): Promise<void> {
    let resp: SearchResponse;
    try {
      resp = await this.client.search(panelsRequest(this.state));
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      renderPanelError(this.panelLine, msg);
      renderPanelError(this.panelBar, msg);
      this.map.updateHeat([]);
      return;
    }
    renderOrError(this.panelLine, () =>
      renderLineChart(this.panelLine, buckets(resp, "per_minute")),
    );
    renderOrError(this.panelBar, () =>
      renderBarChart(this.panelBar, buckets(resp, "by_airline"), (key) => {
        this.applyFilter({ airline: key });
      }),
    );
    try {
      this.map.updateHeat(buckets(resp, "cells"));
    } catch {
      this.map.updateHeat([]);
    }
  }

  async loadDelays(): Promise<void> {
    try {
      const summary = await this.client.delaysSummary();
      this.delayHeadline.textContent = "";
      const doc = this.root.ownerDocument;
      for (const [field, text] of [
        ["dataset", summary.dataset],
        ["total_flights", String(summary.total_flights)],
        ["on_time_pct", `${summary.on_time_pct}% on time`],
        ["delayed_pct", `${summary.delayed_pct}% delayed`],
      ] as const) {
        const span = doc.createElement("span");
        span.dataset.field = field;
        span.textContent = text;
        this.delayHeadline.appendChild(span);
      }
      renderTreemap(this.panelTree, summary.cause_minutes);
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      renderPanelError(this.panelTree, msg);
    }
  }

  async refreshMetrics(): Promise<void> {
    try {
      const snapshot = await this.client.metrics();
      this.metricsStrip.textContent = "";
      const doc = this.root.ownerDocument;
      for (const name of Object.keys(snapshot).sort()) {
        const item = doc.createElement("span");
        item.className = "metric";
        item.dataset.metric = name;
        item.textContent = `${name} ${snapshot[name]}`;
        this.metricsStrip.appendChild(item);
      }
    } catch {
      this.metricsStrip.textContent = "metrics unavailable";
    }
  }

  private buildControls(doc: Document): HTMLElement {
    const box = el(doc, "div", "controls");

    const status = doc.createElement("select");
    status.id = "f-status";
    for (const value of ["", "scheduled", "en-route", "landed"]) {
      const opt = doc.createElement("option");
      opt.value = value;
      opt.textContent = value || "any status";
      status.appendChild(opt);
    }
    status.addEventListener("change", () => {
      this.applyFilter({
        status: (status.value || undefined) as FlightStatus | undefined,
      });
    });

    const airline = doc.createElement("input");
    airline.id = "f-airline";
    airline.placeholder = "airline ICAO";
    airline.addEventListener("change", () => {
      this.applyFilter({ airline: airline.value.trim() || undefined });
    });

    const from = doc.createElement("input");
    from.id = "f-from";
    from.type = "number";
    from.placeholder = "from (epoch s)";
    const to = doc.createElement("input");
    to.id = "f-to";
    to.type = "number";
    to.placeholder = "to (epoch s)";
    const applyRange = () => {
      const lo = Number(from.value);
      const hi = Number(to.value);
      // Bad ranges never leave the input layer.
      if (from.value !== "" && to.value !== "" && lo < hi) {
        this.applyFilter({ time_range: { from: lo, to: hi } });
      } else if (from.value === "" && to.value === "") {
        this.applyFilter({ time_range: undefined });
      }
    };
    from.addEventListener("change", applyRange);
    to.addEventListener("change", applyRange);

    const viewBox = doc.createElement("input");
    viewBox.id = "f-bbox";
    viewBox.type = "checkbox";
    viewBox.addEventListener("change", () => {
      this.applyFilter({
        bbox: viewBox.checked ? { ...this.map.viewport } : undefined,
      });
    });
    const viewLabel = doc.createElement("label");
    viewLabel.appendChild(viewBox);
    viewLabel.appendChild(doc.createTextNode(" limit to current view"));

    const clear = doc.createElement("button");
    clear.id = "f-clear";
    clear.textContent = "clear filters";
    clear.addEventListener("click", () => {
      status.value = "";
      airline.value = "";
      from.value = "";
      to.value = "";
      viewBox.checked = false;
      this.clearFilters();
    });

    box.appendChild(status);
    box.appendChild(airline);
    box.appendChild(from);
    box.appendChild(to);
    box.appendChild(viewLabel);
    box.appendChild(clear);
    return box;
  }

  /** Active filters as removable pills, one per set field. */
  private renderPills(): void {
    this.pills.textContent = "";
    const doc = this.root.ownerDocument;
    for (const [field, value] of Object.entries(this.state)) {
      const pill = doc.createElement("button");
      pill.className = "pill";
      pill.dataset.field = field;
      pill.textContent = `${field}: ${pillText(value)} ✕`;
      pill.addEventListener("click", () => {
        this.applyFilter({ [field]: undefined });
      });
      this.pills.appendChild(pill);
    }
  }
}

function el(doc: Document, tag: string, className: string): HTMLElement {
  const node = doc.createElement(tag);
  node.className = className;
  return node;
}

function pillText(value: unknown): string {
  if (typeof value === "object" && value !== null) {
    return Object.values(value as Record<string, unknown>).join(", ");
  }
  return String(value);
}

/** Pulls one named bucket list out of a search response or fails loudly. */
function buckets(resp: SearchResponse, name: string): Bucket[] {
  const agg = resp.aggregations?.[name];
  if (!agg || !Array.isArray(agg.buckets)) {
    throw new Error(`response has no ${name} buckets`);
  }
  for (const b of agg.buckets) {
    if (typeof b !== "object" || b === null || typeof b.doc_count !== "number") {
      throw new Error(`malformed bucket in ${name}`);
    }
  }
  return agg.buckets;
}

function renderOrError(host: HTMLElement, render: () => void): void {
  try {
    render();
  } catch (err) {
    renderPanelError(host, err instanceof Error ? err.message : String(err));
  }
}

const rootEl =
  typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootEl) {
  const dash = new Dashboard(rootEl);
  void dash.start();
}
