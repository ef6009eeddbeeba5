// Panel renderers. Every displayed number comes straight from the response
// that fed it; geometry scales, values do not.

import type { Bucket } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderEmpty(host: HTMLElement, label: string): void {
  host.textContent = "";
  const el = host.ownerDocument.createElement("div");
  el.className = "panel-empty";
  el.textContent = label;
  host.appendChild(el);
}

export function renderPanelError(host: HTMLElement, message: string): void {
  host.textContent = "";
  const el = host.ownerDocument.createElement("div");
  el.className = "panel-error";
  el.textContent = `Panel failed: ${message}`;
  host.appendChild(el);
}

/** Date-histogram buckets as a line. Keys are epoch seconds, ascending. */
export function renderLineChart(host: HTMLElement, buckets: Bucket[]): void {
  host.textContent = "";
  if (buckets.length === 0) {
    renderEmpty(host, "No flights in this range");
    return;
  }
  const doc = host.ownerDocument;
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", "0 0 100 40");
  svg.setAttribute("preserveAspectRatio", "none");
  svg.setAttribute("class", "line-chart");

  const keys = buckets.map((b) => Number(b.key));
  const counts = buckets.map((b) => b.doc_count);
  const kLo = Math.min(...keys);
  const kHi = Math.max(...keys);
  const cHi = Math.max(...counts, 1);
  const xAt = (k: number) => (kHi === kLo ? 50 : ((k - kLo) / (kHi - kLo)) * 96 + 2);
  const yAt = (c: number) => 38 - (c / cHi) * 34;

  const line = doc.createElementNS(SVG_NS, "polyline");
  line.setAttribute(
    "points",
    buckets.map((b) => `${xAt(Number(b.key))},${yAt(b.doc_count)}`).join(" "),
  );
  line.setAttribute("class", "line-path");
  svg.appendChild(line);

  for (const b of buckets) {
    const dot = doc.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(xAt(Number(b.key))));
    dot.setAttribute("cy", String(yAt(b.doc_count)));
    dot.setAttribute("r", "0.8");
    dot.setAttribute("class", "line-dot");
    dot.setAttribute("data-key", String(b.key));
    dot.setAttribute("data-count", String(b.doc_count));
    const tip = doc.createElementNS(SVG_NS, "title");
    tip.textContent = `${b.key}: ${b.doc_count}`;
    dot.appendChild(tip);
    svg.appendChild(dot);
  }
  host.appendChild(svg);

  const caption = doc.createElement("div");
  caption.className = "chart-caption";
  caption.textContent = `${buckets.length} buckets, peak ${Math.max(...counts)}`;
  host.appendChild(caption);
}

/** Terms buckets as horizontal bars; clicking one drills down. */
export function renderBarChart(
  host: HTMLElement,
  buckets: Bucket[],
  onBarClick?: (key: string) => void,
): void {
  host.textContent = "";
  if (buckets.length === 0) {
    renderEmpty(host, "No matching flights");
    return;
  }
  const doc = host.ownerDocument;
  const max = Math.max(...buckets.map((b) => b.doc_count), 1);
  for (const b of buckets) {
    const row = doc.createElement("div");
    row.className = "bar-row";
    row.dataset.key = String(b.key);
    row.dataset.count = String(b.doc_count);

    const label = doc.createElement("span");
    label.className = "bar-label";
    label.textContent = String(b.key);

    const track = doc.createElement("span");
    track.className = "bar-track";
    const fill = doc.createElement("span");
    fill.className = "bar-fill";
    fill.style.width = `${(b.doc_count / max) * 100}%`;
    track.appendChild(fill);

    const value = doc.createElement("span");
    value.className = "bar-value";
    value.textContent = String(b.doc_count);

    row.appendChild(label);
    row.appendChild(track);
    row.appendChild(value);
    if (onBarClick) {
      row.addEventListener("click", () => onBarClick(String(b.key)));
    }
    host.appendChild(row);
  }
}

/**
 * Delay minutes by cause as a one-level treemap. Layout is slice-and-dice
 * by share; zero-minute causes are omitted rather than drawn flat.
 */
export function renderTreemap(
  host: HTMLElement,
  causeMinutes: Record<string, number>,
): void {
  host.textContent = "";
  const entries = Object.entries(causeMinutes).filter(([, v]) => v > 0);
  if (entries.length === 0) {
    renderEmpty(host, "No delay minutes recorded");
    return;
  }
  entries.sort((a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1));
  const total = entries.reduce((acc, [, v]) => acc + v, 0);
  const doc = host.ownerDocument;
  for (const [cause, minutes] of entries) {
    const leaf = doc.createElement("div");
    leaf.className = "tree-leaf";
    leaf.style.width = `${(minutes / total) * 100}%`;
    leaf.dataset.cause = cause;
    leaf.dataset.minutes = String(minutes);
    leaf.title = `${cause}: ${minutes} min`;

    const name = doc.createElement("span");
    name.className = "leaf-name";
    name.textContent = cause;
    const value = doc.createElement("span");
    value.className = "leaf-value";
    value.textContent = String(minutes);

    leaf.appendChild(name);
    leaf.appendChild(value);
    host.appendChild(leaf);
  }
}
