/**
 * Live flight layer. One marker per flight_icao, moved in place on update;
 * flights absent from the latest poll are removed. A geohash heat layer sits
 * under the markers, and a staleness banner sits over everything when polls
 * start failing.
 *
 * The basemap is a single static image when a tile URL is configured and a
 * plain coordinate grid otherwise, so nothing here ever touches the network.
 */

import { decodeBounds } from "./geohash";
import type { Bucket, GeoBounds, LiveFlight } from "./types";

export class LiveMap {
  readonly surface: HTMLElement;
  private readonly heatLayer: HTMLElement;
  private readonly markerLayer: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly markers = new Map<string, HTMLElement>();

  /** Fired when the user drills into a heat cell. */
  onCellClick?: (cell: string) => void;

  constructor(
    private readonly host: HTMLElement,
    public viewport: GeoBounds,
    tileUrl = "",
  ) {
    const doc = host.ownerDocument;
    host.classList.add("livemap");

    this.surface = doc.createElement("div");
    this.surface.className = "map-surface";
    if (tileUrl) {
      this.surface.style.backgroundImage = `url(${tileUrl})`;
      this.surface.style.backgroundSize = "100% 100%";
    } else {
      this.surface.classList.add("map-grid");
    }

    this.heatLayer = doc.createElement("div");
    this.heatLayer.className = "heat-layer";
    this.markerLayer = doc.createElement("div");
    this.markerLayer.className = "marker-layer";
    this.banner = doc.createElement("div");
    this.banner.className = "stale-banner";
    this.banner.hidden = true;

    this.surface.appendChild(this.heatLayer);
    this.surface.appendChild(this.markerLayer);
    host.appendChild(this.surface);
    host.appendChild(this.banner);
  }

  get markerCount(): number {
    return this.markers.size;
  }

  marker(flightIcao: string): HTMLElement | undefined {
    return this.markers.get(flightIcao);
  }

  /** Percent offsets of a point within the viewport. */
  private project(lat: number, lng: number): { x: number; y: number } {
    const v = this.viewport;
    const x = ((lng - v.tl_lng) / (v.br_lng - v.tl_lng)) * 100;
    const y = ((v.tl_lat - lat) / (v.tl_lat - v.br_lat)) * 100;
    return { x, y };
  }

  updateFlights(flights: LiveFlight[]): void {
    const doc = this.host.ownerDocument;
    const seen = new Set<string>();
    for (const flight of flights) {
      seen.add(flight.flight_icao);
      let el = this.markers.get(flight.flight_icao);
      if (!el) {
        el = doc.createElement("div");
        el.className = "flight-marker";
        el.dataset.flight = flight.flight_icao;
        this.markers.set(flight.flight_icao, el);
        this.markerLayer.appendChild(el);
      }
      const { x, y } = this.project(flight.position.lat, flight.position.lng);
      el.style.left = `${x}%`;
      el.style.top = `${y}%`;
      el.style.transform = `translate(-50%, -50%) rotate(${flight.dir}deg)`;
      el.dataset.status = flight.status;
      el.dataset.lat = String(flight.position.lat);
      el.dataset.lng = String(flight.position.lng);
      el.dataset.updated = String(flight.updated);
      el.title = `${flight.flight_icao} ${flight.status} ${flight.alt}m ${flight.speed}km/h`;
    }
    for (const [id, el] of this.markers) {
      if (!seen.has(id)) {
        el.remove();
        this.markers.delete(id);
      }
    }
  }

  updateHeat(buckets: Bucket[]): void {
    const doc = this.host.ownerDocument;
    this.heatLayer.textContent = "";
    if (buckets.length === 0) {
      return;
    }
    let max = 0;
    for (const b of buckets) {
      if (b.doc_count > max) max = b.doc_count;
    }
    const v = this.viewport;
    for (const b of buckets) {
      const cell = String(b.key);
      const bounds = decodeBounds(cell);
      // Clip to the viewport; cells fully outside it are not drawn.
      const latLo = Math.max(bounds.latLo, v.br_lat);
      const latHi = Math.min(bounds.latHi, v.tl_lat);
      const lngLo = Math.max(bounds.lngLo, v.tl_lng);
      const lngHi = Math.min(bounds.lngHi, v.br_lng);
      if (latLo >= latHi || lngLo >= lngHi) {
        continue;
      }
      const tl = this.project(latHi, lngLo);
      const br = this.project(latLo, lngHi);
      const el = doc.createElement("div");
      el.className = "heat-cell";
      el.style.left = `${tl.x}%`;
      el.style.top = `${tl.y}%`;
      el.style.width = `${br.x - tl.x}%`;
      el.style.height = `${br.y - tl.y}%`;
      el.style.opacity = String(0.15 + 0.6 * (b.doc_count / max));
      el.dataset.cell = cell;
      el.dataset.count = String(b.doc_count);
      el.title = `${cell}: ${b.doc_count}`;
      el.addEventListener("click", () => {
        this.onCellClick?.(cell);
      });
      this.heatLayer.appendChild(el);
    }
  }

  /**
   * Null hides the banner; a timestamp (epoch ms) shows it with the last
   * time a poll succeeded, or a placeholder if none ever has.
   */
  setStale(lastSuccessMs: number | null): void {
    if (lastSuccessMs === null) {
      this.banner.hidden = true;
      this.banner.textContent = "";
      return;
    }
    const when =
      lastSuccessMs > 0
        ? new Date(lastSuccessMs).toISOString().slice(11, 19) + " UTC"
        : "never";
    this.banner.textContent = `Connection lost, showing data as of ${when}. Retrying.`;
    this.banner.hidden = false;
  }

  get staleBannerVisible(): boolean {
    return !this.banner.hidden;
  }

  get staleBannerText(): string {
    return this.banner.textContent ?? "";
  }
}
