/**
 * Build-time configuration. Override at bundle time with esbuild defines:
 *
 *   esbuild ... --define:__API_BASE__='"http://10.0.0.5:8080"' \
 *               --define:__TILE_URL__='"/tiles/base.png"'
 *
 * An empty tile URL keeps the offline fallback grid, which is also what the
 * tests rely on (no network fetches for map imagery).
 */

declare const __API_BASE__: string | undefined;
declare const __TILE_URL__: string | undefined;

export interface DashConfig {
  /** Query service origin, no trailing slash. */
  apiBase: string;
  /** Static basemap image for the viewport, or "" for the fallback grid. */
  tileUrl: string;
  /** Live poll period in milliseconds. */
  pollMs: number;
}

export const defaultConfig: DashConfig = {
  apiBase:
    typeof __API_BASE__ === "string" ? __API_BASE__ : "http://127.0.0.1:8080",
  tileUrl: typeof __TILE_URL__ === "string" ? __TILE_URL__ : "",
  pollMs: 5000,
};
