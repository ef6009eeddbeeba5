import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { Window } from "happy-dom";

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixture<T>(name: string): T {
  const raw = readFileSync(join(here, "fixtures", name), "utf-8");
  return JSON.parse(raw) as T;
}

/** Standalone DOM for tests that render panels without a browser. */
export function makeDom(): { window: Window; document: Document } {
  const window = new Window();
  return { window, document: window.document as unknown as Document };
}
