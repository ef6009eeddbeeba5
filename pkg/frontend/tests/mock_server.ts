/**
 * Replay server for recorded fixtures. Incoming requests are matched by
 * method, path, normalized query parameters, and (for POST) the parsed JSON
 * body. A request the recordings never saw gets a 404 and lands in `misses`,
 * which contract tests assert stays empty: the dashboard must not invent
 * endpoints or body shapes.
 *
 * Repeated identical requests replay their recordings in order, and the last
 * one sticks. That is how three polls of the same URL can show a moving
 * picture. Setting `down` kills connections at the socket to simulate an
 * outage.
 */

import http from "node:http";
import type { AddressInfo } from "node:net";

export interface Exchange {
  method: "GET" | "POST";
  path: string;
  /** bbox as four numbers; anything else compared as a string. */
  params?: Record<string, string | number[]>;
  body?: unknown;
  status?: number;
  response: unknown;
}

/** JSON with object keys sorted, for order-insensitive body comparison. */
function canonical(value: unknown): string {
  if (Array.isArray(value)) {
    return `[${value.map(canonical).join(",")}]`;
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.keys(value as Record<string, unknown>)
      .sort()
      .map((k) => `${JSON.stringify(k)}:${canonical((value as Record<string, unknown>)[k])}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

function paramsKey(params: URLSearchParams): string {
  const parts: string[] = [];
  for (const name of [...new Set(params.keys())].sort()) {
    const raw = params.get(name) ?? "";
    if (name === "bbox") {
      parts.push(`bbox=${raw.split(",").map((n) => String(Number(n))).join(",")}`);
    } else {
      parts.push(`${name}=${raw}`);
    }
  }
  return parts.join("&");
}

function exchangeKey(ex: Exchange): string {
  const params = new URLSearchParams();
  for (const [name, value] of Object.entries(ex.params ?? {})) {
    params.set(name, Array.isArray(value) ? value.join(",") : value);
  }
  const body = ex.body === undefined ? "" : canonical(ex.body);
  return `${ex.method} ${ex.path}?${paramsKey(params)} ${body}`;
}

export class MockServer {
  private readonly server: http.Server;
  private readonly queues = new Map<string, Exchange[]>();
  readonly matched: string[] = [];
  readonly misses: string[] = [];
  down = false;

  constructor(exchanges: Exchange[] = []) {
    for (const ex of exchanges) {
      this.add(ex);
    }
    this.server = http.createServer((req, res) => this.handle(req, res));
  }

  add(ex: Exchange): void {
    const key = exchangeKey(ex);
    const queue = this.queues.get(key);
    if (queue) {
      queue.push(ex);
    } else {
      this.queues.set(key, [ex]);
    }
  }

  private handle(req: http.IncomingMessage, res: http.ServerResponse): void {
    if (this.down) {
      req.socket.destroy();
      return;
    }
    const chunks: Buffer[] = [];
    req.on("data", (c: Buffer) => chunks.push(c));
    req.on("end", () => {
      const url = new URL(req.url ?? "/", "http://mock");
      let bodyPart = "";
      if (req.method === "POST") {
        try {
          bodyPart = canonical(JSON.parse(Buffer.concat(chunks).toString("utf-8")));
        } catch {
          bodyPart = "<unparseable>";
        }
      }
      const key = `${req.method} ${url.pathname}?${paramsKey(url.searchParams)} ${bodyPart}`;
      const queue = this.queues.get(key);
      if (!queue || queue.length === 0) {
        this.misses.push(key);
        res.writeHead(404, { "Content-Type": "application/json" });
        res.end(JSON.stringify({
          error: { code: "not_found", message: "no recorded exchange" },
        }));
        return;
      }
      this.matched.push(key);
      const ex = queue.length > 1 ? queue.shift()! : queue[0];
      const payload = JSON.stringify(ex.response);
      res.writeHead(ex.status ?? 200, {
        "Content-Type": "application/json; charset=utf-8",
        "Content-Length": Buffer.byteLength(payload),
      });
      res.end(payload);
    });
  }

  async start(): Promise<void> {
    await new Promise<void>((resolve) => {
      this.server.listen(0, "127.0.0.1", resolve);
    });
  }

  get url(): string {
    const addr = this.server.address() as AddressInfo;
    return `http://127.0.0.1:${addr.port}`;
  }

  async stop(): Promise<void> {
    // Pooled keep-alive sockets would otherwise hold close() open.
    this.server.closeAllConnections();
    await new Promise<void>((resolve, reject) => {
      this.server.close((err) => (err ? reject(err) : resolve()));
    });
  }
}
