/**
 * Poll loop with coalescing. The page has event-loop concurrency only, but
 * a slow response can outlive the poll interval; when that happens the next
 * tick is skipped rather than stacking requests.
 *
 * Staleness is tracked here and rendered elsewhere: after any failure the
 * poller flags itself stale and keeps polling, so a banner can show the
 * last good time and clear itself on recovery.
 */

export interface PollerHooks<T> {
  onData: (data: T) => void;
  onError: (err: unknown) => void;
}

export class Poller<T> {
  private inFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  /** Epoch ms of the last successful poll, null before the first one. */
  lastSuccess: number | null = null;
  stale = false;

  constructor(
    private readonly fn: () => Promise<T>,
    private readonly hooks: PollerHooks<T>,
    private readonly now: () => number = Date.now,
  ) {}

  /** Runs one poll. Returns false when skipped because one is in flight. */
  async pollOnce(): Promise<boolean> {
    if (this.inFlight) {
      return false;
    }
    this.inFlight = true;
    try {
      const data = await this.fn();
      this.lastSuccess = this.now();
      this.stale = false;
      this.hooks.onData(data);
    } catch (err) {
      this.stale = true;
      this.hooks.onError(err);
    } finally {
      this.inFlight = false;
    }
    return true;
  }

  start(intervalMs: number): void {
    this.stop();
    this.timer = setInterval(() => {
      void this.pollOnce();
    }, intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
