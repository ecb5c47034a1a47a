/** Concurrency primitives for the single-page client: polling with
 * coalescing, and per-sprint submission serialization. */

/** Runs a refresh function on an interval. Concurrent refresh requests are
 * coalesced: while one is in flight every caller shares its promise, so the
 * service sees at most one poll at a time. */
export class Poller {
  private inFlight: Promise<void> | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly refreshFn: () => Promise<void>,
    readonly intervalMs = 2000,
  ) {}

  refresh(): Promise<void> {
    if (this.inFlight) return this.inFlight;
    const run = this.refreshFn().finally(() => {
      this.inFlight = null;
    });
    this.inFlight = run;
    return run;
  }

  start(): void {
    if (this.timer) return;
    this.timer = setInterval(() => {
      void this.refresh().catch(() => undefined);
    }, this.intervalMs);
  }

  stop(): void {
    if (this.timer) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  get running(): boolean {
    return this.timer !== null;
  }
}

/** Serializes submissions per key (sprint id): jobs for the same sprint run
 * strictly in order, jobs for different sprints run independently. A failed
 * job rejects its own caller but does not poison the queue. */
export class SubmissionQueue {
  private readonly tails = new Map<string, Promise<unknown>>();

  enqueue<T>(key: string, job: () => Promise<T>): Promise<T> {
    const tail = this.tails.get(key) ?? Promise.resolve();
    const next = tail.then(
      () => job(),
      () => job(),
    );
    this.tails.set(
      key,
      next.then(
        () => undefined,
        () => undefined,
      ),
    );
    return next;
  }
}
