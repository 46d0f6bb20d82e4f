/** Debounced, newest-wins render scheduling.
 *
 * Rules: control changes are coalesced for `debounceMs`; at most one
 * request is in flight; when a response lands it is dropped if any newer
 * request has been issued since (stale-response suppression); a change
 * that arrives mid-flight is sent as soon as the flight settles.
 */

export interface Timers {
  set(fn: () => void, ms: number): unknown;
  clear(handle: unknown): void;
}

const realTimers: Timers = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (handle) => clearTimeout(handle as Parameters<typeof clearTimeout>[0]),
};

export class RenderScheduler<S, R> {
  private seq = 0;
  private latest: { state: S; seq: number } | null = null;
  private inFlight = false;
  private sentSeq = -1;
  private timer: unknown = null;

  onResult: ((result: R, state: S, seq: number) => void) | null = null;
  onError: ((error: unknown, state: S, seq: number) => void) | null = null;
  /** Resolvers waiting for the scheduler to go fully idle. */
  private idleWaiters: (() => void)[] = [];

  constructor(
    private readonly send: (state: S) => Promise<R>,
    private readonly debounceMs = 150,
    private readonly timers: Timers = realTimers,
  ) {}

  /** Sequence number of the most recent request. */
  get latestSeq(): number {
    return this.seq;
  }

  request(state: S): number {
    this.seq += 1;
    this.latest = { state, seq: this.seq };
    if (this.timer !== null) this.timers.clear(this.timer);
    this.timer = this.timers.set(() => {
      this.timer = null;
      this.trySend();
    }, this.debounceMs);
    return this.seq;
  }

  private trySend(): void {
    if (this.inFlight || !this.latest || this.latest.seq === this.sentSeq) {
      this.settleIdle();
      return;
    }
    const req = this.latest;
    this.inFlight = true;
    this.sentSeq = req.seq;
    this.send(req.state).then(
      (result) => this.onSettled(req, result, null),
      (error) => this.onSettled(req, null, error),
    );
  }

  private onSettled(
    req: { state: S; seq: number },
    result: R | null,
    error: unknown,
  ): void {
    this.inFlight = false;
    const stale = req.seq !== this.seq; // a newer request was issued
    if (!stale) {
      if (error !== null) this.onError?.(error, req.state, req.seq);
      else this.onResult?.(result as R, req.state, req.seq);
    }
    this.trySend(); // flush anything that queued up mid-flight
  }

  private settleIdle(): void {
    if (!this.inFlight && this.timer === null) {
      const waiters = this.idleWaiters;
      this.idleWaiters = [];
      for (const resolve of waiters) resolve();
    }
  }

  /** Resolves once no request is pending, debouncing, or in flight. */
  idle(): Promise<void> {
    if (!this.inFlight && this.timer === null) return Promise.resolve();
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }
}
