/** Exponential reconnect backoff: 500 ms doubling up to an 8 s cap. */

export const BACKOFF_INITIAL_MS = 500;
export const BACKOFF_CAP_MS = 8000;

export class Backoff {
  private current = BACKOFF_INITIAL_MS;

  /** Delay to wait before the next attempt; grows on each call. */
  next(): number {
    const delay = this.current;
    this.current = Math.min(this.current * 2, BACKOFF_CAP_MS);
    return delay;
  }

  /** Call after a successful connection. */
  reset(): void {
    this.current = BACKOFF_INITIAL_MS;
  }
}
