/**
 * Bounded admission control: up to maxActive callers run at once, up to
 * queueDepth more wait in FIFO order, and anything beyond that is refused
 * immediately. Callers must pair every successful enter() with exactly
 * one leave().
 */
export class BoundedQueue {
  private active = 0;
  private readonly waiting: Array<() => void> = [];

  constructor(
    readonly maxActive: number,
    readonly queueDepth: number,
  ) {}

  /** Resolves true when admitted; resolves false when the queue is full. */
  enter(): Promise<boolean> {
    if (this.active < this.maxActive) {
      this.active += 1;
      return Promise.resolve(true);
    }
    if (this.waiting.length >= this.queueDepth) {
      return Promise.resolve(false);
    }
    return new Promise((resolve) => {
      this.waiting.push(() => resolve(true));
    });
  }

  leave(): void {
    const next = this.waiting.shift();
    if (next) {
      // The slot transfers to the woken waiter; active stays unchanged.
      next();
    } else {
      this.active = Math.max(0, this.active - 1);
    }
  }

  stats(): { active: number; waiting: number } {
    return { active: this.active, waiting: this.waiting.length };
  }
}
