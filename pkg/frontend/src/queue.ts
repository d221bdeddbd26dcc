import type { DecisionPayload } from "./types.js";
import type { SubmitResult } from "./api.js";

export const DEFAULT_QUEUE_CAPACITY = 100;

/** Bounded FIFO of decisions awaiting delivery.
 *
 * A verdict is never dropped: if the queue is full the UI must block
 * instead of accepting more input. A "conflict" response counts as
 * delivered (the service already has an equivalent decision).
 */
export class OfflineQueue {
  private items: DecisionPayload[] = [];

  constructor(readonly capacity: number = DEFAULT_QUEUE_CAPACITY) {}

  get size(): number {
    return this.items.length;
  }

  get isFull(): boolean {
    return this.items.length >= this.capacity;
  }

  /** Enqueue a decision; false means the queue is full and the caller
   * must block rather than lose the verdict. */
  push(decision: DecisionPayload): boolean {
    if (this.isFull) {
      return false;
    }
    this.items.push(decision);
    return true;
  }

  peekAll(): readonly DecisionPayload[] {
    return this.items;
  }

  /** Deliver queued decisions in order, stopping on the first network
   * failure. Returns the number delivered. */
  async flush(send: (d: DecisionPayload) => Promise<SubmitResult>): Promise<number> {
    let delivered = 0;
    while (this.items.length > 0) {
      const head = this.items[0]!;
      try {
        await send(head);
      } catch {
        break; // still offline; keep the rest queued
      }
      this.items.shift();
      delivered += 1;
    }
    return delivered;
  }
}
