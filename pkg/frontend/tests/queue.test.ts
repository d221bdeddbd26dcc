import { describe, expect, it } from "vitest";

import { OfflineQueue } from "../src/queue.js";
import type { DecisionPayload } from "../src/types.js";

function decision(videoId: string): DecisionPayload {
  return { video_id: videoId, round: 1, verdict: "keep", reviewer: "t" };
}

describe("offline queue", () => {
  it("holds decisions up to its capacity and then refuses", () => {
    const queue = new OfflineQueue(3);
    expect(queue.push(decision("a"))).toBe(true);
    expect(queue.push(decision("b"))).toBe(true);
    expect(queue.push(decision("c"))).toBe(true);
    expect(queue.isFull).toBe(true);
    expect(queue.push(decision("d"))).toBe(false);
    expect(queue.size).toBe(3);
  });

  it("flushes in order and counts conflicts as delivered", async () => {
    const queue = new OfflineQueue();
    queue.push(decision("a"));
    queue.push(decision("b"));
    const sent: string[] = [];
    const delivered = await queue.flush(async (d) => {
      sent.push(d.video_id);
      return d.video_id === "a" ? "conflict" : "accepted";
    });
    expect(delivered).toBe(2);
    expect(sent).toEqual(["a", "b"]);
    expect(queue.size).toBe(0);
  });

  it("stops flushing at the first network failure and keeps the rest", async () => {
    const queue = new OfflineQueue();
    queue.push(decision("a"));
    queue.push(decision("b"));
    queue.push(decision("c"));
    let calls = 0;
    const delivered = await queue.flush(async () => {
      calls += 1;
      if (calls === 2) throw new Error("offline");
      return "accepted";
    });
    expect(delivered).toBe(1);
    expect(queue.size).toBe(2);
    expect(queue.peekAll()[0]!.video_id).toBe("b");
  });
});
