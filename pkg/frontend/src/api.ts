import type { DecisionPayload, Progress, ReviewTask, Round } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export type SubmitResult = "accepted" | "conflict";

/** Thin client for the review service HTTP API.
 *
 * Network failures surface as thrown errors (the caller queues and retries);
 * HTTP 409 is a normal outcome meaning "already reviewed".
 */
export class ReviewApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  resolve(path: string): string {
    return new URL(path, this.baseUrl).toString();
  }

  async nextTask(round: Round, reviewer: string): Promise<ReviewTask | null> {
    const url = this.resolve(`/rounds/${round}/next?reviewer=${encodeURIComponent(reviewer)}`);
    const response = await this.fetchFn(url);
    if (!response.ok) {
      throw new Error(`next task failed: HTTP ${response.status}`);
    }
    const body = (await response.json()) as { task: ReviewTask | null };
    return body.task;
  }

  async submitDecision(decision: DecisionPayload): Promise<SubmitResult> {
    const response = await this.fetchFn(this.resolve("/decisions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decision),
    });
    if (response.status === 409) {
      return "conflict";
    }
    if (!response.ok) {
      throw new Error(`decision rejected: HTTP ${response.status}`);
    }
    return "accepted";
  }

  async progress(): Promise<Progress> {
    const response = await this.fetchFn(this.resolve("/progress"));
    if (!response.ok) {
      throw new Error(`progress failed: HTTP ${response.status}`);
    }
    return (await response.json()) as Progress;
  }
}
