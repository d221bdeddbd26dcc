import type { ReviewApiClient } from "./api.js";
import { OfflineQueue, DEFAULT_QUEUE_CAPACITY } from "./queue.js";
import { verdictForKey } from "./shortcuts.js";
import type { CandidateFrame, DecisionPayload, ReviewTask, Round, Verdict } from "./types.js";
import { ROUND_VERDICTS, isVerdictLegal } from "./types.js";

export const PAGE_SIZE = 4;

export type SubmitOutcome =
  | "accepted"
  | "conflict"
  | "queued"
  | "blocked"
  | "illegal"
  | "busy";

export interface UiTaskView {
  round: Round;
  task: ReviewTask | null;
  done: boolean;
  referenceImage: string | null;
  page: number;
  pageCount: number;
  visibleCandidates: CandidateFrame[];
  selectedShot: number | null;
  legalVerdicts: readonly Verdict[];
  queuedCount: number;
  blocked: boolean;
  note: string | null;
}

/** Task flow for the verification UI, independent of the DOM.
 *
 * One submission is in flight at a time. A verdict is only ever sent when
 * it is legal for the active round (and, for redundant, a shot is
 * selected); offline verdicts go to the bounded queue and are retried.
 */
export class ReviewController {
  private round: Round = 1;
  private task: ReviewTask | null = null;
  private done = false;
  private page = 0;
  private selectedShot: number | null = null;
  private note: string | null = null;
  private blocked = false;
  private busy = false;
  private readonly queue: OfflineQueue;

  constructor(
    private readonly api: ReviewApiClient,
    private readonly reviewer: string,
    queueCapacity: number = DEFAULT_QUEUE_CAPACITY,
  ) {
    this.queue = new OfflineQueue(queueCapacity);
  }

  view(): UiTaskView {
    const candidates = this.task?.candidate_frames ?? [];
    const pageCount = Math.max(1, Math.ceil(candidates.length / PAGE_SIZE));
    return {
      round: this.round,
      task: this.task,
      done: this.done,
      referenceImage: this.task ? this.api.resolve(this.task.reference_frame) : null,
      page: this.page,
      pageCount,
      visibleCandidates: candidates.slice(
        this.page * PAGE_SIZE,
        (this.page + 1) * PAGE_SIZE,
      ),
      selectedShot: this.selectedShot,
      legalVerdicts: ROUND_VERDICTS[this.round],
      queuedCount: this.queue.size,
      blocked: this.blocked,
      note: this.note,
    };
  }

  async start(round: Round): Promise<void> {
    this.round = round;
    await this.refresh();
  }

  async setRound(round: Round): Promise<void> {
    if (round !== this.round) {
      await this.start(round);
    }
  }

  private async refresh(): Promise<void> {
    this.selectedShot = null;
    this.page = 0;
    try {
      this.task = await this.api.nextTask(this.round, this.reviewer);
      this.done = this.task === null;
    } catch {
      this.note = "offline: could not fetch the next task";
    }
  }

  selectShot(shotIndex: number): void {
    const candidates = this.task?.candidate_frames ?? [];
    if (candidates.some((c) => c.shot_index === shotIndex)) {
      this.selectedShot = shotIndex;
    }
  }

  nextPage(): void {
    this.page = Math.min(this.page + 1, this.view().pageCount - 1);
  }

  prevPage(): void {
    this.page = Math.max(this.page - 1, 0);
  }

  /** Whether the submit control for this verdict should be enabled. */
  canSubmit(verdict: Verdict): boolean {
    if (this.task === null || this.busy || this.blocked) {
      return false;
    }
    if (!isVerdictLegal(verdict, this.round)) {
      return false;
    }
    if (verdict === "redundant" && this.selectedShot === null) {
      return false;
    }
    return true;
  }

  async submit(verdict: Verdict): Promise<SubmitOutcome> {
    if (this.busy) {
      return "busy";
    }
    if (this.blocked) {
      return "blocked";
    }
    if (!this.canSubmit(verdict) || this.task === null) {
      return "illegal";
    }
    const decision: DecisionPayload = {
      video_id: this.task.video_id,
      round: this.round,
      verdict,
      reviewer: this.reviewer,
    };
    if (verdict === "redundant") {
      decision.shot_index = this.selectedShot!;
    }
    this.busy = true;
    try {
      let outcome: SubmitOutcome;
      try {
        const result = await this.api.submitDecision(decision);
        this.note = result === "conflict" ? "already reviewed" : null;
        outcome = result;
      } catch {
        // network failure: hold the verdict locally, never drop it
        if (!this.queue.push(decision)) {
          this.blocked = true;
          return "blocked";
        }
        this.note = `offline: ${this.queue.size} decision(s) queued`;
        return "queued";
      }
      await this.refresh();
      return outcome;
    } finally {
      this.busy = false;
    }
  }

  /** Retry queued decisions; conflicts count as delivered. */
  async flushQueue(): Promise<number> {
    const delivered = await this.queue.flush((d) => this.api.submitDecision(d));
    if (!this.queue.isFull) {
      this.blocked = false;
    }
    if (delivered > 0) {
      this.note = null;
      await this.refresh();
    }
    return delivered;
  }

  /** Keyboard entry point: verdict keys, digit selection, paging. */
  async handleKey(key: string): Promise<SubmitOutcome | "ignored"> {
    const lower = key.toLowerCase();
    if (lower === "n") {
      this.nextPage();
      return "ignored";
    }
    if (lower === "p") {
      this.prevPage();
      return "ignored";
    }
    if (/^[1-4]$/.test(lower)) {
      const candidate = this.view().visibleCandidates[Number(lower) - 1];
      if (candidate) {
        this.selectShot(candidate.shot_index);
      }
      return "ignored";
    }
    const verdict = verdictForKey(lower, this.round);
    if (verdict === null || !this.canSubmit(verdict)) {
      return "ignored";
    }
    return this.submit(verdict);
  }
}
