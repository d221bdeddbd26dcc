export type Round = 1 | 2;

export type Verdict = "keep" | "missing_found" | "incorrect" | "redundant";

export interface CandidateFrame {
  shot_index: number;
  frame_index: number;
  image_ref: string;
}

export interface ReviewTask {
  schema_version: number;
  video_id: string;
  round: Round;
  reference_frame: string;
  candidate_frames: CandidateFrame[];
}

export interface DecisionPayload {
  video_id: string;
  round: Round;
  verdict: Verdict;
  reviewer: string;
  shot_index?: number;
}

export interface Progress {
  schema_version: number;
  videos_total: number;
  videos_remaining: number;
  decisions_logged: number;
  round1: { pending: number; decided: number };
  round2: { pending: number; decided: number };
  stripped_shots: number;
}

/** Verdicts legal in each review round; the UI never emits outside this set. */
export const ROUND_VERDICTS: Record<Round, readonly Verdict[]> = {
  1: ["keep", "missing_found"],
  2: ["keep", "incorrect", "redundant"],
};

export function isVerdictLegal(verdict: Verdict, round: Round): boolean {
  return ROUND_VERDICTS[round].includes(verdict);
}
