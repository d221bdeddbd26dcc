import type { Round, Verdict } from "./types.js";
import { isVerdictLegal } from "./types.js";

/** Keyboard shortcuts: K/M in round 1, K/I/R in round 2. */
const KEY_VERDICTS: Record<string, Verdict> = {
  k: "keep",
  m: "missing_found",
  i: "incorrect",
  r: "redundant",
};

export function verdictForKey(key: string, round: Round): Verdict | null {
  const verdict = KEY_VERDICTS[key.toLowerCase()];
  if (verdict === undefined || !isVerdictLegal(verdict, round)) {
    return null;
  }
  return verdict;
}
