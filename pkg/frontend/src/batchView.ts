import { LabelBuffer } from "./labelBuffer.js";
import { BatchPayload } from "./types.js";

export type CardDecision = "match" | "non-match" | "pending";

export interface PairCard {
  taskId: string;
  nameA: string;
  nameB: string;
  uncertainty: number;
  decision: CardDecision;
}

export interface BatchView {
  iteration: number;
  cards: PairCard[];
  /** Tasks still without a buffered decision (skips stay pending). */
  remaining: number;
  readyToSubmit: boolean;
}

/**
 * Pure view model for the batch screen.
 *
 * Card order is exactly the /api/batch task order — the server already
 * sorts by uncertainty, and the client never re-sorts.  A skipped card
 * simply keeps decision "pending"; the batch is submittable only once
 * every card has a decision, because the loop cannot advance on a
 * partial batch.
 */
export function buildBatchView(batch: BatchPayload, buffer: LabelBuffer): BatchView {
  const cards: PairCard[] = batch.tasks.map((task) => {
    const label = buffer.decisionFor(task.task_id);
    const decision: CardDecision =
      label === undefined ? "pending" : label === 1 ? "match" : "non-match";
    return {
      taskId: task.task_id,
      nameA: task.name_a,
      nameB: task.name_b,
      uncertainty: task.uncertainty,
      decision,
    };
  });
  const remaining = cards.filter((c) => c.decision === "pending").length;
  return {
    iteration: batch.iteration,
    cards,
    remaining,
    readyToSubmit: cards.length > 0 && remaining === 0,
  };
}
