import { Label, LabelItem } from "./types.js";

/**
 * Client-side decision buffer.
 *
 * Holds at most one decision per task (relabelling overwrites, undo
 * removes) and remembers every task id that was already sent, so a task
 * can never be submitted twice from this session.  The server's 409 is
 * the backstop; this buffer makes the duplicate impossible client-side.
 */
export class LabelBuffer {
  private decisions = new Map<string, Label>();
  private submitted = new Set<string>();

  decide(taskId: string, label: Label): void {
    if (this.submitted.has(taskId)) {
      return; // duplicate submission suppressed
    }
    this.decisions.set(taskId, label);
  }

  undo(taskId: string): void {
    this.decisions.delete(taskId);
  }

  decisionFor(taskId: string): Label | undefined {
    return this.decisions.get(taskId);
  }

  isSubmitted(taskId: string): boolean {
    return this.submitted.has(taskId);
  }

  get size(): number {
    return this.decisions.size;
  }

  /** Payload for POST /api/labels, in decision insertion order. */
  toPayload(): LabelItem[] {
    return Array.from(this.decisions, ([task_id, label]) => ({ task_id, label }));
  }

  /** Mark the buffered decisions as sent and clear the buffer. */
  markSubmitted(): void {
    for (const taskId of this.decisions.keys()) {
      this.submitted.add(taskId);
    }
    this.decisions.clear();
  }

  /** Roll back after a rejected POST: decisions stay buffered. */
  keepAfterFailure(): void {
    // nothing to do — decisions are only cleared on markSubmitted();
    // the method exists to make the control flow explicit at call sites
  }
}
