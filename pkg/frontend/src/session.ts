import { ApiClient, ApiError } from "./api.js";
import { buildBatchView, BatchView } from "./batchView.js";
import { buildCurveView, CurveView } from "./curveView.js";
import { LabelBuffer } from "./labelBuffer.js";
import { BatchPayload, Label, RunPayload } from "./types.js";

export interface SessionState {
  run: RunPayload | null;
  batch: BatchView | null;
  curve: CurveView | null;
  /** Banner message after a failed submit; buffered labels are kept. */
  error: string | null;
}

/**
 * Annotator session: the only state beyond the server is the
 * unsubmitted label buffer, so refresh() after a reload reconstructs
 * everything else from /api alone.
 */
export class AnnotatorSession {
  readonly buffer = new LabelBuffer();
  state: SessionState = { run: null, batch: null, curve: null, error: null };
  private lastBatch: BatchPayload | null = null;

  constructor(private readonly api: ApiClient) {}

  async refresh(): Promise<SessionState> {
    const [run, batch, curve] = await Promise.all([
      this.api.getRun(),
      this.api.getBatch(),
      this.api.getCurve(),
    ]);
    this.lastBatch = batch;
    this.state = {
      run,
      batch: buildBatchView(batch, this.buffer),
      curve: buildCurveView(curve),
      error: null,
    };
    return this.state;
  }

  decide(taskId: string, label: Label): void {
    this.buffer.decide(taskId, label);
    this.rebuildBatchView();
  }

  undo(taskId: string): void {
    this.buffer.undo(taskId);
    this.rebuildBatchView();
  }

  /**
   * Post the buffered decisions.  On 200 the buffer is marked submitted
   * and the whole view refreshes (the server may have retrained and
   * issued a new batch); on failure every decision stays buffered and
   * the error lands in the state banner.
   */
  async submit(): Promise<SessionState> {
    const payload = this.buffer.toPayload();
    if (payload.length === 0) {
      return this.state;
    }
    try {
      await this.api.postLabels(payload);
      this.buffer.markSubmitted();
      return await this.refresh();
    } catch (err) {
      this.buffer.keepAfterFailure();
      const message =
        err instanceof ApiError ? `submit rejected (${err.status}): ${err.message}`
          : "network failure — labels kept, retry";
      this.state = { ...this.state, error: message };
      return this.state;
    }
  }

  private rebuildBatchView(): void {
    if (this.lastBatch) {
      this.state = {
        ...this.state,
        batch: buildBatchView(this.lastBatch, this.buffer),
      };
    }
  }
}

/** Keyboard shortcuts for the card under the cursor. */
export const KEYMAP: Record<string, "match" | "non-match" | "skip" | "undo"> = {
  m: "match",
  n: "non-match",
  s: "skip",
  u: "undo",
};
