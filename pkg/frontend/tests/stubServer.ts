import { FetchLike } from "../src/api.js";
import { BatchPayload, CurvePayload, LabelItem, RunPayload } from "../src/types.js";

/**
 * In-memory stand-in for the labelling service, mirroring its observable
 * contract: tasks issued per iteration, 409 on unknown/duplicate labels,
 * 400 on malformed bodies, batch advance once every task is labelled.
 */
export class StubServer {
  received: LabelItem[][] = [];
  labelled = new Set<string>();
  iteration = 1;

  constructor(
    public batches: BatchPayload[],
    public curve: CurvePayload,
    public run: RunPayload
  ) {}

  private currentBatch(): BatchPayload {
    return this.batches[this.iteration - 1] ?? {
      schema_version: 1,
      iteration: this.iteration,
      remaining: 0,
      tasks: [],
    };
  }

  fetch: FetchLike = async (url, init) => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    if (path === "/api/run") return ok(this.run);
    if (path === "/api/curve") return ok(this.curve);
    if (path === "/api/batch") {
      const batch = this.currentBatch();
      const open = batch.tasks.filter((t) => !this.labelled.has(t.task_id));
      return ok({ ...batch, tasks: open, remaining: open.length });
    }
    if (path === "/api/labels" && init?.method === "POST") {
      let body: { labels?: LabelItem[] };
      try {
        body = JSON.parse(init.body ?? "");
      } catch {
        return error(400, "malformed request body");
      }
      if (!Array.isArray(body.labels)) return error(400, "malformed request body");
      const ids = new Set<string>();
      const known = new Set(this.currentBatch().tasks.map((t) => t.task_id));
      for (const item of body.labels) {
        if (ids.has(item.task_id)) return error(409, `duplicate ${item.task_id}`);
        ids.add(item.task_id);
        if (!known.has(item.task_id)) return error(409, `unknown ${item.task_id}`);
        if (this.labelled.has(item.task_id)) return error(409, `already labelled ${item.task_id}`);
      }
      this.received.push(body.labels);
      for (const item of body.labels) this.labelled.add(item.task_id);
      if (this.currentBatch().tasks.every((t) => this.labelled.has(t.task_id))) {
        this.iteration += 1;
      }
      return ok(this.run);
    }
    return error(404, `no route ${path}`);
  };
}

function ok(payload: unknown) {
  return { status: 200, json: async () => payload };
}

function error(status: number, message: string) {
  return { status, json: async () => ({ error: message }) };
}

export function makeBatch(iteration: number, n: number): BatchPayload {
  const tasks = Array.from({ length: n }, (_, k) => ({
    task_id: `${iteration}-${k}`,
    name_a: `ACME ${k} SPA`,
    name_b: `ACME ${k} S.P.A.`,
    uncertainty: 0.5 - k * 0.01,
  }));
  return { schema_version: 1, iteration, remaining: n, tasks };
}

export function makeCurve(steps: number): CurvePayload {
  return {
    schema_version: 1,
    test_names: ["holdout"],
    steps: Array.from({ length: steps }, (_, k) => ({
      step: k,
      n_labelled: 100 * 2 ** k,
      ba_pre: k === 0 ? null : 0.7 + 0.01 * k,
      ba_post: k === 0 ? null : 0.72 + 0.01 * k,
      ba_pool: 0.75 + 0.01 * k,
      ba_tests: { holdout: 0.74 + 0.01 * k },
    })),
  };
}

export function makeRun(): RunPayload {
  return {
    schema_version: 1,
    status: "AwaitingLabels",
    iteration: 0,
    n_labelled: 100,
    pool_size: 900,
    remaining_tasks: 3,
    total_iterations: 3,
    steps_recorded: 1,
  };
}
