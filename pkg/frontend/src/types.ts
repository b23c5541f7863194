/** Wire types for the labelling service; field names mirror the JSON exactly. */

export const SCHEMA_VERSION = 1;

export type RunStatus =
  | "AwaitingLabels"
  | "Training"
  | "Evaluating"
  | "Done"
  | "Aborted";

export interface RunPayload {
  schema_version: number;
  status: RunStatus;
  iteration: number;
  n_labelled: number;
  pool_size: number;
  remaining_tasks: number;
  total_iterations: number;
  steps_recorded: number;
}

export interface BatchTask {
  task_id: string;
  name_a: string;
  name_b: string;
  uncertainty: number;
}

export interface BatchPayload {
  schema_version: number;
  iteration: number;
  remaining: number;
  tasks: BatchTask[];
}

export interface CurveStep {
  step: number;
  n_labelled: number;
  ba_pre: number | null;
  ba_post: number | null;
  ba_pool: number | null;
  ba_tests: Record<string, number | null>;
}

export interface CurvePayload {
  schema_version: number;
  test_names: string[];
  steps: CurveStep[];
}

export type Label = 0 | 1;

export interface LabelItem {
  task_id: string;
  label: Label;
}
