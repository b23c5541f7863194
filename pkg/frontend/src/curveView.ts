import { CurvePayload } from "./types.js";

export interface CurvePoint {
  /** x: labelled-set size at that step (log x-axis in the chart). */
  x: number;
  /** y: balanced accuracy, or null where the step recorded none. */
  y: number | null;
}

export interface CurveSeries {
  name: string;
  points: CurvePoint[];
}

export interface CurveView {
  empty: boolean;
  xTicks: number[];
  series: CurveSeries[];
}

/**
 * Chart-ready view of /api/curve.
 *
 * Deliberately transformation-free: every y value is the payload value
 * verbatim (nulls included), and x is the payload's n_labelled, so the
 * chart source equals the API response.
 */
export function buildCurveView(curve: CurvePayload): CurveView {
  if (curve.steps.length === 0) {
    return { empty: true, xTicks: [], series: [] };
  }
  const xs = curve.steps.map((s) => s.n_labelled);
  const base: CurveSeries[] = [
    { name: "pre-train", points: curve.steps.map((s) => ({ x: s.n_labelled, y: s.ba_pre })) },
    { name: "post-train", points: curve.steps.map((s) => ({ x: s.n_labelled, y: s.ba_post })) },
    { name: "pool", points: curve.steps.map((s) => ({ x: s.n_labelled, y: s.ba_pool })) },
  ];
  const tests: CurveSeries[] = curve.test_names.map((name) => ({
    name: `test:${name}`,
    points: curve.steps.map((s) => ({ x: s.n_labelled, y: s.ba_tests[name] ?? null })),
  }));
  return { empty: false, xTicks: xs, series: base.concat(tests) };
}
