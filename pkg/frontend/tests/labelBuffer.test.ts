import { describe, expect, it } from "vitest";

import { LabelBuffer } from "../src/labelBuffer.js";

describe("LabelBuffer", () => {
  it("holds one decision per task, last write wins", () => {
    const buffer = new LabelBuffer();
    buffer.decide("1-0", 1);
    buffer.decide("1-0", 0);
    expect(buffer.size).toBe(1);
    expect(buffer.decisionFor("1-0")).toBe(0);
    expect(buffer.toPayload()).toEqual([{ task_id: "1-0", label: 0 }]);
  });

  it("undo before submit leaves no trace", () => {
    const buffer = new LabelBuffer();
    buffer.decide("1-0", 1);
    buffer.undo("1-0");
    expect(buffer.size).toBe(0);
    expect(buffer.decisionFor("1-0")).toBeUndefined();
  });

  it("suppresses re-labelling of already-submitted tasks", () => {
    const buffer = new LabelBuffer();
    buffer.decide("1-0", 1);
    buffer.markSubmitted();
    expect(buffer.isSubmitted("1-0")).toBe(true);
    buffer.decide("1-0", 0); // ignored
    expect(buffer.size).toBe(0);
    expect(buffer.toPayload()).toEqual([]);
  });

  it("keeps decisions across a failed submit", () => {
    const buffer = new LabelBuffer();
    buffer.decide("1-0", 1);
    buffer.decide("1-1", 0);
    buffer.keepAfterFailure();
    expect(buffer.toPayload()).toHaveLength(2);
  });
});
