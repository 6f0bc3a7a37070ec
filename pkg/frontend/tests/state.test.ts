import { describe, expect, it } from "vitest";
import { clampValue, initialState, restoreState, serializeState } from "../src/state.js";

describe("EditorState URL round-trip", () => {
  it("serialize then restore is identity", () => {
    const state = {
      shapeId: "table-00003",
      sliders: [0.1, -0.25, 1.5, 0.0],
      transferTargets: ["table-00001", "table-00002"],
      settings: { showBoxes: false },
    };
    const restored = restoreState("#" + serializeState(state));
    expect(restored).toEqual(state);
  });

  it("restores null from junk", () => {
    expect(restoreState("#not-json")).toBeNull();
    expect(restoreState("")).toBeNull();
  });

  it("initial state has boxes on and nothing selected", () => {
    const s = initialState();
    expect(s.shapeId).toBeNull();
    expect(s.settings.showBoxes).toBe(true);
  });
});

describe("clampValue", () => {
  it("clamps scale sliders at their lower bound", () => {
    expect(clampValue(-0.5, 0)).toBe(0);
    expect(clampValue(0.7, 0)).toBe(0.7);
  });

  it("leaves unbounded translations alone", () => {
    expect(clampValue(-123.0, null)).toBe(-123.0);
  });
});
