import { describe, expect, it } from "vitest";

import { confusionHeatmap } from "../src/heatmap.js";

const confusion = {
  classes: [0, 1, 2],
  counts: [
    [5, 1, 0],
    [0, 6, 0],
    [2, 0, 4],
  ],
};

const names = new Map([
  [0, "fist"],
  [1, "pinch"],
  [2, "wave"],
]);

describe("confusion heatmap model", () => {
  it("labels rows and columns with gesture names in request order", () => {
    const model = confusionHeatmap(confusion, [2, 0, 1], names);
    expect(model.labels).toEqual(["wave", "fist", "pinch"]);
    // counts permuted consistently with the label order
    expect(model.counts).toEqual([
      [4, 2, 0],
      [0, 5, 1],
      [0, 0, 6],
    ]);
    expect(model.maxCount).toBe(6);
  });

  it("falls back to an id label when a name is missing", () => {
    const model = confusionHeatmap(confusion, [0, 1, 2], new Map([[0, "fist"]]));
    expect(model.labels).toEqual(["fist", "gesture 1", "gesture 2"]);
  });

  it("rejects gesture ids absent from the matrix", () => {
    expect(() => confusionHeatmap(confusion, [0, 9], names)).toThrow(/9/);
  });
});
