/** Confusion-matrix heatmap model: rows/columns are exactly the selected
 * gestures in request order, labeled by gesture name. */

import type { ConfusionMatrixPayload } from "./protocol.js";

export interface HeatmapModel {
  /** Row/column labels, in the order gestures appeared in the request. */
  labels: string[];
  /** counts[i][j] = trials of labels[i] predicted as labels[j]. */
  counts: number[][];
  maxCount: number;
}

export function confusionHeatmap(
  confusion: ConfusionMatrixPayload,
  gestureOrder: number[],
  gestureNames: Map<number, string>,
): HeatmapModel {
  const index = new Map(confusion.classes.map((c, i) => [c, i]));
  const missing = gestureOrder.filter((g) => !index.has(g));
  if (missing.length > 0) {
    throw new Error(`confusion matrix lacks gesture ids: ${missing.join(", ")}`);
  }
  const counts = gestureOrder.map((row) =>
    gestureOrder.map((col) => confusion.counts[index.get(row)!][index.get(col)!]),
  );
  const labels = gestureOrder.map(
    (g) => gestureNames.get(g) ?? `gesture ${g}`,
  );
  const maxCount = Math.max(0, ...counts.flat());
  return { labels, counts, maxCount };
}
