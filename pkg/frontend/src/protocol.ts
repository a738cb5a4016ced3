/** Wire types for the design service (HTTP + WebSocket, JSON, version 1). */

export const PROTOCOL_VERSION = 1;

export interface SparsityWeights {
  w1: number;
  w2: number;
}

export interface SweepRequest {
  dataset: string;
  user: string;
  gestures: number[];
  candidate_electrodes: number[];
  max_electrodes: number;
  scheme: "MI" | "PI" | "RMSI";
  classifier: "RF" | "KNN" | "LR" | "NB";
  seed: number;
  sparsity?: SparsityWeights;
}

export interface ConfusionMatrixPayload {
  classes: number[];
  counts: number[][];
}

export interface SweepPointPayload {
  E: number;
  electrodes: number[];
  accuracy: number;
  sparsity_score: number;
  confusion_matrix?: ConfusionMatrixPayload;
}

export interface SweepResultPayload {
  v: number;
  ranking: { scheme: string; ordered: { electrode_id: number; score: number }[] };
  points: SweepPointPayload[];
  best_by_accuracy: number;
  best_by_score: number;
  chosen: SweepPointPayload;
}

export interface ProgressEvent {
  type: "progress";
  v: number;
  electrode_count: number;
  accuracy: number;
}

export interface ResultEvent {
  type: "result";
  v: number;
  result: SweepResultPayload;
  model_id: string;
}

export interface ErrorEvent {
  type: "error";
  v: number;
  field: string;
  message: string;
}

export interface CancelledEvent {
  type: "cancelled";
  v: number;
}

export type ServerEvent = ProgressEvent | ResultEvent | ErrorEvent | CancelledEvent;

export interface GestureSummary {
  id: number;
  name: string;
}

export interface ElectrodeSummary {
  id: number;
  x_mm: number;
  y_mm: number;
}

export interface DatasetSummary {
  name: string;
  channel_count: number;
  sampling_rate_hz: number;
  gestures: GestureSummary[];
  electrodes: ElectrodeSummary[];
  electrode_diameter_mm: number;
  users: string[];
  sessions_per_user: number;
}

export function parseServerEvent(raw: string): ServerEvent {
  const data = JSON.parse(raw) as { type?: unknown };
  if (
    typeof data !== "object" ||
    data === null ||
    !["progress", "result", "error", "cancelled"].includes(String(data.type))
  ) {
    throw new Error(`unrecognized server event: ${raw.slice(0, 120)}`);
  }
  return data as ServerEvent;
}
