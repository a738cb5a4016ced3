/** Client-side designer session: one state machine per tab, all transitions
 * serialized through `onEvent`. Progress may arrive in out-of-order bursts;
 * the rendered curve is always strictly ascending in electrode count because
 * points are keyed by E and read back sorted. */

import type {
  ServerEvent,
  SweepRequest,
  SweepResultPayload,
} from "./protocol.js";

export type SessionState = "idle" | "running" | "done" | "error";

export interface CurvePoint {
  electrodeCount: number;
  accuracy: number;
}

export interface HistoryEntry {
  request: SweepRequest;
  result: SweepResultPayload;
  modelId: string;
}

export interface SessionError {
  field: string;
  message: string;
}

export class DesignerSession {
  state: SessionState = "idle";
  lastResult: HistoryEntry | null = null;
  lastError: SessionError | null = null;
  readonly history: HistoryEntry[] = [];

  private progress = new Map<number, number>();
  private activeRequest: SweepRequest | null = null;

  /** The UI disables "run" whenever this is false. */
  get canRun(): boolean {
    return this.state !== "running";
  }

  /** Live sparsity curve, strictly ascending in E regardless of the order
   * progress events arrived in. */
  curve(): CurvePoint[] {
    return [...this.progress.entries()]
      .sort(([a], [b]) => a - b)
      .map(([electrodeCount, accuracy]) => ({ electrodeCount, accuracy }));
  }

  /** The layout to highlight on the map: always the last terminal result. */
  chosenLayout(): number[] {
    return this.lastResult ? [...this.lastResult.result.chosen.electrodes] : [];
  }

  start(request: SweepRequest): void {
    if (!this.canRun) {
      throw new Error("a sweep is already in flight");
    }
    this.state = "running";
    this.lastError = null;
    this.progress = new Map();
    this.activeRequest = request;
  }

  onEvent(event: ServerEvent): void {
    switch (event.type) {
      case "progress":
        if (this.state === "running") {
          this.progress.set(event.electrode_count, event.accuracy);
        }
        return;
      case "result": {
        if (this.state !== "running" || this.activeRequest === null) return;
        const entry: HistoryEntry = {
          request: this.activeRequest,
          result: event.result,
          modelId: event.model_id,
        };
        this.lastResult = entry;
        this.history.push(entry);
        this.state = "done";
        this.activeRequest = null;
        return;
      }
      case "error":
        this.lastError = { field: event.field, message: event.message };
        if (this.state === "running") {
          this.state = "error";
          this.activeRequest = null;
        }
        return;
      case "cancelled":
        // back to idle; the previous terminal result stays intact
        if (this.state === "running") {
          this.state = "idle";
          this.progress = new Map();
          this.activeRequest = null;
        }
        return;
    }
  }
}
