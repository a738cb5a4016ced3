/** Test doubles: a scriptable stub server behind the SocketLike interface. */

import type { SocketLike } from "../src/client.js";
import type {
  ServerEvent,
  SweepRequest,
  SweepResultPayload,
} from "../src/protocol.js";

export class StubSocket implements SocketLike {
  onmessage: ((event: { data: string }) => void) | null = null;
  readonly sent: Record<string, unknown>[] = [];
  closed = false;

  send(data: string): void {
    this.sent.push(JSON.parse(data));
  }

  close(): void {
    this.closed = true;
  }

  /** Deliver a server event to the client as if it arrived on the wire. */
  emit(event: ServerEvent): void {
    this.onmessage?.({ data: JSON.stringify(event) });
  }

  lastSent(): Record<string, unknown> {
    if (this.sent.length === 0) throw new Error("nothing sent");
    return this.sent[this.sent.length - 1];
  }
}

export function progress(electrodeCount: number, accuracy: number): ServerEvent {
  return { type: "progress", v: 1, electrode_count: electrodeCount, accuracy };
}

export function makeRequest(overrides: Partial<SweepRequest> = {}): SweepRequest {
  return {
    dataset: "synthetic",
    user: "user1",
    gestures: [0, 1, 2, 3],
    candidate_electrodes: [],
    max_electrodes: 20,
    scheme: "MI",
    classifier: "RF",
    seed: 0,
    ...overrides,
  };
}

export function makeResult(chosenE: number, electrodes: number[]): SweepResultPayload {
  const chosen = {
    E: chosenE,
    electrodes,
    accuracy: 90.0,
    sparsity_score: 0.5 * (100 - 90.0) + 0.5 * chosenE,
    confusion_matrix: {
      classes: [0, 1, 2, 3],
      counts: [
        [8, 0, 0, 0],
        [0, 7, 1, 0],
        [0, 0, 8, 0],
        [1, 0, 0, 7],
      ],
    },
  };
  return {
    v: 1,
    ranking: {
      scheme: "MI",
      ordered: electrodes.map((id, i) => ({ electrode_id: id, score: 1 - i * 0.1 })),
    },
    points: [chosen],
    best_by_accuracy: chosenE,
    best_by_score: chosenE,
    chosen,
  };
}
