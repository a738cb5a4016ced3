/** Thin WebSocket client: serializes requests onto the single streaming
 * connection and feeds every server event into the session state machine.
 * The socket is injected so tests can drive the protocol with a stub. */

import { PROTOCOL_VERSION, parseServerEvent } from "./protocol.js";
import type { SweepRequest } from "./protocol.js";
import { DesignerSession } from "./session.js";

/** The subset of the WebSocket surface the client needs. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
}

export class SweepClient {
  constructor(
    private readonly socket: SocketLike,
    readonly session: DesignerSession,
  ) {
    socket.onmessage = (event) => this.handleMessage(event.data);
  }

  /** Validates against the session state (throws while a sweep is in
   * flight), then sends the request over the wire. */
  runSweep(request: SweepRequest): void {
    this.session.start(request);
    this.socket.send(
      JSON.stringify({ type: "sweep", v: PROTOCOL_VERSION, ...request }),
    );
  }

  cancel(): void {
    this.socket.send(JSON.stringify({ type: "cancel", v: PROTOCOL_VERSION }));
  }

  close(): void {
    this.socket.close();
  }

  private handleMessage(raw: string): void {
    this.session.onEvent(parseServerEvent(raw));
  }
}
