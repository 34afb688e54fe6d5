// Session view model: the single source of truth behind the panel.
//
// All simulation state changes go out as protocol messages; everything
// shown is reconstructable from the message log. `applied` always
// mirrors the last ack from the server; `pending` holds slider edits
// that have not been acked yet and is never clobbered by snapshots.

import {
  Ack, ErrorReply, LdsiWireParams, Snapshot, TrackerWireParams,
  decodeServerMessage,
} from "./protocol.js";

export interface Channel {
  send(text: string): void;
  close(): void;
}

export type ConnectionState = "connecting" | "connected" | "reconnecting";

interface PendingRequest {
  kind: string;
  edits?: Partial<LdsiWireParams>;
  tracker?: Partial<TrackerWireParams>;
}

export interface SessionEvents {
  onSnapshot?: (snap: Snapshot) => void;
  onStateChange?: (state: ConnectionState) => void;
  onToast?: (message: string) => void;
  onParamsChange?: () => void;
}

export class SessionViewModel {
  connection: ConnectionState = "connecting";
  snapshot: Snapshot | null = null;
  applied: { ldsi: LdsiWireParams; tracker: TrackerWireParams } | null = null;
  pending: Partial<LdsiWireParams> = {};
  pendingTracker: Partial<TrackerWireParams> = {};
  lastError: string | null = null;
  mode: "event" | "frame" = "event";
  scene = "circle";

  private channel: Channel | null = null;
  private seq = 0;
  private inflight = new Map<number, PendingRequest>();
  private events: SessionEvents;

  constructor(events: SessionEvents = {}) {
    this.events = events;
  }

  attach(channel: Channel): void {
    this.channel = channel;
    this.setConnection("connected");
    this.send({ kind: "hello" });
    // re-assert edits that were pending when the previous link dropped
    if (Object.keys(this.pending).length || Object.keys(this.pendingTracker).length) {
      this.flushPending();
    }
  }

  detach(): void {
    // keep the last snapshot and applied params for the reconnect banner
    this.channel = null;
    this.inflight.clear();
    this.setConnection("reconnecting");
  }

  get connected(): boolean {
    return this.channel !== null;
  }

  editParam(key: keyof LdsiWireParams, value: number): void {
    this.pending[key] = value;
  }

  editTracker(key: keyof TrackerWireParams, value: number): void {
    this.pendingTracker[key] = value;
  }

  flushPending(): void {
    if (!Object.keys(this.pending).length && !Object.keys(this.pendingTracker).length) {
      return;
    }
    const edits = { ...this.pending };
    const tracker = { ...this.pendingTracker };
    this.send(
      { kind: "set_params", ldsi: edits, tracker },
      { kind: "set_params", edits, tracker },
    );
  }

  setMode(mode: "event" | "frame"): void {
    this.send({ kind: "set_mode", mode }, { kind: "set_mode" });
  }

  setScene(preset: string): void {
    this.send({ kind: "set_scene", preset }, { kind: "set_scene" });
  }

  /** Feed one raw message from the transport. */
  handleMessage(text: string): void {
    const msg = decodeServerMessage(text);
    if (msg === null) {
      this.toast("malformed message skipped");
      return;
    }
    switch (msg.kind) {
      case "snapshot":
        this.handleSnapshot(msg);
        break;
      case "ack":
        this.handleAck(msg);
        break;
      case "error":
        this.handleError(msg);
        break;
    }
  }

  private handleSnapshot(snap: Snapshot): void {
    this.snapshot = snap;
    this.mode = snap.mode;
    this.scene = snap.scene;
    if (this.applied === null) {
      // first contact: adopt the server's parameters as the applied set
      this.applied = snap.params;
      this.events.onParamsChange?.();
    }
    this.events.onSnapshot?.(snap);
  }

  private handleAck(ack: Ack): void {
    const req = this.inflight.get(ack.seq);
    this.inflight.delete(ack.seq);
    if (!req) return;
    if (req.kind === "set_params") {
      const applied = ack.applied as { ldsi: LdsiWireParams; tracker: TrackerWireParams };
      this.applied = applied;
      // only clear edits the ack covered; later edits stay pending
      for (const key of Object.keys(req.edits ?? {}) as (keyof LdsiWireParams)[]) {
        if (this.pending[key] === req.edits![key]) delete this.pending[key];
      }
      for (const key of Object.keys(req.tracker ?? {}) as (keyof TrackerWireParams)[]) {
        if (this.pendingTracker[key] === req.tracker![key]) {
          delete this.pendingTracker[key];
        }
      }
      this.lastError = null;
      this.events.onParamsChange?.();
    }
  }

  private handleError(err: ErrorReply): void {
    if (err.seq !== null && this.inflight.has(err.seq)) {
      const req = this.inflight.get(err.seq)!;
      this.inflight.delete(err.seq);
      if (req.kind === "set_params") {
        // edits stay pending so the slider shows the rejected value
        this.lastError = err.message;
        this.events.onParamsChange?.();
      }
    }
    this.toast(err.message);
  }

  private send(payload: Record<string, unknown>, track?: PendingRequest): void {
    if (!this.channel) {
      this.toast("not connected");
      return;
    }
    const seq = ++this.seq;
    if (track) this.inflight.set(seq, track);
    this.channel.send(JSON.stringify({ ...payload, seq }));
  }

  private setConnection(state: ConnectionState): void {
    this.connection = state;
    this.events.onStateChange?.(state);
  }

  private toast(message: string): void {
    this.events.onToast?.(message);
  }
}
