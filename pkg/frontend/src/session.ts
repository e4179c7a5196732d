/** Connection state machine for one daemon session.
 *
 * The session owns everything the panels render: connection phase, the
 * latest telemetry frame per joint, the tracked action list, the halt flag
 * and the stale indicator. It is transport-agnostic; the app feeds it lines
 * and gives it a Transport to write to, tests use fakes for both. Wall time
 * is injected so staleness is testable without sleeping.
 *
 * Commands go out strictly one at a time. The daemon answers in order, so
 * the head of the in-flight queue always owns the next non-telemetry line;
 * a panic bypasses the waiting queue (which is dropped wholesale) but still
 * joins the in-flight queue to keep that correlation exact.
 */

import {
  GREETING,
  RigInfo,
  StatusInfo,
  TelemetryFrame,
  WireResponse,
  formatNumber,
  isTelemetry,
  parseConfig,
  parseResponse,
  parseStatus,
  parseTelemetry,
} from "./protocol.js";

export interface Transport {
  send(line: string): void;
  close(): void;
}

export type ConnectionState = "idle" | "handshake" | "connected" | "closed" | "failed";

export interface ActiveAction {
  id: number;
  line: string;
}

/** Immutable view handed to renderers; build a fresh one per read. */
export interface SessionSnapshot {
  connection: ConnectionState;
  rig: RigInfo | null;
  frames: ReadonlyMap<string, TelemetryFrame>;
  lastFrameAtMs: number | null;
  stale: boolean;
  halted: string | null;
  actions: readonly ActiveAction[];
  lastError: string | null;
  status: StatusInfo | null;
}

export const STALE_AFTER_MS = 500;

/** Verbs whose ok payload is an action id worth tracking in the panel. */
const ACTION_VERBS = new Set([
  "moveto", "lock", "gesture", "vibrate", "mirror", "resist", "amplify",
  "filtervel", "jerks", "constrain", "guideto", "guideaway", "link",
]);

type ReplyHandler = (reply: WireResponse) => void;

interface Outgoing {
  line: string;
  onReply?: ReplyHandler;
  /** background housekeeping; an err reply is not banner-worthy */
  quiet?: boolean;
}

export interface SessionOptions {
  now?: () => number;
  staleAfterMs?: number;
  onChange?: (snap: SessionSnapshot) => void;
}

export class Session {
  private readonly now: () => number;
  private readonly staleAfterMs: number;
  private readonly onChange: ((snap: SessionSnapshot) => void) | null;

  private transport: Transport | null = null;
  private connection: ConnectionState = "idle";
  private rig: RigInfo | null = null;
  private readonly frames = new Map<string, TelemetryFrame>();
  private lastFrameAtMs: number | null = null;
  private halted: string | null = null;
  private actions: ActiveAction[] = [];
  private lastError: string | null = null;
  private status: StatusInfo | null = null;

  /** sent, awaiting a reply (FIFO matches daemon reply order) */
  private pending: Outgoing[] = [];
  /** accepted but not sent yet; panic discards this entirely */
  private queue: Outgoing[] = [];

  constructor(opts: SessionOptions = {}) {
    this.now = opts.now ?? (() => Date.now());
    this.staleAfterMs = opts.staleAfterMs ?? STALE_AFTER_MS;
    this.onChange = opts.onChange ?? null;
  }

  /** Adopt a fresh transport; any previous in-flight work is abandoned.
   * The daemon speaks first, so the next line must be the greeting. */
  attach(transport: Transport): void {
    this.transport = transport;
    this.connection = "handshake";
    this.pending = [];
    this.queue = [];
    this.lastError = null;
    this.emit();
  }

  /** Feed one line received from the transport. */
  handleLine(line: string): void {
    if (this.connection === "handshake") {
      if (line === GREETING) {
        this.connection = "connected";
        this.resync();
      } else {
        this.connection = "failed";
        this.lastError = `expected greeting, got: ${line}`;
      }
      this.emit();
      return;
    }
    if (isTelemetry(line)) {
      let frame: TelemetryFrame;
      try {
        frame = parseTelemetry(line);
      } catch (e) {
        this.lastError = String(e);
        this.emit();
        return;
      }
      this.frames.set(frame.joint, frame);
      this.lastFrameAtMs = this.now();
      this.emit();
      return;
    }
    const out = this.pending.shift();
    if (out === undefined) {
      this.lastError = `unsolicited line: ${line}`;
      this.emit();
      return;
    }
    let reply: WireResponse;
    try {
      reply = parseResponse(line);
    } catch (e) {
      this.lastError = String(e);
      this.emit();
      return;
    }
    if (reply.kind === "err") {
      if (out.quiet !== true) {
        this.lastError = `${reply.code} ${reply.message}`.trim();
      }
      if (reply.code === "HALTED" && this.halted === null) {
        // rejected because the loop is down; pull the reason from status
        this.requestStatus();
      }
    } else {
      const verb = out.line.split(" ", 1)[0];
      if (ACTION_VERBS.has(verb) && /^\d+$/.test(reply.payload)) {
        this.actions.push({ id: Number(reply.payload), line: out.line });
      }
    }
    out.onReply?.(reply);
    this.pump();
    this.emit();
  }

  /** The transport died; either side may close first. */
  transportClosed(reason: string): void {
    this.connection = this.connection === "handshake" ? "failed" : "closed";
    if (reason !== "") {
      this.lastError = reason;
    }
    this.transport = null;
    this.pending = [];
    this.queue = [];
    this.emit();
  }

  /** Queue one command line. Replies come back through onReply in order. */
  dispatch(line: string, onReply?: ReplyHandler, quiet = false): void {
    if (this.connection !== "connected") {
      this.lastError = "not connected";
      this.emit();
      return;
    }
    this.queue.push({ line, onReply, quiet });
    this.pump();
    this.emit();
  }

  /** Emergency stop: drop every queued command, put "panic" on the wire
   * now, and confirm the halt through a status read. Nothing that was
   * waiting in the queue is ever sent after this. */
  panic(): void {
    if (this.connection !== "connected" || this.transport === null) {
      return;
    }
    this.queue = [];
    const out: Outgoing = { line: "panic", onReply: () => this.requestStatus() };
    this.transport.send(out.line);
    this.pending.push(out);
    this.emit();
  }

  /** Stop all running actions and refresh the action list. */
  stopAll(): void {
    this.dispatch("stop", () => {
      this.actions = [];
      this.requestStatus();
    });
  }

  requestStatus(): void {
    this.dispatch("status", (r) => this.applyStatus(r));
  }

  /** Ask the daemon about each tracked action and drop the finished ones. */
  refreshActions(): void {
    for (const a of this.actions) {
      this.dispatch(
        `status ${a.id}`,
        (r) => {
          const gone =
            (r.kind === "ok" && (r.payload === "done" || r.payload === "aborted")) ||
            (r.kind === "err" && r.code === "NO_SUCH_ACTION");
          if (gone) {
            this.actions = this.actions.filter((x) => x.id !== a.id);
          }
        },
        true,
      );
    }
  }

  state(): SessionSnapshot {
    const t = this.now();
    return Object.freeze({
      connection: this.connection,
      rig: this.rig,
      frames: new Map(this.frames),
      lastFrameAtMs: this.lastFrameAtMs,
      stale:
        this.connection === "connected" &&
        this.lastFrameAtMs !== null &&
        t - this.lastFrameAtMs > this.staleAfterMs,
      halted: this.halted,
      actions: [...this.actions],
      lastError: this.lastError,
      status: this.status,
    });
  }

  /** Post-greeting sync: learn the rig, read status, start the stream.
   * Runs again on every reconnect, which is what resynchronizes the UI. */
  private resync(): void {
    this.queue.push({
      line: "config",
      onReply: (r) => {
        if (r.kind === "ok") {
          this.rig = parseConfig(r.payload);
          this.subscribe();
        }
      },
    });
    this.queue.push({ line: "status", onReply: (r) => this.applyStatus(r) });
    this.pump();
  }

  private subscribe(): void {
    if (this.rig === null) {
      return;
    }
    const withEncoders = this.rig.joints.filter((j) => j.kind !== "passive");
    if (withEncoders.length === 0) {
      return;
    }
    const sel = withEncoders.map((j) => j.id).join(",");
    const rate = formatNumber(this.rig.telemetryRateHz);
    this.queue.push({
      line: `stream on ${sel} ${rate}`,
      onReply: (r) => {
        if (r.kind === "ok") {
          // staleness counts from the subscription, not the first frame,
          // so a stream that never starts still trips the indicator
          this.lastFrameAtMs = this.now();
        }
      },
    });
    this.pump();
  }

  private applyStatus(r: WireResponse): void {
    if (r.kind !== "ok") {
      return;
    }
    try {
      this.status = parseStatus(r.payload);
    } catch (e) {
      this.lastError = String(e);
      return;
    }
    this.halted = this.status.halted;
    if (this.status.actions === 0) {
      this.actions = [];
    }
  }

  private pump(): void {
    if (this.connection !== "connected" || this.transport === null) {
      return;
    }
    if (this.pending.length > 0 || this.queue.length === 0) {
      return;
    }
    const out = this.queue.shift() as Outgoing;
    this.transport.send(out.line);
    this.pending.push(out);
  }

  private emit(): void {
    this.onChange?.(this.state());
  }
}
