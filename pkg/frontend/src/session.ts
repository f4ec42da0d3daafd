/**
 * Console session: connection lifecycle, latest-state mailbox,
 * steering, and the command/error log.
 *
 * The transport is injected so the same session logic runs over a raw
 * TCP socket (Node, integration tests) or the browser bridge stream.
 * Incoming states land in a one-slot latest-state mailbox: rendering
 * always shows the newest record and slow consumers drop old states
 * rather than lag.
 */

import { Backoff } from "./backoff.js";
import {
  GuidanceState,
  ParsedRecord,
  Vec3,
  nudgeCoilCommand,
  parseRecord,
  pauseCommand,
  resumeCommand,
  setGoalCommand,
  setNoiseCommand,
} from "./protocol.js";

export interface Transport {
  send(line: string): void;
  close(): void;
}

export interface TransportHandlers {
  onOpen: () => void;
  onLine: (line: string) => void;
  onClose: () => void;
}

export type TransportFactory = (handlers: TransportHandlers) => Transport;

export type ConnectionStatus =
  | "connecting"
  | "connected"
  | "reconnecting"
  | "incompatible"
  | "closed";

export interface LogEntry {
  direction: "sent" | "error" | "info";
  text: string;
  at: number;
}

export interface SessionOptions {
  /** Length of the recent-target trail. */
  trailLength?: number;
  /** Steering sensitivity: millimetres per nudge key press. */
  nudgeStepMm?: number;
  /** Steering sensitivity: degrees per rotation key press. */
  nudgeStepDeg?: number;
  /** Injected timer for tests. */
  setTimer?: (fn: () => void, ms: number) => unknown;
  now?: () => number;
}

export class ConsoleSession {
  status: ConnectionStatus = "connecting";
  /** Set when the server speaks a different schema version. */
  incompatibleMessage: string | null = null;
  latest: GuidanceState | null = null;
  statesReceived = 0;
  trail: Vec3[] = [];
  log: LogEntry[] = [];
  nudgeStepMm: number;
  nudgeStepDeg: number;

  onUpdate: () => void = () => {};

  private transport: Transport | null = null;
  private readonly backoff = new Backoff();
  private readonly trailLength: number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly now: () => number;
  private closed = false;

  constructor(
    private readonly factory: TransportFactory,
    opts: SessionOptions = {},
  ) {
    this.trailLength = opts.trailLength ?? 200;
    this.nudgeStepMm = opts.nudgeStepMm ?? 2;
    this.nudgeStepDeg = opts.nudgeStepDeg ?? 2;
    this.setTimer = opts.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.now = opts.now ?? (() => Date.now());
  }

  connect(): void {
    this.status = this.statesReceived > 0 ? "reconnecting" : "connecting";
    this.transport = this.factory({
      onOpen: () => {
        this.backoff.reset();
        this.status = "connected";
        this.pushLog("info", "connected");
        this.onUpdate();
      },
      onLine: (line) => this.handleLine(line),
      onClose: () => this.handleClose(),
    });
  }

  close(): void {
    this.closed = true;
    this.status = "closed";
    this.transport?.close();
  }

  private handleClose(): void {
    if (this.closed) return;
    if (this.status !== "incompatible") {
      this.status = "reconnecting";
      this.pushLog("info", "connection lost; reconnecting");
    }
    this.onUpdate();
    const delay = this.backoff.next();
    this.setTimer(() => {
      if (!this.closed) this.connect();
    }, delay);
  }

  handleLine(line: string): void {
    const rec: ParsedRecord = parseRecord(line);
    switch (rec.kind) {
      case "state":
        this.latest = rec.state; // one-slot mailbox: newest wins
        this.statesReceived += 1;
        if (rec.state.target) {
          this.trail.push(rec.state.target);
          if (this.trail.length > this.trailLength) {
            this.trail.splice(0, this.trail.length - this.trailLength);
          }
        }
        break;
      case "incompatible":
        this.status = "incompatible";
        this.incompatibleMessage =
          `incompatible protocol: server sent schema version ` +
          `${JSON.stringify(rec.version)}, this console speaks version 1`;
        this.pushLog("error", this.incompatibleMessage);
        break;
      case "server-error":
        this.pushLog("error", rec.message);
        if (/protocol version/.test(rec.message)) {
          this.status = "incompatible";
          this.incompatibleMessage = rec.message;
        }
        break;
      case "malformed":
        this.pushLog("error", rec.message);
        break;
    }
    this.onUpdate();
  }

  private sendCommand(line: string): void {
    if (!this.transport || this.status !== "connected") {
      this.pushLog("error", "not connected; command dropped");
      return;
    }
    this.transport.send(line);
    this.pushLog("sent", line);
    this.onUpdate();
  }

  setGoal(p: Vec3): void {
    this.sendCommand(setGoalCommand(p));
  }

  nudge(dt: Vec3, drotDeg: Vec3 = [0, 0, 0]): void {
    this.sendCommand(nudgeCoilCommand(dt, drotDeg));
  }

  setNoise(noisePx: number): void {
    this.sendCommand(setNoiseCommand(noisePx));
  }

  pause(): void {
    this.sendCommand(pauseCommand());
  }

  resume(): void {
    this.sendCommand(resumeCommand());
  }

  /** Map an arrow/paging key to a bounded body-frame nudge. */
  nudgeFromKey(key: string): boolean {
    const s = this.nudgeStepMm;
    const r = this.nudgeStepDeg;
    const moves: Record<string, [Vec3, Vec3]> = {
      ArrowLeft: [[-s, 0, 0], [0, 0, 0]],
      ArrowRight: [[s, 0, 0], [0, 0, 0]],
      ArrowUp: [[0, s, 0], [0, 0, 0]],
      ArrowDown: [[0, -s, 0], [0, 0, 0]],
      PageUp: [[0, 0, -s], [0, 0, 0]],
      PageDown: [[0, 0, s], [0, 0, 0]],
      "[": [[0, 0, 0], [0, 0, -r]],
      "]": [[0, 0, 0], [0, 0, r]],
    };
    const move = moves[key];
    if (!move) return false;
    this.nudge(move[0], move[1]);
    return true;
  }

  private pushLog(direction: LogEntry["direction"], text: string): void {
    this.log.push({ direction, text, at: this.now() });
    if (this.log.length > 500) this.log.splice(0, this.log.length - 500);
  }
}
