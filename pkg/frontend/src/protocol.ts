/**
 * Wire protocol (schema version 1) shared with the guidance server.
 *
 * The console is a pure view: it never computes poses. Everything it
 * displays comes out of `parseRecord`, and everything it sends goes
 * through the command builders below, which clamp steering input to
 * the server's published bounds before it leaves the client.
 */

export const PROTOCOL_VERSION = 1;
export const NUDGE_LIMIT_MM = 20;
export const NUDGE_LIMIT_DEG = 20;

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export interface BodyState {
  q: Quat;
  t: Vec3;
  sigma: Vec3 | null;
  stale: boolean;
}

export interface CameraDiagnostic {
  id: number;
  tag: number;
  e_proj: number;
  sigma_d: number;
}

export interface GuidanceState {
  v: number;
  t_us: number;
  head: BodyState | null;
  coil: BodyState | null;
  target: Vec3 | null;
  goal: Vec3 | null;
  dist_mm: number | null;
  angle_deg: number | null;
  cams: CameraDiagnostic[];
}

export type ParsedRecord =
  | { kind: "state"; state: GuidanceState }
  | { kind: "server-error"; message: string }
  | { kind: "incompatible"; version: unknown }
  | { kind: "malformed"; message: string };

function isVec3(x: unknown): x is Vec3 {
  return Array.isArray(x) && x.length === 3 && x.every((v) => typeof v === "number");
}

function isQuat(x: unknown): x is Quat {
  return Array.isArray(x) && x.length === 4 && x.every((v) => typeof v === "number");
}

function parseBody(x: unknown): BodyState | null {
  if (x === null || x === undefined) return null;
  const b = x as Record<string, unknown>;
  if (!isQuat(b.q) || !isVec3(b.t) || typeof b.stale !== "boolean") {
    throw new Error("invalid body state");
  }
  const sigma = b.sigma === null || b.sigma === undefined ? null : b.sigma;
  if (sigma !== null && !isVec3(sigma)) throw new Error("invalid body sigma");
  return { q: b.q, t: b.t, sigma, stale: b.stale };
}

export function parseRecord(line: string): ParsedRecord {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (e) {
    return { kind: "malformed", message: `unparseable record: ${e}` };
  }
  if (typeof doc !== "object" || doc === null) {
    return { kind: "malformed", message: "record is not an object" };
  }
  const rec = doc as Record<string, unknown>;
  if (rec.v !== PROTOCOL_VERSION) {
    return { kind: "incompatible", version: rec.v };
  }
  if (typeof rec.error === "string") {
    return { kind: "server-error", message: rec.error };
  }
  try {
    if (typeof rec.t_us !== "number") throw new Error("missing t_us");
    const cams = Array.isArray(rec.cams) ? rec.cams : [];
    for (const c of cams) {
      const d = c as Record<string, unknown>;
      if (
        typeof d.id !== "number" || typeof d.tag !== "number" ||
        typeof d.e_proj !== "number" || typeof d.sigma_d !== "number"
      ) {
        throw new Error("invalid camera diagnostic");
      }
    }
    const state: GuidanceState = {
      v: PROTOCOL_VERSION,
      t_us: rec.t_us,
      head: parseBody(rec.head),
      coil: parseBody(rec.coil),
      target: rec.target == null ? null : (isVec3(rec.target) ? rec.target : null),
      goal: rec.goal == null ? null : (isVec3(rec.goal) ? rec.goal : null),
      dist_mm: typeof rec.dist_mm === "number" ? rec.dist_mm : null,
      angle_deg: typeof rec.angle_deg === "number" ? rec.angle_deg : null,
      cams: cams as CameraDiagnostic[],
    };
    return { kind: "state", state };
  } catch (e) {
    return { kind: "malformed", message: String(e) };
  }
}

function norm(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

/** Scale a vector down so its norm does not exceed `limit`. */
export function clampVec(v: Vec3, limit: number): Vec3 {
  const n = norm(v);
  if (n <= limit || n === 0) return v;
  const s = limit / n;
  return [v[0] * s, v[1] * s, v[2] * s];
}

export function setGoalCommand(p: Vec3): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, cmd: "set_goal", p });
}

export function nudgeCoilCommand(dt: Vec3, drotDeg: Vec3 = [0, 0, 0]): string {
  return JSON.stringify({
    v: PROTOCOL_VERSION,
    cmd: "nudge_coil",
    dt: clampVec(dt, NUDGE_LIMIT_MM),
    drot_deg: clampVec(drotDeg, NUDGE_LIMIT_DEG),
  });
}

export function setNoiseCommand(noisePx: number): string {
  return JSON.stringify({
    v: PROTOCOL_VERSION,
    cmd: "set_noise",
    noise_px: Math.max(0, noisePx),
  });
}

export function pauseCommand(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, cmd: "pause" });
}

export function resumeCommand(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, cmd: "resume" });
}
