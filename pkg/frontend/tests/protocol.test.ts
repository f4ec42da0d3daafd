import { describe, expect, it } from "vitest";

import {
  NUDGE_LIMIT_DEG,
  NUDGE_LIMIT_MM,
  clampVec,
  nudgeCoilCommand,
  parseRecord,
  pauseCommand,
  resumeCommand,
  setGoalCommand,
  setNoiseCommand,
} from "../src/protocol.js";

const STATE_LINE = JSON.stringify({
  v: 1,
  t_us: 33333,
  head: { q: [1, 0, 0, 0], t: [0, 0, 0], sigma: [0.1, 0.1, 0.2], stale: false },
  coil: { q: [0.95, 0.3, 0, 0], t: [0, 60, 160], sigma: null, stale: true },
  target: [0, 10, 50],
  goal: null,
  dist_mm: null,
  angle_deg: null,
  cams: [{ id: 0, tag: 5, e_proj: 0.1, sigma_d: 0.02 }],
});

describe("parseRecord", () => {
  it("parses a full state record", () => {
    const rec = parseRecord(STATE_LINE);
    expect(rec.kind).toBe("state");
    if (rec.kind !== "state") return;
    expect(rec.state.t_us).toBe(33333);
    expect(rec.state.head?.stale).toBe(false);
    expect(rec.state.coil?.stale).toBe(true);
    expect(rec.state.coil?.sigma).toBeNull();
    expect(rec.state.target).toEqual([0, 10, 50]);
    expect(rec.state.cams[0]?.sigma_d).toBe(0.02);
  });

  it("parses null bodies", () => {
    const rec = parseRecord(JSON.stringify({
      v: 1, t_us: 0, head: null, coil: null, target: null, goal: null,
      dist_mm: null, angle_deg: null, cams: [],
    }));
    expect(rec.kind).toBe("state");
    if (rec.kind !== "state") return;
    expect(rec.state.head).toBeNull();
    expect(rec.state.coil).toBeNull();
  });

  it("flags schema-version mismatch", () => {
    const rec = parseRecord(JSON.stringify({ v: 2, t_us: 0 }));
    expect(rec.kind).toBe("incompatible");
    if (rec.kind === "incompatible") expect(rec.version).toBe(2);
  });

  it("surfaces server error records", () => {
    const rec = parseRecord(JSON.stringify({ v: 1, error: "unknown command" }));
    expect(rec).toEqual({ kind: "server-error", message: "unknown command" });
  });

  it("rejects garbage without throwing", () => {
    expect(parseRecord("{{{").kind).toBe("malformed");
    expect(parseRecord("42").kind).toBe("malformed");
    expect(parseRecord(JSON.stringify({ v: 1, t_us: "x" })).kind)
      .toBe("malformed");
  });
});

describe("command builders", () => {
  it("set_goal carries the point and schema version", () => {
    expect(JSON.parse(setGoalCommand([1, 2, 3]))).toEqual({
      v: 1, cmd: "set_goal", p: [1, 2, 3],
    });
  });

  it("nudge passes small inputs through unchanged", () => {
    const doc = JSON.parse(nudgeCoilCommand([3, 0, 0], [0, 0, 5]));
    expect(doc.dt).toEqual([3, 0, 0]);
    expect(doc.drot_deg).toEqual([0, 0, 5]);
  });

  it("clamps oversized nudges client-side", () => {
    const doc = JSON.parse(nudgeCoilCommand([100, 0, 0], [0, 50, 0]));
    expect(Math.hypot(...(doc.dt as [number, number, number])))
      .toBeCloseTo(NUDGE_LIMIT_MM, 9);
    expect(Math.hypot(...(doc.drot_deg as [number, number, number])))
      .toBeCloseTo(NUDGE_LIMIT_DEG, 9);
  });

  it("clamp preserves direction", () => {
    const clamped = clampVec([30, 40, 0], 20);
    expect(clamped[0] / clamped[1]).toBeCloseTo(30 / 40, 12);
    expect(Math.hypot(...clamped)).toBeCloseTo(20, 12);
  });

  it("set_noise floors negatives at zero", () => {
    expect(JSON.parse(setNoiseCommand(-1)).noise_px).toBe(0);
    expect(JSON.parse(setNoiseCommand(0.4)).noise_px).toBeCloseTo(0.4);
  });

  it("pause and resume are plain commands", () => {
    expect(JSON.parse(pauseCommand())).toEqual({ v: 1, cmd: "pause" });
    expect(JSON.parse(resumeCommand())).toEqual({ v: 1, cmd: "resume" });
  });
});
