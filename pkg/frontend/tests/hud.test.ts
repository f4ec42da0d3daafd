import { describe, expect, it } from "vitest";

import {
  alignmentBand,
  alignmentColor,
  coilGlyphStyle,
  hudModel,
  sigmaBars,
} from "../src/hud.js";
import type { GuidanceState } from "../src/protocol.js";

function state(overrides: Partial<GuidanceState>): GuidanceState {
  return {
    v: 1,
    t_us: 0,
    head: { q: [1, 0, 0, 0], t: [0, 0, 0], sigma: null, stale: false },
    coil: { q: [1, 0, 0, 0], t: [0, 0, 0], sigma: null, stale: false },
    target: [0, 0, 0],
    goal: [0, 0, 0],
    dist_mm: 0,
    angle_deg: 0,
    cams: [],
    ...overrides,
  };
}

describe("alignment bands", () => {
  it("zero distance is fully good", () => {
    expect(alignmentBand(0)).toBe("good");
    expect(alignmentColor(0)).toBe("#2ecc40");
  });

  it("5 mm sits in the mid band between the 4 and 6 mm defaults", () => {
    expect(alignmentBand(5)).toBe("mid");
  });

  it("beyond the warn threshold reads bad", () => {
    expect(alignmentBand(6.01)).toBe("bad");
  });

  it("missing distance is unknown and gray", () => {
    expect(alignmentBand(null)).toBe("unknown");
    expect(alignmentColor(null)).toBe("#888888");
  });

  it("thresholds are configurable", () => {
    const th = { goodMm: 1, warnMm: 2 };
    expect(alignmentBand(1.5, th)).toBe("mid");
    expect(alignmentBand(0.5, th)).toBe("good");
    expect(alignmentBand(3, th)).toBe("bad");
  });
});

describe("glyph styles", () => {
  it("stale coil is grayed", () => {
    const s = state({
      coil: { q: [1, 0, 0, 0], t: [0, 0, 0], sigma: null, stale: true },
    });
    expect(coilGlyphStyle(s)).toEqual({ visible: true, grayed: true });
  });

  it("missing coil is hidden", () => {
    expect(coilGlyphStyle(state({ coil: null }))).toEqual({
      visible: false, grayed: false,
    });
    expect(coilGlyphStyle(null)).toEqual({ visible: false, grayed: false });
  });
});

describe("sigma bars", () => {
  it("one bar per camera diagnostic, clamped to full scale", () => {
    const bars = sigmaBars([
      { id: 0, tag: 5, e_proj: 0.1, sigma_d: 0.25 },
      { id: 1, tag: 5, e_proj: 0.1, sigma_d: 9.0 },
    ]);
    expect(bars).toHaveLength(2);
    expect(bars[0]?.frac).toBeCloseTo(0.25);
    expect(bars[1]?.frac).toBe(1);
    expect(bars[0]?.label).toContain("cam 0");
  });
});

describe("hud model", () => {
  it("renders only values from the record", () => {
    const hud = hudModel(state({ dist_mm: 5.123, angle_deg: 1.5 }));
    expect(hud.distText).toBe("5.12 mm");
    expect(hud.angleText).toBe("1.50°");
    expect(hud.band).toBe("mid");
  });

  it("handles the empty session", () => {
    const hud = hudModel(null);
    expect(hud.distText).toBe("--");
    expect(hud.coil.visible).toBe(false);
    expect(hud.bars).toHaveLength(0);
  });
});
