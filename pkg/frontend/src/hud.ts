/**
 * Pure view helpers: map a guidance state onto display attributes.
 *
 * Every number returned here originates from a server record; nothing
 * is recomputed client-side.
 */

import type { CameraDiagnostic, GuidanceState } from "./protocol.js";

export interface Thresholds {
  /** Distance below which alignment reads fully good (mm). */
  goodMm: number;
  /** Distance above which alignment reads bad (mm). */
  warnMm: number;
}

export const DEFAULT_THRESHOLDS: Thresholds = { goodMm: 4, warnMm: 6 };

export type AlignmentBand = "good" | "mid" | "bad" | "unknown";

export function alignmentBand(
  distMm: number | null,
  th: Thresholds = DEFAULT_THRESHOLDS,
): AlignmentBand {
  if (distMm === null || !Number.isFinite(distMm)) return "unknown";
  if (distMm < th.goodMm) return "good";
  if (distMm <= th.warnMm) return "mid";
  return "bad";
}

export function alignmentColor(
  distMm: number | null,
  th: Thresholds = DEFAULT_THRESHOLDS,
): string {
  switch (alignmentBand(distMm, th)) {
    case "good":
      return "#2ecc40";
    case "mid":
      return "#ffb700";
    case "bad":
      return "#ff4136";
    default:
      return "#888888";
  }
}

export interface BodyGlyphStyle {
  visible: boolean;
  grayed: boolean;
}

export function coilGlyphStyle(state: GuidanceState | null): BodyGlyphStyle {
  if (!state || !state.coil) return { visible: false, grayed: false };
  return { visible: true, grayed: state.coil.stale };
}

export function headGlyphStyle(state: GuidanceState | null): BodyGlyphStyle {
  if (!state || !state.head) return { visible: false, grayed: false };
  return { visible: true, grayed: state.head.stale };
}

export interface SigmaBar {
  label: string;
  sigmaD: number;
  /** Bar fill in [0, 1]; full scale at `fullScaleMm`. */
  frac: number;
}

export function sigmaBars(
  cams: CameraDiagnostic[],
  fullScaleMm = 1.0,
): SigmaBar[] {
  return cams.map((c) => ({
    label: `cam ${c.id} / tag ${c.tag}`,
    sigmaD: c.sigma_d,
    frac: Math.min(1, Math.max(0, c.sigma_d / fullScaleMm)),
  }));
}

export interface HudModel {
  distText: string;
  angleText: string;
  color: string;
  band: AlignmentBand;
  coil: BodyGlyphStyle;
  head: BodyGlyphStyle;
  bars: SigmaBar[];
}

export function hudModel(
  state: GuidanceState | null,
  th: Thresholds = DEFAULT_THRESHOLDS,
): HudModel {
  const dist = state?.dist_mm ?? null;
  const angle = state?.angle_deg ?? null;
  return {
    distText: dist === null ? "--" : `${dist.toFixed(2)} mm`,
    angleText: angle === null ? "--" : `${angle.toFixed(2)}°`,
    color: alignmentColor(dist, th),
    band: alignmentBand(dist, th),
    coil: coilGlyphStyle(state),
    head: headGlyphStyle(state),
    bars: sigmaBars(state?.cams ?? []),
  };
}
