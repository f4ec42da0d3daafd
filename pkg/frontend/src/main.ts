/**
 * Browser entry point.
 *
 * URL query parameters:
 *   good=<mm>  warn=<mm>   alignment thresholds (default 4 / 6)
 *   bridge=<url>           bridge base URL (default: page origin)
 */

import { DEFAULT_THRESHOLDS, Thresholds, hudModel } from "./hud.js";
import { GuidanceScene } from "./render3d.js";
import { ConsoleSession } from "./session.js";
import { streamTransportFactory } from "./stream.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const params = new URLSearchParams(location.search);
const thresholds: Thresholds = {
  goodMm: Number(params.get("good") ?? DEFAULT_THRESHOLDS.goodMm),
  warnMm: Number(params.get("warn") ?? DEFAULT_THRESHOLDS.warnMm),
};
const bridge = params.get("bridge") ?? "";

const canvas = el<HTMLCanvasElement>("view");
const scene = new GuidanceScene(canvas);
const session = new ConsoleSession(streamTransportFactory(bridge));

const statusEl = el<HTMLDivElement>("status");
const distEl = el<HTMLSpanElement>("dist");
const angleEl = el<HTMLSpanElement>("angle");
const barsEl = el<HTMLDivElement>("bars");
const logEl = el<HTMLDivElement>("log");
const noiseEl = el<HTMLInputElement>("noise");

function renderHud(): void {
  const hud = hudModel(session.latest, thresholds);
  distEl.textContent = hud.distText;
  angleEl.textContent = hud.angleText;
  distEl.style.color = hud.color;
  angleEl.style.color = hud.color;

  if (session.status === "incompatible") {
    statusEl.textContent = session.incompatibleMessage ?? "incompatible server";
    statusEl.className = "banner error";
  } else if (session.status !== "connected") {
    statusEl.textContent =
      session.status === "reconnecting"
        ? "connection lost — reconnecting…"
        : session.status;
    statusEl.className = "banner warn";
  } else {
    statusEl.textContent = `connected · ${session.statesReceived} states`;
    statusEl.className = "banner ok";
  }

  barsEl.innerHTML = "";
  for (const bar of hud.bars) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const label = document.createElement("span");
    label.textContent = `${bar.label} σ=${bar.sigmaD.toFixed(3)} mm`;
    const track = document.createElement("div");
    track.className = "bar-track";
    const fill = document.createElement("div");
    fill.className = "bar-fill";
    fill.style.width = `${(bar.frac * 100).toFixed(1)}%`;
    track.appendChild(fill);
    row.append(label, track);
    barsEl.appendChild(row);
  }

  logEl.innerHTML = "";
  for (const entry of session.log.slice(-12)) {
    const row = document.createElement("div");
    row.className = `log-${entry.direction}`;
    row.textContent = entry.text;
    logEl.appendChild(row);
  }
}

session.onUpdate = renderHud;
session.connect();

window.addEventListener("keydown", (ev) => {
  if (session.nudgeFromKey(ev.key)) ev.preventDefault();
});

canvas.addEventListener("click", (ev) => {
  const goal = scene.pickGoal(ev.clientX, ev.clientY);
  if (goal) session.setGoal(goal);
});

el<HTMLButtonElement>("pause").addEventListener("click", () => session.pause());
el<HTMLButtonElement>("resume").addEventListener("click", () => session.resume());
noiseEl.addEventListener("change", () =>
  session.setNoise(Number(noiseEl.value)),
);

function frame(): void {
  scene.update(session.latest, session.trail);
  scene.render();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
