/**
 * Pure canvas rendering: one call draws the whole scene from
 * (map, latest state frame, view). No drawing state is accumulated
 * between calls, so re-rendering the same inputs is pixel-identical.
 */

import { Camera } from "./camera.js";
import {
  CELL_OCCUPIED, CELL_UNKNOWN, MapMeta, StateFrame,
} from "./wire.js";

/** The subset of CanvasRenderingContext2D the renderer uses; tests
 *  substitute a recording fake. */
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface OverlayToggles {
  particles: boolean;
  scan: boolean;
  rollouts: boolean;
  footprint: boolean;
  goal: boolean;
}

export interface ViewState {
  camera: Camera;
  overlays: OverlayToggles;
  connection: "connecting" | "connected" | "disconnected";
  banner: string | null;
  width: number;
  height: number;
}

export const DEFAULT_OVERLAYS: OverlayToggles = {
  particles: true, scan: true, rollouts: true, footprint: true, goal: true,
};

const COLORS = {
  background: "#14161a",
  free: "#2a2e35",
  occupied: "#c8ccd4",
  unknown: "#1c1f24",
  pose: "#4fc3f7",
  estimate: "#ffb74d",
  particles: "rgba(255,183,77,0.35)",
  scan: "rgba(239,83,80,0.55)",
  rollout: "rgba(129,199,132,0.35)",
  bestRollout: "#81c784",
  goal: "#ab47bc",
  text: "#e8eaed",
  collided: "#ef5350",
};

// vehicle footprint for display (matches the default chassis)
const FOOT_LEN = 0.44;
const FOOT_WID = 0.28;
const REAR_OVERHANG = 0.05;

function drawMap(ctx: Draw2D, meta: MapMeta, cells: Uint8Array,
                 cam: Camera): void {
  const res = meta.resolution;
  for (let r = 0; r < meta.height; r++) {
    for (let c = 0; c < meta.width; c++) {
      const v = cells[r * meta.width + c];
      ctx.fillStyle = v === CELL_OCCUPIED ? COLORS.occupied
        : v === CELL_UNKNOWN ? COLORS.unknown : COLORS.free;
      // row r spans world y in [origin.y + r*res, +res); flip for screen
      const p = cam.worldToScreen({
        x: meta.origin.x + c * res,
        y: meta.origin.y + (r + 1) * res,
      });
      const side = res * cam.scale;
      ctx.fillRect(p.x, p.y, side + 0.5, side + 0.5);
    }
  }
}

function drawFootprint(ctx: Draw2D, cam: Camera,
                       pose: { x: number; y: number; theta: number },
                       color: string): void {
  const cos = Math.cos(pose.theta);
  const sin = Math.sin(pose.theta);
  const corners: [number, number][] = [
    [-REAR_OVERHANG, -FOOT_WID / 2],
    [FOOT_LEN - REAR_OVERHANG, -FOOT_WID / 2],
    [FOOT_LEN - REAR_OVERHANG, FOOT_WID / 2],
    [-REAR_OVERHANG, FOOT_WID / 2],
  ];
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  corners.forEach(([fx, fy], i) => {
    const p = cam.worldToScreen({
      x: pose.x + cos * fx - sin * fy,
      y: pose.y + sin * fx + cos * fy,
    });
    if (i === 0) ctx.moveTo(p.x, p.y);
    else ctx.lineTo(p.x, p.y);
  });
  const first = cam.worldToScreen({
    x: pose.x + cos * corners[0][0] - sin * corners[0][1],
    y: pose.y + sin * corners[0][0] + cos * corners[0][1],
  });
  ctx.lineTo(first.x, first.y);
  // heading tick
  const nose = cam.worldToScreen({
    x: pose.x + cos * (FOOT_LEN - REAR_OVERHANG + 0.1),
    y: pose.y + sin * (FOOT_LEN - REAR_OVERHANG + 0.1),
  });
  const center = cam.worldToScreen({ x: pose.x, y: pose.y });
  ctx.moveTo(center.x, center.y);
  ctx.lineTo(nose.x, nose.y);
  ctx.stroke();
}

export function render(ctx: Draw2D, meta: MapMeta | null,
                       cells: Uint8Array | null,
                       state: StateFrame | null, view: ViewState): void {
  const cam = view.camera;
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, view.width, view.height);

  if (meta !== null && cells !== null) {
    drawMap(ctx, meta, cells, cam);
  }

  if (state !== null) {
    if (view.overlays.scan && state.scan !== null) {
      ctx.fillStyle = COLORS.scan;
      const { angle_min, angle_increment, ranges } = state.scan;
      const sp = state.pose;
      for (let i = 0; i < ranges.length; i++) {
        const a = sp.theta + angle_min + i * angle_increment;
        const p = cam.worldToScreen({
          x: sp.x + ranges[i] * Math.cos(a),
          y: sp.y + ranges[i] * Math.sin(a),
        });
        ctx.fillRect(p.x - 1, p.y - 1, 2, 2);
      }
    }

    if (view.overlays.particles) {
      ctx.fillStyle = COLORS.particles;
      for (const [px, py] of state.particles) {
        const p = cam.worldToScreen({ x: px, y: py });
        ctx.fillRect(p.x - 1, p.y - 1, 2, 2);
      }
    }

    if (view.overlays.rollouts) {
      let best = -1;
      let bestCost = Infinity;
      state.rollouts.forEach((r, i) => {
        if (r.cost < bestCost) { bestCost = r.cost; best = i; }
      });
      state.rollouts.forEach((r, i) => {
        ctx.strokeStyle = i === best ? COLORS.bestRollout : COLORS.rollout;
        ctx.lineWidth = i === best ? 2 : 1;
        ctx.beginPath();
        r.points.forEach(([wx, wy], j) => {
          const p = cam.worldToScreen({ x: wx, y: wy });
          if (j === 0) ctx.moveTo(p.x, p.y);
          else ctx.lineTo(p.x, p.y);
        });
        ctx.stroke();
      });
    }

    if (view.overlays.goal && state.goal !== null) {
      const g = cam.worldToScreen({ x: state.goal.x, y: state.goal.y });
      ctx.strokeStyle = COLORS.goal;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(g.x, g.y, 6, 0, 2 * Math.PI);
      ctx.moveTo(g.x - 9, g.y);
      ctx.lineTo(g.x + 9, g.y);
      ctx.moveTo(g.x, g.y - 9);
      ctx.lineTo(g.x, g.y + 9);
      ctx.stroke();
    }

    if (view.overlays.footprint) {
      drawFootprint(ctx, cam, state.estimate, COLORS.estimate);
      drawFootprint(ctx, cam, state.pose,
                    state.collided ? COLORS.collided : COLORS.pose);
    }

    // mux / status panel: active_source shown verbatim
    ctx.fillStyle = COLORS.text;
    ctx.font = "13px monospace";
    const src = state.mux.active_source === null
      ? "-" : state.mux.active_source;
    ctx.fillText(`source: ${src}`, 10, 18);
    ctx.fillText(
      `cmd: ${state.mux.speed.toFixed(2)} m/s ` +
      `${state.mux.steering.toFixed(2)} rad`, 10, 34);
    ctx.fillText(`t: ${state.stamp.toFixed(2)} s`, 10, 50);
    if (state.collided) {
      ctx.fillStyle = COLORS.collided;
      ctx.fillText("COLLIDED", 10, 66);
    }
    if (state.done) {
      ctx.fillStyle = COLORS.bestRollout;
      ctx.fillText("GOAL REACHED", 10, 82);
    }
  }

  if (view.connection !== "connected" || view.banner !== null) {
    ctx.fillStyle = COLORS.collided;
    ctx.font = "14px monospace";
    const msg = view.banner ?? view.connection;
    ctx.fillText(msg, 10, view.height - 12);
  }
}
