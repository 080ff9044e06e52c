/**
 * World <-> screen transform: uniform scale, pan, and the y-flip between
 * world coordinates (y up) and canvas pixels (y down).
 */

import type { MapMeta } from "./wire.js";

export interface ScreenPoint {
  x: number;
  y: number;
}

export interface WorldPoint {
  x: number;
  y: number;
}

export class Camera {
  /** pixels per meter */
  scale: number;
  /** screen position of the world origin, in pixels */
  tx: number;
  ty: number;

  constructor(scale = 50, tx = 0, ty = 0) {
    this.scale = scale;
    this.tx = tx;
    this.ty = ty;
  }

  worldToScreen(p: WorldPoint): ScreenPoint {
    return { x: this.tx + p.x * this.scale, y: this.ty - p.y * this.scale };
  }

  screenToWorld(s: ScreenPoint): WorldPoint {
    return { x: (s.x - this.tx) / this.scale, y: (this.ty - s.y) / this.scale };
  }

  /** World size of one pixel at the current zoom. */
  pixelWorldSize(): number {
    return 1 / this.scale;
  }

  panBy(dxPixels: number, dyPixels: number): void {
    this.tx += dxPixels;
    this.ty += dyPixels;
  }

  /** Zoom by a factor keeping the world point under (sx, sy) fixed. */
  zoomAt(s: ScreenPoint, factor: number): void {
    const anchor = this.screenToWorld(s);
    this.scale *= factor;
    const moved = this.worldToScreen(anchor);
    this.tx += s.x - moved.x;
    this.ty += s.y - moved.y;
  }

  /** Fit the map into a canvas of the given pixel size with a margin. */
  fitMap(meta: MapMeta, canvasWidth: number, canvasHeight: number,
         marginPixels = 20): void {
    const worldW = meta.width * meta.resolution;
    const worldH = meta.height * meta.resolution;
    const sx = (canvasWidth - 2 * marginPixels) / worldW;
    const sy = (canvasHeight - 2 * marginPixels) / worldH;
    this.scale = Math.max(1e-6, Math.min(sx, sy));
    // center the map; its lower-left corner is at the map origin
    const ox = meta.origin.x;
    const oy = meta.origin.y;
    this.tx = (canvasWidth - worldW * this.scale) / 2 - ox * this.scale;
    this.ty = (canvasHeight + worldH * this.scale) / 2 + oy * this.scale;
  }

  /** True when a world point lies inside the map rectangle. */
  inMap(meta: MapMeta, p: WorldPoint): boolean {
    const x = p.x - meta.origin.x;
    const y = p.y - meta.origin.y;
    return x >= 0 && y >= 0 &&
           x <= meta.width * meta.resolution &&
           y <= meta.height * meta.resolution;
  }
}
