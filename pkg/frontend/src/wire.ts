/**
 * Telemetry wire protocol: frame shapes and the run-length cell codec.
 *
 * Mirrors the server's schema exactly; field names are load-bearing.
 */

export interface PoseMsg {
  x: number;
  y: number;
  theta: number;
}

export interface MapMeta {
  type: "map_meta";
  width: number;
  height: number;
  resolution: number;
  origin: PoseMsg;
  cells: string;
}

export interface ScanMsg {
  angle_min: number;
  angle_increment: number;
  ranges: number[];
}

export interface RolloutMsg {
  cost: number;
  points: [number, number][];
}

export interface MuxMsg {
  active_source: string | null;
  speed: number;
  steering: number;
}

export interface StateFrame {
  type: "state";
  stamp: number;
  pose: PoseMsg;
  estimate: PoseMsg;
  scan: ScanMsg | null;
  particles: [number, number][];
  rollouts: RolloutMsg[];
  mux: MuxMsg;
  collided: boolean;
  goal: PoseMsg | null;
  done: boolean;
}

export interface ErrorFrame {
  type: "error";
  detail: string;
}

export type ServerFrame = MapMeta | StateFrame | ErrorFrame;

export const CELL_FREE = 0;
export const CELL_OCCUPIED = 1;
export const CELL_UNKNOWN = 2;

/** Decode the base64 run-length cell payload of a map_meta frame. */
export function decodeCells(data: string, count: number): Uint8Array {
  const bin = atob(data);
  if (bin.length % 3 !== 0) {
    throw new Error("cell run-length payload length not a multiple of 3");
  }
  const out = new Uint8Array(count);
  let pos = 0;
  for (let i = 0; i < bin.length; i += 3) {
    const value = bin.charCodeAt(i);
    const run = (bin.charCodeAt(i + 1) << 8) | bin.charCodeAt(i + 2);
    if (pos + run > count) {
      throw new Error(`run-length payload overflows ${count} cells`);
    }
    out.fill(value, pos, pos + run);
    pos += run;
  }
  if (pos !== count) {
    throw new Error(`run-length payload decodes to ${pos} cells, expected ${count}`);
  }
  return out;
}

/** Parse a server frame; throws on anything that is not a typed object. */
export function parseFrame(text: string): ServerFrame {
  const frame: unknown = JSON.parse(text);
  if (typeof frame !== "object" || frame === null ||
      typeof (frame as { type?: unknown }).type !== "string") {
    throw new Error("frame must be an object with a 'type' field");
  }
  const type = (frame as { type: string }).type;
  if (type !== "map_meta" && type !== "state" && type !== "error") {
    throw new Error(`unknown frame type '${type}'`);
  }
  return frame as ServerFrame;
}

export function driveFrame(speed: number, steering: number): string {
  return JSON.stringify({ type: "drive", speed, steering });
}

export function goalFrame(x: number, y: number): string {
  return JSON.stringify({ type: "goal", x, y });
}

export function estopFrame(): string {
  return JSON.stringify({ type: "estop" });
}
