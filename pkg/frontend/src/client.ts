/**
 * WebSocket session: handshake (map_meta must arrive before any state
 * frame), latest-wins state slot, reconnect with backoff, and typed
 * senders for drive / goal / estop frames.
 */

import {
  decodeCells, driveFrame, estopFrame, goalFrame, MapMeta, parseFrame,
  StateFrame,
} from "./wire.js";

/** The subset of the WebSocket API the session uses; both the browser
 *  WebSocket and the npm "ws" client satisfy it. */
export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
  readyState: number;
}

export type WsFactory = (url: string) => WebSocketLike;

export interface SessionHandlers {
  onMap?(meta: MapMeta, cells: Uint8Array): void;
  onState?(frame: StateFrame): void;
  onError?(detail: string): void;
  onStatus?(status: "connecting" | "connected" | "disconnected"): void;
}

export interface SessionOptions {
  wsFactory?: WsFactory;
  /** reconnect delays in ms; the last entry repeats */
  backoffMs?: number[];
  reconnect?: boolean;
}

const WS_OPEN = 1;

export class Session {
  readonly url: string;
  map: MapMeta | null = null;
  cells: Uint8Array | null = null;
  latest: StateFrame | null = null;

  private readonly handlers: SessionHandlers;
  private readonly wsFactory: WsFactory;
  private readonly backoffMs: number[];
  private readonly reconnect: boolean;
  private ws: WebSocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(url: string, handlers: SessionHandlers = {},
              options: SessionOptions = {}) {
    this.url = url;
    this.handlers = handlers;
    this.wsFactory = options.wsFactory ??
      ((u: string) => new WebSocket(u) as unknown as WebSocketLike);
    this.backoffMs = options.backoffMs ?? [250, 500, 1000, 2000];
    this.reconnect = options.reconnect ?? true;
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    if (this.ws !== null) {
      this.ws.close();
      this.ws = null;
    }
  }

  private connect(): void {
    this.handlers.onStatus?.("connecting");
    // each (re)connection renegotiates the handshake from scratch
    this.map = null;
    this.cells = null;
    const ws = this.wsFactory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.handlers.onStatus?.("connected");
    };
    ws.onmessage = (ev) => this.onMessage(String(ev.data));
    ws.onerror = () => { /* onclose follows; backoff handles it */ };
    ws.onclose = () => {
      this.handlers.onStatus?.("disconnected");
      if (!this.stopped && this.reconnect) {
        const delay = this.backoffMs[
          Math.min(this.attempts, this.backoffMs.length - 1)];
        this.attempts += 1;
        this.retryTimer = setTimeout(() => this.connect(), delay);
      }
    };
  }

  private onMessage(text: string): void {
    let frame;
    try {
      frame = parseFrame(text);
    } catch (e) {
      this.handlers.onError?.(String(e instanceof Error ? e.message : e));
      return; // malformed frame: report and keep the session alive
    }
    switch (frame.type) {
      case "map_meta":
        try {
          this.cells = decodeCells(frame.cells, frame.width * frame.height);
        } catch (e) {
          this.handlers.onError?.(
            String(e instanceof Error ? e.message : e));
          return;
        }
        this.map = frame;
        this.handlers.onMap?.(frame, this.cells);
        break;
      case "state":
        if (this.map === null) {
          // handshake violation: the map must render first
          this.handlers.onError?.(
            "handshake violation: state frame before map_meta");
          this.ws?.close();
          return;
        }
        this.latest = frame;
        this.handlers.onState?.(frame);
        break;
      case "error":
        this.handlers.onError?.(frame.detail);
        break;
    }
  }

  private sendText(data: string): void {
    if (this.ws !== null && this.ws.readyState === WS_OPEN) {
      this.ws.send(data);
    }
  }

  sendDrive(speed: number, steering: number): void {
    this.sendText(driveFrame(speed, steering));
  }

  sendGoal(x: number, y: number): void {
    this.sendText(goalFrame(x, y));
  }

  sendEstop(): void {
    this.sendText(estopFrame());
  }
}
