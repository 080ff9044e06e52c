/**
 * Sampled teleop input: a fixed-rate loop polls the current input axes
 * and streams drive frames while any input is active. On release it
 * sends exactly one zero-drive frame and then goes silent, letting the
 * server-side staleness timeout release the mux.
 */

export interface DriveLimits {
  speed: number;
  steering: number;
}

export const DEFAULT_LIMITS: DriveLimits = { speed: 2.0, steering: 0.34 };

export interface AxesSample {
  /** forward/back in [-1, 1] */
  throttle: number;
  /** left-positive in [-1, 1] */
  steer: number;
}

/** Keyboard state -> axes; gamepad samples can be merged in the same shape. */
export class KeyAxes {
  private down = new Set<string>();

  keyDown(code: string): void {
    this.down.add(code);
  }

  keyUp(code: string): void {
    this.down.delete(code);
  }

  clear(): void {
    this.down.clear();
  }

  sample(): AxesSample {
    const has = (...codes: string[]) => codes.some((c) => this.down.has(c));
    const throttle = (has("KeyW", "ArrowUp") ? 1 : 0) -
                     (has("KeyS", "ArrowDown") ? 1 : 0);
    const steer = (has("KeyA", "ArrowLeft") ? 1 : 0) -
                  (has("KeyD", "ArrowRight") ? 1 : 0);
    return { throttle, steer };
  }
}

export function axesToDrive(axes: AxesSample, limits: DriveLimits):
    { speed: number; steering: number } {
  const clamp = (v: number) => Math.max(-1, Math.min(1, v));
  return {
    speed: clamp(axes.throttle) * limits.speed,
    steering: clamp(axes.steer) * limits.steering,
  };
}

export class TeleopLoop {
  readonly rateHz: number;
  private readonly sampleAxes: () => AxesSample;
  private readonly send: (speed: number, steering: number) => void;
  private readonly limits: DriveLimits;
  private wasActive = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(sampleAxes: () => AxesSample,
              send: (speed: number, steering: number) => void,
              limits: DriveLimits = DEFAULT_LIMITS, rateHz = 20) {
    this.sampleAxes = sampleAxes;
    this.send = send;
    this.limits = limits;
    this.rateHz = rateHz;
  }

  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => this.tick(), 1000 / this.rateHz);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One sampling step; exposed for deterministic tests. */
  tick(): void {
    const axes = this.sampleAxes();
    const active = axes.throttle !== 0 || axes.steer !== 0;
    if (active) {
      const d = axesToDrive(axes, this.limits);
      this.send(d.speed, d.steering);
    } else if (this.wasActive) {
      this.send(0, 0);
    }
    this.wasActive = active;
  }
}
