/** Presentation math kept away from the DOM so it can be unit tested:
 * stick-figure geometry, strip-chart buffers and the redraw governor.
 */

export interface Pt {
  x: number;
  y: number;
}

export interface ArmAngles {
  abdDeg: number;
  flexDeg: number;
  elbowDeg: number;
}

const RAD = Math.PI / 180;

/** Joint positions for one arm of the front-view figure.
 *
 * Returned as [shoulder, elbow, wrist] relative to the shoulder, in a
 * y-grows-down frame. Abduction swings the upper arm away from the torso
 * in the drawing plane; elbow flexion folds the forearm further the same
 * way, so a 90 degree elbow reads as an L regardless of arm pose.
 */
export function armPoints(
  side: "L" | "R",
  a: ArmAngles,
  upperLen = 60,
  foreLen = 50,
): [Pt, Pt, Pt] {
  const out = side === "R" ? 1 : -1;
  const shoulder = { x: 0, y: 0 };
  const ua = a.abdDeg * RAD;
  const elbow = {
    x: shoulder.x + out * upperLen * Math.sin(ua),
    y: shoulder.y + upperLen * Math.cos(ua),
  };
  const fa = (a.abdDeg + a.elbowDeg) * RAD;
  const wrist = {
    x: elbow.x + out * foreLen * Math.sin(fa),
    y: elbow.y + foreLen * Math.cos(fa),
  };
  return [shoulder, elbow, wrist];
}

/** Needle rotation for the shoulder-flexion gauge: maps flexion degrees
 * linearly onto a dial, 0 pointing down, full flexion pointing forward. */
export function flexNeedleDeg(flexDeg: number, minDeg = -20, maxDeg = 115): number {
  const clamped = Math.min(maxDeg, Math.max(minDeg, flexDeg));
  return (clamped / maxDeg) * 90;
}

interface Sample {
  tMs: number;
  v: number;
}

/** Sliding-window series buffer that renders itself as an SVG path. */
export class StripChart {
  private samples: Sample[] = [];

  constructor(readonly windowMs: number) {}

  push(tMs: number, v: number): void {
    const s = this.samples;
    // stream time only moves forward; a jump back means a daemon restart
    if (s.length > 0 && tMs < s[s.length - 1].tMs) {
      this.samples = [];
    }
    this.samples.push({ tMs, v });
    const cutoff = tMs - this.windowMs;
    let drop = 0;
    while (drop < this.samples.length && this.samples[drop].tMs < cutoff) {
      drop += 1;
    }
    if (drop > 0) {
      this.samples.splice(0, drop);
    }
  }

  size(): number {
    return this.samples.length;
  }

  latest(): number | null {
    return this.samples.length > 0 ? this.samples[this.samples.length - 1].v : null;
  }

  /** Value bounds of the buffered window, padded so a flat line is visible. */
  bounds(): { lo: number; hi: number } | null {
    if (this.samples.length === 0) {
      return null;
    }
    let lo = Infinity;
    let hi = -Infinity;
    for (const s of this.samples) {
      lo = Math.min(lo, s.v);
      hi = Math.max(hi, s.v);
    }
    if (hi - lo < 1e-9) {
      lo -= 1;
      hi += 1;
    }
    return { lo, hi };
  }

  /** SVG path for a width x height viewport; the time axis always spans the
   * full window ending at the newest sample. Empty string under two points. */
  path(width: number, height: number, vLo?: number, vHi?: number): string {
    if (this.samples.length < 2) {
      return "";
    }
    const b = this.bounds() as { lo: number; hi: number };
    const lo = vLo ?? b.lo;
    const hi = vHi ?? b.hi;
    const tEnd = this.samples[this.samples.length - 1].tMs;
    const tStart = tEnd - this.windowMs;
    const parts: string[] = [];
    for (let i = 0; i < this.samples.length; i += 1) {
      const s = this.samples[i];
      const x = ((s.tMs - tStart) / this.windowMs) * width;
      const y = height - ((s.v - lo) / (hi - lo)) * height;
      parts.push(`${i === 0 ? "M" : "L"}${x.toFixed(1)} ${y.toFixed(1)}`);
    }
    return parts.join(" ");
  }
}

export interface RenderLoopOptions {
  maxFps?: number;
  minFps?: number;
  now?: () => number;
}

/** Decides, once per animation tick, whether the panels should repaint.
 *
 * Telemetry arrives faster than anyone can watch, so repaints are
 * coalesced: at most maxFps when frames are flowing, and a slow heartbeat
 * of minFps regardless, which keeps clocks and the stale badge honest.
 */
export class RenderLoop {
  private readonly maxFps: number;
  private readonly minFps: number;
  private readonly now: () => number;
  private dirty = false;
  private lastRenderMs = -Infinity;
  private renderTimes: number[] = [];

  constructor(opts: RenderLoopOptions = {}) {
    this.maxFps = opts.maxFps ?? 30;
    this.minFps = opts.minFps ?? 2;
    this.now = opts.now ?? (() => Date.now());
  }

  /** New data arrived since the last repaint. */
  markDirty(): void {
    this.dirty = true;
  }

  /** Call from the animation loop; true means repaint now. */
  due(): boolean {
    const t = this.now();
    const since = t - this.lastRenderMs;
    const fire =
      (this.dirty && since >= 1000 / this.maxFps) || since >= 1000 / this.minFps;
    if (!fire) {
      return false;
    }
    this.dirty = false;
    this.lastRenderMs = t;
    this.renderTimes.push(t);
    while (this.renderTimes.length > 0 && this.renderTimes[0] < t - 1000) {
      this.renderTimes.shift();
    }
    return true;
  }

  /** Repaints over the trailing second. */
  fps(): number {
    return this.renderTimes.length;
  }
}
