import { describe, expect, it } from "vitest";

import { RenderLoop, StripChart, armPoints, flexNeedleDeg } from "../src/view.js";

function dist(a: { x: number; y: number }, b: { x: number; y: number }): number {
  return Math.hypot(a.x - b.x, a.y - b.y);
}

describe("armPoints", () => {
  it("hangs straight down at zero angles", () => {
    const [sh, el, wr] = armPoints("R", { abdDeg: 0, flexDeg: 0, elbowDeg: 0 }, 60, 50);
    expect(sh).toEqual({ x: 0, y: 0 });
    expect(el.x).toBeCloseTo(0);
    expect(el.y).toBeCloseTo(60);
    expect(wr.x).toBeCloseTo(0);
    expect(wr.y).toBeCloseTo(110);
  });

  it("keeps segment lengths under any pose", () => {
    for (const pose of [
      { abdDeg: 37, flexDeg: 10, elbowDeg: 64 },
      { abdDeg: 90, flexDeg: 0, elbowDeg: 115 },
      { abdDeg: 5, flexDeg: 80, elbowDeg: 0 },
    ]) {
      const [sh, el, wr] = armPoints("L", pose, 60, 50);
      expect(dist(sh, el)).toBeCloseTo(60);
      expect(dist(el, wr)).toBeCloseTo(50);
    }
  });

  it("bends a right angle at 90 degrees of elbow flexion", () => {
    const [sh, el, wr] = armPoints("R", { abdDeg: 0, flexDeg: 0, elbowDeg: 90 }, 60, 50);
    const upper = { x: el.x - sh.x, y: el.y - sh.y };
    const fore = { x: wr.x - el.x, y: wr.y - el.y };
    expect(upper.x * fore.x + upper.y * fore.y).toBeCloseTo(0);
  });

  it("lifts the upper arm horizontally at 90 degrees of abduction, mirrored per side", () => {
    const [, elR] = armPoints("R", { abdDeg: 90, flexDeg: 0, elbowDeg: 0 }, 60, 50);
    const [, elL] = armPoints("L", { abdDeg: 90, flexDeg: 0, elbowDeg: 0 }, 60, 50);
    expect(elR.x).toBeCloseTo(60);
    expect(elR.y).toBeCloseTo(0);
    expect(elL.x).toBeCloseTo(-60);
    expect(elL.y).toBeCloseTo(0);
  });
});

describe("flexNeedleDeg", () => {
  it("clamps into the anatomical flexion range", () => {
    expect(flexNeedleDeg(0)).toBeCloseTo(0);
    expect(flexNeedleDeg(115)).toBeCloseTo(90);
    expect(flexNeedleDeg(500)).toBeCloseTo(90);
    expect(flexNeedleDeg(-500)).toBeCloseTo(flexNeedleDeg(-20));
  });
});

describe("StripChart", () => {
  it("drops samples that fall out of the window", () => {
    const c = new StripChart(1000);
    c.push(0, 1);
    c.push(500, 2);
    c.push(1500, 3);
    expect(c.size()).toBe(2);
    expect(c.latest()).toBe(3);
  });

  it("starts over when stream time jumps backwards", () => {
    const c = new StripChart(1000);
    c.push(5000, 1);
    c.push(10, 2);
    expect(c.size()).toBe(1);
    expect(c.latest()).toBe(2);
  });

  it("renders an svg path spanning the window", () => {
    const c = new StripChart(1000);
    expect(c.path(100, 50)).toBe("");
    c.push(0, 0);
    expect(c.path(100, 50)).toBe("");
    c.push(1000, 10);
    const p = c.path(100, 50);
    expect(p.startsWith("M")).toBe(true);
    expect(p).toContain("L");
    // newest sample sits at the right edge, lowest value at the bottom
    expect(p.endsWith("L100.0 0.0")).toBe(true);
  });

  it("pads a flat series so the line stays visible", () => {
    const c = new StripChart(1000);
    c.push(0, 5);
    c.push(100, 5);
    expect(c.bounds()).toEqual({ lo: 4, hi: 6 });
  });
});

describe("RenderLoop", () => {
  it("repaints at ten frames per second or better while telemetry flows", () => {
    let now = 0;
    const loop = new RenderLoop({ maxFps: 30, minFps: 2, now: () => now });
    let renders = 0;
    // 60 Hz animation ticks for one second, data arriving faster than that
    for (let tick = 0; tick < 60; tick += 1) {
      now = tick * (1000 / 60);
      loop.markDirty();
      if (loop.due()) {
        renders += 1;
      }
    }
    expect(renders).toBeGreaterThanOrEqual(10);
    expect(renders).toBeLessThanOrEqual(40);
    expect(loop.fps()).toBeGreaterThanOrEqual(10);
  });

  it("coalesces bursts instead of repainting per frame", () => {
    let now = 0;
    const loop = new RenderLoop({ maxFps: 30, minFps: 2, now: () => now });
    let renders = 0;
    for (let tick = 0; tick < 480; tick += 1) {
      now = tick * (1000 / 480);
      loop.markDirty();
      if (loop.due()) {
        renders += 1;
      }
    }
    // 480 dirty marks in one second must not mean 480 repaints
    expect(renders).toBeLessThanOrEqual(40);
  });

  it("keeps a slow heartbeat with no data at all", () => {
    let now = 0;
    const loop = new RenderLoop({ maxFps: 30, minFps: 2, now: () => now });
    let renders = 0;
    for (let tick = 0; tick < 120; tick += 1) {
      now = tick * (2000 / 120);
      if (loop.due()) {
        renders += 1;
      }
    }
    expect(renders).toBeGreaterThanOrEqual(2);
    expect(renders).toBeLessThanOrEqual(8);
  });
});
