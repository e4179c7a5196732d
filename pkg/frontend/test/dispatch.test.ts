import { describe, expect, it } from "vitest";

import { buildCommand } from "../src/dispatch.js";
import entries from "./fixtures/dispatch.json";

interface FixtureEntry {
  strategy: string;
  joints: string[];
  params: Record<string, number | string>;
  line: string;
}

const fixture = entries as FixtureEntry[];

describe("strategy dispatch", () => {
  // the same fixture is parsed by the daemon's python suite, so a drift on
  // either side of the wire shows up as a red test there or here
  it("emits the exact fixture line for every strategy", () => {
    expect(fixture.length).toBeGreaterThan(10);
    for (const entry of fixture) {
      expect(buildCommand(entry.strategy, entry.joints, entry.params)).toBe(entry.line);
    }
  });

  it("covers every dispatchable verb in the fixture", () => {
    const verbs = new Set(fixture.map((e) => e.line.split(" ")[0]));
    for (const verb of [
      "resist", "amplify", "moveto", "lock", "unlock", "gesture", "vibrate",
      "mirror", "filtervel", "jerks", "constrain", "guideto", "guideaway",
      "stop", "panic",
    ]) {
      expect(verbs.has(verb)).toBe(true);
    }
  });

  it("refuses selections that cannot form a line", () => {
    expect(() => buildCommand("resist", [], { torque: 1, direction: "both" })).toThrow();
    expect(() => buildCommand("mirror", ["L.elbow"], { factor: 1 })).toThrow();
    expect(() =>
      buildCommand("filtervel", ["L.elbow", "R.elbow"], {
        v_min: 5, v_max: 80, tau_assist: 1, tau_resist: 3,
      }),
    ).toThrow();
    expect(() => buildCommand("moveto", ["R.elbow"], { mode: "abs", angle: 90 })).toThrow();
    expect(() =>
      buildCommand("jerks", ["R.elbow"], {
        disp_min: 5, disp_max: 10, interval_min_ms: 400, interval_max_ms: 600, count: 2.5,
      }),
    ).toThrow();
    expect(() => buildCommand("warp", ["R.elbow"], {})).toThrow();
    expect(() =>
      buildCommand("resist", ["R.elbow"], { torque: 1, direction: "both ways" }),
    ).toThrow();
  });

  it("writes numbers in canonical form", () => {
    expect(
      buildCommand("resist", ["R.elbow"], { torque: 2.5, direction: "both" }),
    ).toBe("resist R.elbow 2.5 both");
    expect(
      buildCommand("moveto", ["R.elbow"], { mode: "abs", angle: 90.0, epsilon: 0.5, velocity: 45 }),
    ).toBe("moveto R.elbow abs 90 0.5 45");
  });
});
