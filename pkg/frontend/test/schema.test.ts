import { describe, expect, it } from "vitest";

import { buildCommand } from "../src/dispatch.js";
import { parseConfig } from "../src/protocol.js";
import { dispatchableJoints, strategyCatalog } from "../src/schema.js";

const RIG = parseConfig(
  "rates=100:80 joints=" +
    "L.sh_abd:actuated:0:90:0:0:1;L.sh_flex:actuated:-20:115:0:0:1;" +
    "L.elbow:actuated:0:115:15:1:1;R.sh_abd:actuated:0:90:0:0:1;" +
    "R.sh_flex:actuated:-20:115:0:0:1;R.elbow:actuated:0:115:15:1:1;" +
    "R.wrist:passive:0:160:0:0:0",
);

describe("strategy catalog", () => {
  it("only offers motored joints for dispatch", () => {
    expect(dispatchableJoints(RIG).map((j) => j.id)).not.toContain("R.wrist");
    expect(dispatchableJoints(RIG)).toHaveLength(6);
  });

  it("never lets a slider reach past the daemon's envelope", () => {
    for (const spec of strategyCatalog(RIG, [])) {
      for (const p of spec.params) {
        expect(p.min).toBeLessThanOrEqual(p.max);
        expect(p.default).toBeGreaterThanOrEqual(p.min);
        expect(p.default).toBeLessThanOrEqual(p.max);
        expect(p.step).toBeGreaterThan(0);
        if (p.unit === "N*m") {
          expect(p.min).toBeGreaterThan(0);
          expect(p.max).toBeLessThanOrEqual(10);
        }
        if (p.unit === "deg/s") {
          expect(p.max).toBeLessThanOrEqual(462);
        }
      }
    }
  });

  it("clamps angle sliders to the selected joints' software range", () => {
    const elbow = RIG.joints.find((j) => j.id === "R.elbow");
    const spec = strategyCatalog(RIG, elbow ? [elbow] : [])
      .find((s) => s.id === "moveto");
    const angle = spec?.params.find((p) => p.name === "angle");
    // restricted elbow: 0..115 narrowed by 15 on both ends
    expect(angle?.min).toBe(15);
    expect(angle?.max).toBe(100);
  });

  it("keeps vibration inside the speed envelope at full throw", () => {
    const spec = strategyCatalog(RIG, []).find((s) => s.id === "vibrate");
    const amp = spec?.params.find((p) => p.name === "amplitude");
    const freq = spec?.params.find((p) => p.name === "frequency");
    expect(freq?.max).toBeLessThanOrEqual(10);
    expect(4 * (amp?.max ?? 99) * (freq?.max ?? 99)).toBeLessThanOrEqual(462);
  });

  it("dispatches a valid line from every strategy's defaults", () => {
    for (const spec of strategyCatalog(RIG, [])) {
      const joints =
        spec.arity === "pair"
          ? ["L.elbow", "R.elbow"]
          : spec.arity === "one" || spec.arity === "many"
            ? ["R.elbow"]
            : [];
      const params: Record<string, number | string> = {};
      for (const p of spec.params) {
        params[p.name] = p.default;
      }
      for (const c of spec.choices) {
        params[c.name] = c.default;
      }
      const line = buildCommand(spec.id, joints, params);
      expect(line.split(" ")[0]).toBe(spec.id);
    }
  });
});
