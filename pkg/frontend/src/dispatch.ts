/** Turn a strategy pick plus panel values into the exact wire line.
 *
 * The output here is pinned byte for byte by test/fixtures/dispatch.json,
 * which the daemon's own test suite parses too; if either side drifts from
 * the shared grammar one of the two suites goes red.
 */

import { formatNumber } from "./protocol.js";

export type ParamValue = number | string;
export type Params = Readonly<Record<string, ParamValue>>;

function num(params: Params, key: string): string {
  const v = params[key];
  if (typeof v !== "number") {
    throw new Error(`missing numeric parameter ${key}`);
  }
  return formatNumber(v);
}

function word(params: Params, key: string): string {
  const v = params[key];
  if (typeof v !== "string" || v === "" || v.includes(" ")) {
    throw new Error(`missing token parameter ${key}`);
  }
  return v;
}

function selector(joints: readonly string[]): string {
  if (joints.length === 0) {
    throw new Error("no joints selected");
  }
  return joints.join(",");
}

function one(joints: readonly string[]): string {
  if (joints.length !== 1) {
    throw new Error(`expected exactly one joint, got ${joints.length}`);
  }
  return joints[0];
}

/** Build the command line for a strategy dispatch. Throws on a selection
 * that cannot form a valid line; it never talks to the daemon itself. */
export function buildCommand(strategy: string, joints: readonly string[], params: Params): string {
  switch (strategy) {
    case "resist":
    case "amplify":
      return `${strategy} ${selector(joints)} ${num(params, "torque")} ${word(params, "direction")}`;
    case "moveto":
      return (
        `moveto ${selector(joints)} ${word(params, "mode")} ${num(params, "angle")} ` +
        `${num(params, "epsilon")} ${num(params, "velocity")}`
      );
    case "lock":
      return `lock ${selector(joints)}`;
    case "unlock":
      return `unlock ${selector(joints)}`;
    case "gesture":
      return `gesture ${word(params, "side")}`;
    case "vibrate":
      return (
        `vibrate ${selector(joints)} ${num(params, "amplitude")} ` +
        `${num(params, "frequency")} ${num(params, "duration_ms")}`
      );
    case "mirror": {
      if (joints.length !== 2) {
        throw new Error("mirror needs a source and a destination joint");
      }
      return `mirror ${joints[0]} ${joints[1]} ${num(params, "factor")}`;
    }
    case "filtervel":
      return (
        `filtervel ${one(joints)} ${num(params, "v_min")} ${num(params, "v_max")} ` +
        `${num(params, "tau_assist")} ${num(params, "tau_resist")}`
      );
    case "jerks": {
      const count = params["count"];
      if (typeof count !== "number" || !Number.isInteger(count) || count < 1) {
        throw new Error("jerks count must be a positive integer");
      }
      return (
        `jerks ${one(joints)} ${num(params, "disp_min")} ${num(params, "disp_max")} ` +
        `${num(params, "interval_min_ms")} ${num(params, "interval_max_ms")} ${count}`
      );
    }
    case "constrain":
      return `constrain ${one(joints)} ${num(params, "center")} ${num(params, "epsilon")}`;
    case "guideto":
    case "guideaway":
      return (
        `${strategy} ${one(joints)} ${num(params, "center")} ${num(params, "epsilon")} ` +
        `${num(params, "tau_assist")} ${num(params, "tau_resist")}`
      );
    case "stop":
      return "stop";
    case "panic":
      return "panic";
    default:
      throw new Error(`unknown strategy ${JSON.stringify(strategy)}`);
  }
}
