/** Parameter schemas for the strategy panel.
 *
 * Slider bounds are derived from the same limits the daemon enforces, so a
 * value reachable through the UI is always a value the daemon will accept:
 * torques stay inside (0, 10] N*m, speeds inside (0, 462] deg/s, angles
 * inside the selected joints' software range.
 */

import {
  JointInfo,
  RigInfo,
  SPEED_CAP_DEG_S,
  TORQUE_CAP_NM,
  effectiveRange,
} from "./protocol.js";

export interface ParamSpec {
  name: string;
  unit: string;
  min: number;
  max: number;
  default: number;
  step: number;
}

export interface ChoiceSpec {
  name: string;
  choices: readonly string[];
  default: string;
}

/** How many joints a strategy wants from the picker. */
export type JointArity = "many" | "one" | "pair" | "side" | "none";

export interface StrategySpec {
  id: string;
  label: string;
  arity: JointArity;
  params: ParamSpec[];
  choices: ChoiceSpec[];
}

function torque(name: string, dflt: number): ParamSpec {
  return { name, unit: "N*m", min: 0.1, max: TORQUE_CAP_NM, default: dflt, step: 0.1 };
}

const DIRECTION: ChoiceSpec = { name: "direction", choices: ["both", "pos", "neg"], default: "both" };

/** Joints the panel may dispatch to; only motored joints take commands. */
export function dispatchableJoints(rig: RigInfo): JointInfo[] {
  return rig.joints.filter((j) => j.kind === "actuated");
}

/** Intersection of the selected joints' software ranges. */
function sharedRange(joints: readonly JointInfo[]): [number, number] {
  let lo = -Infinity;
  let hi = Infinity;
  for (const j of joints) {
    const [a, b] = effectiveRange(j);
    lo = Math.max(lo, a);
    hi = Math.min(hi, b);
  }
  if (!Number.isFinite(lo) || hi <= lo) {
    return [0, 90];
  }
  return [lo, hi];
}

/** Build the full strategy catalog for the current joint selection.
 *
 * Angle-like bounds depend on which joints are picked, so the caller
 * re-evaluates this whenever the selection changes.
 */
export function strategyCatalog(rig: RigInfo, selected: readonly JointInfo[]): StrategySpec[] {
  const joints = selected.length > 0 ? selected : dispatchableJoints(rig);
  const [lo, hi] = sharedRange(joints);
  const width = hi - lo;
  const mid = Math.round(lo + width / 2);
  // vibration frequency is capped at a tenth of the control rate, and the
  // amplitude ceiling keeps 4*a*f under the speed envelope at full throw
  const freqMax = Math.min(10, rig.controlRateHz / 10);
  const ampMax = Math.min(10, SPEED_CAP_DEG_S / (4 * freqMax));

  return [
    {
      id: "resist",
      label: "Resist motion",
      arity: "many",
      params: [torque("torque", 1.5)],
      choices: [DIRECTION],
    },
    {
      id: "amplify",
      label: "Amplify motion",
      arity: "many",
      params: [torque("torque", 2)],
      choices: [DIRECTION],
    },
    {
      id: "moveto",
      label: "Move to angle",
      arity: "many",
      params: [
        { name: "angle", unit: "deg", min: lo, max: hi, default: mid, step: 1 },
        { name: "epsilon", unit: "deg", min: 0, max: 10, default: 1, step: 0.1 },
        { name: "velocity", unit: "deg/s", min: 1, max: SPEED_CAP_DEG_S, default: 45, step: 1 },
      ],
      choices: [{ name: "mode", choices: ["abs", "rel"], default: "abs" }],
    },
    {
      id: "lock",
      label: "Lock in place",
      arity: "many",
      params: [],
      choices: [],
    },
    {
      id: "unlock",
      label: "Unlock",
      arity: "many",
      params: [],
      choices: [],
    },
    {
      id: "gesture",
      label: "Attention gesture",
      arity: "side",
      params: [],
      choices: [{ name: "side", choices: ["R", "L"], default: "R" }],
    },
    {
      id: "vibrate",
      label: "Vibrate",
      arity: "many",
      params: [
        { name: "amplitude", unit: "deg", min: 0.5, max: ampMax, default: 5, step: 0.5 },
        { name: "frequency", unit: "Hz", min: 0.5, max: freqMax, default: 2, step: 0.5 },
        { name: "duration_ms", unit: "ms", min: 100, max: 10000, default: 3000, step: 100 },
      ],
      choices: [],
    },
    {
      id: "mirror",
      label: "Mirror joint",
      arity: "pair",
      params: [
        { name: "factor", unit: "x", min: 0.25, max: 3, default: 1, step: 0.25 },
      ],
      choices: [],
    },
    {
      id: "filtervel",
      label: "Velocity corridor",
      arity: "one",
      params: [
        { name: "v_min", unit: "deg/s", min: 0, max: 100, default: 5, step: 1 },
        { name: "v_max", unit: "deg/s", min: 1, max: SPEED_CAP_DEG_S, default: 80, step: 1 },
        torque("tau_assist", 1),
        torque("tau_resist", 3),
      ],
      choices: [],
    },
    {
      id: "jerks",
      label: "Random jerks",
      arity: "one",
      params: [
        { name: "disp_min", unit: "deg", min: 0.5, max: width, default: Math.min(5, width), step: 0.5 },
        { name: "disp_max", unit: "deg", min: 0.5, max: width, default: Math.min(10, width), step: 0.5 },
        { name: "interval_min_ms", unit: "ms", min: 0, max: 2000, default: 400, step: 50 },
        { name: "interval_max_ms", unit: "ms", min: 0, max: 5000, default: 600, step: 50 },
        { name: "count", unit: "", min: 1, max: 20, default: 5, step: 1 },
      ],
      choices: [],
    },
    {
      id: "constrain",
      label: "Constrain to area",
      arity: "one",
      params: [
        { name: "center", unit: "deg", min: lo, max: hi, default: mid, step: 1 },
        { name: "epsilon", unit: "deg", min: 0, max: width, default: Math.min(15, width), step: 1 },
      ],
      choices: [],
    },
    {
      id: "guideto",
      label: "Guide towards area",
      arity: "one",
      params: [
        { name: "center", unit: "deg", min: lo, max: hi, default: mid, step: 1 },
        { name: "epsilon", unit: "deg", min: 0, max: width, default: Math.min(10, width), step: 1 },
        torque("tau_assist", 1),
        torque("tau_resist", 2),
      ],
      choices: [],
    },
    {
      id: "guideaway",
      label: "Guide away from area",
      arity: "one",
      params: [
        { name: "center", unit: "deg", min: lo, max: hi, default: mid, step: 1 },
        { name: "epsilon", unit: "deg", min: 0, max: width, default: Math.min(10, width), step: 1 },
        torque("tau_assist", 1),
        torque("tau_resist", 2),
      ],
      choices: [],
    },
  ];
}
