/** Client side of the exokit wire protocol.
 *
 * Everything here mirrors the daemon's text grammar exactly: one line per
 * message, numbers with at most three decimals and no exponent, telemetry
 * pushed as unsolicited "T ..." lines between replies.
 */

export const GREETING = "proto v1";
export const MAX_LINE_BYTES = 512;

/** Hard envelope shared by every rig; the daemon rejects anything beyond it. */
export const TORQUE_CAP_NM = 10;
export const SPEED_CAP_DEG_S = 462;

export type JointKind = "actuated" | "sensing" | "passive";

export interface JointInfo {
  id: string;
  kind: JointKind;
  minDeg: number;
  maxDeg: number;
  restrictionDeg: number;
  hasLoadCell: boolean;
  calibrated: boolean;
}

export interface RigInfo {
  controlRateHz: number;
  telemetryRateHz: number;
  joints: JointInfo[];
}

export interface TelemetryFrame {
  tMs: number;
  joint: string;
  angleDeg: number;
  velocityDegS: number;
  accelDegS2: number;
  torqueNm: number;
  /** null when the joint has no load cell */
  loadKg: number | null;
}

export interface WireOk {
  kind: "ok";
  payload: string;
}

export interface WireErr {
  kind: "err";
  code: string;
  message: string;
}

export type WireResponse = WireOk | WireErr;

export interface LinkInfo {
  state: "up" | "lost";
  framesReceived: number;
  lastSourceTMs: number | null;
}

export interface StatusInfo {
  mode: string;
  tMs: number;
  dtMs: number;
  /** halt reason token, null while running */
  halted: string | null;
  joints: number;
  calibrated: number;
  actions: number;
  link: LinkInfo | null;
}

const NUMBER_RE = /^-?(\d+\.?\d*|\.\d+)$/;

/** Canonical wire form: up to three decimals, no trailing zeros. */
export function formatNumber(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot encode ${x}`);
  }
  const s = x.toFixed(3).replace(/0+$/, "").replace(/\.$/, "");
  return s === "-0" || s === "" ? "0" : s;
}

function num(token: string, context: string): number {
  if (!NUMBER_RE.test(token)) {
    throw new Error(`${context}: bad number ${JSON.stringify(token)}`);
  }
  return Number(token);
}

function int(token: string, context: string): number {
  if (!/^-?\d+$/.test(token)) {
    throw new Error(`${context}: bad integer ${JSON.stringify(token)}`);
  }
  return Number(token);
}

export function isTelemetry(line: string): boolean {
  return line.startsWith("T ");
}

/** Parse "T <t> <joint> <angle> <vel> <accel> <torque> [load]". */
export function parseTelemetry(line: string): TelemetryFrame {
  const f = line.split(" ");
  if (f[0] !== "T" || f.length < 7 || f.length > 8) {
    throw new Error(`bad telemetry line: ${line}`);
  }
  return {
    tMs: num(f[1], "telemetry t"),
    joint: f[2],
    angleDeg: num(f[3], "telemetry angle"),
    velocityDegS: num(f[4], "telemetry velocity"),
    accelDegS2: num(f[5], "telemetry accel"),
    torqueNm: num(f[6], "telemetry torque"),
    loadKg: f.length === 8 ? num(f[7], "telemetry load") : null,
  };
}

/** Parse an "ok [payload]" or "err CODE message" reply line. */
export function parseResponse(line: string): WireResponse {
  if (line === "ok") {
    return { kind: "ok", payload: "" };
  }
  if (line.startsWith("ok ")) {
    return { kind: "ok", payload: line.slice(3) };
  }
  if (line.startsWith("err ")) {
    const rest = line.slice(4);
    const sp = rest.indexOf(" ");
    if (sp < 0) {
      return { kind: "err", code: rest, message: "" };
    }
    return { kind: "err", code: rest.slice(0, sp), message: rest.slice(sp + 1) };
  }
  throw new Error(`not a reply line: ${line}`);
}

function fields(payload: string, context: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const part of payload.split(" ")) {
    if (part === "") continue;
    const eq = part.indexOf("=");
    if (eq <= 0) {
      throw new Error(`${context}: bad field ${JSON.stringify(part)}`);
    }
    out.set(part.slice(0, eq), part.slice(eq + 1));
  }
  return out;
}

function need(m: Map<string, string>, key: string, context: string): string {
  const v = m.get(key);
  if (v === undefined) {
    throw new Error(`${context}: missing ${key}=`);
  }
  return v;
}

/** Parse the payload of an "ok" reply to "status". */
export function parseStatus(payload: string): StatusInfo {
  const m = fields(payload, "status");
  const haltedToken = need(m, "halted", "status");
  let link: LinkInfo | null = null;
  const linkToken = m.get("link");
  if (linkToken !== undefined) {
    const p = linkToken.split(":");
    if (p.length !== 3 || (p[0] !== "up" && p[0] !== "lost")) {
      throw new Error(`status: bad link field ${JSON.stringify(linkToken)}`);
    }
    link = {
      state: p[0],
      framesReceived: int(p[1], "status link frames"),
      lastSourceTMs: p[2] === "-" ? null : num(p[2], "status link t"),
    };
  }
  return {
    mode: need(m, "mode", "status"),
    tMs: num(need(m, "t", "status"), "status t"),
    dtMs: num(need(m, "dt", "status"), "status dt"),
    halted: haltedToken === "0" ? null : haltedToken,
    joints: int(need(m, "joints", "status"), "status joints"),
    calibrated: int(need(m, "calibrated", "status"), "status calibrated"),
    actions: int(need(m, "actions", "status"), "status actions"),
    link,
  };
}

const JOINT_KINDS: readonly JointKind[] = ["actuated", "sensing", "passive"];

/** Parse the payload of an "ok" reply to "config".
 *
 * Shape: "rates=<control>:<telemetry> joints=<entry>;<entry>;..." where each
 * entry is "id:kind:min:max:restriction:loadcell:calibrated".
 */
export function parseConfig(payload: string): RigInfo {
  const m = fields(payload, "config");
  const rates = need(m, "rates", "config").split(":");
  if (rates.length !== 2) {
    throw new Error("config: bad rates field");
  }
  const joints: JointInfo[] = [];
  for (const entry of need(m, "joints", "config").split(";")) {
    const p = entry.split(":");
    if (p.length !== 7) {
      throw new Error(`config: bad joint entry ${JSON.stringify(entry)}`);
    }
    const kind = p[1] as JointKind;
    if (!JOINT_KINDS.includes(kind)) {
      throw new Error(`config: unknown joint kind ${JSON.stringify(p[1])}`);
    }
    joints.push({
      id: p[0],
      kind,
      minDeg: num(p[2], "config rom min"),
      maxDeg: num(p[3], "config rom max"),
      restrictionDeg: num(p[4], "config restriction"),
      hasLoadCell: p[5] === "1",
      calibrated: p[6] === "1",
    });
  }
  if (joints.length === 0) {
    throw new Error("config: no joints");
  }
  return {
    controlRateHz: num(rates[0], "config control rate"),
    telemetryRateHz: num(rates[1], "config telemetry rate"),
    joints,
  };
}

/** Software range the daemon actually enforces for a joint. */
export function effectiveRange(j: JointInfo): [number, number] {
  return [j.minDeg + j.restrictionDeg, j.maxDeg - j.restrictionDeg];
}
