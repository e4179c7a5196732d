/** Browser wiring: one websocket, one session, one animation loop.
 *
 * Everything testable lives in the sibling modules; this file only binds
 * them to the DOM. The page is served by the daemon bridge, which relays
 * each websocket message to the daemon as one protocol line and back, so
 * the dashboard holds no privileged channel of any kind.
 */

import { buildCommand, ParamValue } from "./dispatch.js";
import {
  JointInfo,
  TelemetryFrame,
  parseTelemetry,
} from "./protocol.js";
import {
  StrategySpec,
  dispatchableJoints,
  strategyCatalog,
} from "./schema.js";
import { Session, SessionSnapshot, Transport } from "./session.js";
import { RenderLoop, StripChart, armPoints, flexNeedleDeg } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`page is missing #${id}`);
  }
  return node as T;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

// --- transport -------------------------------------------------------------

class WsTransport implements Transport {
  private readonly ws: WebSocket;

  constructor(url: string, onLine: (line: string) => void, onClose: (reason: string) => void) {
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => {
      // the bridge sends one line per message; split defensively anyway
      for (const part of String(ev.data).split("\n")) {
        const line = part.endsWith("\r") ? part.slice(0, -1) : part;
        if (line !== "") {
          onLine(line);
        }
      }
    };
    this.ws.onclose = (ev) => onClose(ev.reason !== "" ? ev.reason : "connection closed");
  }

  send(line: string): void {
    if (this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(line);
    }
  }

  close(): void {
    this.ws.close();
  }
}

// daemon endpoint comes from the URL, never from the build:
//   ?ws=ws://host:port/ws        talk to that bridge
//   ?connect=host:port           ask this page's bridge to dial that daemon
function bridgeUrl(): string {
  const params = new URLSearchParams(location.search);
  const explicit = params.get("ws");
  if (explicit !== null) {
    return explicit;
  }
  const connect = params.get("connect");
  const base = `ws://${location.host}/ws`;
  return connect !== null ? `${base}?connect=${encodeURIComponent(connect)}` : base;
}

// --- state -----------------------------------------------------------------

const loop = new RenderLoop({ maxFps: 30 });
const session = new Session({ onChange: () => loop.markDirty() });

const CHART_WINDOW_MS = 8000;
const angleCharts = new Map<string, StripChart>();
const velCharts = new Map<string, StripChart>();
let focusJoint: string | null = null;
let retryMs = 1000;
let currentStrategy = "resist";
let panelKey = "";
const pickedJoints = new Set<string>();

function chartFor(map: Map<string, StripChart>, joint: string): StripChart {
  let c = map.get(joint);
  if (c === undefined) {
    c = new StripChart(CHART_WINDOW_MS);
    map.set(joint, c);
  }
  return c;
}

function tapTelemetry(line: string): void {
  let frame: TelemetryFrame;
  try {
    frame = parseTelemetry(line);
  } catch {
    return;
  }
  chartFor(angleCharts, frame.joint).push(frame.tMs, frame.angleDeg);
  chartFor(velCharts, frame.joint).push(frame.tMs, frame.velocityDegS);
  if (focusJoint === null) {
    focusJoint = frame.joint;
  }
}

function connect(): void {
  const transport = new WsTransport(
    bridgeUrl(),
    (line) => {
      if (line.startsWith("T ")) {
        tapTelemetry(line);
      }
      session.handleLine(line);
    },
    (reason) => {
      session.transportClosed(reason);
      setTimeout(connect, retryMs);
      retryMs = Math.min(retryMs * 2, 10000);
    },
  );
  session.attach(transport);
}

// --- dispatch panel --------------------------------------------------------

function selectedInfos(snap: SessionSnapshot): JointInfo[] {
  if (snap.rig === null) {
    return [];
  }
  return snap.rig.joints.filter((j) => pickedJoints.has(j.id));
}

function catalog(snap: SessionSnapshot): StrategySpec[] {
  if (snap.rig === null) {
    return [];
  }
  return strategyCatalog(snap.rig, selectedInfos(snap));
}

function currentSpec(snap: SessionSnapshot): StrategySpec | null {
  return catalog(snap).find((s) => s.id === currentStrategy) ?? null;
}

/** Rebuild the strategy picker, joint checkboxes and parameter sliders. */
function buildPanel(snap: SessionSnapshot): void {
  const specs = catalog(snap);
  const select = el<HTMLSelectElement>("strategy");
  if (select.options.length !== specs.length) {
    select.innerHTML = specs
      .map((s) => `<option value="${s.id}">${esc(s.label)}</option>`)
      .join("");
  }
  select.value = currentStrategy;

  const picker = el<HTMLDivElement>("joint-picker");
  if (snap.rig !== null && picker.childElementCount === 0) {
    picker.innerHTML = dispatchableJoints(snap.rig)
      .map(
        (j) =>
          `<label><input type="checkbox" data-joint="${j.id}"` +
          `${pickedJoints.has(j.id) ? " checked" : ""}> ${j.id}</label>`,
      )
      .join("");
    picker.querySelectorAll("input").forEach((box) => {
      box.addEventListener("change", () => {
        const id = box.dataset["joint"] as string;
        if (box.checked) {
          pickedJoints.add(id);
        } else {
          pickedJoints.delete(id);
        }
      });
    });
  }

  // sliders keep their drag state: only rebuild when the shape changes
  const key = `${currentStrategy}|${[...pickedJoints].sort().join(",")}|${snap.rig === null ? 0 : 1}`;
  if (key !== panelKey) {
    panelKey = key;
    rebuildParams(snap);
  }
}

function rebuildParams(snap: SessionSnapshot): void {
  const spec = currentSpec(snap);
  const box = el<HTMLDivElement>("params");
  if (spec === null) {
    box.innerHTML = "";
    return;
  }
  const rows: string[] = [];
  for (const p of spec.params) {
    rows.push(
      `<label class="param">${p.name} <span class="unit">${p.unit}</span>` +
        `<input type="range" data-param="${p.name}" min="${p.min}" max="${p.max}"` +
        ` step="${p.step}" value="${p.default}">` +
        `<output>${p.default}</output></label>`,
    );
  }
  for (const c of spec.choices) {
    const opts = c.choices
      .map((v) => `<option value="${v}"${v === c.default ? " selected" : ""}>${v}</option>`)
      .join("");
    rows.push(
      `<label class="param">${c.name}<select data-choice="${c.name}">${opts}</select></label>`,
    );
  }
  box.innerHTML = rows.join("");
  box.querySelectorAll("input[type=range]").forEach((slider) => {
    slider.addEventListener("input", () => {
      const out = slider.parentElement?.querySelector("output");
      if (out) {
        out.textContent = (slider as HTMLInputElement).value;
      }
    });
  });
}

function readPanel(snap: SessionSnapshot): { line: string } | { error: string } {
  const spec = currentSpec(snap);
  if (spec === null) {
    return { error: "no rig yet" };
  }
  const params: Record<string, ParamValue> = {};
  el<HTMLDivElement>("params")
    .querySelectorAll("input[type=range]")
    .forEach((n) => {
      const input = n as HTMLInputElement;
      params[input.dataset["param"] as string] = Number(input.value);
    });
  el<HTMLDivElement>("params")
    .querySelectorAll("select[data-choice]")
    .forEach((n) => {
      const sel = n as HTMLSelectElement;
      params[sel.dataset["choice"] as string] = sel.value;
    });
  let joints = [...pickedJoints];
  if (spec.arity === "side" || spec.arity === "none") {
    joints = [];
  }
  try {
    return { line: buildCommand(spec.id, joints, params) };
  } catch (e) {
    return { error: e instanceof Error ? e.message : String(e) };
  }
}

// --- rendering -------------------------------------------------------------

const BADGE_TEXT: Record<string, string> = {
  idle: "idle",
  handshake: "connecting",
  connected: "connected",
  closed: "reconnecting",
  failed: "failed",
};

function renderBadges(snap: SessionSnapshot): void {
  const conn = el<HTMLSpanElement>("conn-badge");
  conn.textContent = BADGE_TEXT[snap.connection] ?? snap.connection;
  conn.className = `badge ${snap.connection === "connected" ? "good" : "bad"}`;
  el<HTMLSpanElement>("stale-badge").classList.toggle("hidden", !snap.stale);
  const halt = el<HTMLSpanElement>("halt-badge");
  halt.classList.toggle("hidden", snap.halted === null);
  if (snap.halted !== null) {
    halt.textContent = `HALTED (${snap.halted})`;
  }
  document.body.classList.toggle("halted", snap.halted !== null);
  el<HTMLButtonElement>("panic").disabled = snap.connection !== "connected";
  el<HTMLSpanElement>("fps").textContent = `${loop.fps()} fps`;
  const banner = el<HTMLDivElement>("error-banner");
  banner.classList.toggle("hidden", snap.lastError === null);
  banner.textContent = snap.lastError ?? "";
}

function renderJointsTable(snap: SessionSnapshot): void {
  if (snap.rig === null) {
    return;
  }
  const rows = snap.rig.joints.map((j) => {
    const f = snap.frames.get(j.id);
    const cells =
      f === undefined
        ? "<td>-</td><td>-</td><td>-</td>"
        : `<td>${f.angleDeg.toFixed(1)}</td><td>${f.velocityDegS.toFixed(1)}</td>` +
          `<td>${f.torqueNm.toFixed(2)}</td>`;
    const cls = j.id === focusJoint ? ' class="focus"' : "";
    return `<tr${cls} data-joint="${j.id}"><td>${j.id}</td><td>${j.kind}</td>${cells}</tr>`;
  });
  el<HTMLTableSectionElement>("joints-body").innerHTML = rows.join("");
}

function figureSvg(snap: SessionSnapshot): string {
  const parts: string[] = [
    '<circle cx="150" cy="40" r="16" class="bone"/>',
    '<line x1="150" y1="56" x2="150" y2="150" class="bone"/>',
    '<line x1="120" y1="70" x2="180" y2="70" class="bone"/>',
  ];
  for (const side of ["L", "R"] as const) {
    const sx = side === "R" ? 180 : 120;
    const get = (name: string) => snap.frames.get(`${side}.${name}`)?.angleDeg ?? 0;
    const [, elbow, wrist] = armPoints(side, {
      abdDeg: get("sh_abd"),
      flexDeg: get("sh_flex"),
      elbowDeg: get("elbow"),
    });
    const ex = sx + elbow.x;
    const ey = 70 + elbow.y;
    const wx = sx + wrist.x;
    const wy = 70 + wrist.y;
    parts.push(
      `<line x1="${sx}" y1="70" x2="${ex.toFixed(1)}" y2="${ey.toFixed(1)}" class="arm"/>`,
      `<line x1="${ex.toFixed(1)}" y1="${ey.toFixed(1)}" x2="${wx.toFixed(1)}" y2="${wy.toFixed(1)}" class="arm"/>`,
      `<circle cx="${ex.toFixed(1)}" cy="${ey.toFixed(1)}" r="4" class="hinge"/>`,
      `<circle cx="${wx.toFixed(1)}" cy="${wy.toFixed(1)}" r="3" class="hinge"/>`,
    );
    // small dial per shoulder for the flexion axis, which points at the viewer
    const needle = flexNeedleDeg(get("sh_flex"));
    const nx = sx + 14 * Math.sin(needle * (Math.PI / 180));
    const ny = 52 + -14 * Math.cos(needle * (Math.PI / 180));
    parts.push(
      `<circle cx="${sx}" cy="52" r="8" class="dial"/>`,
      `<line x1="${sx}" y1="52" x2="${nx.toFixed(1)}" y2="${ny.toFixed(1)}" class="needle"/>`,
    );
  }
  return parts.join("");
}

function renderCharts(): void {
  if (focusJoint === null) {
    return;
  }
  el<HTMLSpanElement>("focus-name").textContent = focusJoint;
  const angle = chartFor(angleCharts, focusJoint);
  const vel = chartFor(velCharts, focusJoint);
  el<HTMLElement>("chart-angle-path").setAttribute("d", angle.path(560, 120));
  el<HTMLElement>("chart-vel-path").setAttribute("d", vel.path(560, 120));
  const a = angle.latest();
  const v = vel.latest();
  el<HTMLSpanElement>("chart-angle-now").textContent = a === null ? "-" : `${a.toFixed(1)} deg`;
  el<HTMLSpanElement>("chart-vel-now").textContent = v === null ? "-" : `${v.toFixed(1)} deg/s`;
}

function renderActions(snap: SessionSnapshot): void {
  const list = snap.actions
    .map((a) => `<li><span class="mono">#${a.id}</span> ${esc(a.line)}</li>`)
    .join("");
  el<HTMLUListElement>("actions").innerHTML = list === "" ? "<li class=\"dim\">none</li>" : list;
}

function render(snap: SessionSnapshot): void {
  renderBadges(snap);
  renderJointsTable(snap);
  el<HTMLElement>("figure").innerHTML = figureSvg(snap);
  renderCharts();
  renderActions(snap);
  buildPanel(snap);
  const preview = readPanel(snap);
  el<HTMLDivElement>("preview").textContent =
    "line" in preview ? `> ${preview.line}` : preview.error;
}

// --- boot ------------------------------------------------------------------

function boot(): void {
  el<HTMLButtonElement>("panic").addEventListener("click", () => session.panic());
  el<HTMLButtonElement>("stop-all").addEventListener("click", () => session.stopAll());
  el<HTMLButtonElement>("start").addEventListener("click", () => {
    const r = readPanel(session.state());
    if ("line" in r) {
      el<HTMLDivElement>("last-line").textContent = `sent: ${r.line}`;
      session.dispatch(r.line, (reply) => {
        el<HTMLDivElement>("last-line").textContent =
          reply.kind === "ok"
            ? `sent: ${r.line}  (ok${reply.payload !== "" ? ` ${reply.payload}` : ""})`
            : `sent: ${r.line}  (err ${reply.code} ${reply.message})`;
      });
    } else {
      el<HTMLDivElement>("last-line").textContent = r.error;
    }
  });
  el<HTMLSelectElement>("strategy").addEventListener("change", () => {
    currentStrategy = el<HTMLSelectElement>("strategy").value;
  });
  el<HTMLTableSectionElement>("joints-body").addEventListener("click", (ev) => {
    const row = (ev.target as HTMLElement).closest("tr");
    if (row !== null && row.dataset["joint"] !== undefined) {
      focusJoint = row.dataset["joint"];
      loop.markDirty();
    }
  });

  // two default picks so the panel dispatches something sensible untouched
  pickedJoints.add("R.elbow");

  setInterval(() => {
    if (session.state().connection === "connected") {
      session.requestStatus();
      session.refreshActions();
    }
  }, 500);

  const animate = (): void => {
    if (loop.due()) {
      const snap = session.state();
      if (snap.connection === "connected") {
        retryMs = 1000;
      }
      render(snap);
    }
    requestAnimationFrame(animate);
  };
  requestAnimationFrame(animate);
  connect();
}

boot();
