"""TCP daemon binding the plant, controller, and wire protocol together.

One loop thread owns the world and controller; reader threads only push
parsed-ready lines into a mailbox, so every command executes between ticks
in arrival order and a fixed seed replays bit-identically.

Clock modes:
  realtime   - ticks paced to the wall clock at the control rate
  fast:<x>   - same loop, wall period divided by x
  lockstep   - no free-running ticks; time advances only on ``step n``

Telemetry frames are stamped with their scheduled emission time (exact
multiples of the subscription period) and carry the joint state of the tick
that crossed that time.  Every emitted frame is also appended to the log
file when one is configured.
"""

from __future__ import annotations

import os
import queue
import socket
import threading
import time
from dataclasses import dataclass
from typing import Sequence

from . import actions as act
from .controller import Controller, ProgramHandle
from .errors import (
    BadRangeError,
    ExoKitError,
    MappingInvalidError,
    NotActuatedError,
    PeerUnreachableError,
    ProtocolError,
)
from .model import ExoskeletonConfig, JointId, JointKind, load_config
from .proto import (
    GREETING,
    ArmSelector,
    CmdAmplify,
    CmdCalibrate,
    CmdConfig,
    CmdConstrain,
    CmdFilterVel,
    CmdGesture,
    CmdGuide,
    CmdJerks,
    CmdLink,
    CmdLinkOff,
    CmdLock,
    CmdMirror,
    CmdMoveTo,
    CmdPanic,
    CmdResist,
    CmdSense,
    CmdStatus,
    CmdStep,
    CmdStop,
    CmdStream,
    CmdUnlock,
    CmdVibrate,
    Command,
    JointSelector,
    Response,
    TelemetryFrame,
    err_response,
    format_number,
    ok_response,
    parse_command,
    parse_telemetry,
)
from .sim import SimWorld

LINK_GRACE_MS = 250.0    # sim-time staleness window before a link releases
_RECV_BUFFER_CAP = 65536


@dataclass(frozen=True)
class ClockSpec:
    mode: str            # "realtime" | "fast" | "lockstep"
    factor: float = 1.0

    @classmethod
    def parse(cls, text: str) -> "ClockSpec":
        if text == "realtime":
            return cls("realtime")
        if text == "lockstep":
            return cls("lockstep")
        if text.startswith("fast:"):
            try:
                factor = float(text.split(":", 1)[1])
            except ValueError:
                raise BadRangeError(f"bad clock multiplier in {text!r}") from None
            if factor <= 0:
                raise BadRangeError("clock multiplier must be positive")
            return cls("fast", factor)
        raise BadRangeError(f"clock must be realtime, fast:<x>, or lockstep, got {text!r}")

    def __str__(self) -> str:
        if self.mode == "fast":
            return f"fast:{format_number(self.factor)}"
        return self.mode


@dataclass
class _Stream:
    joints: tuple[JointId, ...]
    period_ms: float
    next_due_ms: float


class _Client:
    _counter = 0

    def __init__(self, conn: socket.socket, addr):
        _Client._counter += 1
        self.seq = _Client._counter
        self.conn = conn
        self.addr = addr
        self.streams: list[_Stream] = []
        self.alive = True
        self.write_lock = threading.Lock()

    def send_line(self, line: str) -> None:
        if not self.alive:
            return
        try:
            with self.write_lock:
                self.conn.sendall(line.encode("utf-8") + b"\n")
        except OSError:
            self.alive = False


@dataclass
class _ClientLine:
    client: _Client
    raw: bytes


@dataclass
class _ClientGone:
    client: _Client


@dataclass
class _LinkFrame:
    source: JointId
    angle: float
    source_t_ms: float


@dataclass
class _LinkLost:
    pass


class _Link:
    """Client connection to a peer daemon feeding a RemoteFollowAction."""

    def __init__(self, daemon: "ExoDaemon", endpoint: str,
                 mappings: Sequence[tuple[JointId, JointId, float]]):
        self.daemon = daemon
        self.endpoint = endpoint
        self.mappings = tuple(mappings)
        self.action = act.remote_follow(daemon.controller.config, mappings,
                                        grace_ms=LINK_GRACE_MS)
        self.handle: ProgramHandle | None = None
        self.sock: socket.socket | None = None
        self.lost = False
        self._thread: threading.Thread | None = None
        self._carry = b""

    def connect(self) -> None:
        host, _, port_s = self.endpoint.rpartition(":")
        try:
            self.sock = socket.create_connection((host, int(port_s)), timeout=2.0)
            self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError as exc:
            raise PeerUnreachableError(f"{self.endpoint}: {exc}") from None
        sources = sorted({src for src, _, _ in self.mappings},
                         key=lambda j: j.sort_key())
        joints = ",".join(str(j) for j in sources)
        rate = self.daemon.controller.config.control_rate_hz
        line = f"stream on {joints} {format_number(rate)}\n"
        try:
            self.sock.sendall(line.encode("utf-8"))
            reply = self._await_subscription()
        except OSError as exc:
            self.close()
            raise PeerUnreachableError(f"{self.endpoint}: {exc}") from None
        if not reply.startswith("ok"):
            self.close()
            if reply.startswith("err"):
                raise MappingInvalidError(f"{self.endpoint} refused: {reply}")
            raise PeerUnreachableError(f"{self.endpoint}: closed during subscribe")
        # frames may lag arbitrarily (a lockstep peer ticks on demand), so
        # from here on reads must block without a wall-clock limit
        self.sock.settimeout(None)
        self._thread = threading.Thread(target=self._read, daemon=True,
                                        name="exokit-link")
        self._thread.start()

    def _await_subscription(self) -> str:
        """First reply line after the greeting, or "" on EOF.

        The link command must not succeed before the peer has the stream
        registered: a tick on the peer in between would emit nothing and a
        lockstep pair would wait on each other forever.  Bytes past the
        reply are kept for the reader thread.
        """
        buf = bytearray()
        while True:
            idx = buf.find(b"\n")
            if idx >= 0:
                line = bytes(buf[:idx]).rstrip(b"\r").decode("utf-8", "replace")
                del buf[:idx + 1]
                if line.startswith("ok") or line.startswith("err"):
                    self._carry = bytes(buf)
                    return line
                continue
            chunk = self.sock.recv(4096)
            if not chunk:
                return ""
            buf.extend(chunk)

    def _read(self) -> None:
        sock = self.sock
        buf = bytearray(self._carry)
        try:
            while True:
                while True:
                    idx = buf.find(b"\n")
                    if idx < 0:
                        break
                    line = bytes(buf[:idx]).rstrip(b"\r").decode("utf-8", "replace")
                    del buf[:idx + 1]
                    if line.startswith("T "):
                        try:
                            frame = parse_telemetry(line)
                        except ProtocolError:
                            continue
                        self.daemon._mailbox.put(_LinkFrame(
                            frame.joint, frame.angle, frame.t_ms))
                chunk = sock.recv(4096)
                if not chunk:
                    break
                buf.extend(chunk)
        except OSError:
            pass
        self.daemon._mailbox.put(_LinkLost())

    def close(self) -> None:
        if self.sock is not None:
            try:
                self.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                self.sock.close()
            except OSError:
                pass


class ExoDaemon:
    """Serves one simulated exoskeleton on a TCP port."""

    def __init__(
        self,
        config: ExoskeletonConfig | str | os.PathLike,
        listen: tuple[str, int] = ("127.0.0.1", 0),
        clock: ClockSpec | str = "lockstep",
        seed: int = 0,
        log_path: str | os.PathLike | None = None,
        world: SimWorld | None = None,
        monitor_enabled: bool = True,
    ):
        if not isinstance(config, ExoskeletonConfig):
            config = load_config(config)
        self.clock = ClockSpec.parse(clock) if isinstance(clock, str) else clock
        self.seed = seed
        self.world = world if world is not None else SimWorld(config, seed=seed)
        self.world.set_config(config)
        self.controller = Controller(config, seed=seed, monitor_enabled=monitor_enabled)
        self._listen_addr = listen
        self._log_path = log_path
        self._log = None
        self._mailbox: "queue.Queue" = queue.Queue()
        self._clients: list[_Client] = []
        self._handles: dict[int, ProgramHandle] = {}
        self._link: _Link | None = None
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._running = False
        self._halt_logged = False
        self.events: list[str] = []

    # -- lifecycle ----------------------------------------------------------

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def start(self) -> None:
        if self._log_path:
            self._log = open(self._log_path, "w", encoding="utf-8")
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind(self._listen_addr)
        self._listener.listen(8)
        self._running = True
        accept = threading.Thread(target=self._accept_loop, daemon=True,
                                  name="exokit-accept")
        loop = threading.Thread(target=self._run_loop, daemon=True,
                                name="exokit-loop")
        self._threads = [accept, loop]
        accept.start()
        loop.start()

    def stop(self) -> None:
        self._running = False
        self._mailbox.put(None)
        # shutdown before close: close() alone does not wake a thread already
        # blocked in accept()/recv() on the same fd
        if self._listener is not None:
            try:
                self._listener.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                self._listener.close()
            except OSError:
                pass
        if self._link is not None:
            self._link.close()
        for client in list(self._clients):
            try:
                client.conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                client.conn.close()
            except OSError:
                pass
        for t in self._threads:
            t.join(timeout=2.0)
        if self._log is not None:
            self._log.close()
            self._log = None

    def serve_forever(self) -> None:
        self.start()
        try:
            while self._running:
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    # -- socket plumbing ------------------------------------------------------

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, addr = self._listener.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            client = _Client(conn, addr)
            self._clients.append(client)
            client.send_line(GREETING)
            reader = threading.Thread(target=self._client_reader, args=(client,),
                                      daemon=True, name=f"exokit-client-{client.seq}")
            self._threads.append(reader)
            reader.start()

    def _client_reader(self, client: _Client) -> None:
        buf = bytearray()
        conn = client.conn
        while self._running and client.alive:
            try:
                chunk = conn.recv(4096)
            except OSError:
                break
            if not chunk:
                break
            buf.extend(chunk)
            if len(buf) > _RECV_BUFFER_CAP:
                break  # a line this long is hostile; drop the client
            while True:
                idx = buf.find(b"\n")
                if idx < 0:
                    break
                raw = bytes(buf[:idx]).rstrip(b"\r")
                del buf[:idx + 1]
                if raw:
                    self._mailbox.put(_ClientLine(client, raw))
        client.alive = False
        self._mailbox.put(_ClientGone(client))

    # -- main loop ---------------------------------------------------------------

    def _run_loop(self) -> None:
        if self.clock.mode == "lockstep":
            self._run_lockstep()
        else:
            self._run_paced()

    def _run_lockstep(self) -> None:
        while self._running:
            try:
                item = self._mailbox.get(timeout=0.1)
            except queue.Empty:
                continue
            if item is None:
                return
            self._process(item)

    def _run_paced(self) -> None:
        period_s = self.world.config.control_period_ms / 1000.0 / self.clock.factor
        deadline = time.monotonic()
        while self._running:
            while True:
                try:
                    item = self._mailbox.get_nowait()
                except queue.Empty:
                    break
                if item is None:
                    return
                self._process(item)
            self._tick_once()
            deadline += period_s
            now = time.monotonic()
            if deadline < now - 1.0:
                deadline = now  # fell far behind; do not spiral
            delay = deadline - now
            if delay > 0:
                time.sleep(delay)

    def _process(self, item) -> None:
        if isinstance(item, _ClientLine):
            self._handle_line(item.client, item.raw)
        elif isinstance(item, _ClientGone):
            if item.client in self._clients:
                self._clients.remove(item.client)
        elif isinstance(item, _LinkFrame):
            if self._link is not None and not self._link.action.terminal:
                self._link.action.feed(item.source, item.angle,
                                       self.world.t_ms,
                                       self.controller.config)
        elif isinstance(item, _LinkLost):
            if self._link is not None and not self._link.lost:
                self._link.lost = True
                self._log_event(f"link lost: {self._link.endpoint}")

    def _handle_line(self, client: _Client, raw: bytes) -> None:
        try:
            cmd = parse_command(raw)
        except ProtocolError as exc:
            client.send_line(err_response(exc.code, exc.message).line())
            return
        try:
            response = self._execute(client, cmd)
        except ExoKitError as exc:
            response = err_response(exc.code, exc.message)
        except Exception as exc:  # keep the loop alive no matter what
            response = err_response("INTERNAL", str(exc))
        client.send_line(response.line())

    # -- tick -----------------------------------------------------------------------

    def _log_event(self, text: str) -> None:
        entry = f"{format_number(self.world.t_ms)} {text}"
        self.events.append(entry)
        if self._log is not None:
            self._log.write(f"# {entry}\n")
            self._log.flush()

    def _tick_once(self) -> None:
        snap = self.world.snapshot()
        commands = self.controller.tick(snap)
        if self.controller.halted and not self._halt_logged:
            self._halt_logged = True
            self._log_event(f"halted: {self.controller.halted}")
        self.world.step(self.world.config.control_period_ms, dict(commands.items()))
        self._emit_telemetry()

    def _emit_telemetry(self) -> None:
        now = self.world.t_ms
        post = self.world.snapshot()
        for client in self._clients:
            if not client.alive:
                continue
            for stream in client.streams:
                while stream.next_due_ms <= now:
                    stamp = stream.next_due_ms
                    stream.next_due_ms += stream.period_ms
                    for jid in stream.joints:
                        frame = self._frame_for(post, jid, stamp)
                        line = frame.line()
                        client.send_line(line)
                        if self._log is not None:
                            self._log.write(line + "\n")
        if self._log is not None:
            self._log.flush()

    def _frame_for(self, snap, jid: JointId, stamp_ms: float) -> TelemetryFrame:
        js = snap.joints[jid]
        jc = self.controller.config.joint(jid)
        return TelemetryFrame(
            t_ms=stamp_ms,
            joint=jid,
            angle=js.angle,
            velocity=js.velocity,
            acceleration=js.acceleration,
            torque=js.motor_torque,
            load=js.load_cell if jc.has_load_cell else None,
        )

    # -- command execution -------------------------------------------------------------

    def _resolve(self, selector: JointSelector) -> tuple[JointId, ...]:
        if isinstance(selector, ArmSelector):
            joints = self.controller.config.arm_ids(selector.side)
            if not joints:
                raise NotActuatedError(f"no joints configured on side {selector.side.value}")
            return joints
        seen = []
        for jid in selector:
            if jid not in seen:
                seen.append(jid)
        return tuple(seen)

    def _resolve_actuated(self, selector: JointSelector) -> tuple[JointId, ...]:
        joints = self._resolve(selector)
        if isinstance(selector, ArmSelector):
            cfg = self.controller.config
            joints = tuple(j for j in joints
                           if cfg.joint(j).kind is JointKind.ACTUATED)
            if not joints:
                raise NotActuatedError(f"no actuated joints on {selector}")
        return joints

    def _adopt(self, action: act.Action) -> Response:
        handle = self.controller.run_action(action)
        self._handles[handle.id] = handle
        return ok_response(str(handle.id))

    def _execute(self, client: _Client, cmd: Command) -> Response:
        cfg = self.controller.config

        if isinstance(cmd, CmdConfig):
            joints = ";".join(
                f"{jc.joint}:{jc.kind.value}:{format_number(jc.rom.min_deg)}:"
                f"{format_number(jc.rom.max_deg)}:{int(jc.restriction)}:"
                f"{int(jc.has_load_cell)}:{int(cfg.is_calibrated(jc.joint))}"
                for jc in cfg.joints)
            return ok_response(
                f"rates={format_number(cfg.control_rate_hz)}:"
                f"{format_number(cfg.telemetry_rate_hz)} joints={joints}")

        if isinstance(cmd, CmdCalibrate):
            new_cfg = cfg.calibrate_zero(cmd.joint, cmd.raw_angle)
            self.world.set_config(new_cfg)
            self.controller.set_config(new_cfg)
            return ok_response()

        if isinstance(cmd, CmdMoveTo):
            joints = self._resolve_actuated(cmd.joints)
            return self._adopt(act.move_to(cfg, joints, cmd.mode, cmd.angle,
                                           cmd.epsilon, cmd.velocity))

        if isinstance(cmd, CmdLock):
            return self._adopt(act.lock(cfg, self._resolve_actuated(cmd.joints)))

        if isinstance(cmd, CmdUnlock):
            released = self.controller.stop_locks(self._resolve(cmd.joints))
            return ok_response(str(released))

        if isinstance(cmd, CmdSense):
            state = self.world.read_state(cmd.joint)
            parts = [f"{state.angle:.3f}"]
            if state.velocity is not None:
                parts += [f"{state.velocity:.3f}", f"{state.acceleration:.3f}",
                          f"{state.motor_torque:.3f}"]
                if state.load_cell is not None:
                    parts.append(f"{state.load_cell:.3f}")
            return ok_response(" ".join(parts))

        if isinstance(cmd, CmdStream):
            joints = self._resolve(cmd.joints)
            if cmd.on:
                rate = cmd.rate_hz
                if rate is None or rate <= 0:
                    raise BadRangeError("stream rate must be positive")
                rate = min(rate, cfg.control_rate_hz)  # cannot outrun the loop
                period = 1000.0 / rate
                stream = _Stream(
                    joints=tuple(sorted(joints, key=lambda j: j.sort_key())),
                    period_ms=period,
                    next_due_ms=self.world.t_ms + period)
                client.streams.append(stream)
                return ok_response()
            wanted = set(joints)
            for stream in client.streams:
                stream.joints = tuple(j for j in stream.joints if j not in wanted)
            client.streams = [s for s in client.streams if s.joints]
            return ok_response()

        if isinstance(cmd, CmdGesture):
            return self._adopt(act.gesture_wave(cfg, cmd.side))

        if isinstance(cmd, CmdVibrate):
            joints = self._resolve_actuated(cmd.joints)
            return self._adopt(act.vibrate(cfg, joints, cmd.amplitude,
                                           cmd.frequency, cmd.duration_ms))

        if isinstance(cmd, CmdMirror):
            return self._adopt(act.mirror(cfg, cmd.src, cmd.dst, cmd.factor))

        if isinstance(cmd, CmdResist):
            joints = self._resolve_actuated(cmd.joints)
            return self._adopt(act.resist(cfg, joints, cmd.torque, cmd.direction))

        if isinstance(cmd, CmdAmplify):
            joints = self._resolve_actuated(cmd.joints)
            return self._adopt(act.amplify(cfg, joints, cmd.torque, cmd.direction))

        if isinstance(cmd, CmdFilterVel):
            return self._adopt(act.filter_velocity(cfg, cmd.joint, cmd.v_min,
                                                   cmd.v_max, cmd.tau_assist,
                                                   cmd.tau_resist))

        if isinstance(cmd, CmdJerks):
            return self._adopt(act.add_jerks(cfg, cmd.joint, cmd.disp_min,
                                             cmd.disp_max, cmd.interval_min_ms,
                                             cmd.interval_max_ms, cmd.count))

        if isinstance(cmd, CmdConstrain):
            return self._adopt(act.constrain_to(cfg, cmd.joint, cmd.center,
                                                cmd.epsilon))

        if isinstance(cmd, CmdGuide):
            factory = act.guide_towards if cmd.towards else act.guide_away
            return self._adopt(factory(cfg, cmd.joint, cmd.center, cmd.epsilon,
                                       cmd.tau_assist, cmd.tau_resist))

        if isinstance(cmd, CmdStop):
            self.controller.stop_all()
            if self._link is not None:
                self._link.close()
                self._link = None
            return ok_response()

        if isinstance(cmd, CmdPanic):
            self.controller.panic()
            if self._link is not None:
                self._link.close()
                self._link = None
            return ok_response()

        if isinstance(cmd, CmdLinkOff):
            if self._link is not None:
                if self._link.handle is not None:
                    self._link.handle.stop()
                self._link.close()
                self._link = None
            return ok_response()

        if isinstance(cmd, CmdLink):
            if self._link is not None:
                raise MappingInvalidError("a link is already active; send link off first")
            link = _Link(self, cmd.endpoint, cmd.mappings)
            link.connect()
            try:
                handle = self.controller.run_action(link.action)
            except ExoKitError:
                link.close()
                raise
            link.handle = handle
            self._handles[handle.id] = handle
            self._link = link
            return ok_response(str(handle.id))

        if isinstance(cmd, CmdStatus):
            if cmd.action_id is not None:
                handle = self._handles.get(cmd.action_id)
                if handle is None:
                    return err_response("NO_SUCH_ACTION", f"no action {cmd.action_id}")
                return ok_response(handle.status.value)
            return ok_response(self._status_payload())

        if isinstance(cmd, CmdStep):
            if self.clock.mode != "lockstep":
                return err_response("CLOCK_MODE", "step is only valid in lockstep mode")
            if cmd.ticks < 1:
                raise BadRangeError(f"step count {cmd.ticks} must be >= 1")
            for _ in range(cmd.ticks):
                self._tick_once()
            return ok_response(format_number(self.world.t_ms))

        raise BadRangeError(f"unhandled command {cmd.verb}")  # unreachable

    def _status_payload(self) -> str:
        cfg = self.controller.config
        calibrated = sum(1 for j in cfg.joint_ids() if cfg.is_calibrated(j))
        halted = self.controller.halted or "0"
        halted = halted.split(":")[0].replace(" ", "_")
        active = len(self.controller.active_programs())
        parts = [
            f"mode={self.clock}",
            f"t={format_number(self.world.t_ms)}",
            f"dt={format_number(cfg.control_period_ms)}",
            f"halted={halted}",
            f"joints={len(cfg.joints)}",
            f"calibrated={calibrated}",
            f"actions={active}",
        ]
        if self._link is not None:
            a = self._link.action
            last = "-" if a.last_source_t_ms is None else format_number(a.last_source_t_ms)
            state = "lost" if self._link.lost else "up"
            parts.append(f"link={state}:{a.frames_received}:{last}")
        return " ".join(parts)
