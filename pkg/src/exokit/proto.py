"""Line-based text protocol spoken over TCP, scripts, and the UI bridge.

One request per line, one response per line, plus asynchronous telemetry
lines pushed to subscribed clients.  Grammar (tokens separated by blanks,
lines at most 512 bytes):

    config
    calibrate <joint> <raw_deg>
    moveto <joints> abs|rel <angle> <epsilon> <velocity>
    lock <joints>
    unlock <joints>
    sense <joint>
    stream on <joints> <rate_hz>
    stream off <joints>
    gesture L|R
    vibrate <joints> <amplitude> <freq_hz> <duration_ms>
    mirror <src_joint> <dst_joint> <factor>
    resist <joints> <torque> pos|neg|both
    amplify <joints> <torque> pos|neg|both
    filtervel <joint> <v_min> <v_max> <tau_assist> <tau_resist>
    jerks <joint> <disp_min> <disp_max> <interval_min_ms> <interval_max_ms> <count>
    constrain <joint> <center> <epsilon>
    guideto <joint> <center> <epsilon> <tau_assist> <tau_resist>
    guideaway <joint> <center> <epsilon> <tau_assist> <tau_resist>
    stop
    panic
    link <host:port> <src>gt<dst>:<factor>[,...]      (gt is the ">" character)
    link off
    status [<action_id>]
    step <n>

A <joint> is side.name with side L|R and name sh_abd|sh_flex|elbow.
<joints> is either a comma list of joint ids or L.arm / R.arm for a whole
arm.  Numbers are plain decimals with optional sign and fraction; no
exponents.  Responses are ``ok [payload]`` or ``err <CODE> <message>``.
Telemetry: ``T <t_ms> <joint> <angle> <vel> <acc> <torque> [<load>]`` with
three decimals on every float field.

parse_command and format_command are exact inverses over this grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .actions import EffortDirection, TargetMode
from .errors import (
    ArityError,
    LineTooLongError,
    MalformedArgumentError,
    MalformedJointIdError,
    MalformedNumberError,
    ProtocolError,
    UnknownVerbError,
)
from .model import JointId, JointName, Side

MAX_LINE_BYTES = 512
GREETING = "proto v1"

_NUMBER_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)$")
_INT_RE = re.compile(r"^[+-]?\d+$")


def format_number(x: float) -> str:
    """Canonical wire form: up to three decimals, no trailing zeros."""
    if x != x or x in (float("inf"), float("-inf")):
        raise MalformedNumberError(f"cannot encode {x}")
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _parse_number(token: str, verb: str) -> float:
    if not _NUMBER_RE.match(token):
        raise MalformedNumberError(f"{verb}: bad number {token!r}")
    return float(token)


def _parse_int(token: str, verb: str) -> int:
    if not _INT_RE.match(token):
        raise MalformedNumberError(f"{verb}: bad integer {token!r}")
    return int(token)


@dataclass(frozen=True)
class ArmSelector:
    """All configured joints of one arm; resolved against a config later."""

    side: Side

    def __str__(self) -> str:
        return f"{self.side.value}.arm"


JointSelector = Union[tuple[JointId, ...], ArmSelector]


def _parse_joint(token: str, verb: str) -> JointId:
    side_s, sep, name_s = token.partition(".")
    if sep:
        try:
            return JointId(Side(side_s), JointName(name_s))
        except ValueError:
            pass
    raise MalformedJointIdError(f"{verb}: bad joint id {token!r}")


def _parse_selector(token: str, verb: str) -> JointSelector:
    side_s, sep, rest = token.partition(".")
    if sep and rest == "arm":
        try:
            return ArmSelector(Side(side_s))
        except ValueError:
            raise MalformedJointIdError(f"{verb}: bad arm selector {token!r}") from None
    return tuple(_parse_joint(part, verb) for part in token.split(","))


def format_selector(sel: JointSelector) -> str:
    if isinstance(sel, ArmSelector):
        return str(sel)
    return ",".join(str(j) for j in sel)


def _parse_direction(token: str, verb: str) -> EffortDirection:
    try:
        return EffortDirection(token)
    except ValueError:
        raise MalformedArgumentError(
            f"{verb}: direction must be pos/neg/both, got {token!r}") from None


# --- command types ---------------------------------------------------------

class Command:
    """Base for all parsed requests; subclasses are frozen dataclasses."""

    verb = ""

    def line(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class CmdConfig(Command):
    verb = "config"

    def line(self) -> str:
        return "config"


@dataclass(frozen=True)
class CmdCalibrate(Command):
    verb = "calibrate"
    joint: JointId = None  # type: ignore[assignment]
    raw_angle: float = 0.0

    def line(self) -> str:
        return f"calibrate {self.joint} {format_number(self.raw_angle)}"


@dataclass(frozen=True)
class CmdMoveTo(Command):
    verb = "moveto"
    joints: JointSelector = ()
    mode: TargetMode = TargetMode.ABSOLUTE
    angle: float = 0.0
    epsilon: float = 0.0
    velocity: float = 0.0

    def line(self) -> str:
        return (f"moveto {format_selector(self.joints)} {self.mode.value} "
                f"{format_number(self.angle)} {format_number(self.epsilon)} "
                f"{format_number(self.velocity)}")


@dataclass(frozen=True)
class CmdLock(Command):
    verb = "lock"
    joints: JointSelector = ()

    def line(self) -> str:
        return f"lock {format_selector(self.joints)}"


@dataclass(frozen=True)
class CmdUnlock(Command):
    verb = "unlock"
    joints: JointSelector = ()

    def line(self) -> str:
        return f"unlock {format_selector(self.joints)}"


@dataclass(frozen=True)
class CmdSense(Command):
    verb = "sense"
    joint: JointId = None  # type: ignore[assignment]

    def line(self) -> str:
        return f"sense {self.joint}"


@dataclass(frozen=True)
class CmdStream(Command):
    verb = "stream"
    on: bool = True
    joints: JointSelector = ()
    rate_hz: float | None = None

    def line(self) -> str:
        if self.on:
            return (f"stream on {format_selector(self.joints)} "
                    f"{format_number(self.rate_hz)}")
        return f"stream off {format_selector(self.joints)}"


@dataclass(frozen=True)
class CmdGesture(Command):
    verb = "gesture"
    side: Side = Side.RIGHT

    def line(self) -> str:
        return f"gesture {self.side.value}"


@dataclass(frozen=True)
class CmdVibrate(Command):
    verb = "vibrate"
    joints: JointSelector = ()
    amplitude: float = 0.0
    frequency: float = 0.0
    duration_ms: float = 0.0

    def line(self) -> str:
        return (f"vibrate {format_selector(self.joints)} "
                f"{format_number(self.amplitude)} {format_number(self.frequency)} "
                f"{format_number(self.duration_ms)}")


@dataclass(frozen=True)
class CmdMirror(Command):
    verb = "mirror"
    src: JointId = None  # type: ignore[assignment]
    dst: JointId = None  # type: ignore[assignment]
    factor: float = 1.0

    def line(self) -> str:
        return f"mirror {self.src} {self.dst} {format_number(self.factor)}"


@dataclass(frozen=True)
class CmdResist(Command):
    verb = "resist"
    joints: JointSelector = ()
    torque: float = 0.0
    direction: EffortDirection = EffortDirection.BOTH

    def line(self) -> str:
        return (f"resist {format_selector(self.joints)} "
                f"{format_number(self.torque)} {self.direction.value}")


@dataclass(frozen=True)
class CmdAmplify(Command):
    verb = "amplify"
    joints: JointSelector = ()
    torque: float = 0.0
    direction: EffortDirection = EffortDirection.BOTH

    def line(self) -> str:
        return (f"amplify {format_selector(self.joints)} "
                f"{format_number(self.torque)} {self.direction.value}")


@dataclass(frozen=True)
class CmdFilterVel(Command):
    verb = "filtervel"
    joint: JointId = None  # type: ignore[assignment]
    v_min: float = 0.0
    v_max: float = 0.0
    tau_assist: float = 0.0
    tau_resist: float = 0.0

    def line(self) -> str:
        return (f"filtervel {self.joint} {format_number(self.v_min)} "
                f"{format_number(self.v_max)} {format_number(self.tau_assist)} "
                f"{format_number(self.tau_resist)}")


@dataclass(frozen=True)
class CmdJerks(Command):
    verb = "jerks"
    joint: JointId = None  # type: ignore[assignment]
    disp_min: float = 0.0
    disp_max: float = 0.0
    interval_min_ms: float = 0.0
    interval_max_ms: float = 0.0
    count: int = 1

    def line(self) -> str:
        return (f"jerks {self.joint} {format_number(self.disp_min)} "
                f"{format_number(self.disp_max)} {format_number(self.interval_min_ms)} "
                f"{format_number(self.interval_max_ms)} {self.count}")


@dataclass(frozen=True)
class CmdConstrain(Command):
    verb = "constrain"
    joint: JointId = None  # type: ignore[assignment]
    center: float = 0.0
    epsilon: float = 0.0

    def line(self) -> str:
        return (f"constrain {self.joint} {format_number(self.center)} "
                f"{format_number(self.epsilon)}")


@dataclass(frozen=True)
class CmdGuide(Command):
    towards: bool = True
    joint: JointId = None  # type: ignore[assignment]
    center: float = 0.0
    epsilon: float = 0.0
    tau_assist: float = 0.0
    tau_resist: float = 0.0

    @property
    def verb(self) -> str:  # type: ignore[override]
        return "guideto" if self.towards else "guideaway"

    def line(self) -> str:
        return (f"{self.verb} {self.joint} {format_number(self.center)} "
                f"{format_number(self.epsilon)} {format_number(self.tau_assist)} "
                f"{format_number(self.tau_resist)}")


@dataclass(frozen=True)
class CmdStop(Command):
    verb = "stop"

    def line(self) -> str:
        return "stop"


@dataclass(frozen=True)
class CmdPanic(Command):
    verb = "panic"

    def line(self) -> str:
        return "panic"


@dataclass(frozen=True)
class CmdLink(Command):
    verb = "link"
    endpoint: str = ""
    mappings: tuple[tuple[JointId, JointId, float], ...] = ()

    def line(self) -> str:
        maps = ",".join(f"{s}>{d}:{format_number(f)}" for s, d, f in self.mappings)
        return f"link {self.endpoint} {maps}"


@dataclass(frozen=True)
class CmdLinkOff(Command):
    verb = "link"

    def line(self) -> str:
        return "link off"


@dataclass(frozen=True)
class CmdStatus(Command):
    verb = "status"
    action_id: int | None = None

    def line(self) -> str:
        return "status" if self.action_id is None else f"status {self.action_id}"


@dataclass(frozen=True)
class CmdStep(Command):
    verb = "step"
    ticks: int = 1

    def line(self) -> str:
        return f"step {self.ticks}"


# --- parsing ------------------------------------------------------------------

def _need(tokens: list[str], n: int) -> None:
    if len(tokens) != n:
        raise ArityError(f"{tokens[0]} expects {n} tokens, got {len(tokens)}")


def _parse_endpoint(token: str, verb: str) -> str:
    host, sep, port_s = token.rpartition(":")
    if not sep or not host:
        raise MalformedArgumentError(f"{verb}: endpoint must be host:port, got {token!r}")
    if not _INT_RE.match(port_s) or not 0 < int(port_s) < 65536:
        raise MalformedArgumentError(f"{verb}: bad port in {token!r}")
    return token


def _parse_mappings(token: str, verb: str) -> tuple[tuple[JointId, JointId, float], ...]:
    out = []
    for part in token.split(","):
        body, sep, factor_s = part.rpartition(":")
        if not sep:
            raise MalformedArgumentError(
                f"{verb}: mapping must be src>dst:factor, got {part!r}")
        src_s, sep2, dst_s = body.partition(">")
        if not sep2:
            raise MalformedArgumentError(
                f"{verb}: mapping must be src>dst:factor, got {part!r}")
        out.append((_parse_joint(src_s, verb), _parse_joint(dst_s, verb),
                    _parse_number(factor_s, verb)))
    return tuple(out)


def parse_command(line: str | bytes) -> Command:
    """Parse one request line; raises a ProtocolError subclass on any fault."""
    if isinstance(line, bytes):
        if len(line) > MAX_LINE_BYTES:
            raise LineTooLongError(f"{len(line)} bytes exceeds {MAX_LINE_BYTES}")
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedArgumentError("line is not valid utf-8") from None
    elif len(line.encode("utf-8", errors="replace")) > MAX_LINE_BYTES:
        raise LineTooLongError(f"line exceeds {MAX_LINE_BYTES} bytes")

    tokens = line.split()
    if not tokens:
        raise UnknownVerbError("empty line")
    verb = tokens[0]

    if verb == "config":
        _need(tokens, 1)
        return CmdConfig()
    if verb == "calibrate":
        _need(tokens, 3)
        return CmdCalibrate(_parse_joint(tokens[1], verb), _parse_number(tokens[2], verb))
    if verb == "moveto":
        _need(tokens, 6)
        try:
            mode = TargetMode(tokens[2])
        except ValueError:
            raise MalformedArgumentError(
                f"moveto: mode must be abs or rel, got {tokens[2]!r}") from None
        return CmdMoveTo(_parse_selector(tokens[1], verb), mode,
                         _parse_number(tokens[3], verb), _parse_number(tokens[4], verb),
                         _parse_number(tokens[5], verb))
    if verb == "lock":
        _need(tokens, 2)
        return CmdLock(_parse_selector(tokens[1], verb))
    if verb == "unlock":
        _need(tokens, 2)
        return CmdUnlock(_parse_selector(tokens[1], verb))
    if verb == "sense":
        _need(tokens, 2)
        return CmdSense(_parse_joint(tokens[1], verb))
    if verb == "stream":
        if len(tokens) < 2 or tokens[1] not in ("on", "off"):
            raise MalformedArgumentError("stream: expected on or off")
        if tokens[1] == "on":
            _need(tokens, 4)
            return CmdStream(True, _parse_selector(tokens[2], verb),
                             _parse_number(tokens[3], verb))
        _need(tokens, 3)
        return CmdStream(False, _parse_selector(tokens[2], verb), None)
    if verb == "gesture":
        _need(tokens, 2)
        try:
            return CmdGesture(Side(tokens[1]))
        except ValueError:
            raise MalformedArgumentError(
                f"gesture: side must be L or R, got {tokens[1]!r}") from None
    if verb == "vibrate":
        _need(tokens, 5)
        return CmdVibrate(_parse_selector(tokens[1], verb),
                          _parse_number(tokens[2], verb), _parse_number(tokens[3], verb),
                          _parse_number(tokens[4], verb))
    if verb == "mirror":
        _need(tokens, 4)
        return CmdMirror(_parse_joint(tokens[1], verb), _parse_joint(tokens[2], verb),
                         _parse_number(tokens[3], verb))
    if verb == "resist":
        _need(tokens, 4)
        return CmdResist(_parse_selector(tokens[1], verb), _parse_number(tokens[2], verb),
                         _parse_direction(tokens[3], verb))
    if verb == "amplify":
        _need(tokens, 4)
        return CmdAmplify(_parse_selector(tokens[1], verb), _parse_number(tokens[2], verb),
                          _parse_direction(tokens[3], verb))
    if verb == "filtervel":
        _need(tokens, 6)
        return CmdFilterVel(_parse_joint(tokens[1], verb),
                            _parse_number(tokens[2], verb), _parse_number(tokens[3], verb),
                            _parse_number(tokens[4], verb), _parse_number(tokens[5], verb))
    if verb == "jerks":
        _need(tokens, 7)
        return CmdJerks(_parse_joint(tokens[1], verb),
                        _parse_number(tokens[2], verb), _parse_number(tokens[3], verb),
                        _parse_number(tokens[4], verb), _parse_number(tokens[5], verb),
                        _parse_int(tokens[6], verb))
    if verb == "constrain":
        _need(tokens, 4)
        return CmdConstrain(_parse_joint(tokens[1], verb),
                            _parse_number(tokens[2], verb), _parse_number(tokens[3], verb))
    if verb in ("guideto", "guideaway"):
        _need(tokens, 6)
        return CmdGuide(verb == "guideto", _parse_joint(tokens[1], verb),
                        _parse_number(tokens[2], verb), _parse_number(tokens[3], verb),
                        _parse_number(tokens[4], verb), _parse_number(tokens[5], verb))
    if verb == "stop":
        _need(tokens, 1)
        return CmdStop()
    if verb == "panic":
        _need(tokens, 1)
        return CmdPanic()
    if verb == "link":
        if len(tokens) == 2 and tokens[1] == "off":
            return CmdLinkOff()
        _need(tokens, 3)
        return CmdLink(_parse_endpoint(tokens[1], verb), _parse_mappings(tokens[2], verb))
    if verb == "status":
        if len(tokens) == 1:
            return CmdStatus(None)
        _need(tokens, 2)
        return CmdStatus(_parse_int(tokens[1], verb))
    if verb == "step":
        _need(tokens, 2)
        return CmdStep(_parse_int(tokens[1], verb))
    raise UnknownVerbError(f"unknown verb {verb!r}")


def format_command(cmd: Command) -> str:
    return cmd.line()


# --- responses -------------------------------------------------------------------

@dataclass(frozen=True)
class Response:
    ok: bool
    code: str | None = None       # error code when not ok
    payload: str = ""             # payload or error message

    def line(self) -> str:
        if self.ok:
            return f"ok {self.payload}" if self.payload else "ok"
        return f"err {self.code} {self.payload}".rstrip()


def ok_response(payload: str = "") -> Response:
    return Response(True, None, payload)


def err_response(code: str, message: str) -> Response:
    return Response(False, code, message)


def parse_response(line: str) -> Response:
    tokens = line.split(None, 1)
    if not tokens:
        raise ProtocolError("empty response line")
    if tokens[0] == "ok":
        return Response(True, None, tokens[1] if len(tokens) > 1 else "")
    if tokens[0] == "err":
        rest = tokens[1] if len(tokens) > 1 else ""
        code, _, message = rest.partition(" ")
        if not code:
            raise ProtocolError(f"malformed error response {line!r}")
        return Response(False, code, message)
    raise ProtocolError(f"not a response line: {line!r}")


# --- telemetry -----------------------------------------------------------------

@dataclass(frozen=True)
class TelemetryFrame:
    t_ms: float
    joint: JointId
    angle: float
    velocity: float
    acceleration: float
    torque: float
    load: float | None = None

    def line(self) -> str:
        base = (f"T {format_number(self.t_ms)} {self.joint} "
                f"{self.angle:.3f} {self.velocity:.3f} "
                f"{self.acceleration:.3f} {self.torque:.3f}")
        if self.load is None:
            return base
        return f"{base} {self.load:.3f}"


def format_telemetry(frame: TelemetryFrame) -> str:
    return frame.line()


def parse_telemetry(line: str) -> TelemetryFrame:
    tokens = line.split()
    if not tokens or tokens[0] != "T":
        raise ProtocolError(f"not a telemetry line: {line!r}")
    if len(tokens) not in (7, 8):
        raise ArityError(f"telemetry expects 7 or 8 tokens, got {len(tokens)}")
    t = _parse_number(tokens[1], "T")
    joint = _parse_joint(tokens[2], "T")
    values = [_parse_number(tok, "T") for tok in tokens[3:]]
    load = values[4] if len(values) == 5 else None
    return TelemetryFrame(t, joint, values[0], values[1], values[2], values[3], load)


def is_telemetry_line(line: str) -> bool:
    return line.startswith("T ")
