"""Joint and device configuration for a two-arm upper-body exoskeleton.

All angles are degrees, velocities deg/s, torques N*m.  A device is described
once through :class:`ExoskeletonBuilder`, validated, and then treated as
immutable: operations that change state (calibration) return a new config.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Iterable, Mapping

from .errors import (
    DuplicateJointError,
    EmptyConfigError,
    IoFailureError,
    MotorMissingError,
    NoSuchJointError,
    NotCalibratedError,
    ParseFailureError,
    PassiveJointNotCalibratableError,
    RomOutOfEnvelopeError,
    VersionMismatchError,
)

TORQUE_CEILING_NM = 10.0      # N*m   : strongest motor option supported
SPEED_CEILING_DEG_S = 462.0   # deg/s : 77 RPM no-load speed of that motor

CONFIG_HEADER = "exokit-config v1"


class Side(str, Enum):
    LEFT = "L"
    RIGHT = "R"


class JointName(str, Enum):
    SHOULDER_ABDUCTION = "sh_abd"
    SHOULDER_FLEXION = "sh_flex"
    ELBOW = "elbow"


# Support envelope per joint: the widest RoM the hardware geometry allows a
# config to request.  Deliberately narrower than the anatomical range.
SUPPORTED_ROM: dict[JointName, tuple[float, float]] = {
    JointName.SHOULDER_ABDUCTION: (0.0, 90.0),
    JointName.SHOULDER_FLEXION: (-20.0, 115.0),
    JointName.ELBOW: (0.0, 115.0),
}

# Anatomical travel of an adult joint.  The simulation falls back to these
# bounds when its mechanical stops are disabled for safety-layer testing.
FREE_TRAVEL: dict[JointName, tuple[float, float]] = {
    JointName.SHOULDER_ABDUCTION: (0.0, 180.0),
    JointName.SHOULDER_FLEXION: (-60.0, 180.0),
    JointName.ELBOW: (0.0, 150.0),
}

_SIDE_ORDER = {Side.LEFT: 0, Side.RIGHT: 1}
_NAME_ORDER = {
    JointName.SHOULDER_ABDUCTION: 0,
    JointName.SHOULDER_FLEXION: 1,
    JointName.ELBOW: 2,
}


@dataclass(frozen=True, order=False)
class JointId:
    """Identifies one joint, e.g. the right elbow."""

    side: Side
    name: JointName

    def __str__(self) -> str:
        return f"{self.side.value}.{self.name.value}"

    def sort_key(self) -> tuple[int, int]:
        return (_SIDE_ORDER[self.side], _NAME_ORDER[self.name])

    @classmethod
    def parse(cls, token: str) -> "JointId":
        """Parse a ``side.name`` token such as ``R.elbow``."""
        side_s, _, name_s = token.partition(".")
        try:
            return cls(Side(side_s), JointName(name_s))
        except ValueError:
            raise NoSuchJointError(f"unknown joint id {token!r}") from None


class JointKind(str, Enum):
    ACTUATED = "actuated"        # motor + encoder
    SENSING_ONLY = "sensing"     # encoder, no motor
    PASSIVE = "passive"          # bare hinge, follows the user


class Restriction(IntEnum):
    """Clip-on hard-stop block narrowing both ends of the range, in degrees."""

    NONE = 0
    DEG15 = 15
    DEG30 = 30
    DEG45 = 45


@dataclass(frozen=True)
class MotorSpec:
    max_torque: float = TORQUE_CEILING_NM   # N*m
    max_speed: float = SPEED_CEILING_DEG_S  # deg/s

    def __post_init__(self):
        if not (0.0 < self.max_torque <= TORQUE_CEILING_NM):
            raise RomOutOfEnvelopeError(
                f"max_torque {self.max_torque} outside (0, {TORQUE_CEILING_NM}] N*m")
        if not (0.0 < self.max_speed <= SPEED_CEILING_DEG_S):
            raise RomOutOfEnvelopeError(
                f"max_speed {self.max_speed} outside (0, {SPEED_CEILING_DEG_S}] deg/s")


@dataclass(frozen=True)
class RomLimits:
    min_deg: float
    max_deg: float

    def __post_init__(self):
        if not self.min_deg < self.max_deg:
            raise RomOutOfEnvelopeError(
                f"RoM [{self.min_deg}, {self.max_deg}] is empty")


@dataclass(frozen=True)
class JointConfig:
    joint: JointId
    kind: JointKind
    rom: RomLimits
    motor: MotorSpec | None = None
    restriction: Restriction = Restriction.NONE
    has_load_cell: bool = False

    def __post_init__(self):
        lo, hi = SUPPORTED_ROM[self.joint.name]
        if self.rom.min_deg < lo or self.rom.max_deg > hi:
            raise RomOutOfEnvelopeError(
                f"{self.joint}: RoM [{self.rom.min_deg}, {self.rom.max_deg}] "
                f"exceeds supported [{lo}, {hi}]")
        if self.kind is JointKind.ACTUATED and self.motor is None:
            raise MotorMissingError(f"{self.joint}: actuated joint needs a MotorSpec")
        if self.kind is not JointKind.ACTUATED and self.motor is not None:
            raise MotorMissingError(f"{self.joint}: only actuated joints carry a motor")
        lo_eff, hi_eff = self.effective_range()
        if not lo_eff < hi_eff:
            raise RomOutOfEnvelopeError(
                f"{self.joint}: restriction {int(self.restriction)} deg leaves no travel")

    def effective_range(self) -> tuple[float, float]:
        """Usable range after the restriction block narrows both ends."""
        n = float(self.restriction)
        return (self.rom.min_deg + n, self.rom.max_deg - n)


@dataclass(frozen=True)
class CalibrationState:
    """Per-joint encoder zero offsets.  A joint is calibrated iff present."""

    zero_offsets: Mapping[JointId, float] = field(default_factory=dict)

    def is_calibrated(self, joint: JointId) -> bool:
        return joint in self.zero_offsets

    def offset(self, joint: JointId) -> float:
        return self.zero_offsets[joint]

    def with_offset(self, joint: JointId, offset: float) -> "CalibrationState":
        offsets = dict(self.zero_offsets)
        offsets[joint] = offset
        return CalibrationState(offsets)


@dataclass(frozen=True)
class ExoskeletonConfig:
    """Validated, immutable description of one exoskeleton."""

    joints: tuple[JointConfig, ...]
    calibration: CalibrationState = field(default_factory=CalibrationState)
    control_rate_hz: float = 100.0
    telemetry_rate_hz: float = 80.0

    def __post_init__(self):
        if not 1 <= len(self.joints) <= 6:
            raise EmptyConfigError(f"{len(self.joints)} joints; need 1..6")
        if self.control_rate_hz <= 0 or self.telemetry_rate_hz <= 0:
            raise RomOutOfEnvelopeError("rates must be positive")
        if self.control_rate_hz < self.telemetry_rate_hz:
            raise RomOutOfEnvelopeError(
                f"control rate {self.control_rate_hz} Hz below telemetry "
                f"rate {self.telemetry_rate_hz} Hz")

    # -- lookup ---------------------------------------------------------

    def joint(self, joint: JointId) -> JointConfig:
        for jc in self.joints:
            if jc.joint == joint:
                return jc
        raise NoSuchJointError(f"no joint {joint} in config")

    def has_joint(self, joint: JointId) -> bool:
        return any(jc.joint == joint for jc in self.joints)

    def joint_ids(self) -> tuple[JointId, ...]:
        return tuple(jc.joint for jc in self.joints)

    def actuated_ids(self) -> tuple[JointId, ...]:
        return tuple(jc.joint for jc in self.joints if jc.kind is JointKind.ACTUATED)

    def arm_ids(self, side: Side) -> tuple[JointId, ...]:
        return tuple(jc.joint for jc in self.joints if jc.joint.side is side)

    @property
    def control_period_ms(self) -> float:
        return 1000.0 / self.control_rate_hz

    # -- calibration ----------------------------------------------------

    def calibrate_zero(self, joint: JointId, raw_angle: float) -> "ExoskeletonConfig":
        """Record the raw encoder reading at the joint's zero pose.

        Returns a new config; the original is untouched.
        """
        jc = self.joint(joint)
        if jc.kind is JointKind.PASSIVE:
            raise PassiveJointNotCalibratableError(f"{joint} has no encoder")
        return replace(self, calibration=self.calibration.with_offset(joint, raw_angle))

    def is_calibrated(self, joint: JointId) -> bool:
        self.joint(joint)
        return self.calibration.is_calibrated(joint)

    def zero_offset(self, joint: JointId) -> float:
        return self.calibration.offset(joint)

    def absolute_from_raw(self, joint: JointId, raw_angle: float) -> float:
        if not self.is_calibrated(joint):
            raise NotCalibratedError(f"{joint} not calibrated")
        return raw_angle - self.calibration.offset(joint)

    # -- range queries ----------------------------------------------------

    def effective_range(self, joint: JointId) -> tuple[float, float]:
        return self.joint(joint).effective_range()

    def clamp_to_rom(self, joint: JointId, angle: float) -> float:
        """Clamp an absolute angle into the joint's effective range.

        Requires calibration: effective limits only mean something once the
        zero pose is known.  Idempotent.
        """
        if not self.is_calibrated(joint):
            raise NotCalibratedError(f"{joint} not calibrated")
        lo, hi = self.effective_range(joint)
        return min(max(angle, lo), hi)


class ExoskeletonBuilder:
    """Collects joints one by one, then validates the whole device."""

    def __init__(self, control_rate_hz: float = 100.0, telemetry_rate_hz: float = 80.0):
        self._joints: list[JointConfig] = []
        self._control_rate = control_rate_hz
        self._telemetry_rate = telemetry_rate_hz

    def add_joint(self, jc: JointConfig) -> "ExoskeletonBuilder":
        if any(existing.joint == jc.joint for existing in self._joints):
            raise DuplicateJointError(f"{jc.joint} added twice")
        if jc.kind is JointKind.ACTUATED and jc.motor is None:
            raise MotorMissingError(f"{jc.joint}: actuated joint needs a MotorSpec")
        self._joints.append(jc)
        return self

    def build(self) -> ExoskeletonConfig:
        if not self._joints:
            raise EmptyConfigError("no joints added")
        ordered = tuple(sorted(self._joints, key=lambda jc: jc.joint.sort_key()))
        return ExoskeletonConfig(
            joints=ordered,
            control_rate_hz=self._control_rate,
            telemetry_rate_hz=self._telemetry_rate,
        )


# --- persistence -------------------------------------------------------------
#
# Versioned, line-oriented, hand-editable:
#
#   exokit-config v1
#   control_rate_hz=100.0
#   telemetry_rate_hz=80.0
#   joint.R.elbow.kind=actuated
#   joint.R.elbow.rom.min=0.0
#   joint.R.elbow.rom.max=115.0
#   joint.R.elbow.restriction=0
#   joint.R.elbow.motor.max_torque=10.0
#   joint.R.elbow.motor.max_speed=462.0
#   joint.R.elbow.load_cell=0
#   joint.R.elbow.zero_offset=12.5      (present only when calibrated)
#
# Floats are written with repr() so a load/save cycle is exact.

def _fmt(value: float) -> str:
    return repr(float(value))


def save_config(config: ExoskeletonConfig, path: str | os.PathLike) -> None:
    lines = [CONFIG_HEADER]
    lines.append(f"control_rate_hz={_fmt(config.control_rate_hz)}")
    lines.append(f"telemetry_rate_hz={_fmt(config.telemetry_rate_hz)}")
    for jc in config.joints:
        p = f"joint.{jc.joint}"
        lines.append(f"{p}.kind={jc.kind.value}")
        lines.append(f"{p}.rom.min={_fmt(jc.rom.min_deg)}")
        lines.append(f"{p}.rom.max={_fmt(jc.rom.max_deg)}")
        lines.append(f"{p}.restriction={int(jc.restriction)}")
        if jc.motor is not None:
            lines.append(f"{p}.motor.max_torque={_fmt(jc.motor.max_torque)}")
            lines.append(f"{p}.motor.max_speed={_fmt(jc.motor.max_speed)}")
        lines.append(f"{p}.load_cell={int(jc.has_load_cell)}")
        if config.calibration.is_calibrated(jc.joint):
            lines.append(f"{p}.zero_offset={_fmt(config.calibration.offset(jc.joint))}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def _parse_float(value: str, line_no: int, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseFailureError(f"{key}: bad number {value!r}", line_no) from None


def load_config(path: str | os.PathLike) -> ExoskeletonConfig:
    """Load and re-validate a config written by :func:`save_config`.

    Raises VersionMismatchError on a foreign header and ParseFailureError
    (with line number) on malformed content; any structural violation
    surfaces as the same error the builder would raise.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw_lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailureError(f"cannot read {path}: {exc}") from exc

    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw_lines)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseFailureError("empty config file", 1)
    head_no, head = lines[0]
    if head != CONFIG_HEADER:
        if head.startswith("exokit-config"):
            raise VersionMismatchError(f"unsupported config version {head!r}")
        raise ParseFailureError(f"missing {CONFIG_HEADER!r} header", head_no)

    rates: dict[str, float] = {}
    fields: dict[JointId, dict[str, tuple[int, str]]] = {}
    order: list[JointId] = []
    for no, ln in lines[1:]:
        key, sep, value = ln.partition("=")
        if not sep:
            raise ParseFailureError(f"expected key=value, got {ln!r}", no)
        key = key.strip()
        value = value.strip()
        if key in ("control_rate_hz", "telemetry_rate_hz"):
            rates[key] = _parse_float(value, no, key)
            continue
        parts = key.split(".")
        if len(parts) < 4 or parts[0] != "joint":
            raise ParseFailureError(f"unknown key {key!r}", no)
        try:
            jid = JointId(Side(parts[1]), JointName(parts[2]))
        except ValueError:
            raise ParseFailureError(f"unknown joint {parts[1]}.{parts[2]!r}", no) from None
        fieldname = ".".join(parts[3:])
        if jid not in fields:
            fields[jid] = {}
            order.append(jid)
        if fieldname in fields[jid]:
            raise ParseFailureError(f"duplicate key {key!r}", no)
        fields[jid][fieldname] = (no, value)

    builder = ExoskeletonBuilder(
        control_rate_hz=rates.get("control_rate_hz", 100.0),
        telemetry_rate_hz=rates.get("telemetry_rate_hz", 80.0),
    )
    offsets: dict[JointId, float] = {}
    for jid in order:
        f = fields[jid]

        def take(name: str) -> tuple[int, str]:
            if name not in f:
                raise ParseFailureError(f"joint.{jid}.{name} missing", head_no)
            return f.pop(name)

        no, kind_s = take("kind")
        try:
            kind = JointKind(kind_s)
        except ValueError:
            raise ParseFailureError(f"unknown kind {kind_s!r}", no) from None
        no_min, min_s = take("rom.min")
        no_max, max_s = take("rom.max")
        rom = RomLimits(_parse_float(min_s, no_min, "rom.min"),
                        _parse_float(max_s, no_max, "rom.max"))
        no_r, restr_s = take("restriction")
        try:
            restriction = Restriction(int(restr_s))
        except ValueError:
            raise ParseFailureError(f"restriction must be 0/15/30/45, got {restr_s!r}", no_r) from None
        motor = None
        if "motor.max_torque" in f or "motor.max_speed" in f:
            no_t, torque_s = take("motor.max_torque")
            no_s, speed_s = take("motor.max_speed")
            motor = MotorSpec(_parse_float(torque_s, no_t, "max_torque"),
                              _parse_float(speed_s, no_s, "max_speed"))
        no_l, load_s = take("load_cell")
        if load_s not in ("0", "1"):
            raise ParseFailureError(f"load_cell must be 0 or 1, got {load_s!r}", no_l)
        if "zero_offset" in f:
            no_z, off_s = take("zero_offset")
            offsets[jid] = _parse_float(off_s, no_z, "zero_offset")
        if f:
            stray = sorted(f)[0]
            raise ParseFailureError(f"unknown key joint.{jid}.{stray}", f[stray][0])
        builder.add_joint(JointConfig(
            joint=jid, kind=kind, rom=rom, motor=motor,
            restriction=restriction, has_load_cell=load_s == "1",
        ))

    config = builder.build()
    for jid, off in offsets.items():
        config = config.calibrate_zero(jid, off)
    return config


def two_arm_default(control_rate_hz: float = 100.0,
                    telemetry_rate_hz: float = 80.0,
                    restriction: Restriction = Restriction.NONE,
                    calibrated: bool = False) -> ExoskeletonConfig:
    """Both arms, all six joints actuated at the full motor spec."""
    builder = ExoskeletonBuilder(control_rate_hz, telemetry_rate_hz)
    for side in (Side.LEFT, Side.RIGHT):
        for name in JointName:
            lo, hi = SUPPORTED_ROM[name]
            builder.add_joint(JointConfig(
                joint=JointId(side, name),
                kind=JointKind.ACTUATED,
                rom=RomLimits(lo, hi),
                motor=MotorSpec(),
                restriction=restriction,
                has_load_cell=name is JointName.ELBOW,
            ))
    config = builder.build()
    if calibrated:
        for jid in config.joint_ids():
            config = config.calibrate_zero(jid, 0.0)
    return config
