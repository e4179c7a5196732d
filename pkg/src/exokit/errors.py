"""Exception hierarchy shared by all exokit layers.

Every error carries a stable short code so the wire protocol can report it
without string-matching exception messages.  New codes may be added; existing
ones must never be renamed.
"""

from __future__ import annotations


class ExoKitError(Exception):
    """Base class for all errors raised by this package."""

    code = "ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message


# --- configuration / model -------------------------------------------------

class DuplicateJointError(ExoKitError):
    code = "DUPLICATE_JOINT"


class MotorMissingError(ExoKitError):
    code = "MOTOR_MISSING"


class RomOutOfEnvelopeError(ExoKitError):
    code = "ROM_OUT_OF_ENVELOPE"


class EmptyConfigError(ExoKitError):
    code = "EMPTY_CONFIG"


class NoSuchJointError(ExoKitError):
    code = "NO_SUCH_JOINT"


class PassiveJointNotCalibratableError(ExoKitError):
    code = "PASSIVE_JOINT"


class NotCalibratedError(ExoKitError):
    code = "NOT_CALIBRATED"


class VersionMismatchError(ExoKitError):
    code = "VERSION_MISMATCH"


class ParseFailureError(ExoKitError):
    """Malformed content in a config file; carries the 1-based line number."""

    code = "PARSE_FAILURE"

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class IoFailureError(ExoKitError):
    code = "IO_FAILURE"


# --- simulation ------------------------------------------------------------

class CommandForNonActuatedJointError(ExoKitError):
    code = "NOT_ACTUATED"


# --- control ---------------------------------------------------------------

class NotActuatedError(ExoKitError):
    code = "NOT_ACTUATED"


class TargetOutOfRangeError(ExoKitError):
    code = "TARGET_OUT_OF_RANGE"


class BadRangeError(ExoKitError):
    """A numeric parameter is outside its documented domain."""

    code = "BAD_RANGE"


class TorqueOutOfRangeError(ExoKitError):
    code = "TORQUE_OUT_OF_RANGE"


class FrequencyTooHighError(ExoKitError):
    code = "FREQUENCY_TOO_HIGH"


class SameJointError(ExoKitError):
    code = "SAME_JOINT"


class AreaOutsideRomError(ExoKitError):
    code = "AREA_OUTSIDE_ROM"


class JointConflictError(ExoKitError):
    code = "JOINT_CONFLICT"


class SystemHaltedError(ExoKitError):
    code = "HALTED"


# --- wire protocol ---------------------------------------------------------

class ProtocolError(ExoKitError):
    """Base class for errors raised while parsing protocol lines."""

    code = "PROTOCOL"


class UnknownVerbError(ProtocolError):
    code = "UNKNOWN_VERB"


class ArityError(ProtocolError):
    code = "ARITY"


class MalformedJointIdError(ProtocolError):
    code = "BAD_JOINT"


class MalformedNumberError(ProtocolError):
    code = "BAD_NUMBER"


class MalformedArgumentError(ProtocolError):
    code = "BAD_ARGUMENT"


class LineTooLongError(ProtocolError):
    code = "LINE_TOO_LONG"


# --- daemon ----------------------------------------------------------------

class PeerUnreachableError(ExoKitError):
    code = "PEER_UNREACHABLE"


class MappingInvalidError(ExoKitError):
    code = "MAPPING_INVALID"
