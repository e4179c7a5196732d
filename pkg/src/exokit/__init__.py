"""Joint-space interaction runtime for a simulated two-arm exoskeleton.

Layers, bottom up: ``model`` (device description and config files), ``sim``
(the plant), ``actions``/``conditions``/``program`` (behaviours and their
composition), ``controller`` (safety monitor plus program scheduler),
``proto`` (wire format), ``daemon``/``client`` (TCP service), ``report``
(figures and CSV from telemetry logs).
"""

from .actions import (
    Action,
    ActionStatus,
    EffortDirection,
    TargetMode,
    TrapezoidProfile,
    add_jerks,
    amplify,
    constrain_to,
    filter_velocity,
    gesture_wave,
    guide_away,
    guide_towards,
    lock,
    mirror,
    move_to,
    remote_follow,
    resist,
    vibrate,
)
from .client import ProtoClient
from .conditions import (
    Comparison,
    Condition,
    Direction,
    InRange,
    OutOfRange,
    Pose,
    Quantity,
    Threshold,
)
from .controller import Controller, MotorCommandSet, ProgramHandle
from .daemon import ClockSpec, ExoDaemon
from .errors import ExoKitError
from .model import (
    ExoskeletonBuilder,
    ExoskeletonConfig,
    JointConfig,
    JointId,
    JointKind,
    JointName,
    MotorSpec,
    Restriction,
    RomLimits,
    Side,
    load_config,
    save_config,
    two_arm_default,
)
from .program import Leaf, Node, Par, Seq, When, leaf, par, seq, when
from .proto import (
    Response,
    TelemetryFrame,
    format_command,
    format_telemetry,
    parse_command,
    parse_response,
    parse_telemetry,
)
from .sim import IntentTrajectory, JointDynamics, JointState, SimWorld, WorldSnapshot

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionStatus",
    "ClockSpec",
    "Comparison",
    "Condition",
    "Controller",
    "Direction",
    "EffortDirection",
    "ExoDaemon",
    "ExoKitError",
    "ExoskeletonBuilder",
    "ExoskeletonConfig",
    "InRange",
    "IntentTrajectory",
    "JointConfig",
    "JointDynamics",
    "JointId",
    "JointKind",
    "JointName",
    "JointState",
    "Leaf",
    "MotorCommandSet",
    "MotorSpec",
    "Node",
    "OutOfRange",
    "Par",
    "Pose",
    "ProgramHandle",
    "ProtoClient",
    "Quantity",
    "Response",
    "Restriction",
    "RomLimits",
    "Seq",
    "Side",
    "SimWorld",
    "TargetMode",
    "TelemetryFrame",
    "Threshold",
    "TrapezoidProfile",
    "When",
    "WorldSnapshot",
    "add_jerks",
    "amplify",
    "constrain_to",
    "filter_velocity",
    "format_command",
    "format_telemetry",
    "gesture_wave",
    "guide_away",
    "guide_towards",
    "leaf",
    "load_config",
    "lock",
    "mirror",
    "move_to",
    "par",
    "parse_command",
    "parse_response",
    "parse_telemetry",
    "remote_follow",
    "resist",
    "save_config",
    "seq",
    "two_arm_default",
    "vibrate",
    "when",
]
