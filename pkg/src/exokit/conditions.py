"""Boolean predicates over a single world snapshot.

Conditions are the trigger half of trigger-action programs: pure, no
side effects, evaluated once per control tick.  Speed, acceleration and
torque thresholds compare magnitudes; angle comparisons are signed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .model import JointId
from .sim import WorldSnapshot

OMEGA_DEAD_DEG_S = 2.0   # deg/s : below this a joint counts as at rest


class Quantity(str, Enum):
    ANGLE = "angle"
    SPEED = "speed"
    ACCEL = "accel"
    TORQUE = "torque"


class Comparison(str, Enum):
    ABOVE = ">"
    BELOW = "<"


class Condition:
    """Base class; subclasses implement evaluate()."""

    def evaluate(self, snap: WorldSnapshot) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Threshold(Condition):
    joint: JointId
    quantity: Quantity
    comparison: Comparison
    bound: float

    def _value(self, snap: WorldSnapshot) -> float:
        js = snap.joints[self.joint]
        if self.quantity is Quantity.ANGLE:
            return js.angle
        if self.quantity is Quantity.SPEED:
            return abs(js.velocity)
        if self.quantity is Quantity.ACCEL:
            return abs(js.acceleration)
        return abs(js.motor_torque)

    def evaluate(self, snap: WorldSnapshot) -> bool:
        value = self._value(snap)
        if self.comparison is Comparison.ABOVE:
            return value > self.bound
        return value < self.bound


@dataclass(frozen=True)
class InRange(Condition):
    joint: JointId
    low: float
    high: float

    def evaluate(self, snap: WorldSnapshot) -> bool:
        return self.low <= snap.joints[self.joint].angle <= self.high


@dataclass(frozen=True)
class OutOfRange(Condition):
    joint: JointId
    low: float
    high: float

    def evaluate(self, snap: WorldSnapshot) -> bool:
        return not self.low <= snap.joints[self.joint].angle <= self.high


@dataclass(frozen=True)
class Direction(Condition):
    """True while the joint moves one way faster than the rest deadband."""

    joint: JointId
    positive: bool
    min_speed: float = OMEGA_DEAD_DEG_S

    def evaluate(self, snap: WorldSnapshot) -> bool:
        v = snap.joints[self.joint].velocity
        return v > self.min_speed if self.positive else v < -self.min_speed


@dataclass(frozen=True)
class Pose(Condition):
    """All listed joints within tolerance of their target angles."""

    targets: Mapping[JointId, tuple[float, float]] = field(default_factory=dict)

    def evaluate(self, snap: WorldSnapshot) -> bool:
        if not self.targets:
            return False
        for jid, (angle, tol) in self.targets.items():
            if abs(snap.joints[jid].angle - angle) > tol:
                return False
        return True
