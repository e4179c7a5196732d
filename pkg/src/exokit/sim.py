"""Deterministic fixed-timestep plant standing in for the physical arms.

Each joint is an independent 1-DoF rigid body:

    I * a = tau_motor + tau_user + tau_disturbance - b * w [- G * sin(theta)]

integrated with semi-implicit Euler (velocity first, then position), which
keeps the damped system stable at control-loop timesteps.  Motor torque is
clamped to the motor spec before integration, motor speed is governed to the
spec ceiling, and the mechanical stop is inelastic: crossing a bound pins the
angle and zeroes the velocity.

Everything is pure float math driven by step(); two worlds built with the
same config, seed, and command stream stay bit-identical.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import (
    CommandForNonActuatedJointError,
    NoSuchJointError,
    NotCalibratedError,
)
from .model import (
    FREE_TRAVEL,
    ExoskeletonConfig,
    JointId,
    JointKind,
    JointName,
)

DEG2RAD = math.pi / 180.0

# Default per-joint rigid-body parameters (forearm vs whole-arm scale).
DEFAULT_INERTIA: dict[JointName, float] = {      # kg*m^2
    JointName.SHOULDER_ABDUCTION: 0.25,
    JointName.SHOULDER_FLEXION: 0.25,
    JointName.ELBOW: 0.1,
}
DEFAULT_DAMPING_NMS_RAD = 0.05   # N*m*s/rad : joint friction, all joints


@dataclass
class JointDynamics:
    inertia: float = 0.1              # kg*m^2
    damping: float = DEFAULT_DAMPING_NMS_RAD
    gravity_torque: float = 0.0       # N*m peak; applied as -G*sin(theta), 0 = off

    def __post_init__(self):
        if self.inertia <= 0.0:
            raise ValueError(f"inertia must be positive, got {self.inertia}")
        if self.damping < 0.0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")


@dataclass(frozen=True)
class JointState:
    """Snapshot of one joint as an application reads it.

    Angles are absolute (zero-offset applied).  Fields a joint cannot sense
    are None: passive joints expose the angle alone, the load-cell field
    exists only where a load cell is fitted.
    """

    angle: float
    velocity: float | None = None          # deg/s
    acceleration: float | None = None      # deg/s^2
    motor_torque: float | None = None      # N*m
    user_torque: float | None = None
    disturbance_torque: float | None = None
    load_cell: float | None = None


@dataclass
class IntentTrajectory:
    """Synthetic user muscle effort: PD pull toward a piecewise-linear path.

    ``points`` are (time_ms, angle) waypoints; before the first the target
    holds the first angle, after the last it holds the last.  The produced
    torque is clamped to +/- strength_cap the way a person cannot exceed
    their strength.
    """

    points: tuple[tuple[float, float], ...]
    kp: float = 0.35          # N*m per deg of tracking error
    kd: float = 0.02          # N*m per deg/s
    strength_cap: float = 4.0  # N*m

    def __post_init__(self):
        if not self.points:
            raise ValueError("IntentTrajectory needs at least one waypoint")
        times = [t for t, _ in self.points]
        if times != sorted(times):
            raise ValueError("waypoints must be time-ordered")

    @classmethod
    def hold(cls, angle: float, **kw) -> "IntentTrajectory":
        return cls(points=((0.0, angle),), **kw)

    @classmethod
    def ramp(cls, start: float, end: float, duration_ms: float,
             start_ms: float = 0.0, **kw) -> "IntentTrajectory":
        return cls(points=((start_ms, start), (start_ms + duration_ms, end)), **kw)

    def target(self, t_ms: float) -> tuple[float, float]:
        """Desired (angle, velocity) at sim time t."""
        pts = self.points
        if t_ms <= pts[0][0]:
            return pts[0][1], 0.0
        for (t0, a0), (t1, a1) in zip(pts, pts[1:]):
            if t_ms <= t1:
                slope = (a1 - a0) / (t1 - t0) * 1000.0  # deg/s
                return a0 + (a1 - a0) * (t_ms - t0) / (t1 - t0), slope
        return pts[-1][1], 0.0

    def torque(self, t_ms: float, angle: float, velocity: float) -> float:
        target_angle, target_vel = self.target(t_ms)
        tau = self.kp * (target_angle - angle) + self.kd * (target_vel - velocity)
        return max(-self.strength_cap, min(self.strength_cap, tau))


@dataclass
class _JointSim:
    """Mutable integration state, physical frame."""

    angle: float = 0.0
    velocity: float = 0.0
    acceleration: float = 0.0
    motor_torque: float = 0.0
    user_torque: float = 0.0
    disturbance_torque: float = 0.0
    load_cell: float = 0.0


@dataclass
class _Disturbance:
    joint: JointId
    torque: float
    start_ms: float
    end_ms: float


@dataclass(frozen=True)
class JointSnap:
    """Controller-facing view of one joint for a single tick."""

    angle: float
    velocity: float
    acceleration: float
    motor_torque: float
    user_torque: float
    disturbance_torque: float
    load_cell: float | None


@dataclass(frozen=True)
class WorldSnapshot:
    t_ms: float
    joints: Mapping[JointId, JointSnap]


class SimWorld:
    """Simulated plant for one exoskeleton config.

    hard_stops=False removes the mechanical stops (travel is then bounded
    only by anatomy) so tests can exercise the software safety layer alone.
    """

    def __init__(
        self,
        config: ExoskeletonConfig,
        seed: int = 0,
        dynamics: Mapping[JointId, JointDynamics] | None = None,
        hard_stops: bool = True,
        start_angles: Mapping[JointId, float] | None = None,
        encoder_offsets: Mapping[JointId, float] | None = None,
    ):
        self.config = config
        self.seed = seed
        self.rng = random.Random(seed)
        self.hard_stops = hard_stops
        self.t_ms = 0.0
        self._dynamics: dict[JointId, JointDynamics] = {}
        self._encoder_offsets = dict(encoder_offsets or {})
        self._states: dict[JointId, _JointSim] = {}
        self._intents: dict[JointId, IntentTrajectory] = {}
        self._disturbances: list[_Disturbance] = []
        for jc in config.joints:
            jid = jc.joint
            dyn = (dynamics or {}).get(jid) or JointDynamics(
                inertia=DEFAULT_INERTIA[jid.name])
            self._dynamics[jid] = dyn
            lo, hi = self._travel_range(jid)
            start = (start_angles or {}).get(jid, 0.0)
            self._states[jid] = _JointSim(angle=min(max(start, lo), hi))

    # -- wiring ------------------------------------------------------------

    def set_config(self, config: ExoskeletonConfig) -> None:
        """Swap in an updated config (calibration changes) between steps."""
        if config.joint_ids() != self.config.joint_ids():
            raise NoSuchJointError("config joint set changed under a live world")
        self.config = config

    def dynamics(self, joint: JointId) -> JointDynamics:
        return self._dynamics[joint]

    def set_intent(self, joint: JointId, trajectory: IntentTrajectory | None) -> None:
        self.config.joint(joint)  # raises NoSuchJointError
        if trajectory is None:
            self._intents.pop(joint, None)
        else:
            self._intents[joint] = trajectory

    def inject_disturbance(self, joint: JointId, torque: float, duration_ms: float) -> None:
        """External torque window starting now; overlapping windows sum."""
        self.config.joint(joint)
        if duration_ms <= 0.0:
            raise ValueError(f"duration must be positive, got {duration_ms}")
        self._disturbances.append(
            _Disturbance(joint, torque, self.t_ms, self.t_ms + duration_ms))

    # -- integration ---------------------------------------------------------

    def _travel_range(self, joint: JointId) -> tuple[float, float]:
        if self.hard_stops:
            return self.config.effective_range(joint)
        return FREE_TRAVEL[joint.name]

    def step(self, dt_ms: float | None = None,
             motor_commands: Mapping[JointId, float] | None = None) -> None:
        """Advance every joint by one control period."""
        if dt_ms is None:
            dt_ms = self.config.control_period_ms
        dt = dt_ms / 1000.0
        commands = motor_commands or {}
        for jid in commands:
            jc = self.config.joint(jid)
            if jc.kind is not JointKind.ACTUATED:
                raise CommandForNonActuatedJointError(f"{jid} has no motor")

        if self._disturbances:
            self._disturbances = [d for d in self._disturbances if d.end_ms > self.t_ms]

        for jc in self.config.joints:
            jid = jc.joint
            st = self._states[jid]
            dyn = self._dynamics[jid]

            tau_motor = 0.0
            if jc.kind is JointKind.ACTUATED:
                limit = jc.motor.max_torque
                tau_motor = min(max(commands.get(jid, 0.0), -limit), limit)
            intent = self._intents.get(jid)
            tau_user = intent.torque(self.t_ms, st.angle, st.velocity) if intent else 0.0
            tau_dist = sum(
                d.torque for d in self._disturbances
                if d.joint == jid and d.start_ms <= self.t_ms < d.end_ms)

            # net torque with damping and optional gravity, N*m
            w_rad = st.velocity * DEG2RAD
            tau_net = tau_motor + tau_user + tau_dist - dyn.damping * w_rad
            if dyn.gravity_torque:
                tau_net -= dyn.gravity_torque * math.sin(st.angle * DEG2RAD)

            alpha = tau_net / dyn.inertia / DEG2RAD   # deg/s^2
            v_old = st.velocity
            v_new = v_old + alpha * dt
            if jc.kind is JointKind.ACTUATED:
                cap = jc.motor.max_speed                 # servo speed governor
                v_new = min(max(v_new, -cap), cap)
            a_new = st.angle + v_new * dt

            lo, hi = self._travel_range(jid)
            if a_new <= lo:
                a_new, v_new = lo, 0.0
            elif a_new >= hi:
                a_new, v_new = hi, 0.0

            realized = (v_new - v_old) / dt              # deg/s^2 after clamps
            st.angle = a_new
            st.velocity = v_new
            st.acceleration = realized
            st.motor_torque = tau_motor
            st.user_torque = tau_user
            st.disturbance_torque = tau_dist
            # reaction the structure absorbs: zero in free motion, the full
            # net torque when pinned at a stop
            st.load_cell = tau_net - dyn.inertia * realized * DEG2RAD

        self.t_ms += dt_ms

    # -- observation ---------------------------------------------------------

    def raw_angle(self, joint: JointId) -> float:
        """Encoder reading before calibration."""
        self.config.joint(joint)
        return self._states[joint].angle + self._encoder_offsets.get(joint, 0.0)

    def physical_angle(self, joint: JointId) -> float:
        self.config.joint(joint)
        return self._states[joint].angle

    def _absolute(self, joint: JointId, physical: float) -> float:
        offset = self._encoder_offsets.get(joint, 0.0)
        if self.config.is_calibrated(joint):
            return physical + offset - self.config.zero_offset(joint)
        return physical + offset

    def read_state(self, joint: JointId) -> JointState:
        """Application-level view respecting sensing capabilities."""
        jc = self.config.joint(joint)
        st = self._states[joint]
        if jc.kind is JointKind.PASSIVE:
            return JointState(angle=st.angle)
        if not self.config.is_calibrated(joint):
            raise NotCalibratedError(f"{joint} not calibrated")
        return JointState(
            angle=self._absolute(joint, st.angle),
            velocity=st.velocity,
            acceleration=st.acceleration,
            motor_torque=st.motor_torque,
            user_torque=st.user_torque,
            disturbance_torque=st.disturbance_torque,
            load_cell=st.load_cell if jc.has_load_cell else None,
        )

    def snapshot(self) -> WorldSnapshot:
        """Complete per-tick view for the control layer."""
        joints = {}
        for jc in self.config.joints:
            jid = jc.joint
            st = self._states[jid]
            joints[jid] = JointSnap(
                angle=self._absolute(jid, st.angle),
                velocity=st.velocity,
                acceleration=st.acceleration,
                motor_torque=st.motor_torque,
                user_torque=st.user_torque,
                disturbance_torque=st.disturbance_torque,
                load_cell=st.load_cell if jc.has_load_cell else None,
            )
        return WorldSnapshot(t_ms=self.t_ms, joints=joints)
