"""Motion primitives and haptic strategies, one Action class per behavior.

An Action owns a fixed set of target joints and produces one torque per
target per tick.  Lifecycle: PENDING until first ticked, RUNNING while
emitting torque, then DONE or ABORTED; terminal actions emit nothing.

Factory functions (move_to, resist, ...) validate parameters against the
config up front so a bad request fails before it ever reaches the plant.
The per-tick sign rules live in small pure functions near the top of the
module; Action classes only wire them to state.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import (
    AreaOutsideRomError,
    BadRangeError,
    FrequencyTooHighError,
    NotActuatedError,
    NotCalibratedError,
    SameJointError,
    TargetOutOfRangeError,
    TorqueOutOfRangeError,
)
from .model import ExoskeletonConfig, JointId, JointKind, JointName, Side
from .sim import WorldSnapshot

# Control-loop constants.
KP_TRACK = 0.8     # N*m/deg   : reference-tracking proportional gain
KD_TRACK = 0.05    # N*m*s/deg : reference-tracking damping gain
KP_HOLD = 2.5      # N*m/deg   : stiffer pair for position holds (lock)
KD_HOLD = 0.08
OMEGA_DEAD_DEG_S = 2.0   # deg/s : strategies treat slower motion as rest
OMEGA_REST_DEG_S = 1.0   # deg/s : completion requires settling below this
EPSILON_FLOOR_DEG = 0.5  # deg   : tightest completion tolerance honored
REF_ACCEL_MIN = 600.0    # deg/s^2 : floor for reference ramp steepness


class ActionStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    ABORTED = "aborted"


def _sign(x: float) -> float:
    return 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)


# --- pure per-tick torque rules ---------------------------------------------

class EffortDirection(str, Enum):
    POSITIVE = "pos"
    NEGATIVE = "neg"
    BOTH = "both"


def effort_torque(omega: float, tau: float, direction: EffortDirection,
                  assist: bool, omega_dead: float = OMEGA_DEAD_DEG_S) -> float:
    """Shared rule for resist (assist=False) and amplify (assist=True)."""
    if abs(omega) <= omega_dead:
        return 0.0
    if direction is EffortDirection.POSITIVE and omega < 0:
        return 0.0
    if direction is EffortDirection.NEGATIVE and omega > 0:
        return 0.0
    tau_signed = tau * _sign(omega)
    return tau_signed if assist else -tau_signed


def velocity_filter_torque(omega: float, v_min: float, v_max: float,
                           tau_assist: float, tau_resist: float,
                           omega_dead: float = OMEGA_DEAD_DEG_S) -> float:
    """Brake above v_max, help along below v_min, hands off in between.

    The assist band starts above the rest deadband so a parked joint is
    never dragged into motion.
    """
    speed = abs(omega)
    if speed > v_max:
        return -tau_resist * _sign(omega)
    if omega_dead < speed < v_min:
        return tau_assist * _sign(omega)
    return 0.0


def constrain_torque(angle: float, center: float, epsilon: float,
                     max_torque: float) -> float:
    """Full push back toward the nearest boundary once outside the area."""
    if angle > center + epsilon:
        return -max_torque
    if angle < center - epsilon:
        return max_torque
    return 0.0


def guide_towards_torque(angle: float, omega: float, center: float,
                         epsilon: float, tau_assist: float, tau_resist: float,
                         omega_dead: float = OMEGA_DEAD_DEG_S) -> float:
    """Outside the area: help motion that approaches it, brake motion away."""
    if abs(omega) <= omega_dead:
        return 0.0
    if center - epsilon <= angle <= center + epsilon:
        return 0.0
    approaching = (angle < center - epsilon and omega > 0) or \
                  (angle > center + epsilon and omega < 0)
    return tau_assist * _sign(omega) if approaching else -tau_resist * _sign(omega)


def guide_away_torque(angle: float, omega: float, center: float,
                      epsilon: float, tau_assist: float, tau_resist: float,
                      omega_dead: float = OMEGA_DEAD_DEG_S) -> float:
    """Mirror image of guide_towards: the area repels instead of attracts."""
    if abs(omega) <= omega_dead:
        return 0.0
    if center - epsilon <= angle <= center + epsilon:
        # deeper in = toward the center
        moving_in = (angle < center and omega > 0) or (angle > center and omega < 0)
        return -tau_resist * _sign(omega) if moving_in else tau_assist * _sign(omega)
    approaching = (angle < center - epsilon and omega > 0) or \
                  (angle > center + epsilon and omega < 0)
    return -tau_resist * _sign(omega) if approaching else tau_assist * _sign(omega)


# --- reference trajectory -----------------------------------------------------

@dataclass(frozen=True)
class TrapezoidProfile:
    """Position/velocity reference: ramp up, cruise at v, ramp down.

    The ramp steepness adapts to the move (a >= 4 v^2 / d) so total
    duration never exceeds 1.25 * d / v regardless of distance.
    """

    start: float
    target: float
    cruise: float      # deg/s, positive
    accel: float       # deg/s^2, positive
    t_acc: float       # s
    t_total: float     # s

    @classmethod
    def plan(cls, start: float, target: float, velocity: float) -> "TrapezoidProfile":
        d = abs(target - start)
        if d < 1e-12:
            return cls(start, target, velocity, REF_ACCEL_MIN, 0.0, 0.0)
        a = max(REF_ACCEL_MIN, 4.0 * velocity * velocity / d)
        t_acc = velocity / a
        d_cruise = d - velocity * t_acc  # ramps cover v*t_acc total
        t_total = 2.0 * t_acc + d_cruise / velocity
        return cls(start, target, velocity, a, t_acc, t_total)

    def reference(self, t_s: float) -> tuple[float, float]:
        """(angle, velocity) of the reference at t seconds from start."""
        d = self.target - self.start
        direction = _sign(d)
        if t_s <= 0.0 or direction == 0.0:
            return (self.start, 0.0) if t_s < self.t_total else (self.target, 0.0)
        if t_s >= self.t_total:
            return self.target, 0.0
        a, v, t1 = self.accel, self.cruise, self.t_acc
        if t_s < t1:
            pos = 0.5 * a * t_s * t_s
            vel = a * t_s
        elif t_s < self.t_total - t1:
            pos = 0.5 * a * t1 * t1 + v * (t_s - t1)
            vel = v
        else:
            remain = self.t_total - t_s
            pos = abs(d) - 0.5 * a * remain * remain
            vel = a * remain
        return self.start + direction * pos, direction * vel

    @property
    def done_after(self) -> float:
        return self.t_total


def track_torque(angle: float, omega: float, ref_angle: float, ref_vel: float,
                 max_torque: float, kp: float = KP_TRACK, kd: float = KD_TRACK) -> float:
    """PD reference tracker with velocity feedforward, saturated at the motor."""
    tau = kp * (ref_angle - angle) + kd * (ref_vel - omega)
    return min(max(tau, -max_torque), max_torque)


# --- action machinery ---------------------------------------------------------

@dataclass
class TickContext:
    """Per-tick environment handed to actions by the controller."""

    config: ExoskeletonConfig
    t_ms: float
    dt_ms: float
    rng: random.Random


class Action:
    """One unit of exoskeleton behavior with a joint-exclusive claim."""

    kind = "action"

    def __init__(self, joints: Iterable[JointId]):
        self.joints: tuple[JointId, ...] = tuple(joints)
        self.status = ActionStatus.PENDING

    def start(self, snap: WorldSnapshot, ctx: TickContext) -> None:
        """Transition PENDING -> RUNNING, resolving state-dependent targets."""
        self.status = ActionStatus.RUNNING
        self.on_start(snap, ctx)

    def on_start(self, snap: WorldSnapshot, ctx: TickContext) -> None:
        pass

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        """Called once per tick while RUNNING; may flip status to DONE."""
        raise NotImplementedError

    def abort(self) -> None:
        if self.status in (ActionStatus.PENDING, ActionStatus.RUNNING):
            self.status = ActionStatus.ABORTED

    @property
    def terminal(self) -> bool:
        return self.status in (ActionStatus.DONE, ActionStatus.ABORTED)


# --- validation helpers -------------------------------------------------------

def _fmt_deg(x: float) -> str:
    text = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def _require_actuated(config: ExoskeletonConfig, joints: Sequence[JointId]) -> None:
    if not joints:
        raise BadRangeError("empty joint list")
    for jid in joints:
        jc = config.joint(jid)
        if jc.kind is not JointKind.ACTUATED:
            raise NotActuatedError(f"{jid} has no motor")
        if not config.is_calibrated(jid):
            raise NotCalibratedError(f"{jid} not calibrated")


def _max_torque_bound(config: ExoskeletonConfig, joints: Sequence[JointId]) -> float:
    return min(config.joint(j).motor.max_torque for j in joints)


def _max_speed_bound(config: ExoskeletonConfig, joints: Sequence[JointId]) -> float:
    return min(config.joint(j).motor.max_speed for j in joints)


def _check_strategy_torque(config: ExoskeletonConfig, joints: Sequence[JointId],
                           tau: float, label: str = "torque") -> None:
    limit = _max_torque_bound(config, joints)
    if not 0.0 < tau <= limit:
        raise TorqueOutOfRangeError(f"{label} {tau} outside (0, {limit}] N*m")


# --- move_to -------------------------------------------------------------------

class TargetMode(str, Enum):
    ABSOLUTE = "abs"
    RELATIVE = "rel"


class MoveToAction(Action):
    """Trapezoid-profiled point-to-point move, PD-tracked, settles to DONE."""

    kind = "moveto"

    def __init__(self, joints: Sequence[JointId], mode: TargetMode,
                 angle: float, epsilon: float, velocity: float):
        super().__init__(joints)
        self.mode = mode
        self.angle = angle
        self.epsilon = max(epsilon, EPSILON_FLOOR_DEG)
        self.velocity = velocity
        self._profiles: dict[JointId, TrapezoidProfile] = {}
        self._t0_ms = 0.0
        self._settled: set[JointId] = set()

    def on_start(self, snap: WorldSnapshot, ctx: TickContext) -> None:
        self._t0_ms = ctx.t_ms
        for jid in self.joints:
            here = snap.joints[jid].angle
            if self.mode is TargetMode.ABSOLUTE:
                target = self.angle
            else:
                target = ctx.config.clamp_to_rom(jid, here + self.angle)
            self._profiles[jid] = TrapezoidProfile.plan(here, target, self.velocity)

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        t_s = (ctx.t_ms - self._t0_ms) / 1000.0
        out: dict[JointId, float] = {}
        for jid in self.joints:
            js = snap.joints[jid]
            prof = self._profiles[jid]
            ref_angle, ref_vel = prof.reference(t_s)
            if jid not in self._settled and t_s >= prof.done_after \
                    and abs(js.angle - prof.target) <= self.epsilon \
                    and abs(js.velocity) < OMEGA_REST_DEG_S:
                self._settled.add(jid)
            if jid in self._settled:
                ref_angle, ref_vel = prof.target, 0.0
            limit = ctx.config.joint(jid).motor.max_torque
            if t_s >= prof.done_after:
                # profile exhausted: pin the endpoint with the stiff hold pair
                # so short fast moves settle inside their time budget
                out[jid] = track_torque(js.angle, js.velocity, prof.target, 0.0,
                                        limit, kp=KP_HOLD, kd=KD_HOLD)
            else:
                out[jid] = track_torque(js.angle, js.velocity, ref_angle, ref_vel, limit)
        if len(self._settled) == len(self.joints):
            self.status = ActionStatus.DONE
            return {jid: 0.0 for jid in self.joints}
        return out


def move_to(config: ExoskeletonConfig, joints: Sequence[JointId], mode: TargetMode,
            angle: float, epsilon: float, velocity: float) -> MoveToAction:
    _require_actuated(config, joints)
    if epsilon < 0.0:
        raise BadRangeError(f"epsilon {epsilon} must be >= 0")
    speed_cap = _max_speed_bound(config, joints)
    if not 0.0 < velocity <= speed_cap:
        raise BadRangeError(f"velocity {velocity} outside (0, {speed_cap}] deg/s")
    if mode is TargetMode.ABSOLUTE:
        for jid in joints:
            lo, hi = config.effective_range(jid)
            if angle > hi:
                raise TargetOutOfRangeError(f"{jid.name.value} max {_fmt_deg(hi)}")
            if angle < lo:
                raise TargetOutOfRangeError(f"{jid.name.value} min {_fmt_deg(lo)}")
    return MoveToAction(joints, mode, angle, epsilon, velocity)


# --- lock ----------------------------------------------------------------------

class LockAction(Action):
    """Hold the angles captured at start with full motor authority."""

    kind = "lock"

    def __init__(self, joints: Sequence[JointId]):
        super().__init__(joints)
        self._setpoints: dict[JointId, float] = {}

    def on_start(self, snap: WorldSnapshot, ctx: TickContext) -> None:
        for jid in self.joints:
            self._setpoints[jid] = snap.joints[jid].angle

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        out = {}
        for jid in self.joints:
            js = snap.joints[jid]
            limit = ctx.config.joint(jid).motor.max_torque
            out[jid] = track_torque(js.angle, js.velocity, self._setpoints[jid], 0.0,
                                    limit, kp=KP_HOLD, kd=KD_HOLD)
        return out


def lock(config: ExoskeletonConfig, joints: Sequence[JointId]) -> LockAction:
    _require_actuated(config, joints)
    return LockAction(joints)


# --- gesture ---------------------------------------------------------------------

class GestureWaveAction(Action):
    """Raise the elbow, oscillate it for N cycles, return to the start pose."""

    kind = "gesture"

    def __init__(self, side: Side, raise_deg: float, swing_deg: float,
                 cycles: int, velocity: float):
        self.elbow = JointId(side, JointName.ELBOW)
        super().__init__([self.elbow])
        self.raise_deg = raise_deg
        self.swing_deg = swing_deg
        self.cycles = cycles
        self.velocity = velocity
        self._phases: list[tuple[TargetMode, float]] = []
        self._current: MoveToAction | None = None
        self._index = 0

    def on_start(self, snap: WorldSnapshot, ctx: TickContext) -> None:
        home = snap.joints[self.elbow].angle
        phases = [(TargetMode.ABSOLUTE, self.raise_deg)]
        for _ in range(self.cycles):
            phases.append((TargetMode.RELATIVE, -self.swing_deg))
            phases.append((TargetMode.RELATIVE, self.swing_deg))
        phases.append((TargetMode.ABSOLUTE, ctx.config.clamp_to_rom(self.elbow, home)))
        self._phases = phases
        self._index = 0
        self._current = None

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        if self._current is None or self._current.terminal:
            if self._current is not None:
                self._index += 1
            if self._index >= len(self._phases):
                self.status = ActionStatus.DONE
                return {self.elbow: 0.0}
            mode, angle = self._phases[self._index]
            sub = move_to(ctx.config, [self.elbow], mode, angle,
                          EPSILON_FLOOR_DEG, self.velocity)
            sub.start(snap, ctx)
            self._current = sub
        return self._current.torques(snap, ctx)


def gesture_wave(config: ExoskeletonConfig, side: Side, raise_deg: float = 70.0,
                 swing_deg: float = 30.0, cycles: int = 3,
                 velocity: float = 120.0) -> GestureWaveAction:
    elbow = JointId(side, JointName.ELBOW)
    _require_actuated(config, [elbow])
    if cycles < 1:
        raise BadRangeError(f"cycles {cycles} must be >= 1")
    lo, hi = config.effective_range(elbow)
    if raise_deg > hi:
        raise TargetOutOfRangeError(f"{elbow.name.value} max {_fmt_deg(hi)}")
    if raise_deg < lo:
        raise TargetOutOfRangeError(f"{elbow.name.value} min {_fmt_deg(lo)}")
    speed_cap = _max_speed_bound(config, [elbow])
    if not 0.0 < velocity <= speed_cap:
        raise BadRangeError(f"velocity {velocity} outside (0, {speed_cap}] deg/s")
    return GestureWaveAction(side, raise_deg, swing_deg, cycles, velocity)


# --- vibrate ---------------------------------------------------------------------

class VibrateAction(Action):
    """Square-wave setpoint wobble around the pose held at start."""

    kind = "vibrate"

    def __init__(self, joints: Sequence[JointId], amplitude: float,
                 frequency: float, duration_ms: float):
        super().__init__(joints)
        self.amplitude = amplitude
        self.frequency = frequency
        self.duration_ms = duration_ms
        self._centers: dict[JointId, float] = {}
        self._t0_ms = 0.0

    def on_start(self, snap: WorldSnapshot, ctx: TickContext) -> None:
        self._t0_ms = ctx.t_ms
        for jid in self.joints:
            self._centers[jid] = snap.joints[jid].angle

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        elapsed = ctx.t_ms - self._t0_ms
        if elapsed >= self.duration_ms:
            self.status = ActionStatus.DONE
            return {jid: 0.0 for jid in self.joints}
        half_period_ms = 500.0 / self.frequency
        lobe = 1.0 if int(elapsed // half_period_ms) % 2 == 0 else -1.0
        out = {}
        for jid in self.joints:
            js = snap.joints[jid]
            setpoint = ctx.config.clamp_to_rom(
                jid, self._centers[jid] + lobe * self.amplitude)
            limit = ctx.config.joint(jid).motor.max_torque
            out[jid] = track_torque(js.angle, js.velocity, setpoint, 0.0, limit)
        return out


def vibrate(config: ExoskeletonConfig, joints: Sequence[JointId], amplitude: float,
            frequency: float, duration_ms: float) -> VibrateAction:
    _require_actuated(config, joints)
    if amplitude < 0.0:
        raise BadRangeError(f"amplitude {amplitude} must be >= 0")
    if duration_ms <= 0.0:
        raise BadRangeError(f"duration {duration_ms} must be positive")
    if frequency <= 0.0 or frequency > config.control_rate_hz / 10.0:
        raise FrequencyTooHighError(
            f"frequency {frequency} outside (0, {config.control_rate_hz / 10.0}] Hz")
    speed_cap = _max_speed_bound(config, joints)
    if 4.0 * amplitude * frequency > speed_cap:
        raise FrequencyTooHighError(
            f"amplitude {amplitude} deg at {frequency} Hz needs more than "
            f"{speed_cap} deg/s")
    return VibrateAction(joints, amplitude, frequency, duration_ms)


# --- mirror ----------------------------------------------------------------------

class MirrorAction(Action):
    """Drive dst to factor * src angle, clamped into dst's range, every tick."""

    kind = "mirror"

    def __init__(self, src: JointId, dst: JointId, factor: float):
        super().__init__([dst])
        self.src = src
        self.dst = dst
        self.factor = factor
        self._prev_setpoint: float | None = None

    def current_setpoint(self, snap: WorldSnapshot, config: ExoskeletonConfig) -> float:
        return config.clamp_to_rom(self.dst, self.factor * snap.joints[self.src].angle)

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        setpoint = self.current_setpoint(snap, ctx.config)
        if self._prev_setpoint is None:
            ref_vel = 0.0
        else:
            ref_vel = (setpoint - self._prev_setpoint) / (ctx.dt_ms / 1000.0)
        self._prev_setpoint = setpoint
        js = snap.joints[self.dst]
        limit = ctx.config.joint(self.dst).motor.max_torque
        return {self.dst: track_torque(js.angle, js.velocity, setpoint, ref_vel, limit)}


def mirror(config: ExoskeletonConfig, src: JointId, dst: JointId,
           factor: float) -> MirrorAction:
    if src == dst:
        raise SameJointError(f"cannot mirror {src} onto itself")
    src_jc = config.joint(src)
    if src_jc.kind is JointKind.PASSIVE:
        raise NotActuatedError(f"{src} has no encoder to mirror from")
    if not config.is_calibrated(src):
        raise NotCalibratedError(f"{src} not calibrated")
    _require_actuated(config, [dst])
    if factor == 0.0:
        raise BadRangeError("factor must be nonzero")
    return MirrorAction(src, dst, factor)


# --- resist / amplify ---------------------------------------------------------------

class EffortAction(Action):
    """Constant-magnitude torque with or against the motion direction."""

    def __init__(self, joints: Sequence[JointId], tau: float,
                 direction: EffortDirection, assist: bool):
        super().__init__(joints)
        self.tau = tau
        self.direction = direction
        self.assist = assist

    @property
    def kind(self) -> str:  # type: ignore[override]
        return "amplify" if self.assist else "resist"

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        return {
            jid: effort_torque(snap.joints[jid].velocity, self.tau,
                               self.direction, self.assist)
            for jid in self.joints
        }


def resist(config: ExoskeletonConfig, joints: Sequence[JointId], tau: float,
           direction: EffortDirection = EffortDirection.BOTH) -> EffortAction:
    _require_actuated(config, joints)
    _check_strategy_torque(config, joints, tau)
    return EffortAction(joints, tau, direction, assist=False)


def amplify(config: ExoskeletonConfig, joints: Sequence[JointId], tau: float,
            direction: EffortDirection = EffortDirection.BOTH) -> EffortAction:
    _require_actuated(config, joints)
    _check_strategy_torque(config, joints, tau)
    return EffortAction(joints, tau, direction, assist=True)


# --- filter_velocity ------------------------------------------------------------------

class FilterVelocityAction(Action):
    kind = "filtervel"

    def __init__(self, joint: JointId, v_min: float, v_max: float,
                 tau_assist: float, tau_resist: float):
        super().__init__([joint])
        self.joint = joint
        self.v_min = v_min
        self.v_max = v_max
        self.tau_assist = tau_assist
        self.tau_resist = tau_resist

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        js = snap.joints[self.joint]
        return {self.joint: velocity_filter_torque(
            js.velocity, self.v_min, self.v_max, self.tau_assist, self.tau_resist)}


def filter_velocity(config: ExoskeletonConfig, joint: JointId, v_min: float,
                    v_max: float, tau_assist: float, tau_resist: float) -> FilterVelocityAction:
    _require_actuated(config, [joint])
    if not 0.0 <= v_min < v_max:
        raise BadRangeError(f"need 0 <= v_min < v_max, got [{v_min}, {v_max}]")
    _check_strategy_torque(config, [joint], tau_assist, "tau_assist")
    _check_strategy_torque(config, [joint], tau_resist, "tau_resist")
    return FilterVelocityAction(joint, v_min, v_max, tau_assist, tau_resist)


# --- add_jerks ------------------------------------------------------------------------

class AddJerksAction(Action):
    """Randomly timed displacement bursts: snap away at full speed, release."""

    kind = "jerks"

    # a stalled burst (user pushing back) gives up after this factor of its
    # nominal duration plus a fixed grace
    _TIMEOUT_FACTOR = 2.0
    _TIMEOUT_GRACE_MS = 100.0

    def __init__(self, joint: JointId, disp_min: float, disp_max: float,
                 interval_min_ms: float, interval_max_ms: float, count: int):
        super().__init__([joint])
        self.joint = joint
        self.disp_min = disp_min
        self.disp_max = disp_max
        self.interval_min_ms = interval_min_ms
        self.interval_max_ms = interval_max_ms
        self.count = count
        self.fired = 0
        self._wait_until_ms: float | None = None
        self._burst: MoveToAction | None = None
        self._burst_deadline_ms = 0.0

    def _schedule(self, ctx: TickContext) -> None:
        delay = ctx.rng.uniform(self.interval_min_ms, self.interval_max_ms)
        self._wait_until_ms = ctx.t_ms + delay

    def on_start(self, snap: WorldSnapshot, ctx: TickContext) -> None:
        self._schedule(ctx)

    def _launch_burst(self, snap: WorldSnapshot, ctx: TickContext) -> None:
        amp = ctx.rng.uniform(self.disp_min, self.disp_max)
        sign = 1.0 if ctx.rng.random() < 0.5 else -1.0
        here = snap.joints[self.joint].angle
        lo, hi = ctx.config.effective_range(self.joint)
        if not lo <= here + amp * sign <= hi:   # flip rather than leave the range
            sign = -sign
        speed = ctx.config.joint(self.joint).motor.max_speed
        sub = move_to(ctx.config, [self.joint], TargetMode.RELATIVE,
                      amp * sign, EPSILON_FLOOR_DEG, speed)
        sub.start(snap, ctx)
        nominal_ms = amp / speed * 1000.0
        self._burst_deadline_ms = ctx.t_ms + \
            self._TIMEOUT_FACTOR * nominal_ms + self._TIMEOUT_GRACE_MS
        self._burst = sub
        self.fired += 1

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        if self._burst is not None:
            if self._burst.terminal or ctx.t_ms >= self._burst_deadline_ms:
                self._burst = None   # release
                if self.fired >= self.count:
                    self.status = ActionStatus.DONE
                    return {self.joint: 0.0}
                self._schedule(ctx)
                return {self.joint: 0.0}
            return self._burst.torques(snap, ctx)
        if self._wait_until_ms is not None and ctx.t_ms >= self._wait_until_ms:
            self._launch_burst(snap, ctx)
            return self._burst.torques(snap, ctx)
        return {self.joint: 0.0}


def add_jerks(config: ExoskeletonConfig, joint: JointId, disp_min: float,
              disp_max: float, interval_min_ms: float, interval_max_ms: float,
              count: int) -> AddJerksAction:
    _require_actuated(config, [joint])
    if not 0.0 < disp_min <= disp_max:
        raise BadRangeError(
            f"need 0 < disp_min <= disp_max, got [{disp_min}, {disp_max}]")
    if not 0.0 <= interval_min_ms <= interval_max_ms:
        raise BadRangeError(
            f"need 0 <= interval_min <= interval_max, got "
            f"[{interval_min_ms}, {interval_max_ms}]")
    if count < 1:
        raise BadRangeError(f"count {count} must be >= 1")
    lo, hi = config.effective_range(joint)
    if disp_max > hi - lo:
        raise BadRangeError(f"disp_max {disp_max} exceeds joint travel {hi - lo}")
    return AddJerksAction(joint, disp_min, disp_max,
                          interval_min_ms, interval_max_ms, count)


# --- constrain_to -----------------------------------------------------------------------

class ConstrainToAction(Action):
    kind = "constrain"

    def __init__(self, joint: JointId, center: float, epsilon: float):
        super().__init__([joint])
        self.joint = joint
        self.center = center
        self.epsilon = epsilon

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        js = snap.joints[self.joint]
        limit = ctx.config.joint(self.joint).motor.max_torque
        return {self.joint: constrain_torque(js.angle, self.center, self.epsilon, limit)}


def _check_area(config: ExoskeletonConfig, joint: JointId, center: float,
                epsilon: float) -> None:
    if epsilon < 0.0:
        raise BadRangeError(f"epsilon {epsilon} must be >= 0")
    lo, hi = config.effective_range(joint)
    if center + epsilon < lo or center - epsilon > hi:
        raise AreaOutsideRomError(
            f"area {center}+/-{epsilon} outside [{lo}, {hi}]")


def constrain_to(config: ExoskeletonConfig, joint: JointId, center: float,
                 epsilon: float) -> ConstrainToAction:
    _require_actuated(config, [joint])
    _check_area(config, joint, center, epsilon)
    return ConstrainToAction(joint, center, epsilon)


# --- guide_towards / guide_away --------------------------------------------------------

class GuideAction(Action):
    def __init__(self, joint: JointId, center: float, epsilon: float,
                 tau_assist: float, tau_resist: float, towards: bool):
        super().__init__([joint])
        self.joint = joint
        self.center = center
        self.epsilon = epsilon
        self.tau_assist = tau_assist
        self.tau_resist = tau_resist
        self.towards = towards

    @property
    def kind(self) -> str:  # type: ignore[override]
        return "guideto" if self.towards else "guideaway"

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        js = snap.joints[self.joint]
        rule = guide_towards_torque if self.towards else guide_away_torque
        return {self.joint: rule(js.angle, js.velocity, self.center, self.epsilon,
                                 self.tau_assist, self.tau_resist)}


def _guide(config: ExoskeletonConfig, joint: JointId, center: float, epsilon: float,
           tau_assist: float, tau_resist: float, towards: bool) -> GuideAction:
    _require_actuated(config, [joint])
    _check_area(config, joint, center, epsilon)
    _check_strategy_torque(config, [joint], tau_assist, "tau_assist")
    _check_strategy_torque(config, [joint], tau_resist, "tau_resist")
    return GuideAction(joint, center, epsilon, tau_assist, tau_resist, towards)


def guide_towards(config: ExoskeletonConfig, joint: JointId, center: float,
                  epsilon: float, tau_assist: float, tau_resist: float) -> GuideAction:
    return _guide(config, joint, center, epsilon, tau_assist, tau_resist, towards=True)


def guide_away(config: ExoskeletonConfig, joint: JointId, center: float,
               epsilon: float, tau_assist: float, tau_resist: float) -> GuideAction:
    return _guide(config, joint, center, epsilon, tau_assist, tau_resist, towards=False)


# --- remote follow (used by the daemon's link feature) -----------------------------------

class RemoteFollowAction(Action):
    """Track setpoints fed from outside (a peer device's joint angles).

    Each destination holds its last setpoint until it goes stale (no update
    for grace_ms of sim time), then releases to zero torque.
    """

    kind = "link"

    def __init__(self, mappings: Sequence[tuple[JointId, JointId, float]],
                 grace_ms: float = 250.0):
        super().__init__([dst for _, dst, _ in mappings])
        self.mappings = tuple(mappings)
        self.grace_ms = grace_ms
        self._setpoints: dict[JointId, float] = {}
        self._prev: dict[JointId, float] = {}
        self._last_update_ms: dict[JointId, float] = {}
        self.frames_received = 0
        self.last_source_t_ms: float | None = None

    def feed(self, src: JointId, angle: float, t_ms: float,
             config: ExoskeletonConfig) -> None:
        """Apply one source frame; called at a tick boundary."""
        for s, dst, factor in self.mappings:
            if s == src:
                self._setpoints[dst] = config.clamp_to_rom(dst, factor * angle)
                self._last_update_ms[dst] = t_ms
                self.frames_received += 1
        self.last_source_t_ms = t_ms

    def torques(self, snap: WorldSnapshot, ctx: TickContext) -> dict[JointId, float]:
        out = {}
        for jid in self.joints:
            if jid not in self._setpoints \
                    or ctx.t_ms - self._last_update_ms[jid] > self.grace_ms:
                out[jid] = 0.0
                self._prev.pop(jid, None)
                continue
            setpoint = self._setpoints[jid]
            prev = self._prev.get(jid)
            ref_vel = 0.0 if prev is None else (setpoint - prev) / (ctx.dt_ms / 1000.0)
            self._prev[jid] = setpoint
            js = snap.joints[jid]
            limit = ctx.config.joint(jid).motor.max_torque
            out[jid] = track_torque(js.angle, js.velocity, setpoint, ref_vel, limit)
        return out


def remote_follow(config: ExoskeletonConfig,
                  mappings: Sequence[tuple[JointId, JointId, float]],
                  grace_ms: float = 250.0) -> RemoteFollowAction:
    from .errors import MappingInvalidError
    if not mappings:
        raise MappingInvalidError("empty mapping")
    dsts = [dst for _, dst, _ in mappings]
    if len(set(dsts)) != len(dsts):
        raise MappingInvalidError("duplicate destination joint")
    for src, dst, factor in mappings:
        if factor == 0.0:
            raise MappingInvalidError(f"{src}>{dst}: factor must be nonzero")
    _require_actuated(config, dsts)
    return RemoteFollowAction(mappings, grace_ms)
