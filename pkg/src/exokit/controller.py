"""Fixed-rate control loop: safety first, then active programs, then clamps.

The controller owns every running program and a joint-claim registry, and
produces one complete MotorCommandSet per tick.  It never touches the plant
directly; the caller (daemon, test, or script) feeds it world snapshots and
forwards the commands.

Safety layering per tick:
  1. software RoM monitor - any calibrated joint outside its configured RoM
     by more than the margin latches a Shutdown; all torques drop to zero
  2. panic/halt latch - once halted, only zero commands leave the loop
  3. per-joint torque clamp on whatever the actions produced
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .actions import Action, ActionStatus, TickContext
from .errors import JointConflictError, SystemHaltedError
from .model import ExoskeletonConfig, JointId, JointKind
from .program import JointRegistry, Leaf, Node
from .sim import WorldSnapshot

SAFETY_MARGIN_DEG = 1.0

HALT_ROM = "rom_violation"
HALT_PANIC = "panic"


@dataclass(frozen=True)
class MotorCommandSet:
    """Torque per actuated joint for one tick; complete by construction."""

    torques: Mapping[JointId, float]

    def __getitem__(self, joint: JointId) -> float:
        return self.torques[joint]

    def items(self):
        return self.torques.items()


class ProgramHandle:
    """Caller-facing view of one submitted program."""

    def __init__(self, root: Node, controller: "Controller", handle_id: int):
        self.id = handle_id
        self.root = root
        self._controller = controller

    @property
    def status(self) -> ActionStatus:
        return self.root.status

    @property
    def error(self) -> str | None:
        return self.root.error

    @property
    def terminal(self) -> bool:
        return self.root.terminal

    def stop(self) -> None:
        self._controller.stop_program(self)


class Controller:
    def __init__(self, config: ExoskeletonConfig, seed: int = 0,
                 monitor_enabled: bool = True,
                 safety_margin_deg: float = SAFETY_MARGIN_DEG):
        self.config = config
        self.rng = random.Random(seed ^ 0x5EED)
        self.monitor_enabled = monitor_enabled
        self.safety_margin_deg = safety_margin_deg
        self.halted: str | None = None
        self.registry = JointRegistry()
        self._programs: list[ProgramHandle] = []
        self._next_handle_id = 1
        self._t_ms = 0.0

    # -- configuration -------------------------------------------------------

    def set_config(self, config: ExoskeletonConfig) -> None:
        self.config = config

    # -- program management ----------------------------------------------------

    def run_program(self, root: Node) -> ProgramHandle:
        """Adopt a program tree; it starts ticking on the next tick."""
        if self.halted:
            raise SystemHaltedError("system is shut down")
        handle = ProgramHandle(root, self, self._next_handle_id)
        self._next_handle_id += 1
        self._programs.append(handle)
        return handle

    def run_action(self, action: Action) -> ProgramHandle:
        """Submit a single action, with an eager conflict check for fast
        feedback; the activation-time check remains authoritative."""
        if self.halted:
            raise SystemHaltedError("system is shut down")
        busy = self.registry.would_conflict(action.joints)
        if busy is None:
            for handle in self._programs:
                if isinstance(handle.root, Leaf) \
                        and handle.root.status is ActionStatus.PENDING \
                        and set(handle.root.action.joints) & set(action.joints):
                    busy = next(iter(set(handle.root.action.joints) & set(action.joints)))
                    break
        if busy is not None:
            raise JointConflictError(f"{busy} already in use")
        return self.run_program(Leaf(action))

    def stop_program(self, handle: ProgramHandle) -> None:
        if not handle.root.terminal:
            handle.root.abort(self.registry)

    def stop_all(self) -> None:
        for handle in self._programs:
            self.stop_program(handle)

    def stop_locks(self, joints: Sequence[JointId]) -> int:
        """Release lock actions holding any of the given joints."""
        released = 0
        wanted = set(joints)
        for handle in self._programs:
            root = handle.root
            if isinstance(root, Leaf) and root.action.kind == "lock" \
                    and not root.terminal and wanted & set(root.action.joints):
                self.stop_program(handle)
                released += 1
        return released

    def active_programs(self) -> list[ProgramHandle]:
        return [h for h in self._programs if not h.root.terminal]

    # -- safety ------------------------------------------------------------------

    def safety_check(self, snap: WorldSnapshot) -> str | None:
        """Reason string if any calibrated joint sits outside its soft RoM
        by more than the margin, else None."""
        for jc in self.config.joints:
            jid = jc.joint
            if jc.kind is JointKind.PASSIVE or not self.config.is_calibrated(jid):
                continue
            angle = snap.joints[jid].angle
            if angle > jc.rom.max_deg + self.safety_margin_deg or \
                    angle < jc.rom.min_deg - self.safety_margin_deg:
                return (f"{jid} at {angle:.2f} deg outside "
                        f"[{jc.rom.min_deg}, {jc.rom.max_deg}]")
        return None

    def panic(self) -> None:
        """Immediate latching halt; safe to call any number of times."""
        self._halt(HALT_PANIC)

    def _halt(self, reason: str) -> None:
        if self.halted is None:
            self.halted = reason
        for handle in self._programs:
            if not handle.root.terminal:
                handle.root.abort(self.registry)

    # -- the loop --------------------------------------------------------------------

    def _zero_commands(self) -> MotorCommandSet:
        return MotorCommandSet({jid: 0.0 for jid in self.config.actuated_ids()})

    def tick(self, snap: WorldSnapshot) -> MotorCommandSet:
        """One control cycle: returns the torque for every actuated joint."""
        self._t_ms = snap.t_ms
        if self.monitor_enabled and self.halted is None:
            reason = self.safety_check(snap)
            if reason is not None:
                self._halt(f"{HALT_ROM}: {reason}")
        if self.halted is not None:
            return self._zero_commands()

        ctx = TickContext(config=self.config, t_ms=snap.t_ms,
                          dt_ms=self.config.control_period_ms, rng=self.rng)
        sink: dict[JointId, float] = {}
        for handle in self._programs:
            if not handle.root.terminal:
                handle.root.tick(snap, ctx, self.registry, sink)
        self._programs = [h for h in self._programs if not h.root.terminal]

        out = {}
        for jid in self.config.actuated_ids():
            limit = self.config.joint(jid).motor.max_torque
            out[jid] = min(max(sink.get(jid, 0.0), -limit), limit)
        return MotorCommandSet(out)
