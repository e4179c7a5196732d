"""Trigger-action composition: sequences, parallel groups, condition gates.

A Program is a tree of nodes ticked once per control cycle.  Leaves wrap
Actions; Seq runs children in order; Par runs them side by side; When holds
its child back until a Condition first fires, then lets it run to the end
(trigger semantics: the gate latches, it does not pause a started child).

Joint exclusivity is enforced through a claim registry at the moment a leaf
activates.  A leaf that cannot claim its joints aborts on the spot; nothing
already running is disturbed.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .conditions import Condition
from .errors import JointConflictError
from .actions import Action, ActionStatus, TickContext
from .model import JointId
from .sim import WorldSnapshot


class JointRegistry:
    """Tracks which action currently owns each joint."""

    def __init__(self):
        self._owners: dict[JointId, Action] = {}

    def claim(self, action: Action) -> None:
        for jid in action.joints:
            owner = self._owners.get(jid)
            if owner is not None and owner is not action:
                raise JointConflictError(
                    f"{jid} already driven by {owner.kind}")
        for jid in action.joints:
            self._owners[jid] = action

    def release(self, action: Action) -> None:
        for jid in action.joints:
            if self._owners.get(jid) is action:
                del self._owners[jid]

    def claimed(self) -> frozenset[JointId]:
        return frozenset(self._owners)

    def would_conflict(self, joints: Iterable[JointId]) -> JointId | None:
        for jid in joints:
            if jid in self._owners:
                return jid
        return None


class Node:
    """Base class for program tree nodes."""

    def __init__(self):
        self.status = ActionStatus.PENDING
        self.error: str | None = None

    def tick(self, snap: WorldSnapshot, ctx: TickContext,
             registry: JointRegistry, sink: dict[JointId, float]) -> None:
        raise NotImplementedError

    def abort(self, registry: JointRegistry) -> None:
        raise NotImplementedError

    @property
    def terminal(self) -> bool:
        return self.status in (ActionStatus.DONE, ActionStatus.ABORTED)


class Leaf(Node):
    def __init__(self, action: Action):
        super().__init__()
        self.action = action

    def tick(self, snap, ctx, registry, sink) -> None:
        act = self.action
        if act.status is ActionStatus.PENDING:
            try:
                registry.claim(act)
            except JointConflictError as exc:
                act.abort()
                self.error = str(exc)
                self.status = ActionStatus.ABORTED
                return
            try:
                act.start(snap, ctx)
            except Exception as exc:  # fault isolation: a bad action dies alone
                act.abort()
                registry.release(act)
                self.error = str(exc)
                self.status = ActionStatus.ABORTED
                return
        if act.status is ActionStatus.RUNNING:
            try:
                torques = act.torques(snap, ctx)
            except Exception as exc:
                act.abort()
                registry.release(act)
                self.error = str(exc)
                self.status = ActionStatus.ABORTED
                return
            for jid, tau in torques.items():
                if jid in sink:
                    raise JointConflictError(f"two actions wrote {jid} in one tick")
                sink[jid] = tau
        if act.terminal:
            registry.release(act)
        self.status = act.status

    def abort(self, registry) -> None:
        self.action.abort()
        registry.release(self.action)
        self.status = self.action.status


class Seq(Node):
    def __init__(self, children: Sequence[Node]):
        super().__init__()
        self.children = list(children)
        self._index = 0

    def tick(self, snap, ctx, registry, sink) -> None:
        if self.terminal:
            return
        self.status = ActionStatus.RUNNING
        if self._index >= len(self.children):
            self.status = ActionStatus.DONE
            return
        child = self.children[self._index]
        child.tick(snap, ctx, registry, sink)
        if child.status is ActionStatus.ABORTED:
            self.error = child.error
            self.status = ActionStatus.ABORTED
        elif child.status is ActionStatus.DONE:
            self._index += 1
            if self._index >= len(self.children):
                self.status = ActionStatus.DONE

    def abort(self, registry) -> None:
        for child in self.children:
            if not child.terminal:
                child.abort(registry)
        self.status = ActionStatus.ABORTED


class Par(Node):
    def __init__(self, children: Sequence[Node]):
        super().__init__()
        self.children = list(children)

    def tick(self, snap, ctx, registry, sink) -> None:
        if self.terminal:
            return
        self.status = ActionStatus.RUNNING
        for child in self.children:
            if not child.terminal:
                child.tick(snap, ctx, registry, sink)
        if all(child.terminal for child in self.children):
            if any(child.status is ActionStatus.ABORTED for child in self.children):
                self.status = ActionStatus.ABORTED
                self.error = next(
                    (c.error for c in self.children if c.error), None)
            else:
                self.status = ActionStatus.DONE

    def abort(self, registry) -> None:
        for child in self.children:
            if not child.terminal:
                child.abort(registry)
        self.status = ActionStatus.ABORTED


class When(Node):
    """Gate: the child stays pending until the condition first holds."""

    def __init__(self, condition: Condition, child: Node):
        super().__init__()
        self.condition = condition
        self.child = child
        self.triggered = False

    def tick(self, snap, ctx, registry, sink) -> None:
        if self.terminal:
            return
        if not self.triggered:
            if not self.condition.evaluate(snap):
                return
            self.triggered = True
        self.status = ActionStatus.RUNNING
        self.child.tick(snap, ctx, registry, sink)
        if self.child.terminal:
            self.status = self.child.status
            self.error = self.child.error

    def abort(self, registry) -> None:
        if not self.child.terminal:
            self.child.abort(registry)
        self.status = ActionStatus.ABORTED


def leaf(action: Action) -> Leaf:
    return Leaf(action)


def seq(*items: Node | Action) -> Seq:
    return Seq([_as_node(i) for i in items])


def par(*items: Node | Action) -> Par:
    return Par([_as_node(i) for i in items])


def when(condition: Condition, item: Node | Action) -> When:
    return When(condition, _as_node(item))


def _as_node(item: Node | Action) -> Node:
    return item if isinstance(item, Node) else Leaf(item)
