"""Shared drive loops and a raw wire client for tests."""

from __future__ import annotations

import socket
from contextlib import contextmanager
from typing import Callable

from exokit import Controller, ExoDaemon, JointId, JointName, Side, SimWorld, two_arm_default
from exokit.proto import parse_telemetry

R_ELBOW = JointId(Side.RIGHT, JointName.ELBOW)
L_ELBOW = JointId(Side.LEFT, JointName.ELBOW)
R_SH_FLEX = JointId(Side.RIGHT, JointName.SHOULDER_FLEXION)
R_SH_ABD = JointId(Side.RIGHT, JointName.SHOULDER_ABDUCTION)
L_SH_FLEX = JointId(Side.LEFT, JointName.SHOULDER_FLEXION)


def run_ticks(world: SimWorld, controller: Controller, ticks: int,
              on_tick: Callable[[SimWorld], None] | None = None) -> None:
    for _ in range(ticks):
        commands = controller.tick(world.snapshot())
        world.step(None, dict(commands.items()))
        if on_tick is not None:
            on_tick(world)


def run_until(world: SimWorld, controller: Controller,
              pred: Callable[[SimWorld], bool], max_ticks: int,
              on_tick: Callable[[SimWorld], None] | None = None) -> int:
    """Ticks until pred(world) holds; returns ticks used, -1 on timeout."""
    for k in range(max_ticks):
        if pred(world):
            return k
        commands = controller.tick(world.snapshot())
        world.step(None, dict(commands.items()))
        if on_tick is not None:
            on_tick(world)
    return -1


@contextmanager
def daemon(cfg=None, **kw):
    d = ExoDaemon(cfg if cfg is not None else two_arm_default(calibrated=True),
                  listen=("127.0.0.1", 0), **kw)
    d.start()
    try:
        yield d
    finally:
        d.stop()


class LineClient:
    """Raw socket client: blocking line reads, telemetry collected aside."""

    def __init__(self, address):
        self.sock = socket.create_connection(address, timeout=10.0)
        self.buf = b""
        self.frames = []
        greeting = self.read_line()
        assert greeting == "proto v1"

    def read_line(self) -> str:
        while b"\n" not in self.buf:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("daemon closed the connection")
            self.buf += chunk
        line, self.buf = self.buf.split(b"\n", 1)
        return line.decode()

    def send(self, line: str) -> str:
        """One request, one response; telemetry in between is collected."""
        self.sock.sendall(line.encode() + b"\n")
        while True:
            got = self.read_line()
            if got.startswith("T "):
                self.frames.append(parse_telemetry(got))
            else:
                return got

    def read_frames(self, n: int) -> list:
        """Consume exactly n unsolicited telemetry lines."""
        out = []
        while len(out) < n:
            got = self.read_line()
            assert got.startswith("T "), f"expected telemetry, got {got!r}"
            out.append(parse_telemetry(got))
        return out

    def close(self):
        self.sock.close()
