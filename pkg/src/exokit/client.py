"""Small synchronous client for the daemon's text protocol.

Responses come back in command order on the same socket that carries
telemetry, so a reader thread splits the incoming stream: ``ok``/``err``
lines land in a queue that ``send`` blocks on, telemetry lines go to the
``on_telemetry`` callback (or pile up in ``frames``).
"""

from __future__ import annotations

import queue
import socket
import threading
from typing import Callable

from .errors import IoFailureError, ProtocolError
from .proto import (
    Response,
    TelemetryFrame,
    is_telemetry_line,
    parse_response,
    parse_telemetry,
)


class ProtoClient:
    def __init__(self, host: str, port: int,
                 on_telemetry: Callable[[TelemetryFrame], None] | None = None,
                 timeout: float = 10.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self.on_telemetry = on_telemetry
        self.frames: list[TelemetryFrame] = []
        self.greeting: str | None = None
        self._sock: socket.socket | None = None
        self._responses: "queue.Queue[Response]" = queue.Queue()
        self._reader: threading.Thread | None = None
        self._closed = False

    def connect(self) -> str:
        self._sock = socket.create_connection((self.host, self.port),
                                              timeout=self.timeout)
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._greeting_event = threading.Event()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        if not self._greeting_event.wait(self.timeout):
            raise IoFailureError("no greeting from daemon")
        return self.greeting

    def _read_loop(self) -> None:
        buf = bytearray()
        sock = self._sock
        expect_greeting = True
        try:
            while not self._closed:
                try:
                    chunk = sock.recv(4096)
                except socket.timeout:
                    continue
                except OSError:
                    break
                if not chunk:
                    break
                buf.extend(chunk)
                while True:
                    idx = buf.find(b"\n")
                    if idx < 0:
                        break
                    line = bytes(buf[:idx]).rstrip(b"\r").decode("utf-8", "replace")
                    del buf[:idx + 1]
                    if expect_greeting:
                        self.greeting = line
                        self._greeting_event.set()
                        expect_greeting = False
                        continue
                    self._dispatch(line)
        finally:
            self._closed = True

    def _dispatch(self, line: str) -> None:
        if is_telemetry_line(line):
            try:
                frame = parse_telemetry(line)
            except ProtocolError:
                return
            if self.on_telemetry is not None:
                self.on_telemetry(frame)
            else:
                self.frames.append(frame)
            return
        try:
            self._responses.put(parse_response(line))
        except ProtocolError:
            pass  # noise between frames; responses stay in lockstep with sends

    def send(self, line: str, timeout: float | None = None) -> Response:
        """Send one command line and block for its response."""
        if self._sock is None or self._closed:
            raise IoFailureError("client not connected")
        try:
            self._sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise IoFailureError(f"send failed: {exc}") from None
        try:
            return self._responses.get(timeout=timeout or self.timeout)
        except queue.Empty:
            raise IoFailureError(f"no response to {line!r}") from None

    def drain_frames(self) -> list[TelemetryFrame]:
        out = self.frames
        self.frames = []
        return out

    def close(self) -> None:
        self._closed = True
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None
