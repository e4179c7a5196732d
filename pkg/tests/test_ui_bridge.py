"""Websocket bridge: the browser gets the same wire protocol as TCP."""

from __future__ import annotations

import socket

import pytest

pytest.importorskip("fastapi")
from fastapi.testclient import TestClient

from exokit.ui import build_app

from helpers import LineClient, daemon


def _dead_endpoint() -> tuple[str, int]:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return ("127.0.0.1", port)


def test_relay_passes_greeting_commands_and_replies():
    with daemon() as d:
        client = TestClient(build_app(d.address))
        with client.websocket_connect("/ws") as ws:
            assert ws.receive_text() == "proto v1"
            ws.send_text("status")
            assert ws.receive_text().startswith("ok mode=")
            ws.send_text("moveto R.elbow abs 60 1 40")
            reply = ws.receive_text()
            assert reply.startswith("ok ")
            ws.send_text("nonsense")
            assert ws.receive_text().startswith("err ")


def test_relay_carries_telemetry_frames():
    with daemon() as d:
        client = TestClient(build_app(d.address))
        with client.websocket_connect("/ws") as ws:
            ws.receive_text()
            ws.send_text("stream on R.elbow 80")
            assert ws.receive_text() == "ok"
            ws.send_text("step 100")
            lines = [ws.receive_text() for _ in range(81)]
            frames = [ln for ln in lines if ln.startswith("T ")]
            other = [ln for ln in lines if not ln.startswith("T ")]
            assert len(frames) == 80
            assert other == ["ok 1000"]
            assert all(ln.split()[2] == "R.elbow" for ln in frames)


def test_panic_over_the_bridge_halts_the_daemon():
    with daemon() as d:
        client = TestClient(build_app(d.address))
        with client.websocket_connect("/ws") as ws:
            ws.receive_text()
            ws.send_text("panic")
            assert ws.receive_text() == "ok"
            ws.send_text("status")
            assert "halted=panic" in ws.receive_text()


def test_connect_query_param_picks_the_daemon():
    with daemon() as a, daemon() as b:
        client = TestClient(build_app(a.address))
        host, port = b.address
        with client.websocket_connect(f"/ws?connect={host}:{port}") as ws:
            assert ws.receive_text() == "proto v1"
            ws.send_text("moveto R.elbow abs 60 1 40")
            assert ws.receive_text().startswith("ok ")
        ca = LineClient(a.address)
        cb = LineClient(b.address)
        try:
            assert "actions=0" in ca.send("status")
            assert "actions=1" in cb.send("status")
        finally:
            ca.close()
            cb.close()


def test_unreachable_daemon_surfaces_in_protocol():
    client = TestClient(build_app(_dead_endpoint()))
    with client.websocket_connect("/ws") as ws:
        assert ws.receive_text().startswith("err BRIDGE_UNREACHABLE")


def test_placeholder_page_without_a_build():
    client = TestClient(build_app(_dead_endpoint()))
    page = client.get("/")
    assert page.status_code == 200
    assert "exo-ui" in page.text


def test_static_dashboard_served_when_present(tmp_path):
    (tmp_path / "index.html").write_text("<title>exo-ui</title>fake build")
    client = TestClient(build_app(_dead_endpoint(), static_dir=tmp_path))
    page = client.get("/")
    assert page.status_code == 200
    assert "fake build" in page.text
