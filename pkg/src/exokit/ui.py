"""Browser dashboard bridge.

Relays websocket messages to a daemon as wire lines, one message per line
in both directions, greeting included.  The page therefore speaks exactly
the public protocol; anything the dashboard can do can also be typed into
``exokit repl``, and the bridge adds no privileged side channel.

The static dashboard (the ``frontend/`` package, built with ``npm run
build``) is served from ``/`` when a directory is given; otherwise a short
placeholder page explains how to get it.

Needs the ``ui`` extra:  pip install 'exokit[ui]'
"""

# no postponed annotations here: the route signatures must carry the real
# WebSocket class, which only exists locally once the guarded import ran

import asyncio
from contextlib import suppress
from pathlib import Path

from .errors import ExoKitError

def _reap(task: "asyncio.Task[None]") -> None:
    # consume pump outcomes so abandoned tasks never log at gc
    if not task.cancelled():
        task.exception()


_PLACEHOLDER = """<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>exo-ui bridge</title></head>
<body style="font-family: system-ui; max-width: 40em; margin: 4em auto">
<h1>exo-ui bridge</h1>
<p>The websocket relay is up at <code>/ws</code>, but no dashboard build
was found.  From the repository root:</p>
<pre>cd frontend
npm install
npm run build</pre>
<p>then restart with <code>exokit ui --static frontend</code> (picked up
automatically when run from the repository root).</p>
</body></html>
"""


def build_app(connect: tuple[str, int], static_dir: str | Path | None = None):
    """FastAPI app with the ``/ws`` relay and the static dashboard on ``/``.

    ``connect`` is the daemon the relay dials by default; a page may pick a
    different one per connection with ``/ws?connect=host:port``.
    """
    try:
        from fastapi import FastAPI, WebSocket, WebSocketDisconnect
        from fastapi.responses import HTMLResponse
        from fastapi.staticfiles import StaticFiles
    except ImportError as exc:
        raise ExoKitError(
            "the browser bridge needs fastapi and uvicorn; "
            "install them with: pip install 'exokit[ui]'") from exc

    app = FastAPI(title="exo-ui bridge", docs_url=None, redoc_url=None)

    @app.websocket("/ws")
    async def relay(ws: WebSocket) -> None:
        target = connect
        override = ws.query_params.get("connect")
        if override:
            host, _, port = override.rpartition(":")
            if not host or not port.isdigit():
                await ws.close(code=1008, reason=f"bad endpoint {override!r}")
                return
            target = (host, int(port))
        await ws.accept()
        try:
            reader, writer = await asyncio.open_connection(*target)
        except OSError as exc:
            # in-protocol failure so the page can show its usual banner
            await ws.send_text(
                f"err BRIDGE_UNREACHABLE no daemon at {target[0]}:{target[1]} ({exc})")
            await ws.close()
            return

        async def browser_to_daemon() -> None:
            # a client hangup ends this pump normally; the outer wait
            # then tears the relay down
            try:
                while True:
                    line = (await ws.receive_text()).strip("\r\n")
                    writer.write(line.encode("utf-8") + b"\n")
                    await writer.drain()
            except WebSocketDisconnect:
                pass

        async def daemon_to_browser() -> None:
            while True:
                raw = await reader.readline()
                if not raw:
                    break
                await ws.send_text(raw.decode("utf-8", "replace").rstrip("\r\n"))

        up = asyncio.create_task(browser_to_daemon())
        down = asyncio.create_task(daemon_to_browser())
        try:
            # either side hanging up ends the relay
            await asyncio.wait({up, down}, return_when=asyncio.FIRST_COMPLETED)
            if down.done():
                # daemon went away first; tell the browser
                with suppress(Exception):
                    await ws.close()
        finally:
            # the server cancels this handler the moment the client drops,
            # so the cleanup must not suspend
            for task in (up, down):
                task.cancel()
                task.add_done_callback(_reap)
            writer.close()

    if static_dir is not None and (Path(static_dir) / "index.html").is_file():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="page")
    else:
        @app.get("/", include_in_schema=False)
        async def placeholder() -> HTMLResponse:
            return HTMLResponse(_PLACEHOLDER)

    return app
