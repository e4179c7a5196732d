"""Command line entry points.

    exokit daemon --config cfg.exo --listen 127.0.0.1:7070 --clock realtime
    exokit repl --connect 127.0.0.1:7070
    exokit run session.exo --connect 127.0.0.1:7070
    exokit report run.log --out-dir report/
    exokit init-config cfg.exo
    exokit ui --connect 127.0.0.1:7070 --listen 127.0.0.1:8080

Scripts for ``run`` hold one protocol command per line, plus two client-side
directives: ``wait <ms>`` and ``wait_done <action_id>``.  In lockstep mode
both are driven by ``step`` commands so a scripted session replays exactly.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

from .client import ProtoClient
from .daemon import ClockSpec, ExoDaemon
from .errors import ExoKitError
from .model import save_config, two_arm_default
from .proto import Response, parse_command


def _parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise SystemExit(f"bad endpoint {text!r}, expected host:port")
    return host, int(port)


def _cmd_daemon(args: argparse.Namespace) -> int:
    log_path = os.environ.get("EXOKIT_LOG") or args.log or None
    if args.config:
        config = args.config
    else:
        config = two_arm_default(calibrated=True)
    daemon = ExoDaemon(
        config,
        listen=_parse_endpoint(args.listen),
        clock=args.clock,
        seed=args.seed,
        log_path=log_path,
        monitor_enabled=not args.no_monitor,
    )
    daemon.start()
    host, port = daemon.address
    print(f"listening on {host}:{port} clock={daemon.clock} seed={daemon.seed}")
    if log_path:
        print(f"telemetry log: {log_path}")
    sys.stdout.flush()
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        daemon.stop()
    return 0


def _cmd_repl(args: argparse.Namespace) -> int:
    host, port = _parse_endpoint(args.connect)
    client = ProtoClient(host, port,
                         on_telemetry=lambda f: print(f.line(), flush=True))
    greeting = client.connect()
    print(greeting)
    try:
        while True:
            try:
                line = input("> ")
            except EOFError:
                break
            line = line.strip()
            if not line:
                continue
            if line in ("quit", "exit"):
                break
            response = client.send(line)
            print(response.line(), flush=True)
    except KeyboardInterrupt:
        print("\npanic", flush=True)
        try:
            client.send("panic")
        except ExoKitError:
            pass
        return 1
    finally:
        client.close()
    return 0


# Verbs whose ok payload is an action handle id.
_ACTION_VERBS = frozenset({
    "moveto", "lock", "gesture", "vibrate", "mirror", "resist", "amplify",
    "filtervel", "jerks", "constrain", "guideto", "guideaway", "link",
})


def _parse_script(lines: list[str]) -> list[tuple[int, str, str]]:
    """Validate a whole script up front; returns (line_no, kind, text) steps.

    kind is "cmd", "wait", or "wait_done".  Raises SystemExit with a
    line-numbered message on the first malformed entry.
    """
    steps: list[tuple[int, str, str]] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "wait":
            if len(parts) != 2:
                raise SystemExit(f"script line {line_no}: wait takes one duration")
            try:
                ms = float(parts[1])
            except ValueError:
                raise SystemExit(f"script line {line_no}: bad duration {parts[1]!r}")
            if ms < 0:
                raise SystemExit(f"script line {line_no}: negative wait")
            steps.append((line_no, "wait", parts[1]))
            continue
        if parts[0] == "wait_done":
            if len(parts) > 2:
                raise SystemExit(f"script line {line_no}: wait_done takes at most one id")
            steps.append((line_no, "wait_done", parts[1] if len(parts) == 2 else ""))
            continue
        try:
            parse_command(line)
        except ExoKitError as exc:
            raise SystemExit(f"script line {line_no}: {exc.code} {exc.message}")
        steps.append((line_no, "cmd", line))
    return steps


class _ScriptRunner:
    """Plays a script against a daemon, one response per command."""

    def __init__(self, client: ProtoClient):
        self.client = client
        self.mode = "realtime"
        self.factor = 1.0
        self.dt_ms = 10.0
        self.last_action_id: str | None = None
        self._read_status()

    def _read_status(self) -> None:
        response = self.client.send("status")
        if not response.ok:
            return
        for part in response.payload.split():
            key, _, value = part.partition("=")
            if key == "mode":
                if value.startswith("fast:"):
                    self.mode = "fast"
                    self.factor = float(value.split(":", 1)[1])
                else:
                    self.mode = value
            elif key == "dt":
                self.dt_ms = float(value)

    def wait(self, ms: float) -> None:
        if self.mode == "lockstep":
            ticks = math.ceil(ms / self.dt_ms)
            if ticks > 0:
                self.client.send(f"step {ticks}")
        else:
            time.sleep(ms / 1000.0 / self.factor)

    def send(self, line: str) -> Response:
        response = self.client.send(line)
        verb = line.split()[0]
        if response.ok and verb in _ACTION_VERBS and response.payload.isdigit():
            self.last_action_id = response.payload
        return response

    def wait_done(self, action_id: str = "", timeout_s: float = 120.0) -> str:
        action_id = action_id or self.last_action_id
        if action_id is None:
            return "no action issued yet"
        deadline = time.monotonic() + timeout_s
        while True:
            response = self.client.send(f"status {action_id}")
            if not response.ok:
                return response.line()
            if response.payload in ("done", "aborted"):
                return response.payload
            if self.mode == "lockstep":
                self.client.send("step 1")
            else:
                time.sleep(0.1)
            if time.monotonic() > deadline:
                return "timeout"


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        with open(args.script, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        print(f"cannot read {args.script}: {exc}", file=sys.stderr)
        return 2
    steps = _parse_script(lines)  # whole file validates before anything is sent

    if args.dry_run:
        for line_no, kind, text in steps:
            label = text if kind == "cmd" else f"{kind} {text}".strip()
            print(f"{line_no}: {label}")
        return 0

    host, port = _parse_endpoint(args.connect)
    client = ProtoClient(host, port)
    client.connect()
    runner = _ScriptRunner(client)
    status = 0
    try:
        for line_no, kind, text in steps:
            if kind == "wait":
                print(f"> wait {text}")
                runner.wait(float(text))
                continue
            if kind == "wait_done":
                print(f"> wait_done {text}".rstrip())
                print(runner.wait_done(text))
                continue
            print(f"> {text}")
            response = runner.send(text)
            print(response.line(), flush=True)
            if not response.ok:
                print(f"stopped at line {line_no}", file=sys.stderr)
                status = 1
                break
    finally:
        client.close()
    return status


def _cmd_report(args: argparse.Namespace) -> int:
    from .report import render_report
    try:
        written = render_report(args.log, args.out_dir)
    except ExoKitError as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


def _cmd_init_config(args: argparse.Namespace) -> int:
    config = two_arm_default(calibrated=args.calibrated)
    save_config(config, args.path)
    print(args.path)
    return 0


def _cmd_ui(args: argparse.Namespace) -> int:
    from .ui import build_app
    try:
        import uvicorn
    except ImportError:
        print("the browser bridge needs fastapi and uvicorn; "
              "install them with: pip install 'exokit[ui]'", file=sys.stderr)
        return 1
    static = args.static
    if static is None and os.path.isfile(os.path.join("frontend", "index.html")):
        static = "frontend"
    app = build_app(_parse_endpoint(args.connect), static)
    host, port = _parse_endpoint(args.listen)
    source = static if static else "placeholder page"
    print(f"dashboard on http://{host}:{port}/ relaying to {args.connect} ({source})")
    sys.stdout.flush()
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="exokit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("daemon", help="serve a simulated exoskeleton over TCP")
    p.add_argument("--config", help="config file (default: built-in two-arm setup)")
    p.add_argument("--listen", default="127.0.0.1:7070", metavar="HOST:PORT")
    p.add_argument("--clock", default="realtime",
                   help="realtime, fast:<x>, or lockstep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", help="telemetry log file (or set EXOKIT_LOG)")
    p.add_argument("--no-monitor", action="store_true",
                   help="disable the range-of-motion safety monitor")
    p.set_defaults(func=_cmd_daemon)

    p = sub.add_parser("repl", help="interactive protocol session")
    p.add_argument("--connect", default="127.0.0.1:7070", metavar="HOST:PORT")
    p.set_defaults(func=_cmd_repl)

    p = sub.add_parser("run", help="play a command script")
    p.add_argument("script")
    p.add_argument("--connect", default="127.0.0.1:7070", metavar="HOST:PORT")
    p.add_argument("--dry-run", action="store_true",
                   help="validate the script without connecting")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="render a telemetry log to CSV and figures")
    p.add_argument("log")
    p.add_argument("--out-dir", help="output directory (default: <log>_report)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("init-config", help="write a two-arm starter config")
    p.add_argument("path")
    p.add_argument("--calibrated", action="store_true",
                   help="mark every joint as already calibrated at zero")
    p.set_defaults(func=_cmd_init_config)

    p = sub.add_parser("ui", help="serve the browser dashboard and its "
                       "websocket bridge")
    p.add_argument("--connect", default="127.0.0.1:7070", metavar="HOST:PORT",
                   help="daemon the bridge relays to")
    p.add_argument("--listen", default="127.0.0.1:8080", metavar="HOST:PORT")
    p.add_argument("--static", help="directory with the built dashboard "
                   "(default: ./frontend when it holds an index.html)")
    p.set_defaults(func=_cmd_ui)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExoKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
