"""Render a telemetry log into CSV tables and per-joint figures.

The input is a file of ``T ...`` lines as written by the daemon's log path.
Output lands in one directory: ``telemetry.csv`` (every frame, one row),
``summary.csv`` (per-joint aggregates), one strip chart PNG per joint, and
``overview.png`` with all joint angles on a shared time axis.
"""

from __future__ import annotations

import csv
import math
import os
from collections import defaultdict
from pathlib import Path

from .errors import IoFailureError, ParseFailureError
from .model import JointId
from .proto import TelemetryFrame, parse_telemetry


def load_frames(path: str | os.PathLike) -> list[TelemetryFrame]:
    """Read a telemetry log, one frame per line.  Blank lines are skipped."""
    frames: list[TelemetryFrame] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue  # event annotations share the log with frames
                try:
                    frames.append(parse_telemetry(line))
                except Exception as exc:
                    raise ParseFailureError(str(exc), line_no) from None
    except OSError as exc:
        raise IoFailureError(f"cannot read {path}: {exc}") from None
    return frames


def _by_joint(frames: list[TelemetryFrame]) -> dict[JointId, list[TelemetryFrame]]:
    grouped: dict[JointId, list[TelemetryFrame]] = defaultdict(list)
    for frame in frames:
        grouped[frame.joint].append(frame)
    return dict(sorted(grouped.items(), key=lambda kv: kv[0].sort_key()))


def write_telemetry_csv(frames: list[TelemetryFrame], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_ms", "joint", "angle_deg", "velocity_deg_s",
                         "accel_deg_s2", "torque_nm", "load_nm"])
        for f in frames:
            writer.writerow([
                f"{f.t_ms:g}", str(f.joint), f"{f.angle:.3f}",
                f"{f.velocity:.3f}", f"{f.acceleration:.3f}",
                f"{f.torque:.3f}",
                "" if f.load is None else f"{f.load:.3f}",
            ])


def write_summary_csv(frames: list[TelemetryFrame], path: Path) -> None:
    grouped = _by_joint(frames)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["joint", "frames", "t_start_ms", "t_end_ms",
                         "angle_min_deg", "angle_max_deg", "angle_mean_deg",
                         "speed_peak_deg_s", "torque_peak_nm", "torque_mean_nm",
                         "load_peak_nm"])
        for jid, rows in grouped.items():
            angles = [r.angle for r in rows]
            torques = [abs(r.torque) for r in rows]
            loads = [abs(r.load) for r in rows if r.load is not None]
            writer.writerow([
                str(jid), len(rows),
                f"{rows[0].t_ms:g}", f"{rows[-1].t_ms:g}",
                f"{min(angles):.3f}", f"{max(angles):.3f}",
                f"{math.fsum(angles) / len(angles):.3f}",
                f"{max(abs(r.velocity) for r in rows):.3f}",
                f"{max(torques):.3f}",
                f"{math.fsum(torques) / len(torques):.3f}",
                f"{max(loads):.3f}" if loads else "",
            ])


def _joint_figure(jid: JointId, rows: list[TelemetryFrame], path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = [r.t_ms / 1000.0 for r in rows]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 7))
    axes[0].plot(t, [r.angle for r in rows], lw=0.9)
    axes[0].set_ylabel("angle [deg]")
    axes[1].plot(t, [r.velocity for r in rows], lw=0.9, color="tab:orange")
    axes[1].set_ylabel("velocity [deg/s]")
    axes[2].plot(t, [r.torque for r in rows], lw=0.9, color="tab:green",
                 label="motor")
    if any(r.load is not None for r in rows):
        axes[2].plot(t, [r.load if r.load is not None else float("nan")
                         for r in rows],
                     lw=0.9, color="tab:red", label="load cell")
        axes[2].legend(loc="upper right", fontsize=8)
    axes[2].set_ylabel("torque [N m]")
    axes[2].set_xlabel("time [s]")
    fig.suptitle(str(jid))
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _overview_figure(grouped: dict[JointId, list[TelemetryFrame]], path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(9, 4.5))
    for jid, rows in grouped.items():
        ax.plot([r.t_ms / 1000.0 for r in rows], [r.angle for r in rows],
                lw=0.9, label=str(jid))
    ax.set_xlabel("time [s]")
    ax.set_ylabel("angle [deg]")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_report(log_path: str | os.PathLike,
                  out_dir: str | os.PathLike | None = None) -> list[Path]:
    """Build the full report; returns the paths written, CSVs first."""
    log_path = Path(log_path)
    if out_dir is None:
        out_dir = log_path.with_name(log_path.stem + "_report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    frames = load_frames(log_path)
    if not frames:
        raise IoFailureError(f"{log_path} holds no telemetry frames")
    grouped = _by_joint(frames)

    written: list[Path] = []
    telemetry_csv = out_dir / "telemetry.csv"
    write_telemetry_csv(frames, telemetry_csv)
    written.append(telemetry_csv)
    summary_csv = out_dir / "summary.csv"
    write_summary_csv(frames, summary_csv)
    written.append(summary_csv)

    for jid, rows in grouped.items():
        png = out_dir / (str(jid).replace(".", "_") + ".png")
        _joint_figure(jid, rows, png)
        written.append(png)
    overview = out_dir / "overview.png"
    _overview_figure(grouped, overview)
    written.append(overview)
    return written
