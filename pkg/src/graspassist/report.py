"""Run reports: aligned text tables, CSV, and rendered figures.

Figures are written next to the delimited output so a suite directory
is self-contained: a grouped score bar chart per grasp type and, for
single runs, the telemetry traces with command markers.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import EventLog
from .scoring import ScoreRow


def score_table_text(rows: list[ScoreRow]) -> str:
    header = f"{'grasp type':<14} {'grasping %':>10} {'maintaining %':>13} {'GAS %':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.label:<14} {row.grasping_pct:>10.2f} {row.maintaining_pct:>13.2f} "
            f"{row.gas_pct:>8.2f}"
        )
    return "\n".join(lines) + "\n"


def write_score_csv(rows: list[ScoreRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["grasp_type", "grasping_pct", "maintaining_pct", "gas_pct"])
        for row in rows:
            writer.writerow(
                [row.label, f"{row.grasping_pct:.2f}", f"{row.maintaining_pct:.2f}",
                 f"{row.gas_pct:.2f}"]
            )


def render_score_figure(rows: list[ScoreRow], path: str | Path) -> None:
    """Grouped bars: grasping / maintaining / GAS per grasp type."""
    labels = [row.label for row in rows]
    x = range(len(rows))
    width = 0.27
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar([i - width for i in x], [r.grasping_pct for r in rows], width,
           label="grasping", color="0.45")
    ax.bar(list(x), [r.maintaining_pct for r in rows], width,
           label="maintaining", color="#c44e52")
    ax.bar([i + width for i in x], [r.gas_pct for r in rows], width,
           label="GAS", color="#4c72b0")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylabel("score (%)")
    ax.set_ylim(0, 105)
    ax.legend(loc="lower right")
    ax.set_title("grasping ability scores by grasp type")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_telemetry_figure(log: EventLog, path: str | Path) -> None:
    """Angle / velocity / torque traces with command markers."""
    t, angle, omega, tau = [], [], [], []
    commands = []
    for line in log.lines:
        rec = json.loads(line)
        if "angle" in rec:
            t.append(rec["t"])
            angle.append(rec["angle"])
            omega.append(rec["omega"])
            tau.append(rec["tau"])
        elif rec.get("dir") == "out":
            commands.append((rec["t"], rec["event"]["kind"]))

    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    axes[0].plot(t, angle, color="#4c72b0")
    axes[0].set_ylabel("angle (rad)")
    axes[1].plot(t, omega, color="#55a868")
    axes[1].set_ylabel("velocity (rad/s)")
    axes[2].plot(t, tau, color="#c44e52")
    axes[2].set_ylabel("torque (Nm)")
    axes[2].set_xlabel("time (s)")
    for ax in axes:
        for when, kind in commands:
            ax.axvline(when, color="0.6", linestyle=":", linewidth=0.9)
    for when, kind in commands:
        axes[0].annotate(kind, xy=(when, max(angle) if angle else 1.0),
                         fontsize=8, rotation=90, va="top")
    axes[0].set_title("low-level telemetry")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_run_summary(
    rows: list[ScoreRow], out_dir: str | Path, log: EventLog | None = None
) -> None:
    """Write the table (text + CSV) and its figure into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scores.txt").write_text(score_table_text(rows))
    write_score_csv(rows, out / "scores.csv")
    render_score_figure(rows, out / "scores.png")
    if log is not None:
        render_telemetry_figure(log, out / "telemetry.png")
