"""Figure builders: tracking panels and stick-figure pose strips.

All validation happens before a figure is opened, so a failed call never
leaves a partial image on disk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # batch package: every entry point writes files

import matplotlib.pyplot as plt
import numpy as np

from . import kinematics
from .logs import LogError, LogTable, MissingColumnError, read_log
from .robot import RobotGeometry

# panel name -> columns it needs (joint torques are discovered by prefix)
PANELS = ("pitch", "base_velocity", "base_position", "wheel_control", "joint_torques")

_PANEL_COLUMNS = {
    "pitch": ("theta", "theta_traj"),
    "base_velocity": ("xdot", "xdot_traj"),
    "base_position": ("x", "x_traj"),
    "wheel_control": ("u",),
    "joint_torques": (),
}

_PANEL_LABELS = {
    "pitch": r"$\theta$ [rad]",
    "base_velocity": r"$\dot{x}$ [m/s]",
    "base_position": r"$x$ [m]",
    "wheel_control": r"$u$ [m/s$^2$]",
    "joint_torques": r"$\tau$ [N m]",
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw from which log, and where to put the image.

    `times` is only used by the snapshot figure and must lie within the time
    range of the log; `decimation` thins the rows of the tracking panels.
    """

    log_path: Path
    out_path: Path
    panels: tuple[str, ...] = PANELS
    times: tuple[float, ...] = field(default_factory=tuple)
    decimation: int = 1
    shadows: int = 3
    shadow_lag: float = 0.12

    def __post_init__(self):
        if self.decimation < 1:
            raise ValueError(f"decimation must be at least 1, got {self.decimation}")
        if not self.panels:
            raise ValueError("panel selection is empty")
        unknown = [p for p in self.panels if p not in PANELS]
        if unknown:
            raise ValueError(
                f"unknown panel {unknown[0]!r}, valid panels: {', '.join(PANELS)}"
            )
        if self.shadows < 0:
            raise ValueError("shadow count must be non-negative")
        if self.shadow_lag <= 0.0:
            raise ValueError("shadow lag must be positive")


def _require_columns(table: LogTable, spec: FigureSpec) -> list[str]:
    """Check every selected panel is drawable; return the torque columns."""
    for panel in spec.panels:
        for name in _PANEL_COLUMNS[panel]:
            if not table.has(name):
                raise MissingColumnError(name, table.path)
    torque_cols = table.matching("tau")
    if "joint_torques" in spec.panels and not torque_cols:
        raise MissingColumnError("tau1", table.path)
    return torque_cols


def _draw_panel(ax, panel: str, table: LogTable, torque_cols: list[str], step: int):
    t = table.col("t")[::step]
    if panel == "joint_torques":
        for j, name in enumerate(torque_cols):
            ax.plot(t, table.col(name)[::step], lw=1.0, label=rf"$\tau_{{{j + 1}}}$")
        ax.legend(loc="upper right", fontsize=8, ncol=min(len(torque_cols), 4))
    elif panel == "wheel_control":
        ax.plot(t, table.col("u")[::step], lw=1.0, color="C2")
    else:
        meas, ref = _PANEL_COLUMNS[panel]
        ax.plot(t, table.col(meas)[::step], lw=1.2, color="C0", label="measured")
        ax.plot(t, table.col(ref)[::step], lw=1.0, ls="--", color="C1", label="reference")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_ylabel(_PANEL_LABELS[panel])
    ax.grid(True, alpha=0.3)


def plot_trajectories(spec: FigureSpec) -> Path:
    """Stacked tracking panels against time. Returns the written image path."""
    table = read_log(spec.log_path)
    if not table.has("t"):
        raise MissingColumnError("t", table.path)
    torque_cols = _require_columns(table, spec)
    fig, axes = plt.subplots(
        len(spec.panels), 1, sharex=True,
        figsize=(9.0, 1.2 + 1.8 * len(spec.panels)), squeeze=False,
    )
    try:
        for ax, panel in zip(axes[:, 0], spec.panels):
            _draw_panel(ax, panel, table, torque_cols, spec.decimation)
        axes[-1, 0].set_xlabel("t [s]")
        fig.align_ylabels(axes[:, 0])
        fig.tight_layout()
        spec.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out_path, dpi=150)
    finally:
        plt.close(fig)
    return spec.out_path


def _pose_columns(table: LogTable, geometry: RobotGeometry) -> np.ndarray:
    joint_cols = table.matching("q")
    if not joint_cols:
        raise MissingColumnError("q1", table.path)
    if len(joint_cols) != geometry.n:
        raise LogError(
            f"log {str(table.path)!r} has {len(joint_cols)} joint columns, "
            f"robot config describes {geometry.n} links"
        )
    return np.column_stack([table.col(name) for name in joint_cols])


def _draw_pose(ax, geometry: RobotGeometry, base_x: float, q: np.ndarray,
               alpha: float, detailed: bool):
    radius = geometry.wheel_radius
    axle = np.array([base_x, radius])
    points = axle + kinematics.joint_points(geometry, q)
    ax.add_patch(plt.Circle(axle, radius, fill=False, ec="0.25", lw=1.2, alpha=alpha))
    # spoke visualizes rolling: the wheel turns clockwise as the base moves right
    spin = base_x / radius
    rim = axle + radius * np.array([-np.sin(spin), -np.cos(spin)])
    ax.plot([axle[0], rim[0]], [axle[1], rim[1]], color="0.25", lw=1.0, alpha=alpha)
    ax.plot(points[:, 0], points[:, 1], color="0.15", lw=2.0, alpha=alpha,
            marker="o", ms=3.5, mfc="white", mec="0.15")
    if detailed:
        com = axle + kinematics.chain_com(geometry, q)
        ax.plot([com[0]], [com[1]], marker="o", ms=7, color="tab:blue", alpha=alpha)
        # carried object: a short bar across the tip, level when the last link
        # is vertical, tilting with the logged end-effector orientation
        tip = points[-1]
        phi = kinematics.end_effector_angle(q)
        half = 0.35 * geometry.links[-1].length
        across = half * np.array([np.cos(phi), -np.sin(phi)])
        ax.plot([tip[0] - across[0], tip[0] + across[0]],
                [tip[1] - across[1], tip[1] + across[1]],
                color="tab:red", lw=3.0, alpha=alpha, solid_capstyle="round")


def plot_snapshots(spec: FigureSpec, geometry: RobotGeometry) -> Path:
    """Pose strip at the requested times, with faded recent-history poses."""
    if not spec.times:
        raise ValueError("no snapshot times given")
    table = read_log(spec.log_path)
    t = table.col("t")
    base = table.col("x")
    joints = _pose_columns(table, geometry)
    lo, hi = float(t[0]), float(t[-1])
    for tk in spec.times:
        if not lo - 1e-12 <= tk <= hi + 1e-12:
            raise ValueError(
                f"snapshot time {tk:g} outside log range [{lo:g}, {hi:g}]"
            )
    picks = [int(np.argmin(np.abs(t - tk))) for tk in spec.times]
    dt = float(np.median(np.diff(t))) if t.size > 1 else 1.0
    lag_rows = max(1, int(round(spec.shadow_lag / dt)))

    reach = geometry.reach
    fig, ax = plt.subplots(figsize=(max(6.0, 2.0 + 1.8 * len(picks)), 4.2))
    try:
        for idx in picks:
            for k in range(spec.shadows, 0, -1):
                j = idx - k * lag_rows
                if j < 0:
                    continue
                fade = 0.32 * (1.0 - k / (spec.shadows + 1.0))
                _draw_pose(ax, geometry, float(base[j]), joints[j], fade, detailed=False)
            _draw_pose(ax, geometry, float(base[idx]), joints[idx], 1.0, detailed=True)
            ax.annotate(f"{t[idx]:.2f} s", (float(base[idx]), -0.14 * reach),
                        ha="center", fontsize=8, color="0.3")
        ax.axhline(0.0, color="0.6", lw=1.0)
        ax.set_aspect("equal")
        span_lo = float(base[picks].min()) - 0.9 * reach
        span_hi = float(base[picks].max()) + 0.9 * reach
        ax.set_xlim(span_lo, span_hi)
        ax.set_ylim(-0.28 * reach, geometry.wheel_radius + 1.25 * reach)
        ax.set_xlabel("x [m]")
        ax.set_ylabel("z [m]")
        ax.grid(True, alpha=0.25)
        fig.tight_layout()
        spec.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out_path, dpi=150)
    finally:
        plt.close(fig)
    return spec.out_path
