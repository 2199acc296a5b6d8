"""Console entry points.

    plot-trajectories <csv> -o <png> [--panels a,b,...] [--decimation N]
    plot-snapshots <csv> --robot <cfg> --times t1,...,tk -o <png>

Both return 0 on success and print the written image path. Domain errors
(unreadable or malformed log, missing columns, bad robot config, snapshot
time outside the log) are reported on stderr with exit status 1.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures
from .robot import read_robot_geometry


def _parse_panels(text: str | None) -> tuple[str, ...]:
    if text is None:
        return figures.PANELS
    panels = tuple(p.strip() for p in text.split(",") if p.strip())
    if not panels:
        raise ValueError("panel selection is empty")
    return panels


def _parse_times(text: str) -> tuple[float, ...]:
    try:
        times = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ValueError(f"cannot parse snapshot times {text!r}") from exc
    if not times:
        raise ValueError("no snapshot times given")
    return times


def main_trajectories(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-trajectories",
        description="Tracking panels (pitch, base motion, control, torques) from a simulation log.",
    )
    parser.add_argument("log", help="simulation log CSV")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    parser.add_argument("--panels", default=None,
                        help=f"comma-separated subset of: {', '.join(figures.PANELS)}")
    parser.add_argument("--decimation", type=int, default=1,
                        help="plot every Nth row (default 1)")
    args = parser.parse_args(argv)
    try:
        spec = figures.FigureSpec(
            log_path=Path(args.log), out_path=Path(args.out),
            panels=_parse_panels(args.panels), decimation=args.decimation,
        )
        out = figures.plot_trajectories(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


def main_snapshots(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-snapshots",
        description="Stick-figure pose strip at chosen times from a simulation log.",
    )
    parser.add_argument("log", help="simulation log CSV")
    parser.add_argument("--robot", required=True, help="robot description file")
    parser.add_argument("--times", required=True,
                        help="comma-separated snapshot times in seconds")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    parser.add_argument("--shadows", type=int, default=3,
                        help="faded history poses per snapshot (default 3)")
    parser.add_argument("--shadow-lag", type=float, default=0.12,
                        help="spacing of history poses in seconds (default 0.12)")
    args = parser.parse_args(argv)
    try:
        geometry = read_robot_geometry(args.robot)
        spec = figures.FigureSpec(
            log_path=Path(args.log), out_path=Path(args.out),
            times=_parse_times(args.times),
            shadows=args.shadows, shadow_lag=args.shadow_lag,
        )
        out = figures.plot_snapshots(spec, geometry)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0
