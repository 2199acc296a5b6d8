"""Run the canonical 2 m task on the 7-link fixture, unified and ablated.

Writes both runs' artifacts under the output directory and prints the
summary comparison that motivates coordinating balance with the arm:
the ablation balances with the base joint alone and lets the carried
object tilt by an order of magnitude more.

Usage: python scripts/run_goto2m.py [--out results/goto2m]
"""

import argparse
import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from wiphwbc import cli  # noqa: E402

KEYS = ("completion_time", "terminal_position_error", "peak_abs_theta",
        "peak_ee_orientation_deviation", "torque_limit_violations")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/goto2m")
    ap.add_argument("--robot", default="configs/robot_7link.cfg")
    ap.add_argument("--sim", default="configs/sim_goto2m.cfg")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    summaries = {}
    for name, extra in (("unified", []), ("decoupled", ["--decoupled"])):
        run_dir = out / name
        rc = cli.main(["simulate", "--robot", args.robot, "--sim", args.sim,
                       "--out", str(run_dir)] + extra)
        if rc != 0:
            print(f"{name} run failed with exit code {rc}", file=sys.stderr)
            return rc
        summaries[name] = json.loads((run_dir / "summary.json").read_text())

    width = max(len(k) for k in KEYS)
    print(f"\n{'':{width}}  {'unified':>12}  {'decoupled':>12}")
    for key in KEYS:
        a, b = summaries["unified"][key], summaries["decoupled"][key]
        print(f"{key:{width}}  {a:>12.4g}  {b:>12.4g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
