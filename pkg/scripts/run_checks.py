"""Run the invariant battery on every shipped robot config.

Usage: python scripts/run_checks.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from wiphwbc import cli  # noqa: E402


def main() -> int:
    configs = sorted(pathlib.Path("configs").glob("robot_*.cfg"))
    if not configs:
        print("no robot configs found (run from the repo root)",
              file=sys.stderr)
        return 1
    worst = 0
    for cfg in configs:
        rc = cli.main(["check", "--robot", str(cfg)])
        worst = max(worst, rc)
        print()
    return worst


if __name__ == "__main__":
    sys.exit(main())
