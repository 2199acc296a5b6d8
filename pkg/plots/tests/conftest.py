"""Shared fixtures: real simulation logs produced through the simulator CLI.

The plotting package consumes the controller stack only through its files,
so fixtures shell out to `python -m wiphwbc.cli simulate` and hand tests the
resulting CSV paths. Logs are built once per session.
"""

import pathlib
import subprocess
import sys

import pytest

PKG_ROOT = pathlib.Path(__file__).resolve().parents[2]
CONFIGS = PKG_ROOT / "configs"


def _simulate(out_dir: pathlib.Path, robot_cfg: pathlib.Path, sim_text: str,
              extra: list[str] | None = None) -> pathlib.Path:
    sim_cfg = out_dir / "sim.cfg"
    sim_cfg.write_text(sim_text)
    cmd = [sys.executable, "-m", "wiphwbc.cli", "simulate",
           "--robot", str(robot_cfg), "--sim", str(sim_cfg),
           "--out", str(out_dir)]
    if extra:
        cmd.extend(extra)
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, f"simulate failed:\n{proc.stdout}\n{proc.stderr}"
    log = out_dir / "sim_log.csv"
    assert log.exists()
    return log


@pytest.fixture(scope="session")
def robot1_cfg() -> pathlib.Path:
    return CONFIGS / "robot_1link.cfg"


@pytest.fixture(scope="session")
def robot3_cfg() -> pathlib.Path:
    return CONFIGS / "robot_3link.cfg"


@pytest.fixture(scope="session")
def robot7_cfg() -> pathlib.Path:
    return CONFIGS / "robot_7link.cfg"


@pytest.fixture(scope="session")
def short_log(tmp_path_factory, robot3_cfg) -> pathlib.Path:
    """2 s three-link run toward a 0.5 m goal, full-rate log (2000 rows)."""
    out = tmp_path_factory.mktemp("short")
    return _simulate(out, robot3_cfg, (
        "[sim]\n"
        "duration = 2.0\n"
        "goal = 0.5\n"
        "tf = 2.0\n"
    ))


@pytest.fixture(scope="session")
def rest_log(tmp_path_factory, robot3_cfg) -> pathlib.Path:
    """Regulation at the upright rest: every pose should be vertical."""
    out = tmp_path_factory.mktemp("rest")
    return _simulate(out, robot3_cfg, (
        "[sim]\n"
        "duration = 0.3\n"
        "goal = 0.0\n"
        "tf = 1.0\n"
    ))


@pytest.fixture(scope="session")
def single_link_log(tmp_path_factory, robot1_cfg) -> pathlib.Path:
    out = tmp_path_factory.mktemp("single")
    return _simulate(out, robot1_cfg, (
        "[sim]\n"
        "duration = 0.5\n"
        "goal = 0.1\n"
        "tf = 1.0\n"
    ))


@pytest.fixture(scope="session")
def goal_log(tmp_path_factory, robot7_cfg) -> pathlib.Path:
    """The canonical 2 m seven-link task, same configuration the headline
    closed-loop numbers are measured on."""
    out = tmp_path_factory.mktemp("goto2m")
    sim_cfg = CONFIGS / "sim_goto2m.cfg"
    cmd = [sys.executable, "-m", "wiphwbc.cli", "simulate",
           "--robot", str(robot7_cfg), "--sim", str(sim_cfg),
           "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, f"simulate failed:\n{proc.stdout}\n{proc.stderr}"
    log = out / "sim_log.csv"
    assert log.exists()
    return log
