import shutil
import subprocess

from wiphwbc_plots import cli


def test_trajectories_command(short_log, tmp_path, capsys):
    out = tmp_path / "tracking.png"
    rc = cli.main_trajectories([str(short_log), "-o", str(out)])
    assert rc == 0
    assert str(out) in capsys.readouterr().out
    assert out.exists()


def test_trajectories_panel_flag(short_log, tmp_path):
    out = tmp_path / "pitch.png"
    rc = cli.main_trajectories([str(short_log), "-o", str(out),
                                "--panels", "pitch,joint_torques",
                                "--decimation", "5"])
    assert rc == 0 and out.exists()


def test_snapshots_command(short_log, robot3_cfg, tmp_path, capsys):
    out = tmp_path / "poses.png"
    rc = cli.main_snapshots([str(short_log), "--robot", str(robot3_cfg),
                             "--times", "0.0,0.5,1.0,1.5", "-o", str(out)])
    assert rc == 0
    assert out.exists()
    capsys.readouterr()


def test_missing_log_reports_error(tmp_path, capsys):
    rc = cli.main_trajectories([str(tmp_path / "absent.csv"),
                                "-o", str(tmp_path / "x.png")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_bad_panel_reports_error(short_log, tmp_path, capsys):
    rc = cli.main_trajectories([str(short_log), "-o", str(tmp_path / "x.png"),
                                "--panels", "wiggle"])
    assert rc == 1
    assert "unknown panel" in capsys.readouterr().err


def test_bad_times_report_error(short_log, robot3_cfg, tmp_path, capsys):
    rc = cli.main_snapshots([str(short_log), "--robot", str(robot3_cfg),
                             "--times", "a,b", "-o", str(tmp_path / "x.png")])
    assert rc == 1
    assert "snapshot times" in capsys.readouterr().err


def test_out_of_range_time_reports_error(short_log, robot3_cfg, tmp_path, capsys):
    rc = cli.main_snapshots([str(short_log), "--robot", str(robot3_cfg),
                             "--times", "99.0", "-o", str(tmp_path / "x.png")])
    assert rc == 1
    assert "outside log range" in capsys.readouterr().err


def test_bad_robot_config_reports_error(short_log, tmp_path, capsys):
    rc = cli.main_snapshots([str(short_log), "--robot", str(tmp_path / "no.cfg"),
                             "--times", "0.5", "-o", str(tmp_path / "x.png")])
    assert rc == 1
    assert "cannot read" in capsys.readouterr().err


def test_console_scripts_installed(short_log, tmp_path):
    exe = shutil.which("plot-trajectories")
    assert exe is not None, "console script not on PATH"
    out = tmp_path / "via_script.png"
    proc = subprocess.run([exe, str(short_log), "-o", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert shutil.which("plot-snapshots") is not None
