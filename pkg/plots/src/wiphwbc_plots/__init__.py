"""Figure generation for wheeled-humanoid simulation logs.

This package deliberately does not import the controller stack. It consumes
two published interfaces only: the versioned CSV log format written by the
simulator CLI, and the INI robot description format. Forward kinematics is
reimplemented here from the logged joint angles, which doubles as an
end-to-end consistency check on the log contents.
"""

from .logs import LogError, LogTable, MissingColumnError, read_log
from .robot import LinkGeometry, RobotConfigError, RobotGeometry, read_robot_geometry
from .kinematics import (
    chain_com,
    end_effector,
    end_effector_angle,
    end_effector_path,
    joint_points,
    link_com_points,
)
from .figures import FigureSpec, plot_snapshots, plot_trajectories

__all__ = [
    "LogError",
    "LogTable",
    "MissingColumnError",
    "read_log",
    "LinkGeometry",
    "RobotConfigError",
    "RobotGeometry",
    "read_robot_geometry",
    "chain_com",
    "end_effector",
    "end_effector_angle",
    "end_effector_path",
    "joint_points",
    "link_com_points",
    "FigureSpec",
    "plot_snapshots",
    "plot_trajectories",
]
