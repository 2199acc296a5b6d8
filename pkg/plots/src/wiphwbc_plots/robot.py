"""Independent parser for the INI robot description format.

Only the geometric and mass quantities needed for drawing are extracted:
wheel radius (axle height above ground), link lengths, centre-of-mass
offsets, and link masses. Dynamic parameters in the file are ignored here.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path


class RobotConfigError(ValueError):
    """Robot description file is missing or inconsistent."""


@dataclass(frozen=True)
class LinkGeometry:
    length: float
    com_offset: float
    mass: float


@dataclass(frozen=True)
class RobotGeometry:
    wheel_radius: float
    links: tuple[LinkGeometry, ...]

    @property
    def n(self) -> int:
        return len(self.links)

    @property
    def reach(self) -> float:
        return sum(link.length for link in self.links)


def _get_float(parser: configparser.ConfigParser, section: str, key: str,
               path: Path) -> float:
    if not parser.has_option(section, key):
        raise RobotConfigError(f"{str(path)!r}: [{section}] is missing {key!r}")
    try:
        return parser.getfloat(section, key)
    except ValueError as exc:
        raise RobotConfigError(f"{str(path)!r}: [{section}] {key} is not a number") from exc


def read_robot_geometry(path: Path | str) -> RobotGeometry:
    """Parse the drawing-relevant fields of a robot description file."""
    path = Path(path)
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise RobotConfigError(f"cannot read robot config {str(path)!r}: {exc}") from exc
    except configparser.Error as exc:
        raise RobotConfigError(f"cannot parse robot config {str(path)!r}: {exc}") from exc

    if not parser.has_section("wheel"):
        raise RobotConfigError(f"{str(path)!r}: missing [wheel] section")
    radius = _get_float(parser, "wheel", "radius", path)
    if radius <= 0.0:
        raise RobotConfigError(f"{str(path)!r}: wheel radius must be positive")

    links = []
    k = 1
    while parser.has_section(f"link.{k}"):
        section = f"link.{k}"
        length = _get_float(parser, section, "length", path)
        com_offset = _get_float(parser, section, "com_offset", path)
        mass = _get_float(parser, section, "mass", path)
        if length <= 0.0:
            raise RobotConfigError(f"{str(path)!r}: [{section}] length must be positive")
        if not 0.0 <= com_offset <= length:
            raise RobotConfigError(
                f"{str(path)!r}: [{section}] com_offset must lie within the link"
            )
        if mass <= 0.0:
            raise RobotConfigError(f"{str(path)!r}: [{section}] mass must be positive")
        links.append(LinkGeometry(length=length, com_offset=com_offset, mass=mass))
        k += 1
    if not links:
        raise RobotConfigError(f"{str(path)!r}: no [link.1] section found")
    # link sections must be consecutive starting at 1
    stray = [s for s in parser.sections() if s.startswith("link.") and s not in
             {f"link.{i}" for i in range(1, k)}]
    if stray:
        raise RobotConfigError(
            f"{str(path)!r}: link sections must be numbered consecutively, found {stray[0]!r}"
        )
    return RobotGeometry(wheel_radius=radius, links=tuple(links))
