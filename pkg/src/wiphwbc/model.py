"""Robot description and state containers, config file I/O, validation.

A robot is a pair of coaxial wheels plus an n-link serial chain pinned at the
axle.  Joint 1 is the base pitch measured from vertical (positive tilts the
chain toward +x); joints 2..n are relative angles between consecutive links.
All quantities are SI (m, kg, rad, N*m), gravity is a positive magnitude.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

__all__ = [
    "WheelParams",
    "LinkParams",
    "RobotDescription",
    "RobotState",
    "ConfigError",
    "load_description",
    "loads_description",
    "serialize_description",
    "default_description",
    "upright_rest",
    "validate_state",
]


class ConfigError(ValueError):
    """Malformed or physically invalid robot/sim configuration."""


@dataclass(frozen=True)
class WheelParams:
    radius: float        # wheel radius [m]
    mass: float          # mass of ONE wheel [kg]; the pair is lumped as 2*mass
    inertia: float       # spin inertia of ONE wheel about its axle [kg m^2]


@dataclass(frozen=True)
class LinkParams:
    mass: float          # link mass [kg]
    length: float        # joint-to-joint length [m]
    com_offset: float    # distance from inboard joint to link COM [m]
    inertia_com: float   # rotational inertia about the link COM [kg m^2]
    damping: float = 0.0         # viscous joint damping [N m s/rad]
    torque_limit: float = math.inf   # symmetric actuator bound [N m]
    angle_min: float = -math.inf     # lower joint limit [rad]
    angle_max: float = math.inf      # upper joint limit [rad]


@dataclass(frozen=True)
class RobotDescription:
    wheel: WheelParams
    links: tuple[LinkParams, ...]
    gravity: float = 9.81    # positive magnitude [m/s^2]

    @property
    def n(self) -> int:
        return len(self.links)

    @property
    def total_mass(self) -> float:
        """Chain mass M (wheels excluded)."""
        return sum(lk.mass for lk in self.links)

    def torque_limits(self) -> np.ndarray:
        return np.array([lk.torque_limit for lk in self.links])

    def damping_vector(self) -> np.ndarray:
        return np.array([lk.damping for lk in self.links])


@dataclass
class RobotState:
    x: float             # axle horizontal position [m]
    xdot: float          # axle horizontal speed [m/s]
    q: np.ndarray        # joint angles, shape (n,)
    qdot: np.ndarray     # joint speeds, shape (n,)

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float)
        self.qdot = np.asarray(self.qdot, dtype=float)
        if self.q.ndim != 1 or self.q.shape != self.qdot.shape:
            raise ValueError("q and qdot must be 1-d arrays of equal length")

    def copy(self, **overrides) -> "RobotState":
        fields = dict(x=self.x, xdot=self.xdot, q=self.q.copy(),
                      qdot=self.qdot.copy())
        fields.update(overrides)
        return RobotState(**fields)

    def minimal_velocity(self) -> np.ndarray:
        """Stacked (xdot, qdot), shape (n+1,)."""
        return np.concatenate(([self.xdot], self.qdot))


def upright_rest(desc: RobotDescription, x: float = 0.0) -> RobotState:
    """All joints at zero, everything at rest."""
    n = desc.n
    return RobotState(x=x, xdot=0.0, q=np.zeros(n), qdot=np.zeros(n))


# --- validation -------------------------------------------------------------

def _validate_description(desc: RobotDescription) -> None:
    w = desc.wheel
    if not (w.radius > 0.0):
        raise ConfigError("wheel.radius must be > 0")
    if not (w.mass > 0.0):
        raise ConfigError("wheel.mass must be > 0")
    if not (w.inertia >= 0.0):
        raise ConfigError("wheel.inertia must be >= 0")
    if not (desc.gravity > 0.0):
        raise ConfigError("world.gravity must be a positive magnitude")
    if len(desc.links) == 0:
        raise ConfigError("at least one link is required")
    for i, lk in enumerate(desc.links):
        tag = f"links[{i}]"
        if not (lk.mass > 0.0):
            raise ConfigError(f"{tag}.mass must be > 0")
        if not (lk.length > 0.0):
            raise ConfigError(f"{tag}.length must be > 0")
        if not (0.0 <= lk.com_offset <= lk.length):
            raise ConfigError(f"{tag}.com_offset must lie in [0, length]")
        if not (lk.inertia_com >= 0.0):
            raise ConfigError(f"{tag}.inertia_com must be >= 0")
        if not (lk.damping >= 0.0):
            raise ConfigError(f"{tag}.damping must be >= 0")
        if not (lk.torque_limit > 0.0):
            raise ConfigError(f"{tag}.torque_limit must be > 0")
        if not (lk.angle_min < lk.angle_max):
            raise ConfigError(f"{tag}.angle_min must be < angle_max")


def validate_state(desc: RobotDescription, state: RobotState) -> list[str]:
    """Check a state against the description.

    Returns a list of human-readable violations (empty when clean): joint
    angles outside [angle_min, angle_max] and any non-finite entry.  A shape
    mismatch with the description is a programming error and raises.
    """
    if state.q.shape[0] != desc.n:
        raise ValueError(f"state has {state.q.shape[0]} joints, robot has {desc.n}")
    out: list[str] = []
    if not math.isfinite(state.x):
        out.append("x non-finite")
    if not math.isfinite(state.xdot):
        out.append("xdot non-finite")
    for k in range(desc.n):
        if not np.isfinite(state.q[k]):
            out.append(f"q[{k}] non-finite")
        elif not (desc.links[k].angle_min <= state.q[k] <= desc.links[k].angle_max):
            out.append(
                f"q[{k}]={state.q[k]:.6g} outside "
                f"[{desc.links[k].angle_min:.6g}, {desc.links[k].angle_max:.6g}]"
            )
        if not np.isfinite(state.qdot[k]):
            out.append(f"qdot[{k}] non-finite")
    return out


# --- config file I/O --------------------------------------------------------
#
# INI layout, one section per component:
#
#   [wheel]   radius, mass, inertia
#   [link.1]  mass, length, com_offset, inertia_com, damping, torque_limit,
#             angle_min, angle_max          (link.2, link.3, ... likewise)
#   [world]   gravity
#
# Files may carry extra sections ([sim], [controller]); they are ignored here
# and consumed by sim/cli.

_LINK_KEYS = (
    "mass", "length", "com_offset", "inertia_com",
    "damping", "torque_limit", "angle_min", "angle_max",
)
_LINK_DEFAULTS = {
    "damping": 0.0,
    "torque_limit": math.inf,
    "angle_min": -math.inf,
    "angle_max": math.inf,
}


def _getfloat(section: configparser.SectionProxy, key: str, where: str) -> float:
    try:
        raw = section[key]
    except KeyError:
        raise ConfigError(f"missing key '{key}' in [{where}]") from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{where}] {key} = {raw!r} is not a number") from None


def _parse(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from exc
    return cp


def loads_description(text: str) -> RobotDescription:
    """Parse a robot description from config text.  See module header."""
    cp = _parse(text)
    if "wheel" not in cp:
        raise ConfigError("missing [wheel] section")
    if "world" not in cp:
        raise ConfigError("missing [world] section")
    wheel = WheelParams(
        radius=_getfloat(cp["wheel"], "radius", "wheel"),
        mass=_getfloat(cp["wheel"], "mass", "wheel"),
        inertia=_getfloat(cp["wheel"], "inertia", "wheel"),
    )
    gravity = _getfloat(cp["world"], "gravity", "world")

    indices = []
    for name in cp.sections():
        if name.startswith("link."):
            try:
                indices.append(int(name.split(".", 1)[1]))
            except ValueError:
                raise ConfigError(f"bad link section name [{name}]") from None
    if not indices:
        raise ConfigError("no [link.<i>] sections found")
    indices.sort()
    if indices != list(range(1, len(indices) + 1)):
        raise ConfigError(f"link sections must be numbered 1..n, got {indices}")

    links = []
    for i in indices:
        sec = cp[f"link.{i}"]
        kwargs = {}
        for key in _LINK_KEYS:
            if key in sec:
                kwargs[key] = _getfloat(sec, key, f"link.{i}")
            elif key in _LINK_DEFAULTS:
                kwargs[key] = _LINK_DEFAULTS[key]
            else:
                raise ConfigError(f"missing key '{key}' in [link.{i}]")
        links.append(LinkParams(**kwargs))

    desc = RobotDescription(wheel=wheel, links=tuple(links), gravity=gravity)
    _validate_description(desc)
    return desc


def load_description(path: str) -> RobotDescription:
    """Load and validate a robot description from an INI-style config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return loads_description(text)


def serialize_description(desc: RobotDescription) -> str:
    """Render a description back to config text; exact float round-trip."""
    _validate_description(desc)
    buf = io.StringIO()
    buf.write("[wheel]\n")
    buf.write(f"radius = {desc.wheel.radius!r}\n")
    buf.write(f"mass = {desc.wheel.mass!r}\n")
    buf.write(f"inertia = {desc.wheel.inertia!r}\n\n")
    for i, lk in enumerate(desc.links, start=1):
        buf.write(f"[link.{i}]\n")
        for key in _LINK_KEYS:
            buf.write(f"{key} = {getattr(lk, key)!r}\n")
        buf.write("\n")
    buf.write("[world]\n")
    buf.write(f"gravity = {desc.gravity!r}\n")
    return buf.getvalue()


# --- built-in fixtures ------------------------------------------------------

def _rod(mass: float, length: float, **kw) -> LinkParams:
    """Uniform rod: COM at midpoint, I = m l^2 / 12."""
    return LinkParams(
        mass=mass, length=length, com_offset=0.5 * length,
        inertia_com=mass * length * length / 12.0, **kw,
    )


def default_description(n: int) -> RobotDescription:
    """Built-in desk-scale fixtures for n in {1, 3, 7}."""
    if n == 1:
        wheel = WheelParams(radius=0.1, mass=0.5, inertia=0.0025)
        links = (
            LinkParams(mass=2.0, length=0.6, com_offset=0.3, inertia_com=0.06,
                       damping=0.0, torque_limit=20.0,
                       angle_min=-1.2, angle_max=1.2),
        )
        return RobotDescription(wheel=wheel, links=links, gravity=9.81)
    if n == 3:
        wheel = WheelParams(radius=0.08, mass=0.8, inertia=0.00256)
        links = (
            _rod(5.0, 0.5, damping=0.05, torque_limit=60.0,
                 angle_min=-1.2, angle_max=1.2),
            _rod(3.0, 0.4, damping=0.05, torque_limit=40.0,
                 angle_min=-2.0, angle_max=2.0),
            _rod(1.5, 0.3, damping=0.02, torque_limit=20.0,
                 angle_min=-2.2, angle_max=2.2),
        )
        return RobotDescription(wheel=wheel, links=links, gravity=9.81)
    if n == 7:
        # ~15 kg, ~1.2 m: heavy base and torso, lighter arm segments.
        wheel = WheelParams(radius=0.1, mass=1.0, inertia=0.005)
        links = (
            _rod(6.0, 0.35, damping=0.10, torque_limit=80.0,
                 angle_min=-1.2, angle_max=1.2),
            _rod(4.0, 0.30, damping=0.08, torque_limit=60.0,
                 angle_min=-1.8, angle_max=1.8),
            _rod(2.0, 0.20, damping=0.05, torque_limit=40.0,
                 angle_min=-2.0, angle_max=2.0),
            _rod(1.2, 0.12, damping=0.03, torque_limit=25.0,
                 angle_min=-2.2, angle_max=2.2),
            _rod(0.8, 0.08, damping=0.02, torque_limit=15.0,
                 angle_min=-2.4, angle_max=2.4),
            _rod(0.6, 0.08, damping=0.02, torque_limit=10.0,
                 angle_min=-2.4, angle_max=2.4),
            _rod(0.4, 0.07, damping=0.01, torque_limit=8.0,
                 angle_min=-2.6, angle_max=2.6),
        )
        return RobotDescription(wheel=wheel, links=links, gravity=9.81)
    raise ValueError(f"no built-in fixture for n={n}; use a config file")
