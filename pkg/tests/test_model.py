import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wiphwbc import model

MINIMAL_1LINK = """
[wheel]
radius = 0.1
mass = 0.5
inertia = 0.0025

[link.1]
mass = 2.0
length = 0.6
com_offset = 0.3
inertia_com = 0.06

[world]
gravity = 9.81
"""


def test_minimal_config_parses():
    d = model.loads_description(MINIMAL_1LINK)
    assert d.n == 1
    assert d.wheel.radius == 0.1
    assert d.wheel.mass == 0.5
    assert d.wheel.inertia == 0.0025
    lk = d.links[0]
    assert (lk.mass, lk.length, lk.com_offset, lk.inertia_com) == (2.0, 0.6, 0.3, 0.06)
    # optional keys default to unbounded/zero
    assert lk.damping == 0.0
    assert lk.torque_limit == math.inf
    assert lk.angle_min == -math.inf and lk.angle_max == math.inf
    assert d.gravity == 9.81


def test_negative_mass_names_field():
    bad = MINIMAL_1LINK.replace("mass = 2.0", "mass = -1.0")
    with pytest.raises(model.ConfigError, match=r"links\[0\]\.mass"):
        model.loads_description(bad)


def test_com_offset_beyond_length_rejected():
    bad = MINIMAL_1LINK.replace("com_offset = 0.3", "com_offset = 0.7")
    with pytest.raises(model.ConfigError, match=r"links\[0\]\.com_offset"):
        model.loads_description(bad)


def test_missing_key_and_malformed_value():
    with pytest.raises(model.ConfigError, match="missing key 'length'"):
        model.loads_description(MINIMAL_1LINK.replace("length = 0.6\n", ""))
    with pytest.raises(model.ConfigError, match="not a number"):
        model.loads_description(MINIMAL_1LINK.replace("0.6", "sixty"))


def test_link_numbering_must_be_contiguous():
    bad = MINIMAL_1LINK.replace("[link.1]", "[link.2]")
    with pytest.raises(model.ConfigError, match="numbered 1..n"):
        model.loads_description(bad)


def test_missing_sections():
    with pytest.raises(model.ConfigError, match=r"\[wheel\]"):
        model.loads_description(MINIMAL_1LINK.replace("[wheel]", "[wheels]"))
    with pytest.raises(model.ConfigError, match=r"\[world\]"):
        model.loads_description(MINIMAL_1LINK.replace("[world]", "[earth]"))


def test_angle_limits_ordering_checked():
    cfg = MINIMAL_1LINK.replace(
        "inertia_com = 0.06",
        "inertia_com = 0.06\nangle_min = 0.5\nangle_max = -0.5")
    with pytest.raises(model.ConfigError, match=r"links\[0\]\.angle_min"):
        model.loads_description(cfg)


@pytest.mark.parametrize("n", [1, 3, 7])
def test_serialize_round_trip_fixtures(n):
    d = model.default_description(n)
    assert model.loads_description(model.serialize_description(d)) == d


@given(
    mass=st.floats(0.01, 50.0),
    length=st.floats(0.01, 3.0),
    frac=st.floats(0.0, 1.0),
    inertia=st.floats(0.0, 5.0),
    damping=st.floats(0.0, 2.0),
)
def test_serialize_round_trip_property(mass, length, frac, inertia, damping):
    d = model.RobotDescription(
        wheel=model.WheelParams(radius=0.07, mass=0.4, inertia=0.001),
        links=(model.LinkParams(mass=mass, length=length,
                                com_offset=frac * length,
                                inertia_com=inertia, damping=damping,
                                torque_limit=12.5,
                                angle_min=-1.0, angle_max=2.0),),
        gravity=9.81,
    )
    assert model.loads_description(model.serialize_description(d)) == d


def test_fixture_files_match_builtin(repo_root):
    for n in (1, 3, 7):
        path = repo_root / "configs" / f"robot_{n}link.cfg"
        assert model.load_description(str(path)) == model.default_description(n)


def test_extra_sections_ignored():
    d = model.loads_description(MINIMAL_1LINK + "\n[sim]\nduration = 2.0\n")
    assert d.n == 1


def test_validate_state_clean():
    d = model.default_description(3)
    assert model.validate_state(d, model.upright_rest(d)) == []


def test_validate_state_reports_limit_violation():
    d = model.default_description(3)
    s = model.upright_rest(d)
    s.q[1] = 5.0
    msgs = model.validate_state(d, s)
    assert len(msgs) == 1 and msgs[0].startswith("q[1]")


def test_validate_state_reports_nonfinite():
    d = model.default_description(3)
    s = model.upright_rest(d)
    s.qdot[2] = math.nan
    s.x = math.inf
    msgs = model.validate_state(d, s)
    assert "qdot[2] non-finite" in msgs
    assert "x non-finite" in msgs


def test_validate_state_shape_mismatch_raises():
    d = model.default_description(3)
    s = model.RobotState(0.0, 0.0, np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        model.validate_state(d, s)


def test_state_arrays_checked():
    with pytest.raises(ValueError):
        model.RobotState(0.0, 0.0, np.zeros(3), np.zeros(2))


def test_total_mass_and_vectors():
    d = model.default_description(7)
    assert d.total_mass == pytest.approx(15.0)
    assert d.torque_limits().shape == (7,)
    assert d.damping_vector()[0] == 0.10
