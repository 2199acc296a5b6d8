import pathlib

import numpy as np
import pytest
from hypothesis import settings

from wiphwbc import model

settings.register_profile("ci", deadline=None, max_examples=50)
settings.load_profile("ci")

REPO = pathlib.Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> pathlib.Path:
    return REPO


@pytest.fixture(scope="session", params=[1, 3, 7], ids=lambda n: f"n{n}")
def any_robot(request) -> model.RobotDescription:
    return model.default_description(request.param)


@pytest.fixture(scope="session")
def robot1() -> model.RobotDescription:
    return model.default_description(1)


@pytest.fixture(scope="session")
def robot3() -> model.RobotDescription:
    return model.default_description(3)


@pytest.fixture(scope="session")
def robot7() -> model.RobotDescription:
    return model.default_description(7)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
