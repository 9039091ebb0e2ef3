import pytest

from plasmon.geometry import make_circle, make_ellipse, make_star
from plasmon.materials import DrudeMaterial
from plasmon.settings import set_quiet

ENV_KEYS = (
    "PLASMON_EPS_SING",
    "PLASMON_RCOND_MIN",
    "PLASMON_MIN_SEPARATION",
    "PLASMON_GAP_RESOLUTION",
    "PLASMON_THREADS",
    "PLASMON_OUTPUT_DIR",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)
    set_quiet(True)
    yield
    set_quiet(False)


@pytest.fixture
def unit_circle():
    return make_circle(1.0, n_nodes=128)


@pytest.fixture
def ellipse():
    return make_ellipse(1.0, 0.5, n_nodes=256)


@pytest.fixture
def star():
    return make_star(1.0, 0.3, 5, n_nodes=256)


@pytest.fixture
def gold():
    return DrudeMaterial()
