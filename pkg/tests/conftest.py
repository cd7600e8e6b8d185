import time
from pathlib import Path

import numpy as np
import pytest

from astroland.gravity import GravityModel
from astroland.rigid_body import AsteroidModel, DumbbellParams
from astroland.scenario import load_config, run_scenario
from astroland.shape_model import cube_mesh, data_path, load_mesh


@pytest.fixture(scope="session")
def cube():
    return cube_mesh(1.0)


@pytest.fixture(scope="session")
def unit_cube_model(cube):
    """Unit cube centred at the origin with G = sigma = 1."""
    return GravityModel.from_mesh(cube, density=1.0, G=1.0)


@pytest.fixture(scope="session")
def itokawa():
    return load_mesh(data_path("itokawa_64.obj"))


@pytest.fixture(scope="session")
def itokawa_model(itokawa):
    return GravityModel.from_mesh(itokawa, density=1900.0)


@pytest.fixture(scope="session")
def cube_world():
    """Scaled-down world where the dynamics are fast enough to test in a few hundred steps:
    unit cube, G = sigma = 1, small dumbbell."""
    g = GravityModel.from_mesh(cube_mesh(1.0), density=1.0, G=1.0)
    params = DumbbellParams(0.5, 0.5, [-0.15, 0.0, 0.0], [0.15, 0.0, 0.0], sphere_radius=0.05)
    return AsteroidModel(g), params


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


LANDING = Path(__file__).resolve().parents[1] / "scenarios" / "itokawa_landing.yaml"


@pytest.fixture(scope="session")
def landing_run():
    """The full two-phase landing scenario, run once per session: (config, log, wall seconds)."""
    cfg = load_config(LANDING)
    t0 = time.perf_counter()
    log = run_scenario(cfg)
    return cfg, log, time.perf_counter() - t0
