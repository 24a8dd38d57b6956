import time
import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    from fastapi.testclient import TestClient

from easr.semisim import SemiSimSpec, build_semisim
from easr.service import create_app


@pytest.fixture(scope="session")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="session")
def default_sim():
    """The seed-fixed default semi-simulated dataset (6 blinks, 0 dB)."""
    return build_semisim(SemiSimSpec())


@pytest.fixture(scope="session")
def bench_run(client):
    """Default bench through the service, with its wall-clock time."""
    started = time.perf_counter()
    response = client.post("/bench", json={})
    wall = time.perf_counter() - started
    assert response.status_code == 200, response.text
    return response.json(), wall
