import numpy as np
import pytest

from celltraffic.stable import StableParams
from celltraffic.traffic import CellMeta, ScenarioSpec, TrafficMatrix, generate_synthetic

# parameter sets fitted to the three service types (5-minute dataset), plus
# the 30-minute video fit used for the sub-1 exponent paths
IM_PARAMS = StableParams(1.61, 1.0, 188.67, 221.83)
WEB_PARAMS = StableParams(1.60, 1.0, 32.33, 42.75)
VIDEO_PARAMS = StableParams(0.51, 1.0, 136.52, -341.15)


@pytest.fixture(scope="session")
def im_scenario():
    return ScenarioSpec(
        n_cells=113,
        n_intervals=288,
        resolution_seconds=300,
        service_label="IM",
        stable=IM_PARAMS,
        hotspot_count=5,
        dictionary_rank=8,
    )


@pytest.fixture(scope="session")
def im_matrix(im_scenario):
    return generate_synthetic(im_scenario, seed=1)


@pytest.fixture(scope="session")
def video_scenario():
    return ScenarioSpec(
        n_cells=113,
        n_intervals=288,
        resolution_seconds=300,
        service_label="video",
        stable=VIDEO_PARAMS,
        hotspot_count=3,
        dictionary_rank=8,
    )


@pytest.fixture
def small_matrix():
    cells = (
        CellMeta("a", 30.0, 120.0),
        CellMeta("b", 30.01, 120.0),
        CellMeta("c", 30.0, 120.01),
    )
    rng = np.random.default_rng(0)
    values = rng.uniform(1.0, 9.0, size=(3, 8))
    return TrafficMatrix(cells, 300, 1000, values, "IM")
