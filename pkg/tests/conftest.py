import numpy as np
import pytest

from app.models.schemas import DispersalSpec, Grid, ModelConfig, State


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the long figure-preset runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_cfg(
    n_cells: int = 32,
    d1: float = 0.2,
    d2: float = 0.3,
    p_v: float = 1.75,
    k_v: float = 1.0,
    drift_q: float = 0.5,
    m=1.0,
    **kwargs,
) -> ModelConfig:
    return ModelConfig(
        grid=Grid(length=1.0, n_cells=n_cells),
        disp_u=DispersalSpec(d=d1),
        disp_v=DispersalSpec(d=d2, k=k_v, p=p_v, epsilon=1e-4),
        drift_q=drift_q,
        resource_m=m,
        **kwargs,
    )


def bump_state(cfg: ModelConfig, t: float = 0.0) -> State:
    x = cfg.grid.cell_centers
    return State(
        t=t,
        u=0.5 * np.exp(-((x - 0.25) ** 2) / (2 * 0.08 ** 2)),
        v=0.5 * np.exp(-((x - 0.75) ** 2) / (2 * 0.08 ** 2)),
    )


@pytest.fixture
def cfg() -> ModelConfig:
    return make_cfg()


@pytest.fixture
def state(cfg) -> State:
    return bump_state(cfg)
