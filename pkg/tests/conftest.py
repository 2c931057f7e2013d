import numpy as np
import pytest

from fp8sta.experiment import ExperimentConfig, InputDistribution
from fp8sta.grid import GridShape, TileScheme
from fp8sta.schedule import RegimeParams, ScheduleConfig
from fp8sta.sparsity import WindowSpec


@pytest.fixture(scope="session", autouse=True)
def _strict_float_errors():
    """Surface unexpected invalid-operation/zero-division instead of warnings."""
    with np.errstate(invalid="raise", divide="raise"):
        yield


def smoke_config(**overrides) -> ExperimentConfig:
    """Pinned small config used by the golden-file and determinism tests."""
    schedule = ScheduleConfig(
        alpha1=0.2,
        alpha2=0.7,
        early=RegimeParams(TileScheme(6, 8, 8), WindowSpec(1, 1, 1)),
        mid=RegimeParams(TileScheme(3, 4, 4), WindowSpec(3, 3, 3)),
        late=RegimeParams(TileScheme(3, 8, 8), WindowSpec(2, 2, 2)),
        total_steps=6,
    )
    base = dict(
        grid=GridShape(6, 8, 8, 16),
        schedule=schedule,
        seed=7,
        heads=2,
        fmt_name="e4m3",
        distribution=InputDistribution("gaussian", sigma=1.0),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def fidelity_config() -> ExperimentConfig:
    """Pinned full-scale config: one late-regime step at tile (6,8,8), window (6,6,6)."""
    schedule = ScheduleConfig(
        alpha1=0.2,
        alpha2=0.7,
        early=RegimeParams(TileScheme(24, 32, 32), WindowSpec(3, 3, 1)),
        mid=RegimeParams(TileScheme(3, 4, 4), WindowSpec(8, 6, 6)),
        late=RegimeParams(TileScheme(6, 8, 8), WindowSpec(6, 6, 6)),
        total_steps=1,
    )
    return ExperimentConfig(
        grid=GridShape(24, 32, 32, 64),
        schedule=schedule,
        seed=2026,
        heads=1,
        fmt_name="e4m3",
        distribution=InputDistribution("gaussian", sigma=1.0),
    )
