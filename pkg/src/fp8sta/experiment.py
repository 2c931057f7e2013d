"""Experiment loop: synthesize inputs, run the pipeline against its oracle per
step, and emit CSV rows.

Input synthesis uses Philox, a counter-based generator, keyed by the full
coordinate tuple (seed, step, head, tensor tag).  Every tensor is therefore a
pure function of its coordinates: generation order, thread count and platform
do not change a single bit, which is what makes the emitted CSV byte-stable.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .attention import AttentionInputs, ForwardConfig, fp8_sparse_forward, sparse_reference
from .fp8 import FORMATS
from .grid import GridShape, TileMap, TileScheme, build_tile_map
from .metrics import StepMetrics, cosine_similarity, flops_dense, flops_sparse, mse, snr_db
from .schedule import ScheduleConfig, params_at, validate as validate_schedule
from .sparsity import WindowSpec, build_block_mask, density

CSV_HEADER = (
    "step,regime,tile_t,tile_h,tile_w,win_t,win_h,win_w,"
    "density,flops_dense,flops_sparse,cosine_sim,mse,snr_db"
)

_TENSOR_TAGS = {"q": 1, "k": 2, "v": 3}


@dataclass(frozen=True)
class InputDistribution:
    """Synthetic activation distribution.

    ``gaussian``: iid N(0, sigma^2).  ``uniform``: iid U(lo, hi).  ``heavy``:
    gaussian with a per-channel scale drawn log-uniform in [0.1, 10], a stand-in
    for channel outliers that stress per-channel versus per-tile scaling.
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "uniform", "heavy"):
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.kind == "uniform" and not self.lo < self.hi:
            raise ValueError("uniform needs lo < hi")


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridShape
    schedule: ScheduleConfig
    seed: int = 0
    heads: int = 1
    fmt_name: str = "e4m3"
    distribution: InputDistribution = InputDistribution()
    passthrough: bool = False
    threads: int = 1

    @property
    def steps(self) -> int:
        return self.schedule.total_steps


def validate_config(config: ExperimentConfig) -> list[str]:
    """Every violation in a config; empty list means runnable."""
    problems = list(validate_schedule(config.schedule))
    if config.heads < 1:
        problems.append(f"heads must be >= 1, got {config.heads}")
    if config.fmt_name not in FORMATS:
        problems.append(f"unknown format {config.fmt_name!r}; expected one of {sorted(FORMATS)}")
    for regime in ("early", "mid", "late"):
        tile = config.schedule.params(regime).tile
        for axis, g, s in zip("thw", config.grid.dims, tile.dims):
            if g % s != 0:
                problems.append(
                    f"{regime} tile {tile.dims} does not divide grid "
                    f"{config.grid.dims} on axis {axis}"
                )
    return problems


def _stream(seed: int, step: int, head: int, tag: int) -> np.random.Generator:
    # key packs all coordinates: low word is the user seed, high word the
    # (step, head, tag) triple, so distinct tensors never share a stream
    high = (step << 24) | (head << 8) | tag
    key = (high << 64) | (seed & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def _draw(dist: InputDistribution, gen: np.random.Generator, L: int, d: int) -> np.ndarray:
    if dist.kind == "gaussian":
        return np.float32(dist.sigma) * gen.standard_normal((L, d), dtype=np.float32)
    if dist.kind == "uniform":
        span = np.float32(dist.hi - dist.lo)
        return gen.random((L, d), dtype=np.float32) * span + np.float32(dist.lo)
    scales = (10.0 ** gen.uniform(-1.0, 1.0, size=d)).astype(np.float32)
    return gen.standard_normal((L, d), dtype=np.float32) * scales[None, :]


def gen_inputs(config: ExperimentConfig, tmap: TileMap, step: int, head: int) -> AttentionInputs:
    """Deterministic synthetic q/k/v for one (step, head) coordinate."""
    L, d = config.grid.tokens, config.grid.d_model
    tensors = {}
    for name, tag in _TENSOR_TAGS.items():
        gen = _stream(config.seed, step, head, tag)
        tensors[name] = _draw(config.distribution, gen, L, d)
    return AttentionInputs(tensors["q"], tensors["k"], tensors["v"], tmap)


def _evaluate(
    config: ExperimentConfig,
    tile: TileScheme,
    window: WindowSpec,
    step: int,
    head: int,
) -> tuple[float, float, float]:
    """(cosine, mse, snr) of the pipeline against the sparse oracle."""
    tmap = build_tile_map(config.grid, tile)
    mask = build_block_mask(window, tmap.tile_grid_dims)
    inputs = gen_inputs(config, tmap, step, head)
    fwd_config = ForwardConfig(
        window=window, fmt=FORMATS[config.fmt_name], passthrough=config.passthrough
    )
    approx = fp8_sparse_forward(inputs, fwd_config)
    ref = sparse_reference(inputs, mask)
    return cosine_similarity(ref, approx), mse(ref, approx), snr_db(ref, approx)


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if math.inf not in values else math.inf


def _row(
    config: ExperimentConfig,
    step: int,
    regime: str,
    tile: TileScheme,
    window: WindowSpec,
    per_head: list[tuple[float, float, float]],
) -> StepMetrics:
    dims = build_tile_map(config.grid, tile).tile_grid_dims
    dens = density(build_block_mask(window, dims))
    L, d = config.grid.tokens, config.grid.d_model
    return StepMetrics(
        step=step,
        regime=regime,
        tile=tile.dims,
        window=window.dims,
        density=dens,
        flops_dense=flops_dense(L, d),
        flops_sparse=flops_sparse(L, d, dens),
        cosine_sim=_mean([m[0] for m in per_head]),
        mse=_mean([m[1] for m in per_head]),
        snr_db=_mean([m[2] for m in per_head]),
    )


def _run_tasks(config: ExperimentConfig, tasks: list[tuple[TileScheme, WindowSpec, int, int]]):
    """Evaluate (tile, window, step, head) tasks, optionally on a thread pool.

    Results come back indexed by task position, so the aggregation order is
    identical however the tasks were scheduled.
    """
    if config.threads <= 1:
        return [_evaluate(config, *task) for task in tasks]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(lambda task: _evaluate(config, *task), tasks))


def run_experiment(config: ExperimentConfig) -> list[StepMetrics]:
    """One metrics row per sampling step of the schedule."""
    problems = validate_config(config)
    if problems:
        raise ValueError("invalid experiment config: " + "; ".join(problems))

    plan = []
    for t in range(1, config.steps + 1):
        regime = config.schedule.regime_of(t)
        params = params_at(t, config.schedule)
        plan.append((t, regime, params.tile, params.window))

    tasks = [
        (tile, window, t, head)
        for (t, _, tile, window) in plan
        for head in range(config.heads)
    ]
    results = _run_tasks(config, tasks)

    rows = []
    for i, (t, regime, tile, window) in enumerate(plan):
        per_head = results[i * config.heads : (i + 1) * config.heads]
        rows.append(_row(config, t, regime, tile, window, per_head))
    return rows


def sweep(
    config: ExperimentConfig,
    axis: str,
    values: list[tuple[int, int, int]],
    errors: list[str] | None = None,
) -> list[StepMetrics]:
    """One metrics row per tile size or window size, at step 1.

    The axis not being swept is held at the schedule's mid-regime value.
    Invalid values (for example a tile that does not divide the grid) are
    reported into ``errors`` and skipped; the sweep continues.  For window
    sweeps, densities must be non-decreasing across values nested componentwise.
    """
    if axis not in ("tile", "window"):
        raise ValueError(f"axis must be 'tile' or 'window', got {axis!r}")
    mid = config.schedule.params("mid")
    rows: list[StepMetrics] = []
    kept: list[tuple[int, int, int]] = []
    for value in values:
        try:
            if axis == "tile":
                tile, window = TileScheme(*value), mid.window
            else:
                tile, window = mid.tile, WindowSpec(*value)
            per_head = [
                _evaluate(config, tile, window, 1, head) for head in range(config.heads)
            ]
            rows.append(_row(config, 1, "sweep", tile, window, per_head))
            kept.append(value)
        except (ValueError, IndexError) as exc:
            if errors is None:
                raise
            errors.append(f"{axis} value {value}: {exc}")

    if axis == "window":
        for i in range(1, len(rows)):
            nested = all(a <= b for a, b in zip(kept[i - 1], kept[i]))
            if nested and rows[i].density < rows[i - 1].density:
                raise AssertionError(
                    f"density not monotone across nested windows "
                    f"{kept[i - 1]} -> {kept[i]}"
                )
    return rows


def rows_to_csv(rows: list[StepMetrics]) -> str:
    """Byte-stable CSV with the fixed header; floats use repr, +inf prints inf."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.step},{r.regime},"
            f"{r.tile[0]},{r.tile[1]},{r.tile[2]},"
            f"{r.window[0]},{r.window[1]},{r.window[2]},"
            f"{r.density!r},{r.flops_dense},{r.flops_sparse},"
            f"{r.cosine_sim!r},{r.mse!r},{r.snr_db!r}"
        )
    return "\n".join(lines) + "\n"


def with_threads(config: ExperimentConfig, threads: int) -> ExperimentConfig:
    return replace(config, threads=threads)
