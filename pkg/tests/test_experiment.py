import math
from pathlib import Path

import numpy as np
import pytest

from conftest import smoke_config
from fp8sta.experiment import (
    CSV_HEADER,
    gen_inputs,
    rows_to_csv,
    run_experiment,
    sweep,
    validate_config,
    with_threads,
)
from fp8sta.grid import GridShape, TileScheme, build_tile_map
from fp8sta.schedule import RegimeParams, ScheduleConfig
from fp8sta.sparsity import WindowSpec


# ── synthetic inputs ─────────────────────────────────────────────────────


def test_gen_inputs_bit_identical_for_same_coordinates():
    config = smoke_config()
    tmap = build_tile_map(config.grid, TileScheme(3, 4, 4))
    a = gen_inputs(config, tmap, step=2, head=1)
    b = gen_inputs(config, tmap, step=2, head=1)
    assert np.array_equal(a.q, b.q) and np.array_equal(a.k, b.k) and np.array_equal(a.v, b.v)


def test_gen_inputs_differ_across_seeds_steps_heads_tensors():
    config = smoke_config()
    tmap = build_tile_map(config.grid, TileScheme(3, 4, 4))
    base = gen_inputs(config, tmap, step=1, head=0)
    assert not np.array_equal(base.q, base.k)
    assert not np.array_equal(
        base.q, gen_inputs(smoke_config(seed=8), tmap, step=1, head=0).q
    )
    assert not np.array_equal(base.q, gen_inputs(config, tmap, step=2, head=0).q)
    assert not np.array_equal(base.q, gen_inputs(config, tmap, step=1, head=1).q)


def test_gaussian_sample_mean_is_centered():
    config = smoke_config(grid=GridShape(24, 32, 32, 16), seed=123)
    tmap = build_tile_map(config.grid, TileScheme(24, 32, 32))
    inputs = gen_inputs(config, tmap, step=1, head=0)
    # 3 x 24576 x 16 > 1e6 draws; the pinned seed keeps this stable
    draws = np.concatenate([inputs.q, inputs.k, inputs.v], axis=None)
    assert draws.size > 1_000_000
    assert abs(float(draws.mean(dtype=np.float64))) < 0.01
    assert abs(float(draws.std(dtype=np.float64)) - 1.0) < 0.01


def test_distribution_variants():
    from fp8sta.experiment import InputDistribution

    uni = smoke_config(distribution=InputDistribution("uniform", lo=-0.5, hi=0.25))
    tmap = build_tile_map(uni.grid, TileScheme(3, 4, 4))
    drawn = gen_inputs(uni, tmap, step=1, head=0)
    assert float(drawn.q.min()) >= -0.5 and float(drawn.q.max()) <= 0.25

    heavy = smoke_config(distribution=InputDistribution("heavy"))
    drawn = gen_inputs(heavy, tmap, step=1, head=0)
    spread = drawn.q.std(axis=0)
    assert float(spread.max() / spread.min()) > 3.0  # per-channel outlier scales

    with pytest.raises(ValueError):
        InputDistribution("poisson")


# ── run ──────────────────────────────────────────────────────────────────


def test_run_emits_one_row_per_step_with_regime_parameters():
    config = smoke_config()
    rows = run_experiment(config)
    assert [r.step for r in rows] == [1, 2, 3, 4, 5, 6]
    assert [r.regime for r in rows] == ["early", "mid", "mid", "mid", "late", "late"]
    assert rows[0].tile == (6, 8, 8) and rows[0].window == (1, 1, 1)
    assert rows[1].tile == (3, 4, 4) and rows[1].window == (3, 3, 3)
    assert rows[4].tile == (3, 8, 8) and rows[4].window == (2, 2, 2)
    for r in rows:
        assert r.flops_sparse <= r.flops_dense
        assert 0.0 < r.density <= 1.0
        assert (r.snr_db == math.inf) == (r.mse == 0.0)


def test_passthrough_rows_report_perfect_metrics():
    rows = run_experiment(smoke_config(passthrough=True))
    for r in rows:
        assert r.cosine_sim == 1.0 and r.mse == 0.0 and r.snr_db == math.inf
    csv = rows_to_csv(rows)
    assert ",1.0,0.0,inf" in csv


def test_run_rejects_invalid_config():
    config = smoke_config(grid=GridShape(5, 8, 8, 16))  # early tile will not divide
    assert validate_config(config)
    with pytest.raises(ValueError):
        run_experiment(config)


def test_csv_schema_and_shape():
    rows = run_experiment(smoke_config())
    csv = rows_to_csv(rows)
    lines = csv.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert CSV_HEADER == (
        "step,regime,tile_t,tile_h,tile_w,win_t,win_h,win_w,"
        "density,flops_dense,flops_sparse,cosine_sim,mse,snr_db"
    )
    assert len(lines) == 1 + 6
    first = lines[1].split(",")
    assert first[0] == "1" and first[1] == "early"
    assert len(first) == 14


def test_threaded_run_matches_serial_bitwise():
    config = smoke_config()
    serial = rows_to_csv(run_experiment(config))
    threaded = rows_to_csv(run_experiment(with_threads(config, 4)))
    assert serial == threaded


def test_smoke_case_matches_golden_csv():
    golden = (Path(__file__).parent / "golden" / "smoke_run.csv").read_text()
    assert rows_to_csv(run_experiment(smoke_config())) == golden


def test_three_steps_three_distinct_regimes():
    schedule = ScheduleConfig(
        alpha1=0.34,
        alpha2=0.67,
        early=RegimeParams(TileScheme(6, 8, 8), WindowSpec(1, 1, 1)),
        mid=RegimeParams(TileScheme(3, 4, 4), WindowSpec(3, 3, 3)),
        late=RegimeParams(TileScheme(3, 8, 8), WindowSpec(2, 2, 2)),
        total_steps=3,
    )
    rows = run_experiment(smoke_config(schedule=schedule))
    assert [r.regime for r in rows] == ["early", "mid", "late"]
    assert len({(r.tile, r.window) for r in rows}) == 3


# ── sweep ────────────────────────────────────────────────────────────────


def test_window_sweep_densities_strictly_increase_when_nested():
    config = smoke_config()
    rows = sweep(config, "window", [(1, 1, 1), (2, 2, 2), (3, 3, 3)])
    densities = [r.density for r in rows]
    assert densities == sorted(densities)
    assert densities[0] < densities[-1]
    assert all(r.regime == "sweep" for r in rows)


def test_tile_sweep_rows():
    config = smoke_config()
    rows = sweep(config, "tile", [(3, 4, 4), (6, 8, 8), (3, 8, 8)])
    assert [r.tile for r in rows] == [(3, 4, 4), (6, 8, 8), (3, 8, 8)]
    # window held at the mid regime
    assert all(r.window == (3, 3, 3) for r in rows)


def test_sweep_reports_invalid_values_and_continues():
    config = smoke_config()
    errors = []
    rows = sweep(config, "tile", [(5, 8, 8), (3, 4, 4)], errors=errors)
    assert len(rows) == 1 and rows[0].tile == (3, 4, 4)
    assert len(errors) == 1 and "indivisible" in errors[0]


def test_sweep_empty_values_gives_header_only():
    csv = rows_to_csv(sweep(smoke_config(), "window", []))
    assert csv == CSV_HEADER + "\n"


def test_sweep_rejects_unknown_axis():
    with pytest.raises(ValueError):
        sweep(smoke_config(), "heads", [(1, 1, 1)])


# ── config validation ────────────────────────────────────────────────────


def test_validate_config_collects_schedule_and_grid_problems():
    bad_schedule = ScheduleConfig(
        alpha1=0.9,
        alpha2=0.2,
        early=RegimeParams(TileScheme(6, 8, 8), WindowSpec(1, 1, 1)),
        mid=RegimeParams(TileScheme(3, 4, 4), WindowSpec(3, 3, 3)),
        late=RegimeParams(TileScheme(3, 8, 8), WindowSpec(2, 2, 2)),
        total_steps=6,
    )
    config = smoke_config(schedule=bad_schedule, heads=0, fmt_name="fp4")
    problems = validate_config(config)
    assert any("alpha" in p for p in problems)
    assert any("heads" in p for p in problems)
    assert any("format" in p for p in problems)
