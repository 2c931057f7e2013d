"""Step-aware schedules and the experiment loop.

Early and late sampling steps tolerate coarse tiles and sparse windows; the
middle of the trajectory gets the finest tiles and the densest window.  The
experiment runner measures quantization error against the sparse oracle at
every step and emits one CSV row per step.

Run: python demos/05_step_schedule.py
"""

from fp8sta import GridShape, TileScheme, WindowSpec
from fp8sta.experiment import ExperimentConfig, rows_to_csv, run_experiment, sweep
from fp8sta.schedule import RegimeParams, ScheduleConfig, regime_counts, validate

schedule = ScheduleConfig(
    alpha1=0.2,
    alpha2=0.7,
    early=RegimeParams(TileScheme(6, 8, 8), WindowSpec(1, 1, 1)),
    mid=RegimeParams(TileScheme(3, 4, 4), WindowSpec(3, 3, 3)),
    late=RegimeParams(TileScheme(3, 8, 8), WindowSpec(2, 2, 2)),
    total_steps=10,
)
print("schedule violations:", validate(schedule) or "none")
print("steps per regime:", regime_counts(schedule))

config = ExperimentConfig(
    grid=GridShape(6, 8, 8, 16),
    schedule=schedule,
    seed=0,
    heads=2,
)

print("\nper-step metrics (pipeline vs sparse oracle):")
print(rows_to_csv(run_experiment(config)))

print("window sweep at the mid-regime tile (3,4,4):")
rows = sweep(config, "window", [(1, 1, 1), (2, 2, 2), (3, 3, 3)])
print(rows_to_csv(rows))
