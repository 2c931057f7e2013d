"""Command-line experiment runner.

Commands: ``run`` (full schedule experiment), ``sweep --axis tile|window``
(ablation rows), ``mask-dump`` (sliding-tile mask in text form) and
``quantize-check`` (the 256-entry FP8 code table).  Every config file key has
a flag of the same meaning; flags win over the file, the file wins over
defaults.  CSV goes to --output or stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import fp8
from .experiment import (
    CSV_HEADER,
    ExperimentConfig,
    InputDistribution,
    rows_to_csv,
    run_experiment,
    sweep,
    validate_config,
)
from .grid import GridShape, TileScheme, build_tile_map
from .schedule import DEFAULT_SCHEDULE_KWARGS, RegimeParams, ScheduleConfig
from .sparsity import WindowSpec, build_block_mask, format_mask_dump

_REGIMES = ("early", "mid", "late")


def _triple(text: str) -> tuple[int, int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated ints, got {text!r}")
    return (parts[0], parts[1], parts[2])


def _values_list(text: str) -> list[tuple[int, int, int]]:
    return [_triple(part) for part in text.split(";") if part]


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--grid", type=_triple, help="token grid t,h,w")
    p.add_argument("--d-model", type=int, dest="d_model")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="sampling steps D")
    p.add_argument("--heads", type=int)
    p.add_argument("--format", choices=sorted(fp8.FORMATS), dest="fmt")
    p.add_argument("--dist", choices=("gaussian", "uniform", "heavy"))
    p.add_argument("--sigma", type=float)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--passthrough", action="store_true", default=None)
    p.add_argument("--threads", type=int)
    p.add_argument("--alpha1", type=float)
    p.add_argument("--alpha2", type=float)
    for regime in _REGIMES:
        p.add_argument(f"--{regime}-tile", type=_triple, dest=f"{regime}_tile")
        p.add_argument(f"--{regime}-window", type=_triple, dest=f"{regime}_window")
    p.add_argument("--output", help="CSV path; stdout when omitted")


_DEFAULTS = {
    "grid": (24, 32, 32),
    "d_model": 64,
    "seed": 0,
    "steps": 50,
    "heads": 1,
    "format": "e4m3",
    "distribution": {"kind": "gaussian", "sigma": 1.0, "lo": -1.0, "hi": 1.0},
    "passthrough": False,
    "threads": 1,
    "schedule": {
        "alpha1": DEFAULT_SCHEDULE_KWARGS["alpha1"],
        "alpha2": DEFAULT_SCHEDULE_KWARGS["alpha2"],
        **{
            regime: {
                "tile": list(DEFAULT_SCHEDULE_KWARGS[regime].tile.dims),
                "window": list(DEFAULT_SCHEDULE_KWARGS[regime].window.dims),
            }
            for regime in _REGIMES
        },
    },
}


def _load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def _merged_settings(args: argparse.Namespace) -> dict:
    """defaults <- config file <- flags, deep for the nested tables."""
    settings = json.loads(json.dumps(_DEFAULTS))  # deep copy
    if args.config:
        data = _load_config_file(args.config)
        for key, value in data.items():
            if key in ("distribution", "schedule"):
                for sub, subval in value.items():
                    settings[key][sub] = subval
            else:
                settings[key] = value

    if args.grid is not None:
        settings["grid"] = args.grid
    if args.d_model is not None:
        settings["d_model"] = args.d_model
    for key in ("seed", "steps", "heads", "threads"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if args.fmt is not None:
        settings["format"] = args.fmt
    if args.dist is not None:
        settings["distribution"]["kind"] = args.dist
    for key in ("sigma", "lo", "hi"):
        value = getattr(args, key)
        if value is not None:
            settings["distribution"][key] = value
    if args.passthrough is not None:
        settings["passthrough"] = args.passthrough
    for key in ("alpha1", "alpha2"):
        value = getattr(args, key)
        if value is not None:
            settings["schedule"][key] = value
    for regime in _REGIMES:
        tile = getattr(args, f"{regime}_tile")
        window = getattr(args, f"{regime}_window")
        if tile is not None:
            settings["schedule"][regime]["tile"] = list(tile)
        if window is not None:
            settings["schedule"][regime]["window"] = list(window)
    return settings


def _build_config(settings: dict) -> ExperimentConfig:
    grid_value = settings["grid"]
    if isinstance(grid_value, dict):
        grid = GridShape(grid_value["t"], grid_value["h"], grid_value["w"], settings["d_model"])
    else:
        t, h, w = grid_value
        grid = GridShape(t, h, w, settings["d_model"])

    sched = settings["schedule"]
    regimes = {
        regime: RegimeParams(
            TileScheme(*sched[regime]["tile"]), WindowSpec(*sched[regime]["window"])
        )
        for regime in _REGIMES
    }
    schedule = ScheduleConfig(
        alpha1=sched["alpha1"],
        alpha2=sched["alpha2"],
        early=regimes["early"],
        mid=regimes["mid"],
        late=regimes["late"],
        total_steps=settings["steps"],
    )
    dist = settings["distribution"]
    distribution = InputDistribution(
        kind=dist["kind"], sigma=dist["sigma"], lo=dist["lo"], hi=dist["hi"]
    )
    return ExperimentConfig(
        grid=grid,
        schedule=schedule,
        seed=settings["seed"],
        heads=settings["heads"],
        fmt_name=settings["format"],
        distribution=distribution,
        passthrough=settings["passthrough"],
        threads=settings["threads"],
    )


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(_merged_settings(args))
    problems = validate_config(config)
    if problems:
        for problem in problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    _emit(rows_to_csv(run_experiment(config)), args.output)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(_merged_settings(args))
    problems = validate_config(config)
    if problems:
        for problem in problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    errors: list[str] = []
    rows = sweep(config, args.axis, args.values, errors=errors)
    for err in errors:
        print(f"sweep error: {err}", file=sys.stderr)
    _emit(rows_to_csv(rows), args.output)
    return 0


def _cmd_mask_dump(args: argparse.Namespace) -> int:
    try:
        grid = GridShape(*args.grid, d_model=1)
        tmap = build_tile_map(grid, TileScheme(*args.tile))
        mask = build_block_mask(WindowSpec(*args.window), tmap.tile_grid_dims)
    except (ValueError, IndexError) as exc:
        print(f"mask-dump error: {exc}", file=sys.stderr)
        return 2
    _emit(format_mask_dump(mask), args.output)
    return 0


def _cmd_quantize_check(args: argparse.Namespace) -> int:
    fmt = fp8.FORMATS[args.fmt]
    table = fp8.code_table(fmt)
    lines = [f"# {fmt.name}: 1 sign + {fmt.exponent_bits} exponent + {fmt.mantissa_bits} mantissa bits"]
    lines.append("code,bits,value")
    for code in range(256):
        value = float(table[code])
        bits = format(code, "08b")
        field = f"{bits[0]} {bits[1:1 + fmt.exponent_bits]} {bits[1 + fmt.exponent_bits:]}"
        lines.append(f"{code},{field},{value!r}")
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fp8sta",
        description="Tile-wise FP8 quantization joined with sliding-tile sparse attention: experiments on synthetic 3D token grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help=f"run the step schedule; CSV columns: {CSV_HEADER}")
    _add_experiment_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="one CSV row per tile size or window size")
    _add_experiment_flags(p_sweep)
    p_sweep.add_argument("--axis", choices=("tile", "window"), required=True)
    p_sweep.add_argument(
        "--values",
        type=_values_list,
        required=True,
        help="semicolon-separated triples, e.g. '3,3,1;6,6,1;6,6,6'",
    )
    p_sweep.set_defaults(func=_cmd_sweep)

    p_mask = sub.add_parser("mask-dump", help="text dump of a sliding-tile block mask")
    p_mask.add_argument("--grid", type=_triple, required=True, help="token grid t,h,w")
    p_mask.add_argument("--tile", type=_triple, required=True)
    p_mask.add_argument("--window", type=_triple, required=True)
    p_mask.add_argument("--output")
    p_mask.set_defaults(func=_cmd_mask_dump)

    p_quant = sub.add_parser("quantize-check", help="print the 256-entry code table")
    p_quant.add_argument("--format", choices=sorted(fp8.FORMATS), dest="fmt", default="e4m3")
    p_quant.add_argument("--output")
    p_quant.set_defaults(func=_cmd_quantize_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
