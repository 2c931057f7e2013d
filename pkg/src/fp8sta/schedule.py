"""Denoising-step-aware schedule of tile granularity and window size.

A sampling run of D steps is split into three regimes at thresholds
``floor(alpha1 * D)`` and ``floor(alpha2 * D)``; boundary steps belong to the
earlier regime.  Early steps run the coarsest quantization tiles and the
sparsest window, mid steps the finest tiles and the densest window, late steps
sit between on both axes.  Orderings are compared by tile volume and window
volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .grid import TileScheme
from .sparsity import WindowSpec

REGIMES = ("early", "mid", "late")


@dataclass(frozen=True)
class RegimeParams:
    """Tile granularity and sparsity window used within one regime."""

    tile: TileScheme
    window: WindowSpec


@dataclass(frozen=True)
class ScheduleConfig:
    """Piecewise three-regime schedule over D sampling steps."""

    alpha1: float
    alpha2: float
    early: RegimeParams
    mid: RegimeParams
    late: RegimeParams
    total_steps: int

    def regime_of(self, t: int) -> str:
        if not 1 <= t <= self.total_steps:
            raise ValueError(f"step {t} out of range [1, {self.total_steps}]")
        t1 = math.floor(self.alpha1 * self.total_steps)
        t2 = math.floor(self.alpha2 * self.total_steps)
        if t <= t1:
            return "early"
        if t <= t2:
            return "mid"
        return "late"

    def params(self, regime: str) -> RegimeParams:
        return {"early": self.early, "mid": self.mid, "late": self.late}[regime]


# Regime defaults: tile sizes and windows drawn from the tested ablation menus,
# ordered so that the mid regime is finest and densest.
DEFAULT_SCHEDULE_KWARGS = dict(
    alpha1=0.2,
    alpha2=0.7,
    early=RegimeParams(TileScheme(24, 32, 32), WindowSpec(3, 3, 1)),
    mid=RegimeParams(TileScheme(6, 8, 8), WindowSpec(6, 6, 6)),
    late=RegimeParams(TileScheme(12, 16, 16), WindowSpec(6, 6, 1)),
)


def default_schedule(total_steps: int = 50) -> ScheduleConfig:
    return ScheduleConfig(total_steps=total_steps, **DEFAULT_SCHEDULE_KWARGS)


def params_at(t: int, config: ScheduleConfig) -> RegimeParams:
    """Regime parameters in effect at sampling step t (1-based)."""
    return config.params(config.regime_of(t))


def validate(config: ScheduleConfig) -> list[str]:
    """All ordering violations of a schedule; empty list means valid."""
    problems = []
    if not 0 < config.alpha1 < config.alpha2 < 1:
        problems.append(
            f"alpha ordering: need 0 < alpha1 < alpha2 < 1, "
            f"got alpha1={config.alpha1}, alpha2={config.alpha2}"
        )
    if config.total_steps < 1:
        problems.append(f"total_steps must be >= 1, got {config.total_steps}")

    g_early = config.early.tile.volume
    g_mid = config.mid.tile.volume
    g_late = config.late.tile.volume
    if not g_early > g_late > g_mid:
        problems.append(
            "granularity ordering: need tile volumes early > late > mid, "
            f"got early={g_early}, late={g_late}, mid={g_mid}"
        )

    w_early = config.early.window.volume
    w_mid = config.mid.window.volume
    w_late = config.late.window.volume
    if not w_mid > w_late > w_early:
        problems.append(
            "density ordering: need window volumes mid > late > early, "
            f"got mid={w_mid}, late={w_late}, early={w_early}"
        )
    return problems


def regime_counts(config: ScheduleConfig) -> dict[str, int]:
    """Step counts per regime, from the threshold formulas alone."""
    d = config.total_steps
    t1 = math.floor(config.alpha1 * d)
    t2 = math.floor(config.alpha2 * d)
    return {"early": t1, "mid": t2 - t1, "late": d - t2}
