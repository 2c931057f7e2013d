"""Error metrics between approximate and reference outputs, plus FLOPs accounting.

SNR is reference-anchored: 10 log10 of reference energy over error energy,
with +inf as the sentinel for an exactly zero error.  The FLOPs model counts
only the two attention GEMMs (4 L^2 d dense, 2 FLOPs per multiply-accumulate);
softmax cost is excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StepMetrics:
    """One measurement row of the experiment loop."""

    step: int
    regime: str
    tile: tuple[int, int, int]
    window: tuple[int, int, int]
    density: float
    flops_dense: int
    flops_sparse: int
    cosine_sim: float
    mse: float
    snr_db: float


def _flat_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    return x, y


def cosine_similarity(a, b) -> float:
    """<a,b> / (||a|| ||b||), clamped to [-1, 1].

    Both vectors are pre-scaled by their own max magnitude (the ratio is
    invariant, and squared tiny entries would otherwise underflow) and the
    result is computed as dot / sqrt(dot_aa * dot_bb) so bitwise-identical
    inputs give exactly 1.0.  Two zero vectors compare as 1.0; one zero vector
    against a nonzero one as 0.0.
    """
    x, y = _flat_pair(a, b)
    mx = np.abs(x).max()
    my = np.abs(y).max()
    if mx == 0.0 and my == 0.0:
        return 1.0
    if mx == 0.0 or my == 0.0:
        return 0.0
    x = x / mx
    y = y / my
    dot_xy = float(np.dot(x, y))
    dot_xx = float(np.dot(x, x))
    dot_yy = float(np.dot(y, y))
    return min(1.0, max(-1.0, dot_xy / math.sqrt(dot_xx * dot_yy)))


def mse(a, b) -> float:
    """Mean squared difference."""
    x, y = _flat_pair(a, b)
    diff = x - y
    return float(np.dot(diff, diff) / diff.size)


def snr_db(reference, approx) -> float:
    """10 log10(||ref||^2 / ||ref - approx||^2); +inf when the error is zero.

    Reference-anchored and therefore not symmetric.  Signal and error are
    scaled by the reference max magnitude before squaring to dodge underflow.
    """
    ref, app = _flat_pair(reference, approx)
    mr = np.abs(ref).max()
    if mr == 0.0:
        raise ValueError("SNR is undefined for an all-zero reference")
    scaled_ref = ref / mr
    scaled_diff = (ref - app) / mr
    signal = float(np.dot(scaled_ref, scaled_ref))
    noise = float(np.dot(scaled_diff, scaled_diff))
    if noise == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / noise)


def flops_dense(L: int, d: int) -> int:
    """4 L^2 d: the two L x L x d attention GEMMs at 2 FLOPs per MAC."""
    if L < 1 or d < 1:
        raise ValueError(f"L and d must be >= 1, got L={L}, d={d}")
    return 4 * L * L * d


def flops_sparse(L: int, d: int, density: float) -> int:
    """Dense FLOPs scaled by the admissible-pair density, rounded to int."""
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    return round(density * flops_dense(L, d))
