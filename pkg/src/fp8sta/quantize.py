"""Tensor-level FP8 quantization policies.

The attention pipeline uses three of these: per-3D-tile scales for queries and
keys (one scalar per tile, computed over all channels of the tile's rows),
per-channel scales for values, and a single fixed 1/448 scale for the softmax
weight matrix.  Per-token, per-group and per-tensor modes exist as comparison
granularities.

All quantize functions expect row order to be tile-contiguous where tiles are
involved (apply ``grid.tile_contiguous_order`` first).  Scale division happens
in float64 so the reconstruction error of every element is governed purely by
the 8-bit grid, never by an extra intermediate rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fp8
from .fp8 import Fp8Format
from .grid import TileMap

GRANULARITY_KINDS = ("per_tile_3d", "per_channel", "per_tensor", "per_token", "per_group")

P_FIXED_SCALE = 1.0 / 448.0  # softmax weights: 1.0 maps exactly onto the E4M3 max


@dataclass(frozen=True)
class Granularity:
    """Which elements share one scale factor."""

    kind: str
    group_size: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in GRANULARITY_KINDS:
            raise ValueError(f"unknown granularity {self.kind!r}; expected one of {GRANULARITY_KINDS}")
        if self.kind == "per_group":
            if self.group_size is None or self.group_size < 1:
                raise ValueError("per_group requires group_size >= 1")
        elif self.group_size is not None:
            raise ValueError(f"group_size only applies to per_group, not {self.kind}")


@dataclass(frozen=True)
class QuantizedTensor:
    """FP8 codes plus the scale metadata needed to reconstruct them.

    ``scales[i]`` is the scale of block id ``i``; ``block_ids()`` maps every
    element to its block.  ``block_rows`` is the tile row count and is only set
    for per-tile tensors.
    """

    codes: np.ndarray  # uint8, same shape as the source matrix
    scales: np.ndarray  # float64, one entry per scale block
    granularity: Granularity
    fmt: Fp8Format
    block_rows: int | None = None

    def block_ids(self) -> np.ndarray:
        """Block id of every element, same shape as ``codes``."""
        n_rows, n_cols = self.codes.shape
        kind = self.granularity.kind
        if kind == "per_tensor":
            return np.zeros((n_rows, n_cols), dtype=np.int64)
        if kind == "per_token":
            return np.broadcast_to(np.arange(n_rows, dtype=np.int64)[:, None], (n_rows, n_cols)).copy()
        if kind == "per_channel":
            return np.broadcast_to(np.arange(n_cols, dtype=np.int64)[None, :], (n_rows, n_cols)).copy()
        if kind == "per_tile_3d":
            tiles = np.arange(n_rows, dtype=np.int64) // self.block_rows
            return np.broadcast_to(tiles[:, None], (n_rows, n_cols)).copy()
        gs = self.granularity.group_size
        groups_per_row = n_cols // gs
        row = np.arange(n_rows, dtype=np.int64)[:, None]
        col = np.arange(n_cols, dtype=np.int64)[None, :]
        return row * groups_per_row + col // gs

    def element_scales(self) -> np.ndarray:
        """Per-element scales, broadcastable against ``codes``."""
        kind = self.granularity.kind
        if kind == "per_tensor":
            return self.scales.reshape(1, 1)
        if kind == "per_token":
            return self.scales[:, None]
        if kind == "per_channel":
            return self.scales[None, :]
        if kind == "per_tile_3d":
            return np.repeat(self.scales, self.block_rows)[:, None]
        gs = self.granularity.group_size
        n_rows, n_cols = self.codes.shape
        return np.repeat(self.scales.reshape(n_rows, n_cols // gs), gs, axis=1)

    def dequantize(self) -> np.ndarray:
        """Reconstructed float64 matrix decode(code) * scale."""
        table = fp8.code_table(self.fmt)
        return table[self.codes] * self.element_scales()


def _scales_over(blocks: np.ndarray, fmt: Fp8Format) -> np.ndarray:
    """max|block| / max_value per row of a 2D view; all-zero blocks get 1."""
    peak = np.max(np.abs(blocks), axis=1)
    if not np.isfinite(peak).all():
        raise ValueError("non-finite value in quantization input")
    scales = np.maximum(peak / fmt.max_value, np.finfo(np.float64).tiny)
    return np.where(peak == 0.0, 1.0, scales)


def quantize_qk_tilewise(matrix: np.ndarray, tmap: TileMap, fmt: Fp8Format) -> QuantizedTensor:
    """One scale per 3D tile, over all channels of the tile's token rows.

    Rows must already be tile-contiguous.  Queries and keys get separate calls
    and therefore separate scales.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    L = tmap.grid.tokens
    if mat.ndim != 2 or mat.shape[0] != L:
        raise ValueError(f"expected an L x d matrix with L={L}, got shape {mat.shape}")
    tv = tmap.tile_volume
    scales = _scales_over(mat.reshape(tmap.tiles_total, tv * mat.shape[1]), fmt)
    codes = fp8.encode(mat / np.repeat(scales, tv)[:, None], fmt)
    return QuantizedTensor(codes, scales, Granularity("per_tile_3d"), fmt, block_rows=tv)


def quantize_v_channelwise(matrix: np.ndarray, fmt: Fp8Format) -> QuantizedTensor:
    """One scale per channel (column max over all rows)."""
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D matrix, got shape {mat.shape}")
    scales = _scales_over(mat.T, fmt)
    codes = fp8.encode(mat / scales[None, :], fmt)
    return QuantizedTensor(codes, scales, Granularity("per_channel"), fmt)


def quantize_p_tensorwise(p: np.ndarray, fmt: Fp8Format) -> QuantizedTensor:
    """Softmax weights against the fixed 1/448 scale (not data dependent).

    Restricted to E4M3: the fixed scale is chosen so that a weight of exactly
    1.0 encodes to the E4M3 maximum of 448.  Entries must lie in [0, 1] up to
    1e-6 of softmax rounding slack.
    """
    if fmt.name != "e4m3":
        raise ValueError("the fixed 1/448 weight scale assumes E4M3")
    mat = np.asarray(p, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2D weight matrix, got shape {mat.shape}")
    if mat.size and (mat.min() < -1e-6 or mat.max() > 1.0 + 1e-6):
        raise ValueError("softmax weights must lie in [0, 1]")
    codes = fp8.encode(mat / P_FIXED_SCALE, fmt)
    return QuantizedTensor(codes, np.array([P_FIXED_SCALE]), Granularity("per_tensor"), fmt)


def quantize_generic(matrix: np.ndarray, granularity: Granularity, fmt: Fp8Format) -> QuantizedTensor:
    """Comparison granularities: per_token, per_channel, per_group, per_tensor."""
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D matrix, got shape {mat.shape}")
    n_rows, n_cols = mat.shape
    kind = granularity.kind

    if kind == "per_tile_3d":
        raise ValueError("per_tile_3d needs a TileMap; use quantize_qk_tilewise")
    if kind == "per_tensor":
        scales = _scales_over(mat.reshape(1, -1), fmt)
        codes = fp8.encode(mat / scales[0], fmt)
    elif kind == "per_token":
        scales = _scales_over(mat, fmt)
        codes = fp8.encode(mat / scales[:, None], fmt)
    elif kind == "per_channel":
        scales = _scales_over(mat.T, fmt)
        codes = fp8.encode(mat / scales[None, :], fmt)
    else:  # per_group
        gs = granularity.group_size
        if n_cols % gs != 0:
            raise ValueError(f"group_size {gs} does not divide d={n_cols}")
        scales = _scales_over(mat.reshape(n_rows * (n_cols // gs), gs), fmt)
        codes = fp8.encode(mat / np.repeat(scales, gs).reshape(n_rows, n_cols), fmt)
    return QuantizedTensor(codes, scales, granularity, fmt)


def dequantize_tensor(q: QuantizedTensor) -> np.ndarray:
    """Elementwise decode(code) * scale(block)."""
    return q.dequantize()
