"""Forward attention: dense oracle, sparse oracle, and the quantized pipeline.

All three paths run through one block-iterating engine so that the oracle
collapse relations hold bitwise by construction: the quantized pipeline with
``passthrough=True`` executes the exact instruction sequence of
:func:`sparse_reference`, and :func:`dense_reference` is the sparse path under
a full mask.  The engine walks query tiles in flat order, gathers the rows of
the admissible key tiles (ascending tile id, ascending token within each
tile), computes logits in float32 via one GEMM per query-row chunk, applies
per-block scale factors as row vectors, and normalizes with a two-pass softmax
whose denominator is accumulated in float64 (the one deliberate exception to
float32 arithmetic; it keeps row sums within 1e-6 of 1 for any row length).

The quantized path follows the low-precision matmul model: GEMMs multiply the
decoded 8-bit code values and the quantization scales are applied to the
result per block, with float32 accumulation throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fp8
from .fp8 import E4M3, Fp8Format
from .grid import TileMap
from .quantize import P_FIXED_SCALE, quantize_qk_tilewise, quantize_v_channelwise
from .sparsity import BlockMask, WindowSpec, build_block_mask, full_block_mask

_ROW_SUM_TOL = 1e-6
_QUERY_CHUNK = 1024  # rows per softmax slab; bounds memory, never changes results


@dataclass(frozen=True)
class AttentionInputs:
    """Single-head q, k, v in tile-contiguous row order plus their tile map."""

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    tile_map: TileMap

    def __post_init__(self) -> None:
        L = self.tile_map.grid.tokens
        d = self.tile_map.grid.d_model
        arrays = {}
        for name in ("q", "k", "v"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float32)
            if arr.shape != (L, d):
                raise ValueError(f"{name} must have shape ({L}, {d}), got {arr.shape}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite values")
            arrays[name] = arr
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def d_model(self) -> int:
        return self.tile_map.grid.d_model


@dataclass(frozen=True)
class ForwardConfig:
    """Knobs of the quantized sparse forward pass.

    ``softmax_scale`` defaults to 1/sqrt(d) at call time.  ``passthrough``
    skips every quantization step so the pipeline can be validated bitwise
    against the full-precision sparse oracle.
    """

    window: WindowSpec
    fmt: Fp8Format = E4M3
    softmax_scale: float | None = None
    passthrough: bool = False

    def __post_init__(self) -> None:
        if self.softmax_scale is not None and not self.softmax_scale > 0:
            raise ValueError("softmax_scale must be > 0")


def _resolve_scale(scale: float | None, d: int) -> np.float32:
    if scale is None:
        return np.float32(1.0 / math.sqrt(d))
    if not scale > 0:
        raise ValueError("softmax_scale must be > 0")
    return np.float32(scale)


def _engine(
    qv: np.ndarray,
    kv: np.ndarray,
    vv: np.ndarray,
    tmap: TileMap,
    mask: BlockMask,
    q_fac: np.ndarray,
    k_fac: np.ndarray,
    v_fac: np.ndarray,
    softmax_scale: np.float32,
    p_fmt: Fp8Format | None,
) -> np.ndarray:
    """Shared masked-attention core.

    ``qv``/``kv``/``vv`` are float32 value matrices (raw values or decoded
    codes); ``q_fac``/``k_fac`` are per-tile logit factors and ``v_fac`` the
    per-channel output factors (all ones on the oracle path).  ``p_fmt``
    enables rounding of the softmax weights onto that format's grid after
    scaling by 448.
    """
    if mask.tile_grid_dims != tmap.tile_grid_dims:
        raise ValueError("mask and tile map disagree on tile grid dims")
    L, d = qv.shape
    tv = tmap.tile_volume
    local = np.arange(tv, dtype=np.int64)
    out = np.empty((L, d), dtype=np.float32)

    for u in range(tmap.tiles_total):
        allowed = mask.allowed(u)
        assert allowed.size > 0, "every query tile admits itself"
        key_rows = (allowed[:, None] * tv + local).ravel()
        k_blk = kv[key_rows]
        v_blk = vv[key_rows]
        fac_row = np.repeat(k_fac[allowed], tv) * (q_fac[u] * softmax_scale)

        start = u * tv
        for r0 in range(start, start + tv, _QUERY_CHUNK):
            r1 = min(r0 + _QUERY_CHUNK, start + tv)
            logits = qv[r0:r1] @ k_blk.T
            logits *= fac_row[None, :]
            if not np.isfinite(logits).all():
                raise FloatingPointError("non-finite attention logits")
            peak = logits.max(axis=1, keepdims=True)
            np.subtract(logits, peak, out=logits)
            np.exp(logits, out=logits)
            denom = logits.sum(axis=1, dtype=np.float64, keepdims=True)
            np.divide(logits, denom.astype(np.float32), out=logits)

            row_err = np.abs(logits.sum(axis=1, dtype=np.float64) - 1.0).max()
            if row_err > _ROW_SUM_TOL:
                raise FloatingPointError(f"softmax rows deviate from 1 by {row_err:.3e}")

            if p_fmt is not None:
                logits *= np.float32(448.0)  # weights onto code units: w / P_FIXED_SCALE
                logits = fp8.round_to_grid(logits, p_fmt)
            block = logits @ v_blk
            block *= v_fac[None, :]
            out[r0:r1] = block
    return out


def _oracle_factors(tmap: TileMap, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ones_tiles = np.ones(tmap.tiles_total, dtype=np.float32)
    return ones_tiles, ones_tiles, np.ones(d, dtype=np.float32)


def dense_reference(inputs: AttentionInputs, softmax_scale: float | None = None) -> np.ndarray:
    """Full-precision attention over all keys, float32 with stable softmax."""
    scale = _resolve_scale(softmax_scale, inputs.d_model)
    mask = full_block_mask(inputs.tile_map.tile_grid_dims)
    qf, kf, vf = _oracle_factors(inputs.tile_map, inputs.d_model)
    return _engine(inputs.q, inputs.k, inputs.v, inputs.tile_map, mask, qf, kf, vf, scale, None)


def sparse_reference(
    inputs: AttentionInputs, mask: BlockMask, softmax_scale: float | None = None
) -> np.ndarray:
    """Full-precision attention restricted to the mask's admissible key tiles.

    Each query row renormalizes over its allowed keys only; excluded pairs are
    simply never computed, which is the safe realization of masking their
    logits out.
    """
    scale = _resolve_scale(softmax_scale, inputs.d_model)
    qf, kf, vf = _oracle_factors(inputs.tile_map, inputs.d_model)
    return _engine(inputs.q, inputs.k, inputs.v, inputs.tile_map, mask, qf, kf, vf, scale, None)


def fp8_sparse_forward(inputs: AttentionInputs, config: ForwardConfig) -> np.ndarray:
    """Joint tile-wise FP8 quantization with sliding-tile sparse attention.

    Steps: quantize q and k per tile and v per channel; compute logits over
    admissible tile pairs from the decoded codes with the tile scale product
    applied per block; softmax in float32; round the weights onto the E4M3
    grid at the fixed 1/448 scale; accumulate the output GEMM and apply the
    per-channel value scales; return float32.
    """
    tmap = inputs.tile_map
    scale = _resolve_scale(config.softmax_scale, inputs.d_model)
    mask = build_block_mask(config.window, tmap.tile_grid_dims)

    if config.passthrough:
        qf, kf, vf = _oracle_factors(tmap, inputs.d_model)
        return _engine(inputs.q, inputs.k, inputs.v, tmap, mask, qf, kf, vf, scale, None)

    qq = quantize_qk_tilewise(inputs.q, tmap, config.fmt)
    qk = quantize_qk_tilewise(inputs.k, tmap, config.fmt)
    qv = quantize_v_channelwise(inputs.v, config.fmt)

    q_codes = fp8.decode(qq.codes, config.fmt)
    k_codes = fp8.decode(qk.codes, config.fmt)
    v_codes = fp8.decode(qv.codes, config.fmt)
    q_fac = qq.scales.astype(np.float32)
    k_fac = qk.scales.astype(np.float32)
    # weights stay in 448-scaled code units through the output GEMM, so the
    # fixed weight scale folds into the per-channel value factors
    v_fac = (qv.scales * P_FIXED_SCALE).astype(np.float32)
    return _engine(q_codes, k_codes, v_codes, tmap, mask, q_fac, k_fac, v_fac, scale, E4M3)


def attention_probabilities(
    inputs: AttentionInputs, mask: BlockMask, softmax_scale: float | None = None
) -> np.ndarray:
    """Dense L x L row-stochastic weight matrix of the sparse oracle.

    Masked positions are zero.  Small-scale diagnostic for tests and demos;
    materializes the full matrix, so keep L modest.
    """
    tmap = inputs.tile_map
    scale = _resolve_scale(softmax_scale, inputs.d_model)
    L = tmap.grid.tokens
    tv = tmap.tile_volume
    local = np.arange(tv, dtype=np.int64)
    probs = np.zeros((L, L), dtype=np.float32)
    for u in range(tmap.tiles_total):
        key_rows = (mask.allowed(u)[:, None] * tv + local).ravel()
        rows = slice(u * tv, (u + 1) * tv)
        logits = (inputs.q[rows] @ inputs.k[key_rows].T) * scale
        peak = logits.max(axis=1, keepdims=True)
        p = np.exp(logits - peak)
        denom = p.sum(axis=1, dtype=np.float64, keepdims=True)
        probs[rows, key_rows] = p / denom.astype(np.float32)
    return probs
