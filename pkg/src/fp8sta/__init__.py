"""Tile-wise FP8 quantization joined with sliding-tile sparse attention.

A desk-scale, bit-exact emulation of the quantized sparse attention pipeline
for 3D (video) token grids: 8-bit float formats in software, per-tile /
per-channel / per-tensor scale policies, sliding-tile block masks, a
full-precision oracle pair, a step-aware parameter schedule, error metrics,
and a CSV experiment runner.
"""

from .attention import (
    AttentionInputs,
    ForwardConfig,
    attention_probabilities,
    dense_reference,
    fp8_sparse_forward,
    sparse_reference,
)
from .fp8 import E4M3, E5M2, FORMATS, Fp8Format, compute_scale, decode, encode, quantize_dequantize
from .grid import (
    GridShape,
    TileMap,
    TileScheme,
    build_tile_map,
    invert_permutation,
    tile_contiguous_order,
    tile_of_token,
)
from .metrics import StepMetrics, cosine_similarity, flops_dense, flops_sparse, mse, snr_db
from .quantize import (
    Granularity,
    QuantizedTensor,
    dequantize_tensor,
    quantize_generic,
    quantize_p_tensorwise,
    quantize_qk_tilewise,
    quantize_v_channelwise,
)
from .schedule import RegimeParams, ScheduleConfig, default_schedule, params_at, validate
from .sparsity import (
    BlockMask,
    WindowSpec,
    build_block_mask,
    density,
    expand_token_mask,
    format_mask_dump,
    full_block_mask,
    neighborhood,
)

__version__ = "0.1.0"
