"""The full pipeline against its oracles on a small 3D grid.

Run: python demos/04_attention_pipeline.py
"""

import numpy as np

from fp8sta import (
    AttentionInputs,
    ForwardConfig,
    GridShape,
    TileScheme,
    WindowSpec,
    build_block_mask,
    build_tile_map,
    cosine_similarity,
    dense_reference,
    fp8_sparse_forward,
    mse,
    snr_db,
    sparse_reference,
)

rng = np.random.default_rng(42)
tmap = build_tile_map(GridShape(4, 8, 8, 32), TileScheme(2, 4, 4))
L, d = tmap.grid.tokens, tmap.grid.d_model
q, k, v = (rng.standard_normal((L, d), dtype=np.float32) for _ in range(3))
inputs = AttentionInputs(q, k, v, tmap)
window = WindowSpec(3, 3, 1)
mask = build_block_mask(window, tmap.tile_grid_dims)

dense = dense_reference(inputs)
sparse = sparse_reference(inputs, mask)
quantized = fp8_sparse_forward(inputs, ForwardConfig(window=window))
passthrough = fp8_sparse_forward(inputs, ForwardConfig(window=window, passthrough=True))

print(f"{L} tokens, d={d}, tile grid {tmap.tile_grid_dims}, window {window.dims}")

# Sparsity changes the answer (locality approximation), quantization adds noise
print("\nsparse vs dense (the locality approximation itself):")
print(f"  cosine {cosine_similarity(dense, sparse):.5f}   mse {mse(dense, sparse):.3e}")

print("quantized-sparse vs sparse oracle (pure quantization error):")
print(f"  cosine {cosine_similarity(sparse, quantized):.5f}   mse {mse(sparse, quantized):.3e}"
      f"   snr {snr_db(sparse, quantized):.2f} dB")

# Passthrough disables quantization and reproduces the oracle bit for bit
print("\npassthrough output identical to sparse oracle:",
      np.array_equal(passthrough, sparse))

# The full window makes the sparse oracle collapse onto the dense one
from fp8sta import full_block_mask

full = full_block_mask(tmap.tile_grid_dims)
print("full-window sparse identical to dense:",
      np.array_equal(sparse_reference(inputs, full), dense))
