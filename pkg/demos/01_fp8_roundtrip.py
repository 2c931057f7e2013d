"""A tour of the emulated 8-bit float formats.

Run: python demos/01_fp8_roundtrip.py
"""

import numpy as np

from fp8sta import E4M3, E5M2, compute_scale, decode, encode, quantize_dequantize
from fp8sta.fp8 import code_table

# %% The two formats
for fmt in (E4M3, E5M2):
    print(
        f"{fmt.name}: {fmt.exponent_bits} exponent bits, {fmt.mantissa_bits} mantissa bits, "
        f"bias {fmt.exponent_bias}, max {fmt.max_value}, min normal {fmt.min_normal}"
    )

# %% Every positive E4M3 value below 1.0
table = code_table(E4M3)
small = sorted(v for v in table if np.isfinite(v) and 0 < v < 1.0)
print(f"\n{len(small)} positive E4M3 values below 1.0; the first ten:")
print([float(v) for v in small[:10]])

# %% Round trip: grid points survive exactly, everything else rounds to nearest-even
for x in (2.5, 1.0625, 500.0, 0.001):
    code = encode(x, E4M3)
    print(f"encode({x}) -> code {code:3d} -> decode {decode(code, E4M3)}")

# %% Block scaling: the block max always lands on the format max
block = np.array([-3.0, 1.0, 2.0])
scale = compute_scale(block, E4M3)
print(f"\nblock {block.tolist()}, scale = max|x|/448 = {scale}")
for x in block:
    print(f"  {x:5.2f} -> {quantize_dequantize(x, scale, E4M3):.6f}")

# %% Relative error staircase: error is bounded by 2^-(mantissa_bits+1) of |x|
xs = np.linspace(0.01, 448.0, 20000)
scale = compute_scale(xs, E4M3)
recon = quantize_dequantize(xs, scale, E4M3)
rel = np.abs(recon - xs) / xs
print(f"\nworst relative error over [0.01, 448]: {rel.max():.5f} (bound {2.0 ** -4})")
