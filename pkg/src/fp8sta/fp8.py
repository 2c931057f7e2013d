"""Bit-exact software emulation of 8-bit floating-point formats.

A code is one byte: 1 sign bit, then ``exponent_bits`` exponent bits, then
``mantissa_bits`` mantissa bits.  Decoding follows IEEE-style semantics with
the format's bias, including subnormals.  Encoding rounds to nearest with ties
to even, the default conversion mode of FP8 hardware, and saturates finite
magnitudes beyond the largest finite value instead of overflowing.

Two formats are provided:

* ``E4M3``: bias 7, max finite 448; the two all-ones codes are NaN and there
  are no infinities.
* ``E5M2``: bias 15, max finite 57344; all-ones exponent encodes infinities
  (mantissa 0) and NaNs (mantissa nonzero).

Scaling convention: a block is encoded as ``encode(x / scale)`` and decoded as
``decode(code) * scale``, with ``scale = max|x| / max_value`` so the block
maximum always lands exactly on the format's largest finite value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Fp8Format:
    """Static parameters of one 8-bit float format."""

    name: str
    exponent_bits: int
    mantissa_bits: int
    exponent_bias: int
    max_value: float
    min_normal: float
    has_inf: bool


E4M3 = Fp8Format(
    name="e4m3",
    exponent_bits=4,
    mantissa_bits=3,
    exponent_bias=7,
    max_value=448.0,
    min_normal=2.0**-6,
    has_inf=False,
)

E5M2 = Fp8Format(
    name="e5m2",
    exponent_bits=5,
    mantissa_bits=2,
    exponent_bias=15,
    max_value=57344.0,
    min_normal=2.0**-14,
    has_inf=True,
)

FORMATS = {"e4m3": E4M3, "e5m2": E5M2}


class _Tables:
    """Precomputed decode values and encode decision boundaries for a format."""

    def __init__(self, fmt: Fp8Format):
        mbits = fmt.mantissa_bits
        emask = (1 << fmt.exponent_bits) - 1
        mmask = (1 << mbits) - 1

        # value of every non-negative code 0 .. 127 (float64 is exact for FP8)
        vals = np.empty(128, dtype=np.float64)
        for code in range(128):
            e = (code >> mbits) & emask
            m = code & mmask
            if e == emask and fmt.has_inf:
                vals[code] = np.inf if m == 0 else np.nan
            elif e == emask and m == mmask:
                vals[code] = np.nan  # E4M3 reserves only the all-ones code
            elif e == 0:
                vals[code] = m * 2.0 ** (1 - fmt.exponent_bias - mbits)
            else:
                vals[code] = ((1 << mbits) + m) * 2.0 ** (e - fmt.exponent_bias - mbits)

        finite = np.isfinite(vals)
        self.max_code = int(np.max(np.nonzero(finite)[0]))
        self.inf_code = self.max_code + 1 if fmt.has_inf else None
        pos = vals[: self.max_code + 1]  # strictly increasing finite values

        # Decision boundaries for a single searchsorted(side="right") pass:
        # the boundary between codes c and c+1 is their midpoint; a value equal
        # to the midpoint must round to the even code, so when c is even the
        # boundary is nudged one ulp upward to leave the tie below it.  The
        # nudge must be applied per dtype: one float64 ulp vanishes when cast
        # to float32.
        mids = (pos[:-1] + pos[1:]) / 2.0  # exact: FP8 values have few bits
        even = np.arange(mids.size) % 2 == 0
        bounds64 = mids.copy()
        bounds64[even] = np.nextafter(mids[even], np.inf)
        self.bounds64 = bounds64
        bounds32 = mids.astype(np.float32)  # exact for the same reason
        bounds32[even] = np.nextafter(bounds32[even], np.float32(np.inf))
        self.bounds32 = bounds32

        # Biased-exponent-indexed magic constants for the fast float32 grid
        # rounding path (round_to_grid): adding then subtracting 1.5 * 2^(23+s)
        # performs exact round-to-nearest-even onto multiples of 2^s.  The step
        # is capped so the magic stays finite; affected inputs are far beyond
        # max_value and saturate regardless of their rounding grid.
        step_floor = 1 - fmt.exponent_bias - mbits
        magic = np.empty(256, dtype=np.float32)
        for be in range(256):
            step = min(max((be - 127) - mbits, step_floor), 100)
            magic[be] = np.float32(1.5 * 2.0 ** (23 + step))
        self.magic32 = magic

        # full 256-entry tables: high bit is the sign
        table32 = vals.astype(np.float32)
        self.full64 = np.concatenate([vals, -vals])
        self.full32 = np.concatenate([table32, -table32])


_TABLES: dict[str, _Tables] = {}


def _tables(fmt: Fp8Format) -> _Tables:
    tab = _TABLES.get(fmt.name)
    if tab is None:
        tab = _Tables(fmt)
        _TABLES[fmt.name] = tab
    return tab


def compute_scale(values, fmt: Fp8Format) -> float:
    """Block scale max|values| / max_value; 1.0 for an all-zero block.

    Raises on empty or non-finite input: scales must always be positive and
    finite so that encoding by division is defined.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot compute a scale for an empty block")
    if not np.isfinite(arr).all():
        raise ValueError("non-finite value in scale block")
    peak = float(np.max(np.abs(arr)))
    if peak == 0.0:
        return 1.0
    # the quotient underflows for denormal-scale blocks; a scale must stay > 0
    return max(peak / fmt.max_value, np.finfo(np.float64).tiny)


def encode(x, fmt: Fp8Format):
    """Round finite reals to nearest (ties to even) onto the format's codes.

    Magnitudes above ``max_value`` saturate to the largest finite code; signed
    zero is preserved.  Infinities are accepted only for formats that have
    infinity codes (E5M2).  NaN input raises: this library never produces NaN
    codes.

    Scalars return ``int``; arrays return ``np.uint8`` of the same shape.
    """
    arr = np.asarray(x)
    scalar = arr.ndim == 0
    if arr.dtype != np.float32:
        arr = arr.astype(np.float64)
    arr = np.atleast_1d(arr)
    if np.isnan(arr).any():
        raise ValueError("cannot encode NaN")

    tab = _tables(fmt)
    sign = np.signbit(arr)
    mag = np.abs(arr)

    isinf = np.isinf(mag)
    if isinf.any():
        if not fmt.has_inf:
            raise ValueError(f"cannot encode infinity in {fmt.name}")
        mag = np.where(isinf, mag.dtype.type(0), mag)

    bounds = tab.bounds32 if arr.dtype == np.float32 else tab.bounds64
    codes = np.searchsorted(bounds, mag, side="right").astype(np.uint8)
    if isinf.any():
        codes[isinf] = tab.inf_code
    codes |= np.left_shift(sign.astype(np.uint8), 7)
    if scalar:
        return int(codes[0])
    return codes


def decode(code, fmt: Fp8Format):
    """Exact real value of codes; raises on NaN bit patterns.

    Scalars return ``float``; arrays return ``np.float32`` of the same shape
    (every FP8 value is exactly representable in float32).
    """
    scalar = np.isscalar(code) or (isinstance(code, np.ndarray) and code.ndim == 0)
    codes = np.asarray(code, dtype=np.uint8)
    tab = _tables(fmt)
    out = tab.full32[codes]
    if np.isnan(out).any():
        raise ValueError(f"NaN code pattern for {fmt.name}")
    if scalar:
        return float(out)
    return out


def is_nan_code(code, fmt: Fp8Format):
    """True where a byte is one of the format's NaN patterns."""
    codes = np.asarray(code, dtype=np.uint8)
    return np.isnan(_tables(fmt).full64[codes])


def code_table(fmt: Fp8Format) -> np.ndarray:
    """All 256 decoded values in code order; NaN patterns appear as nan."""
    return _tables(fmt).full64.copy()


def quantize_dequantize(x, scale, fmt: Fp8Format):
    """Full round trip decode(encode(x / scale)) * scale in float64.

    The division, grid rounding and multiplication all happen in float64 so
    the documented error bounds hold without extra intermediate rounding.
    """
    if not np.all(np.asarray(scale) > 0):
        raise ValueError("scale must be strictly positive")
    arr = np.asarray(x, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("quantize_dequantize requires finite input")
    codes = encode(arr / scale, fmt)
    out = _tables(fmt).full64[np.asarray(codes, dtype=np.uint8)] * scale
    if np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0):
        return float(out)
    return out


def round_to_grid(values: np.ndarray, fmt: Fp8Format) -> np.ndarray:
    """Fast in-place-style RNE of non-negative float32 values onto the grid.

    Bitwise-identical to ``decode(encode(values, fmt), fmt)`` for finite
    non-negative inputs, but a handful of vectorized passes instead of a
    binary search, which matters on the softmax-weight tensors of the
    attention pipeline.  Saturates above ``max_value``.
    """
    if values.dtype != np.float32:
        raise TypeError("round_to_grid expects float32")
    tab = _tables(fmt)
    bits = values.view(np.uint32)
    magic = tab.magic32[(bits >> np.uint32(23)).astype(np.uint8)]
    out = values + magic
    out -= magic
    np.minimum(out, np.float32(fmt.max_value), out=out)
    return out
