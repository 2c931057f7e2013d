"""3D token grids, tile partitioning, and the tile-contiguous row ordering.

Tokens live on a (t_frames, height, width) grid and are serialized row-major
with the width axis fastest, i.e. token (t, h, w) has flat index
``(t * height + h) * width + w``.  Tiles partition the grid into equal
non-overlapping 3D boxes; all quantization scales and sparsity masks downstream
are defined per tile, so every matrix entering those modules must have its rows
permuted into tile-contiguous order first (see :func:`tile_contiguous_order`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_AXES = ("t", "h", "w")


@dataclass(frozen=True)
class GridShape:
    """Spatiotemporal token layout plus feature width."""

    t_frames: int
    height: int
    width: int
    d_model: int

    def __post_init__(self) -> None:
        for name, value in (
            ("t_frames", self.t_frames),
            ("height", self.height),
            ("width", self.width),
            ("d_model", self.d_model),
        ):
            if value < 1:
                raise ValueError(f"GridShape.{name} must be >= 1, got {value}")

    @property
    def tokens(self) -> int:
        """Total token count t_frames * height * width."""
        return self.t_frames * self.height * self.width

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.t_frames, self.height, self.width)


@dataclass(frozen=True)
class TileScheme:
    """Edge lengths of one 3D tile, in tokens per axis."""

    tile_t: int
    tile_h: int
    tile_w: int

    def __post_init__(self) -> None:
        for name, value in (
            ("tile_t", self.tile_t),
            ("tile_h", self.tile_h),
            ("tile_w", self.tile_w),
        ):
            if value < 1:
                raise ValueError(f"TileScheme.{name} must be >= 1, got {value}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.tile_t, self.tile_h, self.tile_w)

    @property
    def volume(self) -> int:
        return self.tile_t * self.tile_h * self.tile_w


@dataclass(frozen=True)
class TileMap:
    """A grid paired with a scheme that divides it exactly.

    ``tile_grid_dims`` counts tiles per axis, ``tiles_total`` is their product
    and ``tile_volume`` the token count per tile, so
    ``tiles_total * tile_volume == grid.tokens`` always holds.
    """

    grid: GridShape
    scheme: TileScheme
    tile_grid_dims: tuple[int, int, int]
    tiles_total: int
    tile_volume: int


def build_tile_map(grid: GridShape, scheme: TileScheme) -> TileMap:
    """Pair a grid with a tile scheme, rejecting non-divisible shapes."""
    tile_dims = []
    for axis, g, s in zip(_AXES, grid.dims, scheme.dims):
        if g % s != 0:
            raise ValueError(
                f"indivisible grid: axis {axis} has {g} tokens, "
                f"not divisible by tile extent {s}"
            )
        tile_dims.append(g // s)
    dims = (tile_dims[0], tile_dims[1], tile_dims[2])
    total = dims[0] * dims[1] * dims[2]
    return TileMap(
        grid=grid,
        scheme=scheme,
        tile_grid_dims=dims,
        tiles_total=total,
        tile_volume=scheme.volume,
    )


def tile_of_token(tmap: TileMap, token_index: int) -> tuple[int, int, int]:
    """3D tile index of a flat token index."""
    L = tmap.grid.tokens
    if not 0 <= token_index < L:
        raise IndexError(f"token index {token_index} out of range [0, {L})")
    _, H, W = tmap.grid.dims
    t, rem = divmod(token_index, H * W)
    h, w = divmod(rem, W)
    return (t // tmap.scheme.tile_t, h // tmap.scheme.tile_h, w // tmap.scheme.tile_w)


def flat_tile_index(tmap: TileMap, tile: tuple[int, int, int]) -> int:
    """Row-major flat index of a 3D tile index."""
    gt, gh, gw = tmap.tile_grid_dims
    tt, th, tw = tile
    if not (0 <= tt < gt and 0 <= th < gh and 0 <= tw < gw):
        raise IndexError(f"tile {tile} out of range for grid dims {tmap.tile_grid_dims}")
    return (tt * gh + th) * gw + tw


def tile_contiguous_order(tmap: TileMap) -> np.ndarray:
    """Gather permutation that groups token rows tile by tile.

    Returns ``perm`` of length L such that ``x[perm]`` places all tokens of
    flat tile 0 first, then tile 1, and so on; tiles are ordered row-major over
    the tile grid and tokens row-major within each tile.  ``np.argsort(perm)``
    is the inverse.
    """
    T, H, W = tmap.grid.dims
    st, sh, sw = tmap.scheme.dims
    gh, gw = tmap.tile_grid_dims[1], tmap.tile_grid_dims[2]

    idx = np.arange(tmap.grid.tokens, dtype=np.int64)
    t = idx // (H * W)
    h = (idx // W) % H
    w = idx % W

    tile = ((t // st) * gh + (h // sh)) * gw + (w // sw)
    local = ((t % st) * sh + (h % sh)) * sw + (w % sw)

    perm = np.empty_like(idx)
    perm[tile * tmap.tile_volume + local] = idx
    return perm


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    """Inverse of a permutation array: ``perm[inv] == inv[perm] == identity``."""
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size, dtype=perm.dtype)
    return inv


def token_rows_of_tile(tmap: TileMap, flat_tile: int) -> slice:
    """Row slice of a flat tile id in a tile-contiguous matrix."""
    if not 0 <= flat_tile < tmap.tiles_total:
        raise IndexError(f"tile id {flat_tile} out of range [0, {tmap.tiles_total})")
    start = flat_tile * tmap.tile_volume
    return slice(start, start + tmap.tile_volume)
