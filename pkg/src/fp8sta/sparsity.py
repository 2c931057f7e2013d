"""Sliding-tile neighborhoods and block masks for sparse attention.

Window extents are measured in tile units.  A window of extent W along one
axis admits tile offsets ``-floor((W-1)/2) .. +floor(W/2)`` relative to the
query tile, clipped to the tile grid, so even extents reach one tile further
forward than backward and neighborhoods shrink at the boundary instead of
shifting.  The admissible set of a query tile is the Cartesian product of the
per-axis offset ranges; every query tile admits itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .grid import TileMap


@dataclass(frozen=True)
class WindowSpec:
    """Window extents per axis, in tiles."""

    win_t: int
    win_h: int
    win_w: int

    def __post_init__(self) -> None:
        for name, value in (("win_t", self.win_t), ("win_h", self.win_h), ("win_w", self.win_w)):
            if value < 1:
                raise ValueError(f"WindowSpec.{name} must be >= 1, got {value}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.win_t, self.win_h, self.win_w)

    @property
    def volume(self) -> int:
        return self.win_t * self.win_h * self.win_w


def _offsets(extent: int) -> tuple[int, int]:
    """Backward / forward reach of a window extent, in tiles."""
    return (extent - 1) // 2, extent // 2


@dataclass(frozen=True)
class BlockMask:
    """Per-query-tile admissible key tiles.

    ``admissible[u, v]`` is True when flat key tile ``v`` is admissible for
    flat query tile ``u``; :meth:`allowed` extracts one tile's sorted id list.
    """

    tile_grid_dims: tuple[int, int, int]
    admissible: np.ndarray  # (tiles_total, tiles_total) bool

    @property
    def tiles_total(self) -> int:
        return int(self.admissible.shape[0])

    def allowed(self, flat_tile: int) -> np.ndarray:
        """Sorted flat key-tile ids admissible for one query tile."""
        if not 0 <= flat_tile < self.tiles_total:
            raise IndexError(f"tile id {flat_tile} out of range [0, {self.tiles_total})")
        return np.flatnonzero(self.admissible[flat_tile])

    def allowed_counts(self) -> np.ndarray:
        return np.count_nonzero(self.admissible, axis=1)

    @cached_property
    def allowed_flat(self) -> np.ndarray:
        """All admissible key-tile ids, concatenated in query-tile order."""
        return np.nonzero(self.admissible)[1]


def neighborhood(
    u: tuple[int, int, int], window: WindowSpec, dims: tuple[int, int, int]
) -> list[tuple[int, int, int]]:
    """Admissible key tiles of query tile ``u``, sorted row-major.

    Reference single-tile form of the mask; :func:`build_block_mask` computes
    the same sets for all query tiles at once.
    """
    for axis, (coord, dim) in enumerate(zip(u, dims)):
        if not 0 <= coord < dim:
            raise IndexError(f"tile index {u} out of range for grid dims {dims} on axis {axis}")
    ranges = []
    for coord, dim, extent in zip(u, dims, window.dims):
        back, fwd = _offsets(extent)
        ranges.append(range(max(0, coord - back), min(dim - 1, coord + fwd) + 1))
    return [(a, b, c) for a in ranges[0] for b in ranges[1] for c in ranges[2]]


@lru_cache(maxsize=None)
def _axis_admissible(dim: int, extent: int) -> np.ndarray:
    """(dim, dim) table: key coordinate y admissible for query coordinate x.

    Derived from the clipped per-coordinate interval [x - back, x + fwd];
    cached because only (dim, extent) pairs matter, not whole windows.
    """
    back, fwd = _offsets(extent)
    coords = np.arange(dim, dtype=np.int64)
    lo = np.maximum(coords - back, 0)
    hi = np.minimum(coords + fwd, dim - 1)
    ok = (coords[None, :] >= lo[:, None]) & (coords[None, :] <= hi[:, None])
    ok.setflags(write=False)
    return ok


def build_block_mask(window: WindowSpec, dims: tuple[int, int, int]) -> BlockMask:
    """Admissible key tiles for every query tile of a tile grid.

    The admissible set factorizes over axes, so the mask is the broadcast AND
    of three cached per-axis tables.  Work and memory are O(tiles_total^2),
    fine at desk scale where tile counts stay small.
    """
    dt, dh, dw = dims
    if min(dims) < 1:
        raise ValueError(f"tile grid dims must be >= 1, got {dims}")

    t_ok = _axis_admissible(dt, window.win_t)
    h_ok = _axis_admissible(dh, window.win_h)
    w_ok = _axis_admissible(dw, window.win_w)
    m = dt * dh * dw
    ok = (
        t_ok.reshape(dt, 1, 1, dt, 1, 1)
        & h_ok.reshape(1, dh, 1, 1, dh, 1)
        & w_ok.reshape(1, 1, dw, 1, 1, dw)
    ).reshape(m, m)
    return BlockMask(tile_grid_dims=(dt, dh, dw), admissible=ok)


def full_block_mask(dims: tuple[int, int, int]) -> BlockMask:
    """Mask admitting every key tile for every query tile."""
    window = WindowSpec(2 * dims[0], 2 * dims[1], 2 * dims[2])
    return build_block_mask(window, dims)


def density(mask: BlockMask) -> float:
    """Fraction of admissible (query tile, key tile) pairs, in (0, 1]."""
    m = mask.tiles_total
    return int(np.count_nonzero(mask.admissible)) / (m * m)


def expand_token_mask(mask: BlockMask, tmap: TileMap) -> np.ndarray:
    """Dense L x L boolean mask; True where a (query, key) pair is admissible.

    Oracle and test helper only; the attention engine never materializes this.
    """
    if mask.tile_grid_dims != tmap.tile_grid_dims:
        raise ValueError(
            f"mask tile grid {mask.tile_grid_dims} does not match "
            f"map tile grid {tmap.tile_grid_dims}"
        )
    tv = tmap.tile_volume
    return np.repeat(np.repeat(mask.admissible, tv, axis=0), tv, axis=1)


def format_mask_dump(mask: BlockMask) -> str:
    """Text dump, one line per query tile: ``u_t,u_h,u_w : v1 v2 ...``.

    Key tiles are flattened row-major tile indices.
    """
    dt, dh, dw = mask.tile_grid_dims
    lines = []
    for u in range(mask.tiles_total):
        ut, rem = divmod(u, dh * dw)
        uh, uw = divmod(rem, dw)
        ids = " ".join(str(v) for v in mask.allowed(u))
        lines.append(f"{ut},{uh},{uw} : {ids}")
    return "\n".join(lines) + "\n"
