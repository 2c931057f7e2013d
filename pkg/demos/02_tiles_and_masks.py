"""Tile partitioning of a 3D token grid and sliding-tile block masks.

Run: python demos/02_tiles_and_masks.py
"""

from fp8sta import (
    GridShape,
    TileScheme,
    WindowSpec,
    build_block_mask,
    build_tile_map,
    density,
    format_mask_dump,
    tile_contiguous_order,
    tile_of_token,
)

# A toy video latent: 4 frames of 4x4 tokens, 2x2x2 tiles
grid = GridShape(t_frames=4, height=4, width=4, d_model=64)
tmap = build_tile_map(grid, TileScheme(2, 2, 2))
print(f"grid {grid.dims} -> tile grid {tmap.tile_grid_dims}, "
      f"{tmap.tiles_total} tiles of {tmap.tile_volume} tokens")

# Tokens are serialized (t, h, w) row-major; tiles regroup them
perm = tile_contiguous_order(tmap)
print("first tile's tokens:", perm[: tmap.tile_volume].tolist())
print("token 24 sits at (t,h,w)=(1,2,0), tile", tile_of_token(tmap, 24))

# Each query tile attends to key tiles inside a 3-tile window per axis
mask = build_block_mask(WindowSpec(3, 3, 3), tmap.tile_grid_dims)
print(f"\nwindow (3,3,3): density {density(mask):.4f}")
print("mask dump (query tile : admissible key tiles):")
print(format_mask_dump(mask))

# Density grows monotonically with the window until it saturates
print("window -> density on the 2x2x2 tile grid:")
for extent in range(1, 5):
    w = WindowSpec(extent, extent, extent)
    print(f"  {w.dims}: {density(build_block_mask(w, tmap.tile_grid_dims)):.4f}")

# The paper-scale geometry: 24x32x32 tokens in (6,8,8) tiles
big = build_tile_map(GridShape(24, 32, 32, 64), TileScheme(6, 8, 8))
for w in ((3, 3, 1), (6, 6, 1), (6, 6, 6)):
    m = build_block_mask(WindowSpec(*w), big.tile_grid_dims)
    print(f"24x32x32 / (6,8,8), window {w}: density {density(m):.4f}")
