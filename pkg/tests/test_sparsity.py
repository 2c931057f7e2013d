import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fp8sta.grid import GridShape, TileScheme, build_tile_map
from fp8sta.sparsity import (
    WindowSpec,
    build_block_mask,
    density,
    expand_token_mask,
    format_mask_dump,
    full_block_mask,
    neighborhood,
)
from oracles import mask_bruteforce

dims_st = st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5))
window_st = st.tuples(st.integers(1, 7), st.integers(1, 7), st.integers(1, 7))


def _mask_to_dense(mask):
    # rebuild from the accessor API rather than reading .admissible directly
    m = mask.tiles_total
    dense = np.zeros((m, m), dtype=bool)
    rows = np.repeat(np.arange(m), mask.allowed_counts())
    dense[rows, mask.allowed_flat] = True
    return dense


# ── neighborhood ─────────────────────────────────────────────────────────


def test_interior_neighborhood_full_window():
    got = neighborhood((1, 1, 1), WindowSpec(3, 3, 3), (4, 4, 4))
    want = {
        (a, b, c)
        for a in (0, 1, 2)
        for b in (0, 1, 2)
        for c in (0, 1, 2)
    }
    assert set(got) == want and len(got) == 27


def test_corner_neighborhood_clips():
    got = neighborhood((0, 0, 0), WindowSpec(3, 3, 3), (4, 4, 4))
    assert set(got) == {(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)}


def test_unit_window_is_self_only():
    assert neighborhood((2, 3, 1), WindowSpec(1, 1, 1), (4, 4, 4)) == [(2, 3, 1)]


def test_even_window_reaches_further_forward():
    got = neighborhood((3, 0, 0), WindowSpec(6, 1, 1), (8, 1, 1))
    assert [g[0] for g in got] == [1, 2, 3, 4, 5, 6]


def test_neighborhood_out_of_bounds():
    with pytest.raises(IndexError):
        neighborhood((4, 0, 0), WindowSpec(1, 1, 1), (4, 4, 4))


# ── build_block_mask / density ───────────────────────────────────────────


def test_dense_window_covers_everything():
    mask = build_block_mask(WindowSpec(3, 3, 3), (2, 2, 2))
    assert all(len(mask.allowed(u)) == 8 for u in range(8))
    assert density(mask) == 1.0


def test_1d_mask_counts_and_density():
    mask = build_block_mask(WindowSpec(3, 1, 1), (4, 1, 1))
    assert [len(mask.allowed(u)) for u in range(4)] == [2, 3, 3, 2]
    assert density(mask) == 0.625


def test_single_tile_grid():
    mask = build_block_mask(WindowSpec(5, 5, 5), (1, 1, 1))
    assert mask.allowed(0).tolist() == [0]
    assert density(mask) == 1.0


@given(dims=dims_st, window=window_st)
@settings(max_examples=150)
def test_mask_matches_pairwise_predicate(dims, window):
    mask = build_block_mask(WindowSpec(*window), dims)
    assert np.array_equal(_mask_to_dense(mask), mask_bruteforce(dims, window))


@given(dims=dims_st, window=window_st)
@settings(max_examples=100)
def test_mask_rows_match_neighborhood(dims, window):
    spec = WindowSpec(*window)
    mask = build_block_mask(spec, dims)
    gh, gw = dims[1], dims[2]
    for u in range(mask.tiles_total):
        ut, rem = divmod(u, gh * gw)
        uh, uw = divmod(rem, gw)
        want = sorted((a * gh + b) * gw + c for a, b, c in neighborhood((ut, uh, uw), spec, dims))
        assert mask.allowed(u).tolist() == want


@given(dims=dims_st, window=window_st)
@settings(max_examples=100)
def test_self_inclusion_and_bounds(dims, window):
    mask = build_block_mask(WindowSpec(*window), dims)
    m = mask.tiles_total
    assert mask.allowed_flat.min() >= 0 and mask.allowed_flat.max() < m
    for u in range(m):
        assert u in mask.allowed(u)


@given(dims=dims_st, window=window_st, axis=st.integers(0, 2))
@settings(max_examples=100)
def test_density_monotone_in_window_extent(dims, window, axis):
    grown = list(window)
    grown[axis] += 1
    small = build_block_mask(WindowSpec(*window), dims)
    big = build_block_mask(WindowSpec(*grown), dims)
    assert density(big) >= density(small)
    # enlarging never removes an admissible tile
    sd, bd = _mask_to_dense(small), _mask_to_dense(big)
    assert not np.any(sd & ~bd)


@given(dims=dims_st)
@settings(max_examples=50)
def test_saturated_window_is_dense(dims):
    window = WindowSpec(2 * dims[0] - 1 if dims[0] > 1 else 1, 2 * dims[1], 2 * dims[2])
    mask = build_block_mask(window, dims)
    assert density(mask) == 1.0
    assert np.all(_mask_to_dense(mask))
    assert density(full_block_mask(dims)) == 1.0


def test_interior_tiles_have_full_window_volume():
    window = WindowSpec(3, 3, 3)
    mask = build_block_mask(window, (5, 5, 5))
    # interior tile: all offsets unclipped
    u = (2 * 5 + 2) * 5 + 2
    assert len(mask.allowed(u)) == window.volume


# ── expand_token_mask ────────────────────────────────────────────────────


def test_expand_single_tile_all_true():
    tmap = build_tile_map(GridShape(2, 2, 1, 1), TileScheme(2, 2, 1))
    mask = build_block_mask(WindowSpec(1, 1, 1), tmap.tile_grid_dims)
    assert expand_token_mask(mask, tmap).all()


def test_expand_block_diagonal():
    tmap = build_tile_map(GridShape(2, 1, 2, 1), TileScheme(1, 1, 2))
    mask = build_block_mask(WindowSpec(1, 1, 1), tmap.tile_grid_dims)
    got = expand_token_mask(mask, tmap)
    want = np.zeros((4, 4), dtype=bool)
    want[:2, :2] = True
    want[2:, 2:] = True
    assert np.array_equal(got, want)


def test_expand_dense_mask_all_true():
    tmap = build_tile_map(GridShape(2, 2, 2, 1), TileScheme(1, 1, 1))
    assert expand_token_mask(full_block_mask(tmap.tile_grid_dims), tmap).all()


def test_expand_rejects_mismatched_dims():
    tmap = build_tile_map(GridShape(2, 2, 2, 1), TileScheme(1, 1, 1))
    mask = build_block_mask(WindowSpec(1, 1, 1), (4, 4, 4))
    with pytest.raises(ValueError):
        expand_token_mask(mask, tmap)


@given(dims=st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3)), window=window_st)
@settings(max_examples=50)
def test_expansion_is_blockwise_constant(dims, window):
    tmap = build_tile_map(
        GridShape(dims[0] * 2, dims[1], dims[2] * 3, 1), TileScheme(2, 1, 3)
    )
    mask = build_block_mask(WindowSpec(*window), tmap.tile_grid_dims)
    dense = expand_token_mask(mask, tmap)
    tv = tmap.tile_volume
    blocks = dense.reshape(tmap.tiles_total, tv, tmap.tiles_total, tv)
    assert (blocks.all(axis=(1, 3)) == blocks.any(axis=(1, 3))).all()


# ── dump format ──────────────────────────────────────────────────────────


def test_mask_dump_format():
    mask = build_block_mask(WindowSpec(3, 1, 1), (4, 1, 1))
    text = format_mask_dump(mask)
    assert text.splitlines() == [
        "0,0,0 : 0 1",
        "1,0,0 : 0 1 2",
        "2,0,0 : 1 2 3",
        "3,0,0 : 2 3",
    ]
