import itertools

import numpy as np
import pytest

from upbwit.hermitian import BipartiteDims, make_rng, min_eigenvalue, partial_transpose
from upbwit.tiles import (
    Rect,
    TileLayout,
    build_state,
    enumerate_layouts,
    family_size,
    pinwheel,
    stopper,
    tile_projector,
    tile_sym_projector,
    validate_state,
)

ALL_DIMS = [BipartiteDims(d, d) for d in (3, 4, 5, 6)]
ALL_LAYOUTS = [lay for dims in ALL_DIMS for lay in enumerate_layouts(dims)]


@pytest.mark.parametrize("d, count", [(3, 1), (4, 9), (5, 36), (6, 100)])
def test_enumeration_counts(d, count):
    layouts = enumerate_layouts(BipartiteDims(d, d))
    assert len(layouts) == count == family_size(BipartiteDims(d, d))
    keys = [(x.l, x.n, x.m, x.o) for x in layouts]
    assert keys == sorted(keys)


def test_enumeration_3x3_and_rectangular():
    (only,) = enumerate_layouts(BipartiteDims(3, 3))
    assert (only.l, only.n, only.m, only.o) == (2, 2, 2, 2)
    assert len(enumerate_layouts(BipartiteDims(3, 5))) == 1 * 6
    assert len(ALL_LAYOUTS) == 146


def test_enumeration_rejects_small():
    with pytest.raises(ValueError):
        enumerate_layouts(BipartiteDims(2, 4))


def test_layout_validation_and_names():
    with pytest.raises(ValueError):
        TileLayout(BipartiteDims(4, 4), 1, 2, 2, 2)
    with pytest.raises(ValueError):
        TileLayout(BipartiteDims(4, 4), 3, 2, 2, 2)
    lay = TileLayout.parse("4x4-2.2-2.3")
    assert lay.name == "4x4-2.2-2.3"
    assert lay.central_area == 2
    with pytest.raises(ValueError):
        TileLayout.parse("4x4-2-2")


def test_pinwheel_3x3_areas():
    rects = pinwheel(TileLayout(BipartiteDims(3, 3), 2, 2, 2, 2))
    assert [r.area for r in rects] == [1, 2, 2, 2, 2]


def test_central_area_matches_pinwheel():
    lay = TileLayout(BipartiteDims(4, 4), 2, 2, 2, 3)
    assert pinwheel(lay)[0].area == 2 == (lay.n - lay.l + 1) * (lay.o - lay.m + 1)


def _is_rectangle(cells):
    rows = {i for i, _ in cells}
    cols = {j for _, j in cells}
    return len(cells) == (max(rows) - min(rows) + 1) * (max(cols) - min(cols) + 1) and all(
        (i, j) in cells for i in range(min(rows), max(rows) + 1) for j in range(min(cols), max(cols) + 1)
    )


@pytest.mark.parametrize("layout", ALL_LAYOUTS, ids=lambda x: x.name)
def test_pinwheel_partitions_and_is_unextendible(layout):
    d1, d2 = layout.dims.d1, layout.dims.d2
    rects = pinwheel(layout)
    seen = {}
    for k, r in enumerate(rects):
        assert 1 <= r.r1 <= r.r2 <= d1 and 1 <= r.c1 <= r.c2 <= d2
        for cell in r.cells():
            assert cell not in seen, f"cell {cell} in tiles {seen.get(cell)} and {k}"
            seen[cell] = k
    assert len(seen) == d1 * d2
    for size in (2, 3, 4):
        for combo in itertools.combinations(rects, size):
            cells = {c for r in combo for c in r.cells()}
            assert not _is_rectangle(cells)


def test_tile_projectors():
    dims = BipartiteDims(3, 3)
    full = Rect(1, 3, 1, 3)
    np.testing.assert_array_equal(tile_projector(full, dims), np.eye(9))
    single = Rect(2, 2, 2, 2)
    P = tile_projector(single, dims)
    assert P[4, 4] == 1 and np.count_nonzero(P) == 1
    np.testing.assert_array_equal(tile_sym_projector(single, dims), P)
    r = Rect(1, 2, 2, 3)
    P = tile_projector(r, dims)
    S = tile_sym_projector(r, dims)
    assert np.trace(P).real == r.area
    np.testing.assert_allclose(P @ P, P)
    assert np.trace(S).real == pytest.approx(1)
    np.testing.assert_allclose(S @ S, S, atol=1e-15)
    # S <= P
    assert np.linalg.eigvalsh(P - S)[0] >= -1e-12


def test_stopper_3x3_entries():
    np.testing.assert_allclose(stopper(BipartiteDims(3, 3)), np.full((9, 9), 1 / 9))


@pytest.mark.parametrize("layout", ALL_LAYOUTS, ids=lambda x: x.name)
def test_state_invariants(layout):
    s = build_state(layout)
    dims = layout.dims
    P = s.support
    assert np.linalg.norm(P @ P - P) <= 1e-10
    w = np.linalg.eigvalsh(P)
    assert np.sum(w > 0.5) == 4
    assert np.all((np.abs(w) < 0.25) | (np.abs(w - 1) < 0.25))
    np.testing.assert_allclose(s.rho, P / 4)
    assert np.trace(s.rho).real == pytest.approx(1, abs=1e-10)
    assert np.linalg.eigvalsh(s.rho)[0] >= -1e-10
    assert min_eigenvalue(partial_transpose(s.rho, dims)) >= -1e-10
    assert abs(np.trace(s.rho @ stopper(dims))) <= 1e-12
    for r in pinwheel(layout):
        Q = tile_projector(r, dims) - tile_sym_projector(r, dims)
        assert np.linalg.norm(s.rho @ Q) <= 1e-12


def test_validate_state_3x3():
    s = build_state(TileLayout.parse("3x3-2.2-2.2"))
    rep = validate_state(s, restarts=1000, rng=make_rng(0))
    assert rep.rank == 4
    assert rep.ppt
    assert rep.max_product_overlap < 1 - 1e-3
    assert rep.ok


@pytest.mark.parametrize("name", ["4x4-2.3-2.3", "5x5-2.2-3.4", "6x6-2.4-3.5"])
def test_validate_state_larger(name):
    rep = validate_state(build_state(TileLayout.parse(name)), restarts=200, rng=make_rng(1))
    assert rep.ok
    assert 0.9 < rep.max_product_overlap < 1 - 1e-3


def test_validate_skips_overlap():
    rep = validate_state(build_state(TileLayout.parse("3x3-2.2-2.2")), restarts=0)
    assert rep.max_product_overlap is None and rep.ok
