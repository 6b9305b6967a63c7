"""Five-tile pinwheel UPB bound entangled states.

Grid coordinates in layouts and rectangles are 1-based, matching the usual
``(l, n), (m, o)`` description of the central tile.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .hermitian import (
    BipartiteDims,
    hs_inner,
    hs_norm,
    min_eigenvalue,
    partial_transpose,
)

K_TILES = 5

_NAME_RE = re.compile(r"^(\d+)x(\d+)-(\d+)\.(\d+)-(\d+)\.(\d+)$")


class ConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Rect:
    r1: int
    r2: int
    c1: int
    c2: int

    @property
    def area(self) -> int:
        return (self.r2 - self.r1 + 1) * (self.c2 - self.c1 + 1)

    def cells(self):
        for i in range(self.r1, self.r2 + 1):
            for j in range(self.c1, self.c2 + 1):
                yield i, j

    def indices(self, dims: BipartiteDims) -> list[int]:
        return [(i - 1) * dims.d2 + (j - 1) for i, j in self.cells()]


@dataclass(frozen=True)
class TileLayout:
    dims: BipartiteDims
    l: int
    n: int
    m: int
    o: int

    def __post_init__(self):
        d1, d2 = self.dims.d1, self.dims.d2
        if not (1 < self.l <= self.n < d1 and 1 < self.m <= self.o < d2):
            raise ValueError(
                f"invalid central tile ({self.l},{self.n}),({self.m},{self.o}) for {d1}x{d2}"
            )

    @property
    def name(self) -> str:
        return f"{self.dims.d1}x{self.dims.d2}-{self.l}.{self.n}-{self.m}.{self.o}"

    @property
    def central_area(self) -> int:
        return (self.n - self.l + 1) * (self.o - self.m + 1)

    @classmethod
    def parse(cls, name: str) -> "TileLayout":
        match = _NAME_RE.match(name.strip())
        if not match:
            raise ValueError(f"malformed layout name {name!r}, expected e.g. '3x3-2.2-2.2'")
        d1, d2, l, n, m, o = map(int, match.groups())
        return cls(BipartiteDims(d1, d2), l, n, m, o)


def enumerate_layouts(dims: BipartiteDims) -> list[TileLayout]:
    if dims.d1 < 3 or dims.d2 < 3:
        raise ValueError(f"no valid central tile exists for {dims.d1}x{dims.d2}")
    return [
        TileLayout(dims, l, n, m, o)
        for l in range(2, dims.d1)
        for n in range(l, dims.d1)
        for m in range(2, dims.d2)
        for o in range(m, dims.d2)
    ]


def family_size(dims: BipartiteDims) -> int:
    return ((dims.d1 - 1) * (dims.d1 - 2) // 2) * ((dims.d2 - 1) * (dims.d2 - 2) // 2)


def pinwheel(layout: TileLayout) -> list[Rect]:
    """Central, Top, Right, Bottom, Left tiles of the layout."""
    d1, d2 = layout.dims.d1, layout.dims.d2
    l, n, m, o = layout.l, layout.n, layout.m, layout.o
    return [
        Rect(l, n, m, o),
        Rect(1, l - 1, 1, o),
        Rect(1, n, o + 1, d2),
        Rect(n + 1, d1, m, d2),
        Rect(l, d1, 1, m - 1),
    ]


def tile_projector(rect: Rect, dims: BipartiteDims) -> np.ndarray:
    P = np.zeros((dims.D, dims.D), dtype=complex)
    idx = rect.indices(dims)
    P[idx, idx] = 1.0
    return P


def tile_sym_projector(rect: Rect, dims: BipartiteDims) -> np.ndarray:
    """Rank-one projector on the uniform superposition of the tile's basis states."""
    v = np.zeros(dims.D, dtype=complex)
    v[rect.indices(dims)] = 1.0 / np.sqrt(rect.area)
    return np.outer(v, v.conj())


def stopper(dims: BipartiteDims) -> np.ndarray:
    return tile_sym_projector(Rect(1, dims.d1, 1, dims.d2), dims)


@dataclass(frozen=True)
class UpbState:
    layout: TileLayout
    rho: np.ndarray = field(repr=False)
    support: np.ndarray = field(repr=False)
    K: int = K_TILES

    @property
    def name(self) -> str:
        return self.layout.name


def build_state(layout: TileLayout) -> UpbState:
    dims = layout.dims
    P = np.eye(dims.D, dtype=complex) - stopper(dims)
    for rect in pinwheel(layout):
        P -= tile_projector(rect, dims) - tile_sym_projector(rect, dims)
    if hs_norm(P @ P - P) > 1e-10:
        raise ConstructionError(f"support of {layout.name} is not a projector")
    return UpbState(layout, P / (K_TILES - 1), P, K_TILES)


@dataclass
class StateReport:
    name: str
    rank: int
    trace: float
    min_eigenvalue: float
    ppt_min_eigenvalue: float
    stopper_residual: float
    tile_residual: float
    max_product_overlap: float | None

    @property
    def ppt(self) -> bool:
        return self.ppt_min_eigenvalue >= -1e-10

    @property
    def ok(self) -> bool:
        overlap_ok = self.max_product_overlap is None or self.max_product_overlap < 1 - 1e-3
        return (
            self.rank == K_TILES - 1
            and abs(self.trace - 1) <= 1e-10
            and self.min_eigenvalue >= -1e-10
            and self.ppt
            and self.stopper_residual <= 1e-12
            and self.tile_residual <= 1e-12
            and overlap_ok
        )


def validate_state(s: UpbState, restarts: int = 1000, rng=None) -> StateReport:
    """Structural checks on a constructed state.

    ``restarts=0`` skips the (comparatively slow) seesaw estimate of the
    largest overlap between a product vector and the state's range.
    """
    dims = s.layout.dims
    w = np.linalg.eigvalsh(s.support)
    rank = int(np.sum(w > 0.5))
    stop_res = abs(hs_inner(s.rho, stopper(dims)))
    tile_res = 0.0
    for rect in pinwheel(s.layout):
        Q = tile_projector(rect, dims) - tile_sym_projector(rect, dims)
        tile_res = max(tile_res, hs_norm(s.rho @ Q))
    overlap = None
    if restarts > 0:
        from .witness import lambda_max

        if rng is None:
            rng = np.random.default_rng(0)
        overlap, _ = lambda_max(s.support, dims, restarts, rng)
    return StateReport(
        name=s.name,
        rank=rank,
        trace=float(np.trace(s.rho).real),
        min_eigenvalue=float(w[0] / (s.K - 1)),
        ppt_min_eigenvalue=min_eigenvalue(partial_transpose(s.rho, dims)),
        stopper_residual=stop_res,
        tile_residual=tile_res,
        max_product_overlap=overlap,
    )
