"""Rectangles and the layered square grid over a bounded 2-D space.

The grid splits the space into ``top_resolution x top_resolution`` cells
(the finest layer), then repeatedly halves the per-side resolution down
to a single whole-space cell.  Cell ids are global across layers: the
finest layer is numbered 1..s^2 row-major, each coarser layer continues
the numbering.  With a 4x4 top layer the ids run 1..16 (finest),
17..20 (2x2), 21 (whole space).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from . import _kernels

Point = Tuple[float, float]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle stored as min/max corners (closed).

    An empty rectangle is encoded with min > max on both axes; use
    ``EMPTY_RECT`` rather than constructing one ad hoc.
    """

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    @classmethod
    def canonical(cls, x1: float, y1: float, x2: float, y2: float) -> "Rect":
        """Build from two arbitrary opposite corners."""
        return cls(min(x1, x2), min(y1, y2), max(x1, x2), max(y1, y2))

    @property
    def is_empty(self) -> bool:
        return self.min_x > self.max_x or self.min_y > self.max_y

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    @property
    def area(self) -> float:
        if self.is_empty:
            return 0.0
        return self.width * self.height

    def contains_point(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y

    def contains_rect(self, other: "Rect") -> bool:
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return (
            self.min_x <= other.min_x
            and self.min_y <= other.min_y
            and other.max_x <= self.max_x
            and other.max_y <= self.max_y
        )

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.min_x, self.min_y, self.max_x, self.max_y)


EMPTY_RECT = Rect(math.inf, math.inf, -math.inf, -math.inf)


class Relation(Enum):
    CONTAINS = "contains"
    DISJOINT = "disjoint"
    OVERLAPS = "overlaps"


def rect_relation(query: Rect, r: Rect) -> Relation:
    """Relation of ``r`` to the query rectangle, on closed rectangles.

    CONTAINS means the query fully contains ``r``; DISJOINT means they
    share no point, boundaries included; anything else (including ``r``
    strictly containing the query) is OVERLAPS.  An empty ``r`` is
    DISJOINT.
    """
    if r.is_empty:
        return Relation.DISJOINT
    if query.is_empty:
        return Relation.DISJOINT
    if query.contains_rect(r):
        return Relation.CONTAINS
    if (
        r.max_x < query.min_x
        or query.max_x < r.min_x
        or r.max_y < query.min_y
        or query.max_y < r.min_y
    ):
        return Relation.DISJOINT
    return Relation.OVERLAPS


def mbr_union(*items: Union[Rect, Point, None]) -> Rect:
    """Smallest rectangle containing every non-empty argument.

    Accepts rectangles, (x, y) points and None; the empty rectangle is
    the identity, so folding over no arguments yields EMPTY_RECT.
    """
    min_x = math.inf
    min_y = math.inf
    max_x = -math.inf
    max_y = -math.inf
    for item in items:
        if item is None:
            continue
        if isinstance(item, Rect):
            if item.is_empty:
                continue
            min_x = min(min_x, item.min_x)
            min_y = min(min_y, item.min_y)
            max_x = max(max_x, item.max_x)
            max_y = max(max_y, item.max_y)
        else:
            x, y = item
            min_x = min(min_x, x)
            min_y = min(min_y, y)
            max_x = max(max_x, x)
            max_y = max(max_y, y)
    if min_x > max_x or min_y > max_y:
        return EMPTY_RECT
    return Rect(min_x, min_y, max_x, max_y)


def _is_power_of_two(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


class HierarchicalGrid:
    """Layered decomposition of ``bounds`` with globally unique cell ids."""

    def __init__(self, bounds: Rect, top_resolution: int = 128):
        if bounds.is_empty or bounds.width <= 0 or bounds.height <= 0:
            raise ValueError("grid bounds must be a non-degenerate rectangle")
        if not _is_power_of_two(top_resolution):
            raise ValueError(f"top_resolution must be a power of two, got {top_resolution}")
        self.bounds = bounds
        self.top_resolution = int(top_resolution)
        self.num_layers = self.top_resolution.bit_length()  # halving down to 1x1
        # layer_offsets[i] = ids preceding layer i; layer 0 is the finest
        sides = [self.top_resolution >> i for i in range(self.num_layers)]
        offsets = [0]
        for s in sides:
            offsets.append(offsets[-1] + s * s)
        self._sides = sides
        self._offsets = offsets
        self.total_cells = offsets[-1]
        self.l0_cells = sides[0] * sides[0]

    def __repr__(self) -> str:
        return f"HierarchicalGrid(top={self.top_resolution}, bounds={self.bounds.as_tuple()})"

    def layer_of(self, cell_id: int) -> int:
        self._check_id(cell_id)
        for layer in range(self.num_layers):
            if cell_id <= self._offsets[layer + 1]:
                return layer
        raise AssertionError("unreachable")

    def _check_id(self, cell_id: int) -> None:
        if not 1 <= cell_id <= self.total_cells:
            raise ValueError(f"cell id {cell_id} out of range 1..{self.total_cells}")

    def _decode(self, cell_id: int) -> Tuple[int, int, int]:
        """(layer, row, col) of a cell id."""
        layer = self.layer_of(cell_id)
        side = self._sides[layer]
        local = cell_id - self._offsets[layer] - 1
        return layer, local // side, local % side

    def _encode(self, layer: int, row: int, col: int) -> int:
        side = self._sides[layer]
        return self._offsets[layer] + row * side + col + 1

    def cell_of_point(self, x: float, y: float) -> int:
        """Finest-layer cell containing the point.

        Cells are half-open on both axes; points on a shared edge belong
        to the higher-index cell, and the space's max edge belongs to the
        last row/column.
        """
        b = self.bounds
        if not b.contains_point(x, y):
            raise ValueError(f"point ({x}, {y}) outside bounds {b.as_tuple()}")
        return int(
            _kernels.cell_of_point(
                x, y, self.top_resolution, b.min_x, b.min_y, b.max_x, b.max_y
            )
        )

    def cells_of_points(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        b = self.bounds
        xs = np.ascontiguousarray(xs, np.float64)
        ys = np.ascontiguousarray(ys, np.float64)
        return _kernels.cells_of_points(
            xs, ys, self.top_resolution, b.min_x, b.min_y, b.max_x, b.max_y
        )

    def children(self, cell_id: int) -> Optional[Tuple[int, int, int, int]]:
        """The four next-finer cells covering the same area; None at layer 0."""
        layer, row, col = self._decode(cell_id)
        if layer == 0:
            return None
        child = layer - 1
        r, c = row * 2, col * 2
        return (
            self._encode(child, r, c),
            self._encode(child, r, c + 1),
            self._encode(child, r + 1, c),
            self._encode(child, r + 1, c + 1),
        )

    def parent(self, cell_id: int) -> Optional[int]:
        """The next-coarser cell covering this one; None for the whole-space cell."""
        layer, row, col = self._decode(cell_id)
        if layer == self.num_layers - 1:
            return None
        return self._encode(layer + 1, row // 2, col // 2)

    def cell_rect(self, cell_id: int) -> Rect:
        self._check_id(cell_id)
        b = self.bounds
        x0, y0, x1, y1 = _kernels.cell_bounds(
            cell_id, self.top_resolution, b.min_x, b.min_y, b.max_x, b.max_y
        )
        return Rect(x0, y0, x1, y1)

    def layer_ids(self, layer: int) -> range:
        if not 0 <= layer < self.num_layers:
            raise ValueError(f"layer {layer} out of range")
        return range(self._offsets[layer] + 1, self._offsets[layer + 1] + 1)

    def cells_bbox(self, cell_ids: np.ndarray) -> Rect:
        """Bounding rectangle of a set of cells (any mix of layers).

        Equals the union of the individual cell rectangles; when the
        cells stand in for exact points, the error per axis is at most
        one cell side.
        """
        ids = np.asarray(cell_ids, np.int64)
        if ids.size == 0:
            return EMPTY_RECT
        offsets = np.asarray(self._offsets, np.int64)
        layers = np.searchsorted(offsets[1:], ids, side="left")
        sides = np.asarray(self._sides, np.int64)[layers]
        local = ids - offsets[layers] - 1
        rows = local // sides
        cols = local % sides
        b = self.bounds
        w = b.max_x - b.min_x
        h = b.max_y - b.min_y
        x0 = b.min_x + w * cols / sides
        x1 = b.min_x + w * (cols + 1) / sides
        y0 = b.min_y + h * rows / sides
        y1 = b.min_y + h * (rows + 1) / sides
        return Rect(float(x0.min()), float(y0.min()), float(x1.max()), float(y1.max()))

    def covered_l0(self, cell_ids: Iterable[int]) -> "frozenset[int]":
        """Expand cells of any layer to the finest-layer cells they cover."""
        out = set()
        s0 = self._sides[0]
        for cid in cell_ids:
            layer, row, col = self._decode(cid)
            f = 1 << layer
            for r in range(row * f, (row + 1) * f):
                base = r * s0
                out.update(range(base + col * f + 1, base + (col + 1) * f + 1))
        return frozenset(out)
