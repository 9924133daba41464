"""Spatial-reachability index over a directed graph.

Every strongly connected component carries one payload summarizing the
spatial vertices reachable from it:

* bit (B): a single boolean - "reaches at least one spatial vertex".
* rect (R): the minimum bounding rectangle of all reachable points.
* grid (G): a set of hierarchical grid cells jointly covering them,
  where every stored cell contains at least one reachable point.

Payloads are assigned sinks-first so each component aggregates its
out-neighbors' finished payloads.  Two thresholds trade precision for
storage: a grid payload whose cell count reaches ``max_reach_grids``
degrades to a rect, and a rect whose area exceeds ``max_rmbr`` (as a
fraction of the space) degrades to a true bit.  After typing, grid
payloads are compacted bottom-up: whenever at least ``merge_count`` of
a coarser cell's four children are present, the coarser cell replaces
everything it covers.

A component's own points are not part of its payload unless the
component is a cycle (>= 2 members, so each member reaches the others);
the query engine checks member points directly when it visits a
component.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np

from . import _kernels, codec
from ._kernels import KIND_BIT, KIND_GRID, KIND_RECT
from .graph import Condensation, SpatialDiGraph, condense, reverse_topological_order
from .grid import EMPTY_RECT, HierarchicalGrid, Rect, mbr_union

log = logging.getLogger(__name__)

KIND_NAMES = {KIND_BIT: "B", KIND_RECT: "R", KIND_GRID: "G"}

_POP8 = np.array([bin(i).count("1") for i in range(256)], np.uint16)


@dataclass(frozen=True)
class IndexConfig:
    """Index tuning knobs.

    ``max_rmbr`` is a fraction of the total space area in (0, 1];
    ``max_reach_grids`` of None means unbounded; ``merge_count`` of 0
    disables cell merging.
    """

    max_rmbr: float = 1.0
    max_reach_grids: Optional[int] = None
    merge_count: int = 0
    top_resolution: int = 128

    def __post_init__(self):
        if not 0 < self.max_rmbr <= 1.0:
            raise ValueError("max_rmbr must be in (0, 1]")
        if self.max_reach_grids is not None and self.max_reach_grids < 0:
            raise ValueError("max_reach_grids must be >= 0 or None")
        if not 0 <= self.merge_count <= 4:
            raise ValueError("merge_count must be in 0..4")
        res = self.top_resolution
        if res < 1 or res & (res - 1):
            raise ValueError("top_resolution must be a power of two")


PRESETS: Dict[str, IndexConfig] = {
    "GeoMT0": IndexConfig(max_rmbr=1.0, max_reach_grids=None, merge_count=0),
    "GeoMT2": IndexConfig(max_rmbr=1.0, max_reach_grids=None, merge_count=2),
    "GeoMT3": IndexConfig(max_rmbr=1.0, max_reach_grids=None, merge_count=3),
    "GeoP": IndexConfig(max_rmbr=1.0, max_reach_grids=200, merge_count=0),
    "GeoRMBR": IndexConfig(max_rmbr=1.0, max_reach_grids=0, merge_count=0),
}


def preset(name: str, top_resolution: Optional[int] = None) -> IndexConfig:
    try:
        cfg = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    if top_resolution is not None:
        cfg = replace(cfg, top_resolution=top_resolution)
    return cfg


@dataclass(frozen=True)
class BitAux:
    reaches: bool


@dataclass(frozen=True)
class RectAux:
    rect: Rect


@dataclass(frozen=True)
class GridAux:
    cells: FrozenSet[int]


Aux = Union[BitAux, RectAux, GridAux]


@dataclass(frozen=True)
class StorageReport:
    bytes_total: int
    bytes_by_kind: Dict[str, int]
    counts_by_kind: Dict[str, int]
    cells_stored: int
    rmbrs_stored: int


@dataclass(frozen=True)
class MutationResult:
    applied: bool
    changed: bool
    propagated: int
    rebuilt: bool
    note: str = ""


# ---------------------------------------------------------------------------
# bitset helpers (finest-layer cell sets during construction)
# ---------------------------------------------------------------------------


def _popcount(row: np.ndarray) -> int:
    return int(_POP8[row.view(np.uint8)].sum())


def _row_from_cells(cells: np.ndarray, words: int) -> np.ndarray:
    row = np.zeros(words, np.uint64)
    idx = cells.astype(np.int64) - 1
    np.bitwise_or.at(row, idx >> 6, np.uint64(1) << (idx & 63).astype(np.uint64))
    return row


def _cells_from_row(row: np.ndarray) -> np.ndarray:
    bits = np.unpackbits(row.view(np.uint8), bitorder="little")
    return (np.flatnonzero(bits) + 1).astype(np.int32)


class ReachIndex:
    """Built index: graph + condensation + per-component payload arrays."""

    def __init__(self, graph: SpatialDiGraph, config: IndexConfig,
                 cond: Optional[Condensation] = None):
        self.config = config
        self.grid = HierarchicalGrid(graph.bounds, config.top_resolution)
        self._attach(graph, cond if cond is not None else condense(graph))
        self._initialize_all()

    # -- construction --------------------------------------------------

    def _attach(self, graph: SpatialDiGraph, cond: Condensation) -> None:
        self.graph = graph
        self.cond = cond
        n_comp = cond.n_comp
        self.kind = np.zeros(n_comp, np.uint8)
        self.geob = np.zeros(n_comp, np.uint8)
        self.rmbr = np.zeros((n_comp, 4), np.float64)
        self._cells: List[Optional[np.ndarray]] = [None] * n_comp
        # cells of member points, aligned with cond.pts_x/pts_y
        if cond.pts_x.shape[0]:
            self._pt_cells = self.grid.cells_of_points(cond.pts_x, cond.pts_y)
        else:
            self._pt_cells = np.zeros(0, np.int32)
        order = reverse_topological_order(cond)
        self._topo_pos = np.empty(n_comp, np.int64)
        self._topo_pos[order] = np.arange(n_comp)
        self._query_cache: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def _pts_bbox(self, c: int) -> Rect:
        s, e = self.cond.pts_indptr[c], self.cond.pts_indptr[c + 1]
        if s == e:
            return EMPTY_RECT
        x = self.cond.pts_x[s:e]
        y = self.cond.pts_y[s:e]
        return Rect(float(x.min()), float(y.min()), float(x.max()), float(y.max()))

    def _pt_cells_of(self, c: int) -> np.ndarray:
        s, e = self.cond.pts_indptr[c], self.cond.pts_indptr[c + 1]
        return self._pt_cells[s:e]

    @property
    def _max_area(self) -> float:
        return self.config.max_rmbr * self.graph.bounds.area

    def _initialize_all(self) -> None:
        cond = self.cond
        order = reverse_topological_order(cond)
        words = (self.grid.l0_cells + 63) >> 6
        dag_indptr, dag_indices = cond.dag.out_csr()

        # finest-layer bitset per component holding spatial members
        own_rows: Dict[int, np.ndarray] = {}
        own_bbox: Dict[int, Tuple[int, int, int, int]] = {}
        res = self.grid.top_resolution
        for c in range(cond.n_comp):
            cells = self._pt_cells_of(c)
            if cells.shape[0]:
                own_rows[c] = _row_from_cells(cells, words)
                loc = cells.astype(np.int64) - 1
                rows_ = loc // res
                cols_ = loc % res
                own_bbox[c] = (
                    int(rows_.min()), int(cols_.min()), int(rows_.max()), int(cols_.max())
                )

        rows: Dict[int, np.ndarray] = {}
        bbox: Dict[int, Tuple[int, int, int, int]] = {}
        max_grids = self.config.max_reach_grids
        for c in order:
            c = int(c)
            succs = dag_indices[dag_indptr[c] : dag_indptr[c + 1]]
            init_kind = self._initial_kind(succs)
            if init_kind == KIND_BIT:
                self.kind[c] = KIND_BIT
                self.geob[c] = 1
                continue
            if init_kind == KIND_GRID:
                row = np.zeros(words, np.uint64)
                bb = None
                for s in succs:
                    s = int(s)
                    if self.kind[s] == KIND_GRID:
                        row |= rows[s]
                        bb = _bbox_union(bb, bbox[s])
                    if s in own_rows:
                        row |= own_rows[s]
                        bb = _bbox_union(bb, own_bbox[s])
                if cond.multi[c] and c in own_rows:
                    row |= own_rows[c]
                    bb = _bbox_union(bb, own_bbox[c])
                count = _popcount(row)
                if count == 0:
                    self.kind[c] = KIND_BIT
                    self.geob[c] = 0
                    continue
                if max_grids is not None and count >= max_grids:
                    init_kind = KIND_RECT  # degrade, rebuilt from neighbors below
                else:
                    self.kind[c] = KIND_GRID
                    rows[c] = row
                    bbox[c] = bb
                    continue
            # rect payload, accumulated from scratch over out-neighbors
            rect = EMPTY_RECT
            for s in succs:
                s = int(s)
                ks = self.kind[s]
                if ks == KIND_RECT:
                    rect = mbr_union(rect, self._rect_of(s))
                elif ks == KIND_GRID:
                    rect = mbr_union(rect, self._bbox_rect(bbox[s]))
                rect = mbr_union(rect, self._pts_bbox(s))
            if cond.multi[c]:
                rect = mbr_union(rect, self._pts_bbox(c))
            if rect.is_empty:
                raise AssertionError("rect payload accumulated no contribution")
            if rect.area > self._max_area:
                self.kind[c] = KIND_BIT
                self.geob[c] = 1
            else:
                self.kind[c] = KIND_RECT
                self.rmbr[c] = rect.as_tuple()

        # grid payload compaction, then freeze cell arrays
        mc = self.config.merge_count
        flags = np.zeros(self.grid.total_cells + 1, bool) if mc >= 1 else None
        for c, row in rows.items():
            cells = _cells_from_row(row)
            if mc >= 1 and cells.shape[0] >= mc:
                flags[:] = False
                flags[cells] = True
                _merge_flag_array(flags, self.grid, mc)
                cells = np.flatnonzero(flags).astype(np.int32)
            self._cells[c] = cells
        self._query_cache = None

    def _initial_kind(self, succs: np.ndarray) -> int:
        """Neighbor scan: a reaching bit dominates, then rect, else grid."""
        saw_rect = False
        for s in succs:
            k = self.kind[s]
            if k == KIND_BIT and self.geob[s]:
                return KIND_BIT
            if k == KIND_RECT:
                saw_rect = True
        return KIND_RECT if saw_rect else KIND_GRID

    def _bbox_rect(self, bb: Tuple[int, int, int, int]) -> Rect:
        r0, c0, r1, c1 = bb
        res = self.grid.top_resolution
        b = self.graph.bounds
        x0, y0, _, _ = _kernels.cell_bounds(r0 * res + c0 + 1, res, b.min_x, b.min_y, b.max_x, b.max_y)
        _, _, x1, y1 = _kernels.cell_bounds(r1 * res + c1 + 1, res, b.min_x, b.min_y, b.max_x, b.max_y)
        return Rect(x0, y0, x1, y1)

    def _rect_of(self, c: int) -> Rect:
        return Rect(*self.rmbr[c])

    # -- payload views --------------------------------------------------

    @property
    def n_components(self) -> int:
        return self.cond.n_comp

    def component_of(self, v: int) -> int:
        if not 0 <= v < self.graph.n:
            raise ValueError(f"unknown vertex {v}")
        return int(self.cond.component_of[v])

    def aux_of_component(self, c: int) -> Aux:
        k = self.kind[c]
        if k == KIND_BIT:
            return BitAux(bool(self.geob[c]))
        if k == KIND_RECT:
            return RectAux(self._rect_of(c))
        return GridAux(frozenset(int(x) for x in self._cells[c]))

    def aux(self, v: int) -> Aux:
        return self.aux_of_component(self.component_of(v))

    def reach_cells(self, v: int) -> FrozenSet[int]:
        a = self.aux(v)
        if not isinstance(a, GridAux):
            raise TypeError(f"vertex {v} holds a {type(a).__name__}, not a grid payload")
        return a.cells

    def reach_rect(self, v: int) -> Rect:
        a = self.aux(v)
        if not isinstance(a, RectAux):
            raise TypeError(f"vertex {v} holds a {type(a).__name__}, not a rect payload")
        return a.rect

    def reach_bit(self, v: int) -> bool:
        a = self.aux(v)
        if not isinstance(a, BitAux):
            raise TypeError(f"vertex {v} holds a {type(a).__name__}, not a bit payload")
        return a.reaches

    def covered_l0(self, v: int) -> FrozenSet[int]:
        """Grid payload expanded to the finest layer."""
        return self.grid.covered_l0(self.reach_cells(v))

    # -- storage ---------------------------------------------------------

    def storage_report(self) -> StorageReport:
        """Deterministic byte accounting: bit = 1 byte, rect = 4 x f64,
        grid = delta-varint bytes of the sorted cell list."""
        bytes_by = {"B": 0, "R": 0, "G": 0}
        counts = {"B": 0, "R": 0, "G": 0}
        cells_stored = 0
        for c in range(self.cond.n_comp):
            k = KIND_NAMES[self.kind[c]]
            counts[k] += 1
            if k == "B":
                bytes_by["B"] += 1
            elif k == "R":
                bytes_by["R"] += 32
            else:
                cells = self._cells[c]
                cells_stored += cells.shape[0]
                bytes_by["G"] += codec.cell_list_nbytes(cells)
        return StorageReport(
            bytes_total=sum(bytes_by.values()),
            bytes_by_kind=bytes_by,
            counts_by_kind=counts,
            cells_stored=cells_stored,
            rmbrs_stored=counts["R"],
        )

    # -- kernels interface ------------------------------------------------

    def query_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """(cell_indptr, cell_ids) CSR over components, cached."""
        if self._query_cache is None:
            n_comp = self.cond.n_comp
            indptr = np.zeros(n_comp + 1, np.int64)
            for c in range(n_comp):
                cells = self._cells[c]
                indptr[c + 1] = indptr[c] + (cells.shape[0] if cells is not None else 0)
            flat = np.zeros(indptr[-1], np.int32)
            for c in range(n_comp):
                cells = self._cells[c]
                if cells is not None and cells.shape[0]:
                    flat[indptr[c] : indptr[c + 1]] = cells
            self._query_cache = (indptr, flat)
        return self._query_cache

    # -- maintenance -------------------------------------------------------

    def add_edge(self, u: int, v: int) -> MutationResult:
        """Insert u->v and restore index invariants.

        Cross-component additions update the from-side payload from the
        to-side and propagate through in-edges to a fixpoint; an addition
        closing a cycle recondenses and rebuilds (bounded by a fresh
        build).  Duplicate edges are a reported no-op.
        """
        self._check_vertex(u)
        self._check_vertex(v)
        if self.graph.has_edge(u, v):
            log.warning("add_edge(%d, %d): duplicate edge ignored", u, v)
            return MutationResult(False, False, 0, False, "duplicate")
        new_edges = np.concatenate([self.graph.edges, np.array([[u, v]], np.int32)])
        new_edges = new_edges[np.lexsort((new_edges[:, 1], new_edges[:, 0]))]
        cu = int(self.cond.component_of[u])
        cv = int(self.cond.component_of[v])
        if cu == cv:
            # members of one component already reach each other
            self._swap_graph_same_structure(new_edges)
            return MutationResult(True, False, 0, False, "internal")
        if self._dag_reaches(cv, cu):
            self._rebuild(self.graph.with_edges(new_edges))
            return MutationResult(True, True, 0, True, "cycle-closing")
        self._swap_graph_same_structure(new_edges, extra_dag_edge=(cu, cv))
        changed = self._absorb(cu, cv)
        propagated = 0
        if changed:
            propagated = self._propagate_growth(cu)
        self._query_cache = None
        return MutationResult(True, changed, propagated, False)

    def delete_edge(self, u: int, v: int) -> MutationResult:
        """Remove u->v; the from-side payload is recomputed from its
        remaining out-neighbors and changes propagate upstream."""
        self._check_vertex(u)
        self._check_vertex(v)
        if not self.graph.has_edge(u, v):
            raise ValueError(f"edge ({u}, {v}) not present")
        mask = ~((self.graph.edges[:, 0] == u) & (self.graph.edges[:, 1] == v))
        new_edges = self.graph.edges[mask]
        cu = int(self.cond.component_of[u])
        cv = int(self.cond.component_of[v])
        if cu == cv:
            # deleting inside a cycle may split it
            self._rebuild(self.graph.with_edges(new_edges))
            return MutationResult(True, True, 0, True, "intra-component")
        self._swap_graph_same_structure(new_edges)
        changed = self._recompute_component(cu)
        propagated = 0
        if changed:
            propagated = self._propagate_recompute(cu)
        self._query_cache = None
        return MutationResult(True, changed, propagated, False)

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.graph.n:
            raise ValueError(f"unknown vertex {v}")

    def _swap_graph_same_structure(
        self, new_edges: np.ndarray, extra_dag_edge: Optional[Tuple[int, int]] = None
    ) -> None:
        """Replace the edge set without changing the component partition."""
        g = self.graph.with_edges(new_edges)
        cond = self.cond
        comp = cond.component_of
        if g.m:
            cuv = np.stack([comp[g.edges[:, 0]], comp[g.edges[:, 1]]], axis=1).astype(np.int64)
            cuv = cuv[cuv[:, 0] != cuv[:, 1]]
            packed = np.unique(cuv[:, 0] * cond.n_comp + cuv[:, 1])
            dag_edges = np.stack(
                [packed // cond.n_comp, packed % cond.n_comp], axis=1
            ).astype(np.int32)
        else:
            dag_edges = np.zeros((0, 2), np.int32)
        dag = SpatialDiGraph(
            cond.n_comp, dag_edges, np.zeros(cond.n_comp), np.zeros(cond.n_comp),
            np.zeros(cond.n_comp, np.uint8), g.bounds,
        )
        new_cond = Condensation(
            g, comp, cond.n_comp, dag, cond.members_indptr, cond.members,
            cond.pts_indptr, cond.pts_x, cond.pts_y, cond.multi,
        )
        self.graph = g
        self.cond = new_cond
        order = reverse_topological_order(new_cond)
        self._topo_pos = np.empty(cond.n_comp, np.int64)
        self._topo_pos[order] = np.arange(cond.n_comp)

    def _rebuild(self, g: SpatialDiGraph) -> None:
        log.info("mutation triggers full recondensation and rebuild")
        self.grid = HierarchicalGrid(g.bounds, self.config.top_resolution)
        self._attach(g, condense(g))
        self._initialize_all()

    def _dag_reaches(self, src: int, dst: int) -> bool:
        if src == dst:
            return True
        indptr, indices = self.cond.dag.out_csr()
        seen = np.zeros(self.cond.n_comp, bool)
        seen[src] = True
        stack = [src]
        while stack:
            c = stack.pop()
            for w in indices[indptr[c] : indptr[c + 1]]:
                if w == dst:
                    return True
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        return False

    def _propagate_growth(self, origin: int) -> int:
        """Push payload growth through in-edges, deepest components first."""
        pos = self._topo_pos
        heap = [(int(pos[origin]), origin)]
        queued = {origin}
        propagated = 0
        while heap:
            _, x = heapq.heappop(heap)
            queued.discard(x)
            for p in self.cond.predecessors(x):
                p = int(p)
                if self._absorb(p, x):
                    propagated += 1
                    if p not in queued:
                        queued.add(p)
                        heapq.heappush(heap, (int(pos[p]), p))
        return propagated

    def _propagate_recompute(self, origin: int) -> int:
        pos = self._topo_pos
        heap = [(int(pos[origin]), origin)]
        queued = {origin}
        propagated = 0
        while heap:
            _, x = heapq.heappop(heap)
            queued.discard(x)
            for p in self.cond.predecessors(x):
                p = int(p)
                if self._recompute_component(p):
                    propagated += 1
                    if p not in queued:
                        queued.add(p)
                        heapq.heappush(heap, (int(pos[p]), p))
        return propagated

    # -- payload maintenance primitives -----------------------------------

    def maintain_bit_vertex(self, c: int, nbr: int) -> bool:
        """Fold a neighbor's payload into bit-typed component ``c``.

        A true bit is absorbing; otherwise the component upgrades to
        whatever the neighbor offers (its point's cell, its rect, or its
        cells).  Returns whether anything changed.
        """
        if self.geob[c]:
            return False
        k = self.kind[nbr]
        if k == KIND_BIT:
            if self.geob[nbr]:
                self.geob[c] = 1
                return True
            if self.cond.point_count(nbr):
                self._become_grid(c, self._pt_cells_of(nbr))
                return True
            return False
        if k == KIND_RECT:
            rect = mbr_union(self._rect_of(nbr), self._pts_bbox(nbr))
            self._become_rect(c, rect)
            return True
        cells = np.unique(np.concatenate([self._cells[nbr], self._pt_cells_of(nbr)]))
        self._become_grid(c, cells.astype(np.int32))
        return True

    def maintain_rect_vertex(self, c: int, nbr: int) -> bool:
        """Fold a neighbor into rect-typed ``c``; no growth returns False.

        Grid neighbors contribute a covering rectangle derived from
        their cells (off by at most one cell side per axis).
        """
        k = self.kind[nbr]
        if k == KIND_BIT and self.geob[nbr]:
            self.kind[c] = KIND_BIT
            self.geob[c] = 1
            return True
        contrib = self._neighbor_rect_contribution(nbr)
        cur = self._rect_of(c)
        if cur.contains_rect(contrib):
            return False
        self._become_rect(c, mbr_union(cur, contrib))
        return True

    def maintain_grid_vertex(self, c: int, nbr: int) -> bool:
        """Fold a bit/grid neighbor into grid-typed ``c``.

        Callers route reaching-bit and rect neighbors elsewhere first,
        since those force a type change.
        """
        add = self._pt_cells_of(nbr)
        if self.kind[nbr] == KIND_GRID:
            add = np.concatenate([self._cells[nbr], add])
        if add.shape[0] == 0:
            return False
        cur = self._cells[c]
        cells = np.unique(np.concatenate([cur, add])).astype(np.int32)
        if cells.shape[0] == cur.shape[0]:
            return False
        self._become_grid(c, cells)
        return True

    def _absorb(self, c: int, nbr: int) -> bool:
        k = self.kind[c]
        if k == KIND_BIT:
            return self.maintain_bit_vertex(c, nbr)
        if k == KIND_RECT:
            return self.maintain_rect_vertex(c, nbr)
        nk = self.kind[nbr]
        if nk == KIND_BIT and self.geob[nbr]:
            self.kind[c] = KIND_BIT
            self.geob[c] = 1
            self._cells[c] = None
            return True
        if nk == KIND_RECT:
            rect = mbr_union(
                self.grid.cells_bbox(self._cells[c]),
                self._neighbor_rect_contribution(nbr),
            )
            self._cells[c] = None
            self._become_rect(c, rect)
            return True
        return self.maintain_grid_vertex(c, nbr)

    def _neighbor_rect_contribution(self, nbr: int) -> Rect:
        k = self.kind[nbr]
        if k == KIND_RECT:
            base = self._rect_of(nbr)
        elif k == KIND_GRID:
            base = self.grid.cells_bbox(self._cells[nbr])
        else:
            base = EMPTY_RECT
        return mbr_union(base, self._pts_bbox(nbr))

    def _become_rect(self, c: int, rect: Rect) -> None:
        if rect.area > self._max_area:
            self.kind[c] = KIND_BIT
            self.geob[c] = 1
            self._cells[c] = None
            return
        self.kind[c] = KIND_RECT
        self.rmbr[c] = rect.as_tuple()
        self._cells[c] = None

    def _become_grid(self, c: int, cells: np.ndarray) -> None:
        cells = np.unique(cells).astype(np.int32)
        if cells.shape[0] == 0:
            raise AssertionError("grid payload must hold at least one cell")
        max_grids = self.config.max_reach_grids
        if max_grids is not None and cells.shape[0] >= max_grids:
            # degrade: rebuild the rect from every current out-neighbor
            self._become_rect(c, self._rect_from_neighbors(c))
            return
        self.kind[c] = KIND_GRID
        self._cells[c] = cells

    def _rect_from_neighbors(self, c: int) -> Rect:
        rect = EMPTY_RECT
        for s in self.cond.successors(c):
            s = int(s)
            if self.kind[s] == KIND_BIT and self.geob[s]:
                continue  # caller handles reaching-bit neighbors
            rect = mbr_union(rect, self._neighbor_rect_contribution(s))
        if self.cond.multi[c]:
            rect = mbr_union(rect, self._pts_bbox(c))
        return rect

    def _payload_snapshot(self, c: int):
        k = int(self.kind[c])
        if k == KIND_BIT:
            return (k, int(self.geob[c]))
        if k == KIND_RECT:
            return (k, tuple(self.rmbr[c]))
        return (k, self._cells[c].tobytes())

    def _recompute_component(self, c: int) -> bool:
        """Re-derive ``c``'s payload from its current out-neighbors."""
        old = self._payload_snapshot(c)
        succs = [int(s) for s in self.cond.successors(c)]
        init_kind = self._initial_kind(np.array(succs, np.int32))
        if init_kind == KIND_BIT:
            self.kind[c] = KIND_BIT
            self.geob[c] = 1
            self._cells[c] = None
        elif init_kind == KIND_GRID:
            parts = []
            for s in succs:
                if self.kind[s] == KIND_GRID:
                    parts.append(self._cells[s])
                parts.append(self._pt_cells_of(s))
            if self.cond.multi[c]:
                parts.append(self._pt_cells_of(c))
            cells = (
                np.unique(np.concatenate(parts)).astype(np.int32)
                if parts
                else np.zeros(0, np.int32)
            )
            if cells.shape[0] == 0:
                self.kind[c] = KIND_BIT
                self.geob[c] = 0
                self._cells[c] = None
            else:
                self._become_grid(c, cells)
        else:
            rect = self._rect_from_neighbors(c)
            self._cells[c] = None
            self._become_rect(c, rect)
        return self._payload_snapshot(c) != old


def _bbox_union(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def _merge_flag_array(flags: np.ndarray, grid: HierarchicalGrid, merge_count: int) -> None:
    """Bottom-up compaction of a cell-id flag array, in place.

    At each coarser layer, a cell whose next-finer region holds at least
    ``merge_count`` flagged cells is flagged itself and everything it
    covers, in every finer layer, is cleared.
    """
    offs = grid._offsets
    sides = grid._sides
    for layer in range(1, grid.num_layers):
        cs = sides[layer - 1]
        ps = sides[layer]
        child = flags[offs[layer - 1] + 1 : offs[layer - 1] + 1 + cs * cs].reshape(cs, cs)
        counts = child.reshape(ps, 2, ps, 2).sum(axis=(1, 3))
        merged = counts >= merge_count
        if not merged.any():
            continue
        parent = flags[offs[layer] + 1 : offs[layer] + 1 + ps * ps].reshape(ps, ps)
        parent |= merged
        for fl in range(layer):
            f = 1 << (layer - fl)
            cov = np.repeat(np.repeat(merged, f, axis=0), f, axis=1)
            fs = sides[fl]
            view = flags[offs[fl] + 1 : offs[fl] + 1 + fs * fs].reshape(fs, fs)
            view &= ~cov


def build_index(
    graph: SpatialDiGraph,
    config: IndexConfig,
    condensation: Optional[Condensation] = None,
) -> ReachIndex:
    """Build the index; pass a precomputed condensation to share it
    across configurations of the same graph."""
    return ReachIndex(graph, config, condensation)
