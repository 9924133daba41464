"""Directed graph with optional per-vertex spatial points.

File formats
------------
Edge file: UTF-8 text, one ``<src> <dst>`` pair of decimal integers per
line, ``#`` starts a comment.  An optional first data line holding a
single integer declares the vertex count; ids are then taken literally
and must be < n (isolated vertices allowed).  Without the count header,
dense ids 0..n-1 are assigned by first appearance in the edge file and
the original labels are kept for re-serialization.

Spatial file: ``<vertex_id> <x> <y>`` per line with decimal floats,
same comment rule, ids in the edge file's namespace.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels
from .grid import Rect

log = logging.getLogger(__name__)

UNIT_BOUNDS = Rect(0.0, 0.0, 1.0, 1.0)


def _build_csr(n: int, src: np.ndarray, dst: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """CSR over edges already sorted by (src, dst)."""
    indptr = np.zeros(n + 1, np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, np.ascontiguousarray(dst, np.int32)


class SpatialDiGraph:
    """Immutable directed graph; some vertices carry a 2-D point.

    Edges are deduplicated and self-loops dropped at construction (they
    cannot change any reachability answer); counts of both are kept for
    reporting.  Mutation happens only through the index maintenance API,
    which builds replacement instances.
    """

    def __init__(
        self,
        n: int,
        edges: np.ndarray,
        px: np.ndarray,
        py: np.ndarray,
        has_pt: np.ndarray,
        bounds: Rect = UNIT_BOUNDS,
        labels: Optional[np.ndarray] = None,
        dup_edges_dropped: int = 0,
        self_loops_dropped: int = 0,
    ):
        self.n = int(n)
        self.edges = edges  # (m, 2) int32, sorted lexicographically, unique
        self.px = px
        self.py = py
        self.has_pt = has_pt
        self.bounds = bounds
        self.labels = labels if labels is not None else np.arange(n, dtype=np.int64)
        self.dup_edges_dropped = dup_edges_dropped
        self.self_loops_dropped = self_loops_dropped
        self._out: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._in: Optional[Tuple[np.ndarray, np.ndarray]] = None

    # -- construction -------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Union[np.ndarray, Iterable[Tuple[int, int]]],
        points: Optional[Dict[int, Tuple[float, float]]] = None,
        bounds: Rect = UNIT_BOUNDS,
        labels: Optional[np.ndarray] = None,
    ) -> "SpatialDiGraph":
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range")
        m_raw = arr.shape[0]
        loops = int(np.count_nonzero(arr[:, 0] == arr[:, 1])) if m_raw else 0
        if loops:
            arr = arr[arr[:, 0] != arr[:, 1]]
        if arr.shape[0]:
            arr = np.unique(arr, axis=0)
        dups = m_raw - loops - arr.shape[0]
        if loops or dups:
            log.warning("dropped %d self-loops and %d duplicate edges", loops, dups)
        px = np.zeros(n, np.float64)
        py = np.zeros(n, np.float64)
        has = np.zeros(n, np.uint8)
        if points:
            for vid, (x, y) in points.items():
                if not 0 <= vid < n:
                    raise ValueError(f"spatial vertex id {vid} out of range")
                if not bounds.contains_point(x, y):
                    raise ValueError(f"point ({x}, {y}) outside bounds {bounds.as_tuple()}")
                px[vid] = x
                py[vid] = y
                has[vid] = 1
        return cls(
            n,
            arr.astype(np.int32),
            px,
            py,
            has,
            bounds,
            labels,
            dup_edges_dropped=dups,
            self_loops_dropped=loops,
        )

    def replace_points(
        self, px: np.ndarray, py: np.ndarray, has_pt: np.ndarray
    ) -> "SpatialDiGraph":
        return SpatialDiGraph(
            self.n, self.edges, px, py, has_pt, self.bounds, self.labels,
            self.dup_edges_dropped, self.self_loops_dropped,
        )

    def with_edges(self, edges: np.ndarray) -> "SpatialDiGraph":
        g = SpatialDiGraph(
            self.n, edges, self.px, self.py, self.has_pt, self.bounds, self.labels
        )
        return g

    # -- views ---------------------------------------------------------

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @property
    def spatial_count(self) -> int:
        return int(self.has_pt.sum())

    @property
    def spatial_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.has_pt).astype(np.int32)

    def out_csr(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._out is None:
            self._out = _build_csr(self.n, self.edges[:, 0], self.edges[:, 1])
        return self._out

    def in_csr(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._in is None:
            order = np.lexsort((self.edges[:, 0], self.edges[:, 1]))
            self._in = _build_csr(self.n, self.edges[order, 1], self.edges[order, 0])
        return self._in

    def out_neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.out_csr()
        return indices[indptr[v] : indptr[v + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.in_csr()
        return indices[indptr[v] : indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.out_neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.shape[0] and nb[i] == v)

    def point_of(self, v: int) -> Optional[Tuple[float, float]]:
        if self.has_pt[v]:
            return (float(self.px[v]), float(self.py[v]))
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpatialDiGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.has_pt, other.has_pt)
            and np.array_equal(self.px[self.has_pt == 1], other.px[other.has_pt == 1])
            and np.array_equal(self.py[self.has_pt == 1], other.py[other.has_pt == 1])
            and self.bounds == other.bounds
        )


# ---------------------------------------------------------------------------
# file ingestion
# ---------------------------------------------------------------------------


def _data_lines(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def load_graph(
    edge_file: Union[str, Path],
    spatial_file: Optional[Union[str, Path]] = None,
    bounds: Rect = UNIT_BOUNDS,
) -> SpatialDiGraph:
    edge_file = Path(edge_file)
    declared_n: Optional[int] = None
    pairs = []
    remap: Dict[int, int] = {}
    first = True
    for lineno, line in _data_lines(edge_file):
        parts = line.split()
        if first and len(parts) == 1:
            try:
                declared_n = int(parts[0])
            except ValueError:
                raise ValueError(f"{edge_file}:{lineno}: malformed count header {line!r}")
            if declared_n < 0:
                raise ValueError(f"{edge_file}:{lineno}: negative vertex count")
            first = False
            continue
        first = False
        if len(parts) != 2:
            raise ValueError(f"{edge_file}:{lineno}: expected '<src> <dst>', got {line!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"{edge_file}:{lineno}: non-integer vertex id in {line!r}")
        if declared_n is not None:
            for vid in (a, b):
                if not 0 <= vid < declared_n:
                    raise ValueError(
                        f"{edge_file}:{lineno}: vertex id {vid} >= declared n {declared_n}"
                    )
            pairs.append((a, b))
        else:
            for vid in (a, b):
                if vid < 0:
                    raise ValueError(f"{edge_file}:{lineno}: negative vertex id {vid}")
                if vid not in remap:
                    remap[vid] = len(remap)
            pairs.append((remap[a], remap[b]))

    if declared_n is not None:
        n = declared_n
        labels = np.arange(n, dtype=np.int64)
    else:
        n = len(remap)
        labels = np.empty(n, np.int64)
        for lab, vid in remap.items():
            labels[vid] = lab

    points: Dict[int, Tuple[float, float]] = {}
    if spatial_file is not None:
        spatial_file = Path(spatial_file)
        for lineno, line in _data_lines(spatial_file):
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(
                    f"{spatial_file}:{lineno}: expected '<vertex_id> <x> <y>', got {line!r}"
                )
            try:
                raw_id = int(parts[0])
                x, y = float(parts[1]), float(parts[2])
            except ValueError:
                raise ValueError(f"{spatial_file}:{lineno}: malformed value in {line!r}")
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ValueError(f"{spatial_file}:{lineno}: non-finite coordinate in {line!r}")
            if declared_n is not None:
                if not 0 <= raw_id < n:
                    raise ValueError(
                        f"{spatial_file}:{lineno}: vertex id {raw_id} >= declared n {n}"
                    )
                vid = raw_id
            else:
                if raw_id not in remap:
                    raise ValueError(
                        f"{spatial_file}:{lineno}: vertex id {raw_id} not present in edge file"
                    )
                vid = remap[raw_id]
            if not bounds.contains_point(x, y):
                raise ValueError(
                    f"{spatial_file}:{lineno}: point ({x}, {y}) outside bounds {bounds.as_tuple()}"
                )
            points[vid] = (x, y)

    return SpatialDiGraph.from_edges(n, pairs, points, bounds, labels)


def save_graph(
    g: SpatialDiGraph,
    edge_file: Union[str, Path],
    spatial_file: Optional[Union[str, Path]] = None,
) -> None:
    """Serialize with a count header and edges sorted by label pair."""
    lab = g.labels
    with open(edge_file, "w", encoding="utf-8") as fh:
        fh.write(f"{g.n}\n")
        rows = sorted((int(lab[u]), int(lab[v])) for u, v in g.edges)
        for a, b in rows:
            fh.write(f"{a} {b}\n")
    if spatial_file is not None:
        with open(spatial_file, "w", encoding="utf-8") as fh:
            for v in np.flatnonzero(g.has_pt):
                fh.write(f"{int(lab[v])} {g.px[v]!r} {g.py[v]!r}\n")


# ---------------------------------------------------------------------------
# condensation
# ---------------------------------------------------------------------------


@dataclass
class Condensation:
    """Strongly connected components of a graph, with reachability intact.

    ``component_of[v]`` maps vertices to dense component ids; ``dag`` is
    the acyclic component graph whose adjacency lists are sorted
    ascending.  Per-component views (members, member spatial points,
    whether it has >= 2 members) back the index and the query engine.
    """

    graph: SpatialDiGraph
    component_of: np.ndarray
    n_comp: int
    dag: SpatialDiGraph
    members_indptr: np.ndarray
    members: np.ndarray
    pts_indptr: np.ndarray
    pts_x: np.ndarray
    pts_y: np.ndarray
    multi: np.ndarray  # uint8, component has >= 2 members
    _rev_topo: Optional[np.ndarray] = field(default=None, repr=False)

    def members_of(self, c: int) -> np.ndarray:
        return self.members[self.members_indptr[c] : self.members_indptr[c + 1]]

    def points_of(self, c: int) -> Tuple[np.ndarray, np.ndarray]:
        s, e = self.pts_indptr[c], self.pts_indptr[c + 1]
        return self.pts_x[s:e], self.pts_y[s:e]

    def point_count(self, c: int) -> int:
        return int(self.pts_indptr[c + 1] - self.pts_indptr[c])

    def successors(self, c: int) -> np.ndarray:
        return self.dag.out_neighbors(c)

    def predecessors(self, c: int) -> np.ndarray:
        return self.dag.in_neighbors(c)


def condense(g: SpatialDiGraph) -> Condensation:
    indptr, indices = g.out_csr()
    comp_of, n_comp = _kernels.scc(g.n, indptr, indices)
    comp_of = np.asarray(comp_of, np.int32)
    n_comp = int(n_comp)

    # members grouped by component, ascending vertex id within each
    order = np.lexsort((np.arange(g.n), comp_of))
    members = order.astype(np.int32)
    members_indptr = np.zeros(n_comp + 1, np.int64)
    np.add.at(members_indptr, comp_of + 1, 1)
    np.cumsum(members_indptr, out=members_indptr)

    sizes = np.diff(members_indptr)
    multi = (sizes >= 2).astype(np.uint8)

    # spatial member points per component
    sp_mask = g.has_pt[members] == 1
    sp_members = members[sp_mask]
    pts_indptr = np.zeros(n_comp + 1, np.int64)
    np.add.at(pts_indptr, comp_of[sp_members] + 1, 1)
    np.cumsum(pts_indptr, out=pts_indptr)
    pts_x = np.ascontiguousarray(g.px[sp_members], np.float64)
    pts_y = np.ascontiguousarray(g.py[sp_members], np.float64)

    # deduplicated cross-component edges
    if g.m:
        cu = comp_of[g.edges[:, 0]].astype(np.int64)
        cv = comp_of[g.edges[:, 1]].astype(np.int64)
        cross = cu != cv
        packed = cu[cross] * n_comp + cv[cross]
        packed = np.unique(packed)
        dag_edges = np.stack([packed // n_comp, packed % n_comp], axis=1).astype(np.int32)
    else:
        dag_edges = np.zeros((0, 2), np.int32)
    dag = SpatialDiGraph(
        n_comp,
        dag_edges,
        np.zeros(n_comp),
        np.zeros(n_comp),
        np.zeros(n_comp, np.uint8),
        g.bounds,
    )
    return Condensation(
        g, comp_of, n_comp, dag, members_indptr, members, pts_indptr, pts_x, pts_y, multi
    )


def reverse_topological_order(cond: Condensation) -> np.ndarray:
    """Components ordered sinks-first: out-neighbors precede their sources.

    Kahn's algorithm over out-degrees; deterministic for a fixed graph.
    The result is cached on the condensation.
    """
    if cond._rev_topo is not None:
        return cond._rev_topo
    n = cond.n_comp
    indptr, indices = cond.dag.out_csr()
    out_deg = np.diff(indptr).copy()
    in_indptr, in_indices = cond.dag.in_csr()
    order = np.empty(n, np.int32)
    queue = deque(int(c) for c in np.flatnonzero(out_deg == 0))
    pos = 0
    while queue:
        c = queue.popleft()
        order[pos] = c
        pos += 1
        for p in in_indices[in_indptr[c] : in_indptr[c + 1]]:
            out_deg[p] -= 1
            if out_deg[p] == 0:
                queue.append(int(p))
    if pos != n:
        raise AssertionError("condensation graph contains a cycle")
    cond._rev_topo = order
    return order
