"""Three straightforward evaluation strategies, used as oracles and
benchmark comparators.

* ``traversal_query``: BFS from the start vertex, stop at the first
  spatial vertex inside the rectangle.  No precomputed state.
* ``TransitiveClosure``: per-component bitset over the components that
  contain spatial vertices; queries scan set bits.  Memory grows
  quadratically, so construction refuses graphs beyond desk scale.
* ``SpaReachBaseline``: a uniform bucket grid locates the spatial
  vertices inside the rectangle, then each candidate is tested against
  a reachability index (randomized interval labels with a DFS fallback,
  exact overall).  Candidates are tested in ascending vertex id and the
  count of tests performed is reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .graph import Condensation, SpatialDiGraph, condense, reverse_topological_order
from .grid import Rect

TC_MAX_VERTICES = 50_000


# ---------------------------------------------------------------------------
# plain traversal
# ---------------------------------------------------------------------------


def traversal_query(g: SpatialDiGraph, v: int, r: Rect) -> Tuple[bool, int]:
    """(answer, vertices dequeued)."""
    answers, counts = traversal_query_batch(g, [(v, r)])
    return bool(answers[0]), int(counts[0])


def traversal_query_batch(
    g: SpatialDiGraph, queries: Sequence[Tuple[int, Rect]]
) -> Tuple[np.ndarray, np.ndarray]:
    if not queries:
        return np.zeros(0, bool), np.zeros(0, np.int64)
    vs = np.array([q[0] for q in queries], np.int32)
    if vs.min() < 0 or vs.max() >= g.n:
        raise ValueError("unknown vertex")
    rects = np.array(
        [
            q[1].as_tuple() if not q[1].is_empty else (1.0, 1.0, -1.0, -1.0)
            for q in queries
        ],
        np.float64,
    ).reshape(-1, 4)
    indptr, indices = g.out_csr()
    out = np.zeros((len(queries), 2), np.int64)
    _kernels.traversal_batch(indptr, indices, g.px, g.py, g.has_pt, vs, rects, out)
    return out[:, 0] != 0, out[:, 1]


# ---------------------------------------------------------------------------
# transitive closure
# ---------------------------------------------------------------------------


@dataclass
class TransitiveClosure:
    cond: Condensation
    rows: np.ndarray  # uint64[n_comp, words], bit j = reaches spatial component j
    spatial_comps: np.ndarray  # int32, component id per bit position

    @property
    def nbytes(self) -> int:
        return int(self.rows.nbytes)


def build_tc(g: SpatialDiGraph, condensation: Optional[Condensation] = None) -> TransitiveClosure:
    if g.n > TC_MAX_VERTICES:
        raise ValueError(
            f"transitive closure refused for n={g.n} > {TC_MAX_VERTICES}: "
            "quadratic storage does not scale past desk-size graphs"
        )
    cond = condensation if condensation is not None else condense(g)
    counts = np.diff(cond.pts_indptr)
    spatial_comps = np.flatnonzero(counts > 0).astype(np.int32)
    col_of = np.full(cond.n_comp, -1, np.int64)
    col_of[spatial_comps] = np.arange(spatial_comps.shape[0])
    words = max(1, (spatial_comps.shape[0] + 63) >> 6)
    rows = np.zeros((cond.n_comp, words), np.uint64)
    indptr, indices = cond.dag.out_csr()
    for c in reverse_topological_order(cond):
        c = int(c)
        row = rows[c]
        for s in indices[indptr[c] : indptr[c + 1]]:
            row |= rows[s]
            j = col_of[s]
            if j >= 0:
                row[j >> 6] |= np.uint64(1) << np.uint64(j & 63)
        if cond.multi[c] and col_of[c] >= 0:
            j = col_of[c]
            row[j >> 6] |= np.uint64(1) << np.uint64(j & 63)
    return TransitiveClosure(cond, rows, spatial_comps)


def tc_query(tc: TransitiveClosure, v: int, r: Rect) -> bool:
    return bool(tc_query_batch(tc, [(v, r)])[0])


def tc_query_batch(tc: TransitiveClosure, queries: Sequence[Tuple[int, Rect]]) -> np.ndarray:
    if not queries:
        return np.zeros(0, bool)
    g = tc.cond.graph
    vs = np.array([q[0] for q in queries], np.int64)
    if vs.min() < 0 or vs.max() >= g.n:
        raise ValueError("unknown vertex")
    rects = np.array(
        [
            q[1].as_tuple() if not q[1].is_empty else (1.0, 1.0, -1.0, -1.0)
            for q in queries
        ],
        np.float64,
    ).reshape(-1, 4)
    out = np.zeros(len(queries), np.uint8)
    _kernels.tc_batch(
        tc.rows,
        tc.spatial_comps,
        tc.cond.pts_indptr,
        tc.cond.pts_x,
        tc.cond.pts_y,
        tc.cond.component_of[vs].astype(np.int32),
        g.has_pt[vs],
        g.px[vs],
        g.py[vs],
        rects,
        out,
    )
    return out != 0


# ---------------------------------------------------------------------------
# spatial index + reachability index
# ---------------------------------------------------------------------------


@dataclass
class SpatialBucketGrid:
    """Uniform bucket grid over the space; exact range retrieval."""

    resolution: int
    bounds: Rect
    bucket_indptr: np.ndarray
    bucket_vertices: np.ndarray  # int32, sorted within each bucket
    px: np.ndarray
    py: np.ndarray

    def range_query(self, r: Rect) -> np.ndarray:
        """Spatial vertices whose point lies in ``r`` (closed), ascending id."""
        if r.is_empty:
            return np.zeros(0, np.int32)
        b = self.bounds
        res = self.resolution
        clip = lambda val, hi: min(max(val, 0), hi)  # noqa: E731
        w = b.max_x - b.min_x
        h = b.max_y - b.min_y
        c0 = clip(int((r.min_x - b.min_x) * res / w), res - 1)
        c1 = clip(int((r.max_x - b.min_x) * res / w), res - 1)
        r0 = clip(int((r.min_y - b.min_y) * res / h), res - 1)
        r1 = clip(int((r.max_y - b.min_y) * res / h), res - 1)
        chunks = []
        for row in range(r0, r1 + 1):
            start = row * res + c0
            end = row * res + c1 + 1
            chunks.append(
                self.bucket_vertices[self.bucket_indptr[start] : self.bucket_indptr[end]]
            )
        if not chunks:
            return np.zeros(0, np.int32)
        cand = np.concatenate(chunks)
        if cand.size == 0:
            return cand
        keep = (
            (self.px[cand] >= r.min_x)
            & (self.px[cand] <= r.max_x)
            & (self.py[cand] >= r.min_y)
            & (self.py[cand] <= r.max_y)
        )
        return np.sort(cand[keep])

    @property
    def nbytes(self) -> int:
        return int(self.bucket_indptr.nbytes + self.bucket_vertices.nbytes)


@dataclass
class ReachLabels:
    """Randomized post-order interval labels over the component DAG.

    Containment of intervals is necessary for reachability, so a failed
    containment in any round is a certain negative; inconclusive pairs
    fall back to traversal, keeping answers exact.
    """

    cond: Condensation
    rmin: np.ndarray  # int32[rounds, n_comp]
    rpost: np.ndarray

    def reaches(self, u: int, v: int) -> bool:
        """Vertex-level u ~> v via at least one edge; a vertex reaches
        itself only through a cycle."""
        if u == v:
            return bool(self.cond.multi[self.cond.component_of[u]])
        found, _ = _spareach_kernel_single(self, u, np.array([v], np.int32))
        return bool(found)

    @property
    def nbytes(self) -> int:
        return int(self.rmin.nbytes + self.rpost.nbytes)


def build_reach_labels(
    g: SpatialDiGraph,
    rounds: int = 3,
    seed: int = 0,
    condensation: Optional[Condensation] = None,
) -> ReachLabels:
    cond = condensation if condensation is not None else condense(g)
    n = cond.n_comp
    indptr, indices = cond.dag.out_csr()
    order = reverse_topological_order(cond)
    rng = np.random.default_rng(seed)
    rmin = np.empty((rounds, n), np.int32)
    rpost = np.empty((rounds, n), np.int32)
    for r in range(rounds):
        perm_indices = indices.copy()
        for c in range(n):
            s, e = indptr[c], indptr[c + 1]
            if e - s > 1:
                rng.shuffle(perm_indices[s:e])
        roots = rng.permutation(n).astype(np.int32) if n else np.zeros(0, np.int32)
        post = _kernels.dfs_postorder(n, indptr, perm_indices, roots)
        rpost[r] = post
        rmin[r] = _kernels.label_minrank(order, indptr, indices, post)
    return ReachLabels(cond, rmin, rpost)


@dataclass
class SpaReachBaseline:
    spatial_grid: SpatialBucketGrid
    labels: ReachLabels

    @property
    def nbytes(self) -> int:
        return self.spatial_grid.nbytes + self.labels.nbytes


def build_spareach(
    g: SpatialDiGraph,
    bucket_resolution: int = 64,
    rounds: int = 3,
    seed: int = 0,
    condensation: Optional[Condensation] = None,
) -> SpaReachBaseline:
    b = g.bounds
    sp = g.spatial_vertices
    res = bucket_resolution
    w = b.max_x - b.min_x
    h = b.max_y - b.min_y
    cols = np.minimum(((g.px[sp] - b.min_x) * res / w).astype(np.int64), res - 1)
    rows_ = np.minimum(((g.py[sp] - b.min_y) * res / h).astype(np.int64), res - 1)
    bucket = rows_ * res + cols
    order = np.lexsort((sp, bucket))
    indptr = np.zeros(res * res + 1, np.int64)
    np.add.at(indptr, bucket + 1, 1)
    np.cumsum(indptr, out=indptr)
    grid = SpatialBucketGrid(res, b, indptr, sp[order].astype(np.int32), g.px, g.py)
    labels = build_reach_labels(g, rounds, seed, condensation)
    return SpaReachBaseline(grid, labels)


def _spareach_kernel_single(labels: ReachLabels, v: int, cands: np.ndarray):
    cond = labels.cond
    indptr, indices = cond.dag.out_csr()
    out = np.zeros((1, 2), np.int64)
    _kernels.spareach_batch(
        indptr,
        indices,
        labels.rmin,
        labels.rpost,
        cond.multi,
        np.array([v], np.int32),
        cond.component_of[np.array([v])].astype(np.int32),
        np.array([0, cands.shape[0]], np.int64),
        cands.astype(np.int32),
        cond.component_of[cands].astype(np.int32),
        out,
    )
    return out[0, 0], out[0, 1]


def spareach_query(idx: SpaReachBaseline, v: int, r: Rect) -> Tuple[bool, int]:
    """(answer, reachability checks performed)."""
    answers, checks = spareach_query_batch(idx, [(v, r)])
    return bool(answers[0]), int(checks[0])


def spareach_query_batch(
    idx: SpaReachBaseline, queries: Sequence[Tuple[int, Rect]]
) -> Tuple[np.ndarray, np.ndarray]:
    if not queries:
        return np.zeros(0, bool), np.zeros(0, np.int64)
    cond = idx.labels.cond
    g = cond.graph
    vs = np.array([q[0] for q in queries], np.int64)
    if vs.min() < 0 or vs.max() >= g.n:
        raise ValueError("unknown vertex")
    cand_lists: List[np.ndarray] = [idx.spatial_grid.range_query(q[1]) for q in queries]
    offsets = np.zeros(len(queries) + 1, np.int64)
    offsets[1:] = np.cumsum([c.shape[0] for c in cand_lists])
    flat = (
        np.concatenate(cand_lists).astype(np.int32)
        if offsets[-1]
        else np.zeros(0, np.int32)
    )
    # start vertices that are themselves spatial and inside the rectangle
    # are caught by the candidate scan (v is its own candidate)
    indptr, indices = cond.dag.out_csr()
    out = np.zeros((len(queries), 2), np.int64)
    _kernels.spareach_batch(
        indptr,
        indices,
        idx.labels.rmin,
        idx.labels.rpost,
        cond.multi,
        vs.astype(np.int32),
        cond.component_of[vs].astype(np.int32),
        offsets,
        flat,
        cond.component_of[flat].astype(np.int32) if flat.size else np.zeros(0, np.int32),
        out,
    )
    return out[:, 0] != 0, out[:, 1]
