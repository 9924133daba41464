"""Pruned-traversal evaluation of "does v reach any spatial vertex in R".

The traversal runs depth-first over the component DAG, out-neighbors in
ascending component id.  Visiting a component first tests its members'
points against the query rectangle, then consults its payload:

* bit false: prune the branch (nothing spatial is reachable here).
* rect: fully inside the query -> answer true; disjoint -> prune;
  otherwise keep walking.
* grid: any cell fully inside the query -> true; all cells disjoint ->
  prune; a partial overlap (including a cell that strictly contains the
  query) keeps walking.

The start vertex checks only its own point up front; the points of any
fellow cycle members surface when its component expands.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from . import _kernels
from .grid import Rect
from .index import ReachIndex


class Termination(Enum):
    EXHAUSTED = "exhausted"
    SPATIAL_HIT = "spatial_hit"
    R_CONTAINED = "r_contained"
    G_CELL_CONTAINED = "g_cell_contained"


_TERM_BY_CODE = {
    _kernels.TERM_EXHAUSTED: Termination.EXHAUSTED,
    _kernels.TERM_SPATIAL_HIT: Termination.SPATIAL_HIT,
    _kernels.TERM_RECT_CONTAINED: Termination.R_CONTAINED,
    _kernels.TERM_CELL_CONTAINED: Termination.G_CELL_CONTAINED,
}


@dataclass(frozen=True)
class QueryOutcome:
    """Answer plus traversal accounting.

    ``expanded`` counts components whose out-edges were followed; the
    prune counters count prune events per payload case.  ``answer`` is
    true exactly when ``terminated_by`` is not EXHAUSTED.
    """

    answer: bool
    expanded: int
    pruned_b: int
    pruned_r_disjoint: int
    pruned_g_disjoint: int
    terminated_by: Termination
    empty_query: bool = False


_EMPTY_OUTCOME = QueryOutcome(
    answer=False,
    expanded=0,
    pruned_b=0,
    pruned_r_disjoint=0,
    pruned_g_disjoint=0,
    terminated_by=Termination.EXHAUSTED,
    empty_query=True,
)


def _run_batch(
    index: ReachIndex, vertices: np.ndarray, rects: np.ndarray, use_aux: bool
) -> np.ndarray:
    cond = index.cond
    dag_indptr, dag_indices = cond.dag.out_csr()
    cell_indptr, cell_ids = index.query_arrays()
    g = index.graph
    b = g.bounds
    start_comps = cond.component_of[vertices].astype(np.int32)
    out = np.zeros((vertices.shape[0], 6), np.int64)
    _kernels.range_reach_batch(
        dag_indptr,
        dag_indices,
        cond.pts_indptr,
        cond.pts_x,
        cond.pts_y,
        index.kind,
        index.geob,
        index.rmbr,
        cell_indptr,
        cell_ids,
        index.grid.top_resolution,
        b.min_x,
        b.min_y,
        b.max_x,
        b.max_y,
        start_comps,
        g.has_pt[vertices],
        g.px[vertices],
        g.py[vertices],
        rects,
        1 if use_aux else 0,
        out,
    )
    return out


def _outcome_from_row(row: np.ndarray, empty: bool = False) -> QueryOutcome:
    return QueryOutcome(
        answer=bool(row[0]),
        expanded=int(row[2]),
        pruned_b=int(row[3]),
        pruned_r_disjoint=int(row[4]),
        pruned_g_disjoint=int(row[5]),
        terminated_by=_TERM_BY_CODE[int(row[1])],
        empty_query=empty,
    )


def range_reach(index: ReachIndex, v: int, r: Rect, use_aux: bool = True) -> QueryOutcome:
    """Single query; ``use_aux=False`` runs the matched-order unpruned
    traversal (the reference for prune-dominance checks)."""
    if not 0 <= v < index.graph.n:
        raise ValueError(f"unknown vertex {v}")
    if r.is_empty:
        return _EMPTY_OUTCOME
    rows = _run_batch(
        index,
        np.array([v], np.int64),
        np.array([r.as_tuple()], np.float64),
        use_aux,
    )
    return _outcome_from_row(rows[0])


def range_reach_batch(
    index: ReachIndex,
    queries: Sequence[Tuple[int, Rect]],
    use_aux: bool = True,
) -> List[QueryOutcome]:
    """Element-wise ``range_reach``, order preserved.

    The index is read-only during evaluation, so batches may also be
    sharded across threads/processes by the caller.
    """
    if not queries:
        return []
    vs = np.array([q[0] for q in queries], np.int64)
    if vs.min() < 0 or vs.max() >= index.graph.n:
        raise ValueError("unknown vertex in batch")
    nonempty = np.array([not q[1].is_empty for q in queries], bool)
    rects = np.array(
        [q[1].as_tuple() if not q[1].is_empty else (0.0, 0.0, 0.0, 0.0) for q in queries],
        np.float64,
    )
    if rects.ndim == 1:
        rects = rects.reshape(-1, 4)
    idx = np.flatnonzero(nonempty)
    outcomes: List[QueryOutcome] = [_EMPTY_OUTCOME] * len(queries)
    if idx.size:
        rows = _run_batch(index, vs[idx], rects[idx], use_aux)
        for k, qi in enumerate(idx):
            outcomes[qi] = _outcome_from_row(rows[k])
    return outcomes


def answers_only(
    index: ReachIndex, queries: Sequence[Tuple[int, Rect]], use_aux: bool = True
) -> np.ndarray:
    """Boolean answers for a batch, skipping QueryOutcome construction."""
    if not queries:
        return np.zeros(0, bool)
    vs = np.array([q[0] for q in queries], np.int64)
    rects = np.array([q[1].as_tuple() for q in queries], np.float64).reshape(-1, 4)
    rows = _run_batch(index, vs, rects, use_aux)
    return rows[:, 0] != 0
