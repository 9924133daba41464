"""Hot inner loops, JIT-compiled with numba when available.

Every kernel is written once as a plain function over numpy arrays and
scalars.  At import time each one is either wrapped with ``numba.njit``
or left as-is, so the two backends share a single implementation and
cannot drift apart.

Backend selection:
  * default: use numba if it imports
  * ``RANGEREACH_NUMBA=0`` (or ``false``/``off``): force the pure-Python path
  * ``RANGEREACH_NUMBA=1``: require numba, fail loudly if it is missing

``python_impls`` keeps the unjitted functions importable either way;
``benchmarks/bench_backends.py`` uses it to time one backend against the
other.
"""

from __future__ import annotations

import os

import numpy as np

# aux payload kinds
KIND_BIT = 0
KIND_RECT = 1
KIND_GRID = 2

# query termination codes
TERM_EXHAUSTED = 0
TERM_SPATIAL_HIT = 1
TERM_RECT_CONTAINED = 2
TERM_CELL_CONTAINED = 3

# per-query component status
_ST_UNSEEN = 0
_ST_EXPANDED = 1
_ST_PRUNED_BIT = 2
_ST_PRUNED_RECT = 3
_ST_PRUNED_GRID = 4


def _resolve_backend() -> bool:
    flag = os.environ.get("RANGEREACH_NUMBA", "auto").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        if flag in ("1", "true", "on", "yes"):
            raise
        return False
    return True


NUMBA_ENABLED = _resolve_backend()

if NUMBA_ENABLED:
    from numba import njit as _njit

    def _jit(fn):
        return _njit(cache=True)(fn)
else:

    def _jit(fn):
        return fn


# ---------------------------------------------------------------------------
# grid cell arithmetic
# ---------------------------------------------------------------------------


def _cell_of_point_impl(x, y, res, bx0, by0, bx1, by1):
    # Half-open cells [lo, hi) on both axes; the space's max edge folds
    # into the last row/column so every in-bounds point has a cell.
    col = int((x - bx0) * res / (bx1 - bx0))
    row = int((y - by0) * res / (by1 - by0))
    if col >= res:
        col = res - 1
    if col < 0:
        col = 0
    if row >= res:
        row = res - 1
    if row < 0:
        row = 0
    return row * res + col + 1


def _cells_of_points_impl(xs, ys, res, bx0, by0, bx1, by1):
    n = xs.shape[0]
    out = np.empty(n, np.int32)
    for i in range(n):
        out[i] = cell_of_point(xs[i], ys[i], res, bx0, by0, bx1, by1)
    return out


def _cell_bounds_impl(cid, res, bx0, by0, bx1, by1):
    # Layered numbering: the finest layer takes ids 1..res*res row-major,
    # each coarser layer (side halved) continues the numbering.
    side = res
    base = 0
    while cid > base + side * side:
        base += side * side
        side //= 2
    local = cid - base - 1
    row = local // side
    col = local - row * side
    w = bx1 - bx0
    h = by1 - by0
    x0 = bx0 + w * col / side
    x1 = bx0 + w * (col + 1) / side
    y0 = by0 + h * row / side
    y1 = by0 + h * (row + 1) / side
    return x0, y0, x1, y1


# ---------------------------------------------------------------------------
# strongly connected components (iterative Tarjan)
# ---------------------------------------------------------------------------


def _scc_impl(n, indptr, indices):
    # Component ids are assigned in pop order, so for every cross-component
    # edge u->v the component of v gets a smaller id: ascending component id
    # is already a sinks-first order of the component DAG.
    index_of = np.full(n, -1, np.int64)
    low = np.zeros(n, np.int64)
    on_stack = np.zeros(n, np.uint8)
    scc_stack = np.empty(n, np.int32)
    comp_of = np.full(n, -1, np.int32)
    dfs_v = np.empty(n + 1, np.int32)
    dfs_e = np.empty(n + 1, np.int64)
    scc_top = 0
    counter = 0
    n_comp = 0
    for root in range(n):
        if index_of[root] != -1:
            continue
        top = 0
        dfs_v[0] = root
        dfs_e[0] = indptr[root]
        index_of[root] = counter
        low[root] = counter
        counter += 1
        scc_stack[scc_top] = root
        scc_top += 1
        on_stack[root] = 1
        while top >= 0:
            v = dfs_v[top]
            e = dfs_e[top]
            if e < indptr[v + 1]:
                dfs_e[top] = e + 1
                w = indices[e]
                if index_of[w] == -1:
                    index_of[w] = counter
                    low[w] = counter
                    counter += 1
                    scc_stack[scc_top] = w
                    scc_top += 1
                    on_stack[w] = 1
                    top += 1
                    dfs_v[top] = w
                    dfs_e[top] = indptr[w]
                elif on_stack[w] == 1:
                    if index_of[w] < low[v]:
                        low[v] = index_of[w]
            else:
                if low[v] == index_of[v]:
                    while True:
                        w = scc_stack[scc_top - 1]
                        scc_top -= 1
                        on_stack[w] = 0
                        comp_of[w] = n_comp
                        if w == v:
                            break
                    n_comp += 1
                top -= 1
                if top >= 0:
                    u = dfs_v[top]
                    if low[v] < low[u]:
                        low[u] = low[v]
    return comp_of, n_comp


# ---------------------------------------------------------------------------
# plain traversal baseline (vertex-level BFS, neighbors in ascending id)
# ---------------------------------------------------------------------------


def _traversal_batch_impl(indptr, indices, px, py, has_pt, starts, rects, out):
    n = indptr.shape[0] - 1
    mark = np.zeros(n, np.uint8)
    queue = np.empty(n, np.int32)
    for q in range(starts.shape[0]):
        qx0 = rects[q, 0]
        qy0 = rects[q, 1]
        qx1 = rects[q, 2]
        qy1 = rects[q, 3]
        head = 0
        tail = 0
        queue[tail] = starts[q]
        tail += 1
        mark[starts[q]] = 1
        found = 0
        dequeued = 0
        while head < tail:
            v = queue[head]
            head += 1
            dequeued += 1
            if has_pt[v] != 0:
                if qx0 <= px[v] <= qx1 and qy0 <= py[v] <= qy1:
                    found = 1
                    break
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if mark[w] == 0:
                    mark[w] = 1
                    queue[tail] = w
                    tail += 1
        for i in range(tail):
            mark[queue[i]] = 0
        out[q, 0] = found
        out[q, 1] = dequeued


# ---------------------------------------------------------------------------
# pruned traversal over the component DAG
# ---------------------------------------------------------------------------


def _range_reach_batch_impl(
    dag_indptr,
    dag_indices,
    pts_indptr,
    pts_x,
    pts_y,
    kind,
    geob,
    rmbr,
    cell_indptr,
    cell_ids,
    res,
    bx0,
    by0,
    bx1,
    by1,
    start_comps,
    start_has_pt,
    start_px,
    start_py,
    rects,
    use_aux,
    out,
):
    """Depth-first traversal with payload-based pruning.

    Out-neighbors expand in ascending component id.  Each component is
    examined at most once per query; re-arrivals at a pruned component
    re-count the prune without re-evaluating it, re-arrivals at an
    expanded component are skipped.  ``use_aux=0`` ignores payloads and
    yields the matched-order unpruned reference traversal.

    ``out`` rows: answer, termination code, expanded, pruned_bit,
    pruned_rect, pruned_grid.
    """
    n_comp = kind.shape[0]
    status = np.zeros(n_comp, np.uint8)
    touched = np.empty(n_comp, np.int32)
    stack = np.empty(dag_indices.shape[0] + 1, np.int32)
    for q in range(start_comps.shape[0]):
        qx0 = rects[q, 0]
        qy0 = rects[q, 1]
        qx1 = rects[q, 2]
        qy1 = rects[q, 3]
        answer = 0
        term = TERM_EXHAUSTED
        expanded = 0
        pruned_bit = 0
        pruned_rect = 0
        pruned_grid = 0
        ntouched = 0
        sc = start_comps[q]

        # the start vertex checks only its own point before any payload logic
        if start_has_pt[q] != 0 and qx0 <= start_px[q] <= qx1 and qy0 <= start_py[q] <= qy1:
            answer = 1
            term = TERM_SPATIAL_HIT
        else:
            proceed = True
            if use_aux != 0:
                k = kind[sc]
                if k == KIND_BIT:
                    if geob[sc] == 0:
                        pruned_bit += 1
                        proceed = False
                elif k == KIND_RECT:
                    r0 = rmbr[sc, 0]
                    r1 = rmbr[sc, 1]
                    r2 = rmbr[sc, 2]
                    r3 = rmbr[sc, 3]
                    if qx0 <= r0 and qy0 <= r1 and r2 <= qx1 and r3 <= qy1:
                        answer = 1
                        term = TERM_RECT_CONTAINED
                        proceed = False
                    elif r2 < qx0 or qx1 < r0 or r3 < qy0 or qy1 < r1:
                        pruned_rect += 1
                        proceed = False
                else:
                    any_overlap = False
                    for ci in range(cell_indptr[sc], cell_indptr[sc + 1]):
                        cx0, cy0, cx1, cy1 = cell_bounds(cell_ids[ci], res, bx0, by0, bx1, by1)
                        if qx0 <= cx0 and qy0 <= cy0 and cx1 <= qx1 and cy1 <= qy1:
                            answer = 1
                            term = TERM_CELL_CONTAINED
                            break
                        if not (cx1 < qx0 or qx1 < cx0 or cy1 < qy0 or qy1 < cy0):
                            any_overlap = True
                    if answer != 0:
                        proceed = False
                    elif not any_overlap:
                        pruned_grid += 1
                        proceed = False
            if proceed:
                # expanding the start component also surfaces the points of
                # its fellow cycle members, which the start reaches
                for pi in range(pts_indptr[sc], pts_indptr[sc + 1]):
                    if qx0 <= pts_x[pi] <= qx1 and qy0 <= pts_y[pi] <= qy1:
                        answer = 1
                        term = TERM_SPATIAL_HIT
                        break
                if answer == 0:
                    expanded += 1
                    status[sc] = _ST_EXPANDED
                    touched[ntouched] = sc
                    ntouched += 1
                    sp = 0
                    for j in range(dag_indptr[sc + 1] - 1, dag_indptr[sc] - 1, -1):
                        stack[sp] = dag_indices[j]
                        sp += 1
                    while sp > 0:
                        c = stack[sp - 1]
                        sp -= 1
                        st = status[c]
                        if st == _ST_EXPANDED:
                            continue
                        if st == _ST_PRUNED_BIT:
                            pruned_bit += 1
                            continue
                        if st == _ST_PRUNED_RECT:
                            pruned_rect += 1
                            continue
                        if st == _ST_PRUNED_GRID:
                            pruned_grid += 1
                            continue
                        # first visit: any member point inside the query wins
                        hit = False
                        for pi in range(pts_indptr[c], pts_indptr[c + 1]):
                            if qx0 <= pts_x[pi] <= qx1 and qy0 <= pts_y[pi] <= qy1:
                                hit = True
                                break
                        if hit:
                            answer = 1
                            term = TERM_SPATIAL_HIT
                            break
                        if use_aux != 0:
                            k = kind[c]
                            if k == KIND_BIT:
                                if geob[c] == 0:
                                    pruned_bit += 1
                                    status[c] = _ST_PRUNED_BIT
                                    touched[ntouched] = c
                                    ntouched += 1
                                    continue
                            elif k == KIND_RECT:
                                r0 = rmbr[c, 0]
                                r1 = rmbr[c, 1]
                                r2 = rmbr[c, 2]
                                r3 = rmbr[c, 3]
                                if qx0 <= r0 and qy0 <= r1 and r2 <= qx1 and r3 <= qy1:
                                    answer = 1
                                    term = TERM_RECT_CONTAINED
                                    break
                                if r2 < qx0 or qx1 < r0 or r3 < qy0 or qy1 < r1:
                                    pruned_rect += 1
                                    status[c] = _ST_PRUNED_RECT
                                    touched[ntouched] = c
                                    ntouched += 1
                                    continue
                            else:
                                any_overlap = False
                                contained = False
                                for ci in range(cell_indptr[c], cell_indptr[c + 1]):
                                    cx0, cy0, cx1, cy1 = cell_bounds(
                                        cell_ids[ci], res, bx0, by0, bx1, by1
                                    )
                                    if qx0 <= cx0 and qy0 <= cy0 and cx1 <= qx1 and cy1 <= qy1:
                                        contained = True
                                        break
                                    if not (cx1 < qx0 or qx1 < cx0 or cy1 < qy0 or qy1 < cy0):
                                        any_overlap = True
                                if contained:
                                    answer = 1
                                    term = TERM_CELL_CONTAINED
                                    break
                                if not any_overlap:
                                    pruned_grid += 1
                                    status[c] = _ST_PRUNED_GRID
                                    touched[ntouched] = c
                                    ntouched += 1
                                    continue
                        expanded += 1
                        status[c] = _ST_EXPANDED
                        touched[ntouched] = c
                        ntouched += 1
                        for j in range(dag_indptr[c + 1] - 1, dag_indptr[c] - 1, -1):
                            stack[sp] = dag_indices[j]
                            sp += 1
        for i in range(ntouched):
            status[touched[i]] = _ST_UNSEEN
        out[q, 0] = answer
        out[q, 1] = term
        out[q, 2] = expanded
        out[q, 3] = pruned_bit
        out[q, 4] = pruned_rect
        out[q, 5] = pruned_grid


# ---------------------------------------------------------------------------
# transitive-closure baseline query
# ---------------------------------------------------------------------------


def _tc_batch_impl(
    rows,
    spc_comps,
    pts_indptr,
    pts_x,
    pts_y,
    start_comps,
    start_has_pt,
    start_px,
    start_py,
    rects,
    out,
):
    n_spc = spc_comps.shape[0]
    for q in range(start_comps.shape[0]):
        qx0 = rects[q, 0]
        qy0 = rects[q, 1]
        qx1 = rects[q, 2]
        qy1 = rects[q, 3]
        found = 0
        if start_has_pt[q] != 0 and qx0 <= start_px[q] <= qx1 and qy0 <= start_py[q] <= qy1:
            found = 1
        else:
            row = rows[start_comps[q]]
            for j in range(n_spc):
                if (row[j >> 6] >> np.uint64(j & 63)) & np.uint64(1):
                    c = spc_comps[j]
                    for pi in range(pts_indptr[c], pts_indptr[c + 1]):
                        if qx0 <= pts_x[pi] <= qx1 and qy0 <= pts_y[pi] <= qy1:
                            found = 1
                            break
                    if found != 0:
                        break
        out[q] = found


# ---------------------------------------------------------------------------
# interval labels (randomized post-order) + reachability with DFS fallback
# ---------------------------------------------------------------------------


def _dfs_postorder_impl(n, indptr, indices, root_order):
    post = np.full(n, -1, np.int32)
    dfs_v = np.empty(n + 1, np.int32)
    dfs_e = np.empty(n + 1, np.int64)
    counter = 0
    for ri in range(root_order.shape[0]):
        root = root_order[ri]
        if post[root] != -1:
            continue
        post[root] = -2  # on stack
        top = 0
        dfs_v[0] = root
        dfs_e[0] = indptr[root]
        while top >= 0:
            v = dfs_v[top]
            e = dfs_e[top]
            if e < indptr[v + 1]:
                dfs_e[top] = e + 1
                w = indices[e]
                if post[w] == -1:
                    post[w] = -2
                    top += 1
                    dfs_v[top] = w
                    dfs_e[top] = indptr[w]
            else:
                post[v] = counter
                counter += 1
                top -= 1
    return post


def _label_minrank_impl(order, indptr, indices, post):
    # order lists components sinks-first, so successor ranks are final
    rmin = post.copy()
    for i in range(order.shape[0]):
        c = order[i]
        m = rmin[c]
        for j in range(indptr[c], indptr[c + 1]):
            w = indices[j]
            if rmin[w] < m:
                m = rmin[w]
        rmin[c] = m
    return rmin


def _spareach_batch_impl(
    dag_indptr,
    dag_indices,
    rmin,
    rpost,
    multi,
    src_vids,
    src_comps,
    cand_offsets,
    cand_vids,
    cand_comps,
    out,
):
    """For each query, test candidates in order until one is reachable.

    Interval labels give certain "not reachable" verdicts; the first
    inconclusive candidate triggers one full DFS from the source whose
    marks answer every later candidate in O(1).
    """
    rounds = rmin.shape[0]
    n_comp = dag_indptr.shape[0] - 1
    mark = np.zeros(n_comp, np.uint8)
    stack = np.empty(n_comp, np.int32)
    for q in range(src_vids.shape[0]):
        src_v = src_vids[q]
        src_c = src_comps[q]
        found = 0
        checks = 0
        dfs_done = False
        for idx in range(cand_offsets[q], cand_offsets[q + 1]):
            t_v = cand_vids[idx]
            t_c = cand_comps[idx]
            checks += 1
            if t_v == src_v:
                found = 1
                break
            if t_c == src_c:
                if multi[t_c] != 0:
                    found = 1
                    break
                continue
            maybe = True
            for r in range(rounds):
                if not (rmin[r, src_c] <= rmin[r, t_c] and rpost[r, t_c] <= rpost[r, src_c]):
                    maybe = False
                    break
            if not maybe:
                continue
            if not dfs_done:
                sp = 0
                for j in range(dag_indptr[src_c], dag_indptr[src_c + 1]):
                    w = dag_indices[j]
                    if mark[w] == 0:
                        mark[w] = 1
                        stack[sp] = w
                        sp += 1
                while sp > 0:
                    sp -= 1
                    c = stack[sp]
                    for j in range(dag_indptr[c], dag_indptr[c + 1]):
                        w = dag_indices[j]
                        if mark[w] == 0:
                            mark[w] = 1
                            stack[sp] = w
                            sp += 1
                dfs_done = True
            if mark[t_c] != 0:
                found = 1
                break
        if dfs_done:
            for c in range(n_comp):
                mark[c] = 0
        out[q, 0] = found
        out[q, 1] = checks


python_impls = {
    "cell_of_point": _cell_of_point_impl,
    "cells_of_points": _cells_of_points_impl,
    "cell_bounds": _cell_bounds_impl,
    "scc": _scc_impl,
    "traversal_batch": _traversal_batch_impl,
    "range_reach_batch": _range_reach_batch_impl,
    "tc_batch": _tc_batch_impl,
    "dfs_postorder": _dfs_postorder_impl,
    "label_minrank": _label_minrank_impl,
    "spareach_batch": _spareach_batch_impl,
}

cell_of_point = _jit(_cell_of_point_impl)
cell_bounds = _jit(_cell_bounds_impl)
cells_of_points = _jit(_cells_of_points_impl)
scc = _jit(_scc_impl)
traversal_batch = _jit(_traversal_batch_impl)
range_reach_batch = _jit(_range_reach_batch_impl)
tc_batch = _jit(_tc_batch_impl)
dfs_postorder = _jit(_dfs_postorder_impl)
label_minrank = _jit(_label_minrank_impl)
spareach_batch = _jit(_spareach_batch_impl)

active_impls = {
    "cell_of_point": cell_of_point,
    "cells_of_points": cells_of_points,
    "cell_bounds": cell_bounds,
    "scc": scc,
    "traversal_batch": traversal_batch,
    "range_reach_batch": range_reach_batch,
    "tc_batch": tc_batch,
    "dfs_postorder": dfs_postorder,
    "label_minrank": label_minrank,
    "spareach_batch": spareach_batch,
}
