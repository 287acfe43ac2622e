"""Serial classical (Ruge-Stuben) algebraic multigrid.

Setup builds a hierarchy from the matrix alone: a strength-of-connection
graph, a two-pass C/F splitting, classical interpolation and Galerkin coarse
operators, down to a coarsest level that is factored densely.  The solve
phase is a V(1,1) cycle with Gauss-Seidel relaxation in C/F ordering: C points
then F points on the way down, the reverse traversal on the way up.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .sparse import (
    CsrMatrix,
    DenseLuFactor,
    dense_lu_factor,
    diag_of,
    spmv,
    transpose,
    triple_product,
)

__all__ = [
    "AmgHierarchy",
    "AmgLevel",
    "AmgParams",
    "amg_setup",
    "amg_solve_to_tol",
    "build_interpolation",
    "cf_split",
    "hybrid_sym_gs_sweep",
    "strength_graph",
    "vcycle",
]

C_POINT = 1
F_POINT = 0

#: Coarsening is considered stalled when the coarse grid keeps this fraction.
STALL_RATIO = 0.9
#: Largest stalled level that is truncated and factored in place.
MAX_DENSE_TRUNCATE = 2000


@dataclass(frozen=True)
class AmgParams:
    strength_threshold: float = 0.25
    max_coarsest_size: int = 100
    n_presmooth: int = 1
    n_postsmooth: int = 1
    max_levels: int = 25

    def __post_init__(self):
        if not 0.0 < self.strength_threshold < 1.0:
            raise ValueError("strength_threshold must lie in (0, 1)")
        if self.max_coarsest_size < 1:
            raise ValueError("max_coarsest_size must be >= 1")
        if self.n_presmooth < 0 or self.n_postsmooth < 0:
            raise ValueError("smoothing sweep counts must be non-negative")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")


@dataclass(frozen=True, eq=False)
class AmgLevel:
    """One level of the hierarchy.

    The coarsest level carries neither an interpolation nor a C/F marker.
    """

    operator: CsrMatrix
    interpolation: CsrMatrix = None
    cf_marker: np.ndarray = None
    restriction: CsrMatrix = field(default=None, repr=False)
    diagonal: np.ndarray = field(default=None, repr=False)
    down_order: np.ndarray = field(default=None, repr=False)
    up_order: np.ndarray = field(default=None, repr=False)

    @property
    def size(self):
        return self.operator.n_rows


@dataclass(frozen=True, eq=False)
class AmgHierarchy:
    levels: tuple
    coarsest: DenseLuFactor
    params: AmgParams

    @property
    def n_levels(self):
        return len(self.levels)

    @property
    def operator(self):
        return self.levels[0].operator

    def operator_complexity(self):
        nnz = [lev.operator.nnz for lev in self.levels]
        return sum(nnz) / max(nnz[0], 1)

    def grid_complexity(self):
        sizes = [lev.size for lev in self.levels]
        return sum(sizes) / max(sizes[0], 1)

    def summary(self):
        lines = [f"{'level':>5} {'rows':>9} {'nnz':>10}"]
        for k, lev in enumerate(self.levels):
            lines.append(f"{k:>5} {lev.size:>9} {lev.operator.nnz:>10}")
        lines.append(f"operator complexity: {self.operator_complexity():.3f}")
        lines.append(f"grid complexity:     {self.grid_complexity():.3f}")
        return "\n".join(lines)


def strength_graph(A, theta=0.25):
    """Strong-dependence graph of a square matrix.

    Row ``i`` strongly depends on ``j != i`` iff
    ``-a_ij >= theta * max_{k != i} (-a_ik)``.  Rows whose largest negated
    off-diagonal is not positive have no strong connections.

    Returns
    -------
    CsrMatrix
        Pattern matrix (all stored values 1.0) of the strong dependencies.
    """
    if A.n_rows != A.n_cols:
        raise ValueError("strength_graph requires a square matrix")
    rows = A.row_indices()
    off = rows != A.col_idx
    neg = np.where(off, -A.values, -np.inf)
    row_max = np.full(A.n_rows, -np.inf)
    np.maximum.at(row_max, rows, neg)
    thresh = row_max[rows]
    strong = off & (thresh > 0) & (neg >= theta * thresh)
    keep_rows = rows[strong]
    row_ptr = np.concatenate([[0], np.cumsum(np.bincount(keep_rows, minlength=A.n_rows))])
    return CsrMatrix(A.n_rows, A.n_cols, row_ptr, A.col_idx[strong], np.ones(keep_rows.size))


def _adjacency(S):
    ptr = S.row_ptr.tolist()
    idx = S.col_idx.tolist()
    return [idx[ptr[i]:ptr[i + 1]] for i in range(S.n_rows)]


def cf_split(S):
    """Ruge-Stuben C/F splitting of a strength graph.

    The first pass is the greedy independent-set selection by descending
    influence count (ties to the lowest index); the second pass promotes
    F points so every pair of strongly connected F points shares a strong C
    neighbour.  Points without any strong connection become C points.

    Returns
    -------
    ndarray of int8
        ``1`` for C points, ``0`` for F points.
    """
    n = S.n_rows
    deps = _adjacency(S)
    infl = _adjacency(transpose(S))

    undecided = -1
    state = [undecided] * n
    lam = [len(infl[i]) for i in range(n)]
    heap = [(-lam[i], i) for i in range(n)]
    heapq.heapify(heap)
    while heap:
        neg_l, i = heapq.heappop(heap)
        if state[i] != undecided or -neg_l != lam[i]:
            continue
        state[i] = C_POINT
        for j in infl[i]:
            if state[j] == undecided:
                state[j] = F_POINT
                for k in deps[j]:
                    if state[k] == undecided:
                        lam[k] += 1
                        heapq.heappush(heap, (-lam[k], k))
        for j in deps[i]:
            if state[j] == undecided:
                lam[j] -= 1
                heapq.heappush(heap, (-lam[j], j))

    # Second pass: strong F-F connections need a common strong C point.
    for i in range(n):
        if state[i] != F_POINT:
            continue
        c_i = {k for k in deps[i] if state[k] == C_POINT}
        tentative = None
        for j in deps[i]:
            if state[j] != F_POINT:
                continue
            if c_i.isdisjoint(deps[j]):
                if tentative is not None:
                    state[i] = C_POINT
                    tentative = None
                    break
                tentative = j
                c_i.add(j)
        if tentative is not None:
            state[tentative] = C_POINT
    return np.array(state, dtype=np.int8)


def build_interpolation(A, S, cf_marker):
    """Classical interpolation from a C/F splitting.

    C rows are unit rows.  An F row ``i`` interpolates from its strong C
    neighbours ``C_i``; each strong F neighbour ``j`` is distributed over
    ``C_i`` in proportion to ``a_jk`` (entries of sign opposite to ``a_jj``
    only), and weak connections are lumped into the diagonal::

        w_ik = -(a_ik + sum_j a_ij * abar_jk / sum_{m in C_i} abar_jm)
               / (a_ii + sum_{n weak} a_in)

    Raises
    ------
    ValueError
        If a strong F neighbour shares no usable C point with its row (the
        second splitting pass rules this out).
    """
    n = A.n_rows
    cf = np.asarray(cf_marker)
    if cf.shape != (n,):
        raise ValueError("cf_marker length does not match the matrix")
    coarse_index = np.cumsum(cf == C_POINT) - 1
    nc = int(np.count_nonzero(cf == C_POINT))

    ptr = A.row_ptr.tolist()
    cols = A.col_idx.tolist()
    vals = A.values.tolist()
    deps = _adjacency(S)
    is_c = (cf == C_POINT).tolist()
    diag = diag_of(A).tolist()
    cidx = coarse_index.tolist()

    p_ptr = [0]
    p_cols = []
    p_vals = []
    for i in range(n):
        if is_c[i]:
            p_cols.append(cidx[i])
            p_vals.append(1.0)
            p_ptr.append(len(p_cols))
            continue
        strong = set(deps[i])
        c_i = [k for k in deps[i] if is_c[k]]
        c_set = set(c_i)
        weights = dict.fromkeys(c_i, 0.0)
        diag_t = diag[i]
        for jj in range(ptr[i], ptr[i + 1]):
            j = cols[jj]
            a_ij = vals[jj]
            if j == i:
                continue
            if j in c_set:
                weights[j] += a_ij
            elif j in strong:
                sign = diag[j] > 0
                part = {}
                for kk in range(ptr[j], ptr[j + 1]):
                    k = cols[kk]
                    a_jk = vals[kk]
                    if k in c_set and (a_jk < 0) == sign and a_jk != 0:
                        part[k] = a_jk
                denom = sum(part.values())
                if not part or denom == 0.0:
                    raise ValueError(
                        f"F point {i} has strong F neighbour {j} with no common C point"
                    )
                for k, a_jk in part.items():
                    weights[k] += a_ij * a_jk / denom
            else:
                diag_t += a_ij
        for k in sorted(weights, key=cidx.__getitem__):
            p_cols.append(cidx[k])
            p_vals.append(-weights[k] / diag_t)
        p_ptr.append(len(p_cols))
    P = CsrMatrix(n, nc, p_ptr, p_cols, p_vals)
    return P


def _prepare_level(A, P=None, cf=None):
    diag = diag_of(A)
    if np.any(diag == 0):
        raise ValueError("matrix has a zero diagonal entry")
    if cf is None:
        down = np.arange(A.n_rows, dtype=np.int64)
    else:
        down = np.concatenate([np.flatnonzero(cf == C_POINT), np.flatnonzero(cf == F_POINT)])
    return AmgLevel(
        operator=A,
        interpolation=P,
        cf_marker=cf,
        restriction=None if P is None else transpose(P),
        diagonal=diag,
        down_order=down.astype(np.int64),
        up_order=down[::-1].astype(np.int64).copy(),
    )


def amg_setup(A, params=None):
    """Build a classical AMG hierarchy.

    Coarsening recurses until the operator has at most
    ``params.max_coarsest_size`` rows, ``params.max_levels`` is reached, or
    coarsening stalls (coarse size >= 0.9 x fine size).  A stalled level with
    at most 2000 rows becomes the coarsest level; a larger one keeps its
    stalled coarse grid as the coarsest level.  The coarsest operator is LU
    factored.

    Raises
    ------
    ValueError
        For non-square input or a non-positive diagonal entry.
    """
    params = params or AmgParams()
    if A.n_rows != A.n_cols:
        raise ValueError("amg_setup requires a square matrix")
    if np.any(diag_of(A) <= 0):
        raise ValueError("amg_setup requires a positive diagonal")

    levels = []
    current = A
    while current.n_rows > params.max_coarsest_size and len(levels) + 1 < params.max_levels:
        S = strength_graph(current, params.strength_threshold)
        cf = cf_split(S)
        nc = int(np.count_nonzero(cf))
        stalled = nc >= STALL_RATIO * current.n_rows
        if stalled and current.n_rows <= MAX_DENSE_TRUNCATE:
            break
        P = build_interpolation(current, S, cf)
        levels.append(_prepare_level(current, P, cf))
        current = triple_product(levels[-1].restriction, current, P)
        if stalled:
            break
    levels.append(_prepare_level(current))
    return AmgHierarchy(tuple(levels), dense_lu_factor(current), params)


def hybrid_sym_gs_sweep(A, x, b, direction="down", cf_marker=None):
    """One in-place Gauss-Seidel sweep in C/F ordering.

    ``direction="down"`` relaxes all C points then all F points (each in
    ascending order); ``"up"`` traverses the exact reverse.  Without a marker
    the natural ordering is used.
    """
    if direction not in ("down", "up"):
        raise ValueError("direction must be 'down' or 'up'")
    n = A.n_rows
    if A.n_cols != n or x.shape != (n,) or np.shape(b) != (n,):
        raise ValueError("dimension mismatch in Gauss-Seidel sweep")
    level = _prepare_level(A, None, None if cf_marker is None else np.asarray(cf_marker))
    _relax(level, x, np.asarray(b, dtype=np.float64), direction)
    return x


def _relax(level, x, b, direction):
    A = level.operator
    order = level.down_order if direction == "down" else level.up_order
    _kernels.gauss_seidel(A.row_ptr, A.col_idx, A.values, level.diagonal, x, b, order)


def _residual(A, x, b):
    return _kernels.residual(A.row_ptr, A.col_idx, A.values, x, b)


def vcycle(h, b, x0=None):
    """Apply one V(n_presmooth, n_postsmooth) cycle and return the new iterate."""
    n = h.levels[0].size
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")
    if x0 is None:
        x = np.zeros(n)
    else:
        x = np.array(x0, dtype=np.float64)
        if x.shape != (n,):
            raise ValueError(f"initial guess has shape {x.shape}, expected ({n},)")
    return _cycle(h, 0, b, x)


def _cycle(h, k, b, x):
    if k == len(h.levels) - 1:
        return h.coarsest.solve(b)
    lev = h.levels[k]
    p = h.params
    for _ in range(p.n_presmooth):
        _relax(lev, x, b, "down")
    r = _residual(lev.operator, x, b)
    xc = _cycle(h, k + 1, spmv(lev.restriction, r), np.zeros(lev.interpolation.n_cols))
    x += spmv(lev.interpolation, xc)
    for _ in range(p.n_postsmooth):
        _relax(lev, x, b, "up")
    return x


def amg_solve_to_tol(h, b, tol=1e-2, max_cycles=200):
    """V-cycle from a zero guess until ``||b - A x|| <= tol * ||b||``.

    Returns
    -------
    x : ndarray
    cycles : int
        Cycles used; equals `max_cycles` when the tolerance was not reached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=np.float64)
    A = h.operator
    x = np.zeros(A.n_rows)
    target = tol * np.linalg.norm(b)
    if target == 0.0:
        return x, 0
    cycles = 0
    r = b
    while cycles < max_cycles and np.linalg.norm(r) > target:
        x = _cycle(h, 0, b, x)
        cycles += 1
        r = _residual(A, x, b)
    return x, cycles
