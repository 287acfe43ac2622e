"""Compressed sparse row matrices and the dense kernels built on them.

`CsrMatrix` is an immutable CSR container whose constructor enforces the
canonical form used everywhere in this package: sorted, duplicate-free column
indices per row and finite values.  Vectors are plain 1-D ``float64`` numpy
arrays.

Kernels accumulate in ascending column order so repeated runs are bitwise
reproducible.  Sparse matrix-vector and matrix-matrix products are delegated
to ``scipy.sparse`` (whose CSR kernels traverse each row left to right); the
remaining kernels are written directly against the CSR arrays.
"""

import warnings

import numpy as np
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "CsrMatrix",
    "DenseLuFactor",
    "add",
    "dense_lu_factor",
    "dense_lu_solve",
    "diag_of",
    "hadamard",
    "row_sums",
    "spmv",
    "transpose",
    "triple_product",
]


def _readonly(a):
    a.flags.writeable = False
    return a


class CsrMatrix:
    """Immutable sparse matrix in compressed sparse row format.

    Parameters
    ----------
    n_rows, n_cols : int
        Matrix dimensions.
    row_ptr : array_like of int, shape (n_rows + 1,)
        Row offsets into `col_idx` and `values`.
    col_idx : array_like of int
        Column index of every stored entry; strictly increasing within a row.
    values : array_like of float
        Stored entries.  Explicit zeros are allowed.

    Raises
    ------
    ValueError
        If the offsets are malformed, indices are out of range or unsorted,
        or any value is NaN/Inf.
    """

    __slots__ = ("n_rows", "n_cols", "row_ptr", "col_idx", "values", "_scipy")

    def __init__(self, n_rows, n_cols, row_ptr, col_idx, values):
        n_rows = int(n_rows)
        n_cols = int(n_cols)
        if n_rows < 0 or n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        row_ptr = np.array(row_ptr, dtype=np.int64)
        col_idx = np.array(col_idx, dtype=np.int64)
        values = np.array(values, dtype=np.float64)
        if row_ptr.ndim != 1 or row_ptr.shape[0] != n_rows + 1:
            raise ValueError("row_ptr must have length n_rows + 1")
        if col_idx.ndim != 1 or values.ndim != 1 or col_idx.shape != values.shape:
            raise ValueError("col_idx and values must be 1-D arrays of equal length")
        nnz = col_idx.shape[0]
        if row_ptr[0] != 0 or row_ptr[-1] != nnz:
            raise ValueError("row_ptr must start at 0 and end at nnz")
        if np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if nnz:
            if col_idx.min() < 0 or col_idx.max() >= n_cols:
                raise ValueError("column index out of range")
            same_row = np.ones(nnz - 1, dtype=bool)
            starts = row_ptr[1:-1]
            starts = starts[(starts > 0) & (starts < nnz)]
            same_row[starts - 1] = False
            if np.any(np.diff(col_idx)[same_row] <= 0):
                raise ValueError("column indices must be strictly increasing within each row")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix values must be finite")
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.row_ptr = _readonly(row_ptr)
        self.col_idx = _readonly(col_idx)
        self.values = _readonly(values)
        self._scipy = None

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_dense(cls, a, drop_zeros=True):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        mask = a != 0 if drop_zeros else np.ones(a.shape, dtype=bool)
        rows, cols = np.nonzero(mask)
        row_ptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=a.shape[0]))])
        return cls(a.shape[0], a.shape[1], row_ptr, cols, a[rows, cols])

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m, dtype=np.float64, copy=True)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals):
        """Assemble from triplets; duplicates are summed in input order."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            first = np.ones(rows.size, dtype=bool)
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(first)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        row_ptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n_rows))])
        return cls(n_rows, n_cols, row_ptr, cols, vals)

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @classmethod
    def diagonal(cls, d):
        d = np.asarray(d, dtype=np.float64)
        n = d.shape[0]
        return cls(n, n, np.arange(n + 1), np.arange(n), d)

    # -- views ----------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.col_idx.shape[0])

    @property
    def T(self):
        return transpose(self)

    def row_indices(self):
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_ptr))

    def to_scipy(self):
        if self._scipy is None:
            m = sp.csr_matrix(
                (self.values, self.col_idx, self.row_ptr), shape=self.shape, copy=False
            )
            m.has_sorted_indices = True
            self._scipy = m
        return self._scipy

    def to_dense(self):
        out = np.zeros(self.shape)
        out[self.row_indices(), self.col_idx] = self.values
        return out

    def with_values(self, values):
        """Same sparsity pattern, new values."""
        return CsrMatrix(self.n_rows, self.n_cols, self.row_ptr, self.col_idx, values)

    def drop_zeros(self):
        keep = self.values != 0
        rows = self.row_indices()[keep]
        row_ptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=self.n_rows))])
        return CsrMatrix(self.n_rows, self.n_cols, row_ptr, self.col_idx[keep], self.values[keep])

    def same_pattern(self, other):
        return (
            self.shape == other.shape
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
        )

    def __matmul__(self, x):
        return spmv(self, x)

    def __eq__(self, other):
        if not isinstance(other, CsrMatrix):
            return NotImplemented
        return self.same_pattern(other) and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"

    def __getstate__(self):
        return (self.n_rows, self.n_cols, self.row_ptr, self.col_idx, self.values)

    def __setstate__(self, state):
        CsrMatrix.__init__(self, *state)


def _as_vector(x, n=None, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector")
    if n is not None and x.shape[0] != n:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {n}")
    return x


def spmv(A, x):
    """Return ``A @ x``.

    Raises
    ------
    ValueError
        If ``len(x) != A.n_cols``.
    """
    x = _as_vector(x, A.n_cols)
    return A.to_scipy() @ x


def transpose(A):
    """Transpose by a stable counting sort on column indices."""
    order = np.argsort(A.col_idx, kind="stable")
    rows = A.row_indices()
    row_ptr = np.concatenate([[0], np.cumsum(np.bincount(A.col_idx, minlength=A.n_cols))])
    return CsrMatrix(A.n_cols, A.n_rows, row_ptr, rows[order], A.values[order])


def triple_product(R, A, P):
    """Return ``R @ A @ P`` (evaluated as ``R @ (A @ P)``)."""
    if R.n_cols != A.n_rows or A.n_cols != P.n_rows:
        raise ValueError(f"non-conformable shapes {R.shape}, {A.shape}, {P.shape}")
    out = R.to_scipy() @ (A.to_scipy() @ P.to_scipy())
    return CsrMatrix.from_scipy(out)


def add(A, B, alpha=1.0, beta=1.0):
    """Return ``alpha*A + beta*B`` on the union pattern, keeping explicit zeros."""
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    rows = np.concatenate([A.row_indices(), B.row_indices()])
    cols = np.concatenate([A.col_idx, B.col_idx])
    vals = np.concatenate([alpha * A.values, beta * B.values])
    return CsrMatrix.from_coo(A.n_rows, A.n_cols, rows, cols, vals)


def scale(A, left=None, right=None):
    """Return ``diag(left) @ A @ diag(right)`` on the pattern of `A`."""
    vals = A.values.copy()
    if left is not None:
        vals *= _as_vector(left, A.n_rows, "left")[A.row_indices()]
    if right is not None:
        vals *= _as_vector(right, A.n_cols, "right")[A.col_idx]
    return A.with_values(vals)


def diag_positions(A):
    """Index into ``A.values`` of each diagonal entry, -1 where absent."""
    rows = A.row_indices()
    hit = np.flatnonzero(rows == A.col_idx)
    pos = np.full(min(A.shape), -1, dtype=np.int64)
    pos[rows[hit]] = hit
    return pos


def add_to_diagonal(A, d):
    """Return ``A + diag(d)``; reuses the pattern when every diagonal is stored."""
    d = _as_vector(d, A.n_rows, "d")
    pos = diag_positions(A)
    if np.all(pos >= 0):
        vals = A.values.copy()
        vals[pos] += d
        return A.with_values(vals)
    return add(A, CsrMatrix.diagonal(d))


def diag_of(A):
    """Diagonal of a square matrix (0 where no entry is stored)."""
    if A.n_rows != A.n_cols:
        raise ValueError("diag_of requires a square matrix")
    pos = diag_positions(A)
    out = np.zeros(A.n_rows)
    out[pos >= 0] = A.values[pos[pos >= 0]]
    return out


def row_sums(A):
    return np.bincount(A.row_indices(), weights=A.values, minlength=A.n_rows).astype(np.float64)


def hadamard(*vectors):
    """Elementwise product of two or more equal-length vectors."""
    if len(vectors) < 2:
        raise ValueError("hadamard needs at least two vectors")
    out = _as_vector(vectors[0], name="u").copy()
    for v in vectors[1:]:
        v = _as_vector(v, name="v")
        if v.shape != out.shape:
            raise ValueError(f"length mismatch {out.shape[0]} vs {v.shape[0]}")
        out *= v
    return out


class DenseLuFactor:
    """LU factorization with partial pivoting of a small dense matrix."""

    __slots__ = ("lu", "piv")

    def __init__(self, lu, piv):
        self.lu = _readonly(np.array(lu, dtype=np.float64))
        self.piv = _readonly(np.array(piv))

    @property
    def n(self):
        return self.lu.shape[0]

    def solve(self, b):
        return dense_lu_solve(self, b)

    def reconstruct(self):
        """Rebuild the factored matrix from ``P L U``."""
        n = self.n
        L = np.tril(self.lu, -1) + np.eye(n)
        U = np.triu(self.lu)
        perm = np.arange(n)
        for i, p in enumerate(self.piv):
            perm[i], perm[p] = perm[p], perm[i]
        A = np.empty((n, n))
        A[perm] = L @ U
        return A


def dense_lu_factor(A):
    """Factor a square matrix (dense array or `CsrMatrix`).

    Raises
    ------
    numpy.linalg.LinAlgError
        If a pivot is exactly zero.
    """
    if isinstance(A, CsrMatrix):
        A = A.to_dense()
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("dense_lu_factor requires a square matrix")
    if A.shape[0] == 0:
        return DenseLuFactor(np.zeros((0, 0)), np.zeros(0, dtype=np.int32))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    if np.any(np.diag(lu) == 0.0):
        raise np.linalg.LinAlgError("matrix is exactly singular (zero pivot)")
    return DenseLuFactor(lu, piv)


def dense_lu_solve(F, b):
    b = _as_vector(b, F.n, "b")
    if F.n == 0:
        return b.copy()
    return scipy.linalg.lu_solve((F.lu, F.piv), b, check_finite=False)
