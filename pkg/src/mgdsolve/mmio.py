"""Matrix Market coordinate files and plain-text vectors.

Values are written with 17 significant digits so every float64 survives a
write/read round trip bit for bit.
"""

import numpy as np

from .sparse import CsrMatrix

__all__ = ["read_matrix_market", "write_matrix_market", "read_vector", "write_vector"]

_HEADER = "%%MatrixMarket matrix coordinate real general"


class MatrixMarketError(ValueError):
    pass


def write_matrix_market(path, A, comment=None):
    rows = A.row_indices() + 1
    cols = A.col_idx + 1
    with open(path, "w") as fh:
        fh.write(_HEADER + "\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        for i, j, v in zip(rows.tolist(), cols.tolist(), A.values.tolist()):
            fh.write(f"{i} {j} {v:.16e}\n")


def read_matrix_market(path):
    """Read a ``coordinate real general`` (or ``symmetric``) file into CSR.

    Duplicate entries are summed, as the format prescribes.
    """
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0].lower() != "%%matrixmarket":
            raise MatrixMarketError(f"{path}: missing %%MatrixMarket header")
        obj, fmt, field, symm = (h.lower() for h in header[1:])
        if obj != "matrix" or fmt != "coordinate":
            raise MatrixMarketError(f"{path}: only coordinate matrices are supported")
        if field not in ("real", "integer", "double"):
            raise MatrixMarketError(f"{path}: unsupported field {field!r}")
        if symm not in ("general", "symmetric"):
            raise MatrixMarketError(f"{path}: unsupported symmetry {symm!r}")
        line = fh.readline()
        while line.startswith("%") or not line.strip():
            if not line:
                raise MatrixMarketError(f"{path}: missing size line")
            line = fh.readline()
        try:
            n_rows, n_cols, nnz = (int(t) for t in line.split())
        except ValueError as exc:
            raise MatrixMarketError(f"{path}: malformed size line {line.strip()!r}") from exc
        body = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.startswith("%")]
    if len(body) != nnz:
        raise MatrixMarketError(f"{path}: expected {nnz} entries, found {len(body)}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for k, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"{path}: malformed entry {ln!r}")
        rows[k] = int(parts[0]) - 1
        cols[k] = int(parts[1]) - 1
        vals[k] = float(parts[2])
    if nnz and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n_rows or cols.max() >= n_cols):
        raise MatrixMarketError(f"{path}: entry index out of range")
    if symm == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    try:
        return CsrMatrix.from_coo(n_rows, n_cols, rows, cols, vals)
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc


def write_vector(path, v):
    v = np.asarray(v, dtype=np.float64)
    with open(path, "w") as fh:
        for x in v.tolist():
            fh.write(f"{x:.16e}\n")


def read_vector(path, n=None):
    with open(path) as fh:
        tokens = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("%")]
    try:
        v = np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric vector entry") from exc
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{path}: expected {n} values, found {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{path}: vector contains NaN/Inf")
    return v
