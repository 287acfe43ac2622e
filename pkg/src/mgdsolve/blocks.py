"""The (G+2) x (G+2) block structure of a multi-group radiation diffusion system.

Unknowns are grouped by physical variable: ``G`` radiation groups, then the
electron temperature ``E``, then the ion temperature ``I``, each with ``N``
cells.  Diagonal blocks are sparse; the only off-diagonal blocks are the
diagonal couplings ``D_gE``, ``D_Eg`` (g = 1..G) and ``D_EI = D_IE``, stored
as vectors.

A block vector is a ``(G+2, N)`` array: rows ``0..G-1`` are the groups, row
``-2`` is E and row ``-1`` is I.  Flattening it in C order gives the
variable-major monolithic ordering.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import mmio
from .sparse import CsrMatrix, diag_of, hadamard, row_sums, spmv

__all__ = [
    "BlockSystem",
    "IndicatorConfig",
    "block_labels",
    "block_residual",
    "from_monolithic",
    "load_block_system",
    "save_block_system",
    "to_monolithic",
    "weak_coupling_factor",
    "weak_diag_dominance_factor",
]

E = -2
I = -1  # noqa: E741


def block_labels(G):
    return [str(g + 1) for g in range(G)] + ["E", "I"]


@dataclass(frozen=True)
class IndicatorConfig:
    theta_wd: float = 0.9
    theta_wc: float = 1e-2
    sigma_wc: float = 0.5

    def __post_init__(self):
        for name in ("theta_wd", "theta_wc", "sigma_wc"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")


def _vec(v, n, name):
    v = np.array(v, dtype=np.float64)
    if v.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN/Inf")
    v.flags.writeable = False
    return v


class BlockSystem:
    """Block linear system ``A T = f`` with diagonal couplings.

    Parameters
    ----------
    blocks : sequence of CsrMatrix
        The ``G + 2`` diagonal blocks ``A_1..A_G, A_E, A_I``, each ``N x N``
        with a positive diagonal.
    d_gE, d_Eg : array_like, shape (G, N)
        Group-to-electron and electron-to-group coupling diagonals.
    d_EI : array_like, shape (N,)
        Electron-ion coupling diagonal (``D_IE`` is the same vector).
    rhs : array_like, shape (G + 2, N), optional
        Right-hand side; zero when omitted.
    d_IE : array_like, optional
        Only checked for equality with `d_EI`.
    """

    def __init__(self, blocks, d_gE, d_Eg, d_EI, rhs=None, d_IE=None):
        blocks = tuple(blocks)
        if len(blocks) < 3:
            raise ValueError("a block system needs at least one group plus E and I")
        G = len(blocks) - 2
        for label, A in zip(block_labels(G), blocks):
            if not isinstance(A, CsrMatrix):
                raise TypeError(f"block A_{label} must be a CsrMatrix")
        N = blocks[0].n_rows
        for label, A in zip(block_labels(G), blocks):
            if A.shape != (N, N):
                raise ValueError(f"block A_{label} has shape {A.shape}, expected ({N}, {N})")
            if np.any(diag_of(A) <= 0):
                raise ValueError(f"block A_{label} must have a positive diagonal")
        self.G = G
        self.N = N
        self.blocks = blocks
        self.d_gE = np.stack([_vec(row, N, f"D_{g + 1}E") for g, row in enumerate(_rows(d_gE, G))])
        self.d_Eg = np.stack([_vec(row, N, f"D_E{g + 1}") for g, row in enumerate(_rows(d_Eg, G))])
        self.d_gE.flags.writeable = False
        self.d_Eg.flags.writeable = False
        self.d_EI = _vec(d_EI, N, "D_EI")
        if d_IE is not None and not np.array_equal(_vec(d_IE, N, "D_IE"), self.d_EI):
            raise ValueError("D_EI and D_IE must be equal")
        if rhs is None:
            rhs = np.zeros((G + 2, N))
        rhs = np.array(rhs, dtype=np.float64).reshape(G + 2, N)
        if not np.all(np.isfinite(rhs)):
            raise ValueError("right-hand side contains NaN/Inf")
        rhs.flags.writeable = False
        self.rhs = rhs

    @property
    def d_IE(self):
        return self.d_EI

    @property
    def A_E(self):
        return self.blocks[E]

    @property
    def A_I(self):
        return self.blocks[I]

    @property
    def n_total(self):
        return (self.G + 2) * self.N

    @property
    def labels(self):
        return block_labels(self.G)

    def group(self, g):
        return self.blocks[g]

    def coupling_to_E(self, k):
        """``D_kE`` for block index ``k`` (a group or I)."""
        return self.d_EI if k in (I, self.G + 1) else self.d_gE[k]

    def coupling_from_E(self, k):
        """``D_Ek`` for block index ``k`` (a group or I)."""
        return self.d_EI if k in (I, self.G + 1) else self.d_Eg[k]

    def as_blocks(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.size != self.n_total:
            raise ValueError(f"vector has {x.size} entries, expected {self.n_total}")
        return x.reshape(self.G + 2, self.N)

    def with_couplings(self, d_gE=None, d_Eg=None, d_EI=None):
        """Copy with some coupling diagonals replaced."""
        return BlockSystem(
            self.blocks,
            self.d_gE if d_gE is None else d_gE,
            self.d_Eg if d_Eg is None else d_Eg,
            self.d_EI if d_EI is None else d_EI,
            self.rhs,
        )

    def __eq__(self, other):
        if not isinstance(other, BlockSystem):
            return NotImplemented
        return (
            self.G == other.G
            and self.N == other.N
            and all(a == b for a, b in zip(self.blocks, other.blocks))
            and np.array_equal(self.d_gE, other.d_gE)
            and np.array_equal(self.d_Eg, other.d_Eg)
            and np.array_equal(self.d_EI, other.d_EI)
            and np.array_equal(self.rhs, other.rhs)
        )

    __hash__ = None

    def __repr__(self):
        return f"BlockSystem(G={self.G}, N={self.N})"


def _rows(d, G):
    d = np.asarray(d, dtype=np.float64)
    if d.ndim == 1 and G == 1:
        d = d[None, :]
    if d.ndim != 2 or d.shape[0] != G:
        raise ValueError(f"group couplings must have shape ({G}, N)")
    return list(d)


def to_monolithic(s):
    """Assemble the full ``(G+2)N`` square matrix in variable-major order.

    Zero coupling entries are not stored.
    """
    N = s.N
    rows, cols, vals = [], [], []
    for k, A in enumerate(s.blocks):
        rows.append(A.row_indices() + k * N)
        cols.append(A.col_idx + k * N)
        vals.append(A.values)
    cells = np.arange(N)
    e_off = s.G * N
    i_off = (s.G + 1) * N

    def put(d, r_off, c_off):
        nz = np.flatnonzero(d)
        rows.append(cells[nz] + r_off)
        cols.append(cells[nz] + c_off)
        vals.append(d[nz])

    for g in range(s.G):
        put(s.d_gE[g], g * N, e_off)
        put(s.d_Eg[g], e_off, g * N)
    put(s.d_EI, e_off, i_off)
    put(s.d_IE, i_off, e_off)
    n = s.n_total
    return CsrMatrix.from_coo(n, n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def from_monolithic(A, G, N, rhs=None):
    """Split a variable-major monolithic matrix back into a `BlockSystem`.

    Raises
    ------
    ValueError
        If an off-diagonal block is not diagonal or lies outside the
        coupling pattern.
    """
    nb = G + 2
    if A.shape != (nb * N, nb * N):
        raise ValueError("matrix size does not match G and N")
    rows = A.row_indices()
    br, bc = rows // N, A.col_idx // N
    lr, lc = rows % N, A.col_idx % N
    e, i = G, G + 1
    blocks = []
    for k in range(nb):
        sel = (br == k) & (bc == k)
        blocks.append(CsrMatrix.from_coo(N, N, lr[sel], lc[sel], A.values[sel]))

    allowed = {(g, e) for g in range(G)} | {(e, g) for g in range(G)} | {(e, i), (i, e)}
    off = br != bc
    for r, c in set(zip(br[off].tolist(), bc[off].tolist())):
        if (r, c) not in allowed:
            raise ValueError(f"unexpected nonzero block ({r}, {c})")
    if np.any(off & (lr != lc)):
        raise ValueError("coupling blocks must be diagonal")

    def coupling(r, c):
        d = np.zeros(N)
        sel = (br == r) & (bc == c)
        d[lr[sel]] = A.values[sel]
        return d

    d_gE = np.array([coupling(g, e) for g in range(G)])
    d_Eg = np.array([coupling(e, g) for g in range(G)])
    return BlockSystem(blocks, d_gE, d_Eg, coupling(e, i), rhs, d_IE=coupling(i, e))


def weak_diag_dominance_factor(A, theta_wd=0.9):
    """Fraction of rows ``k`` with ``sum_j a_kj < theta_wd * a_kk``.

    Row sums are signed, exactly as in the definition.
    """
    d = diag_of(A)
    if np.any(d <= 0):
        raise ValueError("weak_diag_dominance_factor requires a positive diagonal")
    count = int(np.count_nonzero(row_sums(A) < theta_wd * d))
    return count / A.n_rows


def weak_coupling_factor(d, A, theta_wc=1e-2):
    """Fraction of rows ``k`` with ``-d_k <= theta_wc * a_kk``.

    `d` is the diagonal of a coupling block ``D_ab`` and `A` the diagonal
    block ``A_a`` of the same block row.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (A.n_rows,):
        raise ValueError("coupling length does not match the block size")
    count = int(np.count_nonzero(-d <= theta_wc * diag_of(A)))
    return count / A.n_rows


def block_residual(s, x, b=None):
    """Return ``b - A x`` as a ``(G+2, N)`` array, computed blockwise.

    Coupling terms are applied as elementwise (Hadamard) products.
    """
    x = s.as_blocks(x)
    b = s.rhs if b is None else s.as_blocks(b)
    r = np.empty_like(x)
    for g in range(s.G):
        r[g] = b[g] - spmv(s.blocks[g], x[g]) - hadamard(s.d_gE[g], x[E])
    coupled = spmv(s.A_E, x[E])
    for g in range(s.G):
        coupled += hadamard(s.d_Eg[g], x[g])
    coupled += hadamard(s.d_EI, x[I])
    r[E] = b[E] - coupled
    r[I] = b[I] - spmv(s.A_I, x[I]) - hadamard(s.d_IE, x[E])
    return r


# -- on-disk manifest ---------------------------------------------------------

MANIFEST_NAME = "system.manifest"


def save_block_system(s, directory):
    """Write `s` as a manifest plus Matrix Market and vector files.

    Returns the manifest path.
    """
    os.makedirs(directory, exist_ok=True)
    entries = [("G", str(s.G)), ("N", str(s.N))]
    for label, A in zip(s.labels, s.blocks):
        name = f"A_{label}.mtx"
        mmio.write_matrix_market(os.path.join(directory, name), A)
        entries.append((f"A_{label}", name))
    vectors = []
    for g in range(s.G):
        vectors.append((f"D_{g + 1}E", s.d_gE[g]))
        vectors.append((f"D_E{g + 1}", s.d_Eg[g]))
    vectors.append(("D_EI", s.d_EI))
    vectors.append(("D_IE", s.d_IE))
    for label, row in zip(s.labels, s.rhs):
        vectors.append((f"f_{label}", row))
    for key, v in vectors:
        name = f"{key}.vec"
        mmio.write_vector(os.path.join(directory, name), v)
        entries.append((key, name))
    path = os.path.join(directory, MANIFEST_NAME)
    with open(path, "w") as fh:
        fh.write("# multi-group radiation diffusion block system\n")
        for key, value in entries:
            fh.write(f"{key}={value}\n")
    return path


class ManifestError(ValueError):
    pass


def _parse_manifest(path):
    entries = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ManifestError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key = key.strip()
            if key in entries:
                raise ManifestError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value.strip()
    return entries


def load_block_system(path):
    """Read a manifest written by `save_block_system` and validate it.

    `path` may be the manifest file or its directory.
    """
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_NAME)
    base = os.path.dirname(os.path.abspath(path))
    entries = _parse_manifest(path)

    def need(key):
        if key not in entries:
            raise ManifestError(f"{path}: missing key {key!r}")
        return entries[key]

    try:
        G = int(need("G"))
        N = int(need("N"))
    except ValueError as exc:
        raise ManifestError(f"{path}: G and N must be integers") from exc
    if G < 1 or N < 1:
        raise ManifestError(f"{path}: G and N must be positive")
    labels = block_labels(G)

    def resolve(key):
        return os.path.join(base, need(key))

    try:
        blocks = [mmio.read_matrix_market(resolve(f"A_{lab}")) for lab in labels]
        d_gE = [mmio.read_vector(resolve(f"D_{g + 1}E"), N) for g in range(G)]
        d_Eg = [mmio.read_vector(resolve(f"D_E{g + 1}"), N) for g in range(G)]
        d_EI = mmio.read_vector(resolve("D_EI"), N)
        d_IE = mmio.read_vector(resolve("D_IE"), N)
        rhs = [mmio.read_vector(resolve(f"f_{lab}"), N) for lab in labels]
        return BlockSystem(blocks, np.array(d_gE), np.array(d_Eg), d_EI, np.array(rhs), d_IE=d_IE)
    except ManifestError:
        raise
    except (OSError, ValueError, TypeError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc
