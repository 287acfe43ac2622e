"""Right-preconditioned restarted GMRES."""

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator

from .sparse import CsrMatrix, spmv

__all__ = [
    "GmresBreakdown",
    "GmresParams",
    "SolveReport",
    "apply_operator_from_csr",
    "as_callable",
    "gmres",
]


class GmresBreakdown(RuntimeError):
    """Arnoldi broke down before the residual vanished (singular system)."""


@dataclass(frozen=True)
class GmresParams:
    restart: int = 30
    rel_tol: float = 1e-7
    max_iters: int = 1000

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError("restart must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


@dataclass
class SolveReport:
    """Outcome of one preconditioned solve.

    ``residual_history[k]`` is the relative residual estimate after ``k``
    Arnoldi steps (entry 0 is the initial residual).  The true residual
    ``||b - A x|| / ||b||`` of the returned iterate is
    ``final_relative_residual``.
    """

    iterations: int
    converged: bool
    residual_history: list
    final_relative_residual: float
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0
    counters: dict = field(default_factory=dict)

    def write_history_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "relative_residual"])
        for k, r in enumerate(self.residual_history):
            writer.writerow([k, repr(float(r))])


def apply_operator_from_csr(A):
    """Wrap a `CsrMatrix` as a ``scipy.sparse.linalg.LinearOperator``."""
    return LinearOperator(A.shape, matvec=lambda x: spmv(A, np.ravel(x)), dtype=np.float64)


def as_callable(op):
    """Turn a matrix, operator, preconditioner or function into ``f(x) -> y``."""
    if op is None:
        return lambda x: x.copy()
    if isinstance(op, CsrMatrix):
        return lambda x: spmv(op, x)
    if hasattr(op, "apply"):
        return op.apply
    if isinstance(op, LinearOperator) or hasattr(op, "matvec"):
        return op.matvec
    if callable(op):
        return op
    raise TypeError(f"cannot use {type(op).__name__} as a linear operator")


def gmres(A, M, b, x0=None, params=None):
    """Solve ``A x = b`` with right-preconditioned GMRES(m).

    Each cycle runs at most ``restart`` Arnoldi steps (modified Gram-Schmidt)
    on ``A M`` and solves the small least-squares problem with Givens
    rotations; the iterate is updated as ``x += M (V y)``.  The true residual
    is recomputed at the end of every cycle and decides convergence.

    Parameters
    ----------
    A : CsrMatrix, LinearOperator or callable
    M : preconditioner, LinearOperator, callable or None (identity)
    b : ndarray
    x0 : ndarray, optional
        Defaults to zero, so the initial relative residual is 1.
    params : GmresParams, optional

    Returns
    -------
    x : ndarray
    report : SolveReport

    Raises
    ------
    GmresBreakdown
        If the Krylov space becomes invariant while the residual is nonzero.
    """
    params = params or GmresParams()
    apply_A = as_callable(A)
    apply_M = as_callable(M)
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1:
        raise ValueError("b must be a 1-D vector")
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError("x0 has the wrong shape")

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, True, [0.0], 0.0)
    tol = params.rel_tol
    m = params.restart

    r = b - apply_A(x)
    beta = np.linalg.norm(r)
    history = [beta / bnorm]
    iterations = 0
    converged = history[0] <= tol
    while not converged and iterations < params.max_iters:
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        breakdown = False
        for j in range(m):
            if iterations >= params.max_iters:
                break
            w = apply_A(apply_M(V[j]))
            iterations += 1
            for i in range(j + 1):
                H[i, j] = np.dot(w, V[i])
                w -= H[i, j] * V[i]
            h_next = np.linalg.norm(w)
            H[j + 1, j] = h_next
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            rho = np.hypot(H[j, j], H[j + 1, j])
            if rho == 0.0:
                raise GmresBreakdown("singular Hessenberg matrix in GMRES")
            cs[j] = H[j, j] / rho
            sn[j] = H[j + 1, j] / rho
            H[j, j] = rho
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            history.append(abs(g[j + 1]) / bnorm)
            k = j + 1
            if h_next == 0.0:
                breakdown = True
                break
            V[j + 1] = w / h_next
            if abs(g[j + 1]) <= tol * bnorm:
                break
        if k == 0:
            break
        y = scipy.linalg.solve_triangular(H[:k, :k], g[:k], check_finite=False)
        x = x + apply_M(V[:k].T @ y)
        r = b - apply_A(x)
        beta = np.linalg.norm(r)
        converged = beta / bnorm <= tol
        if breakdown and not converged:
            raise GmresBreakdown(
                f"Krylov space became invariant with relative residual {beta / bnorm:.3e}"
            )
    return x, SolveReport(
        iterations=iterations,
        converged=bool(converged),
        residual_history=history,
        final_relative_residual=float(beta / bnorm),
    )
