"""Approximate block inverses used inside the block preconditioners.

Four strategies approximate ``w = A^{-1} b``:

``jacobi_fixed`` (#1)
    a fixed number of Jacobi sweeps; chosen when the block is diagonally
    dominant in the sense of the weak-diagonal-dominance factor being 0;
``vcycle_fixed`` (#2)
    a fixed number of AMG V-cycles;
``vcycle_to_tol`` (#3)
    V-cycles until the relative residual drops below a tolerance;
``schur_iterative`` (#4)
    fixed-point iteration for a Schur complement
    ``S = A_a - D_aE Y^{-1} D_Ea`` built from approximate inverses of its
    pieces.

``direct`` solves exactly with a dense LU factorization; it exists for
verification on small systems.
"""

from dataclasses import dataclass

import numpy as np

from ..amg import AmgParams, amg_setup, amg_solve_to_tol, vcycle
from ..blocks import weak_diag_dominance_factor
from ..counters import OperationCounters
from ..sparse import dense_lu_factor, diag_of, spmv

__all__ = ["InnerSolveOption", "InnerSolver", "SchurFixedPoint", "select_fast_option"]

KINDS = ("jacobi_fixed", "vcycle_fixed", "vcycle_to_tol", "schur_iterative", "direct")


@dataclass(frozen=True)
class InnerSolveOption:
    kind: str
    sweeps: int = 1
    tol: float = 1e-2
    max_cycles: int = 200
    inner: "InnerSolveOption" = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown inner solve kind {self.kind!r}")
        if self.kind in ("jacobi_fixed", "vcycle_fixed", "schur_iterative") and self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.kind == "vcycle_to_tol" and not self.tol > 0:
            raise ValueError("tol must be positive")


def select_fast_option(A, sweeps, theta_wd=0.9):
    """Jacobi when no row is weakly diagonally dominant, V-cycles otherwise."""
    if weak_diag_dominance_factor(A, theta_wd) == 0.0:
        return InnerSolveOption("jacobi_fixed", sweeps=sweeps)
    return InnerSolveOption("vcycle_fixed", sweeps=sweeps)


class InnerSolver:
    """Approximate inverse of one labelled block.

    Parameters
    ----------
    label : str
        Name used in the inner-cycle counters (``"A_E"``, ``"S_3"``, ...).
    matrix : CsrMatrix
    option : InnerSolveOption
        Any kind except ``schur_iterative`` (see `SchurFixedPoint`).
    amg_params : AmgParams, optional
    hierarchy : AmgHierarchy, optional
        Reuse an existing hierarchy for `matrix`.
    """

    def __init__(self, label, matrix, option, amg_params=None, hierarchy=None):
        if option.kind == "schur_iterative":
            raise ValueError("use SchurFixedPoint for the iterative Schur option")
        self.label = label
        self.matrix = matrix
        self.option = option
        self.hierarchy = None
        self._lu = None
        self._diag = None
        if option.kind == "jacobi_fixed":
            d = diag_of(matrix)
            if np.any(d == 0):
                raise ValueError(f"block {label} has a zero diagonal; Jacobi is undefined")
            self._diag = d
            return
        try:
            if option.kind == "direct":
                self._lu = dense_lu_factor(matrix)
            else:
                self.hierarchy = hierarchy or amg_setup(matrix, amg_params or AmgParams())
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"block {label}: {exc}") from exc

    def solve(self, rhs, counters=None, count=True):
        opt = self.option
        if opt.kind == "jacobi_fixed":
            x = rhs / self._diag
            for _ in range(opt.sweeps - 1):
                x = x + (rhs - spmv(self.matrix, x)) / self._diag
            cycles = opt.sweeps
        elif opt.kind == "vcycle_fixed":
            x = vcycle(self.hierarchy, rhs)
            for _ in range(opt.sweeps - 1):
                x = vcycle(self.hierarchy, rhs, x)
            cycles = opt.sweeps
        elif opt.kind == "vcycle_to_tol":
            x, cycles = amg_solve_to_tol(self.hierarchy, rhs, opt.tol, opt.max_cycles)
        else:
            x = self._lu.solve(rhs)
            cycles = 1
        if counters is not None:
            if count:
                counters.matrix_inverse += 1
            counters.inner_cycles[self.label] += cycles
        return x


class SchurFixedPoint:
    """Fixed-point approximation of ``S^{-1}`` for ``S = A - diag(dl) Y^{-1} diag(dr)``.

    From a zero start, ``w <- A^{-1} (q + dl * Y^{-1}(dr * w))`` is repeated
    `sweeps` times, where ``A^{-1}`` and ``Y^{-1}`` are themselves
    approximate solvers.
    """

    def __init__(self, label, base, other, d_left, d_right, sweeps):
        if sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        self.label = label
        self.base = base
        self.other = other
        self.d_left = d_left
        self.d_right = d_right
        self.sweeps = sweeps

    def solve(self, rhs, counters=None, count=True):
        inner = OperationCounters() if counters is not None else None
        # The first step starts from w = 0, where Y^{-1}(0) = 0.
        w = self.base.solve(rhs, inner, count=False)
        for _ in range(self.sweeps - 1):
            w = self.base.solve(
                rhs + self.d_left * self.other.solve(self.d_right * w, inner, count=False),
                inner,
                count=False,
            )
        if counters is not None:
            if count:
                counters.matrix_inverse += 1
            counters.inner_cycles[self.label] += self.sweeps
            for lab, c in inner.inner_cycles.items():
                counters.inner_cycles[f"{self.label}/{lab}"] += c
        return w
