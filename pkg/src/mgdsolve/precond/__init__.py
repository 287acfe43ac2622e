"""Preconditioners for the block system and the inner solves they use.

Every preconditioner is a scikit-learn style estimator: ``fit`` takes the
system (a `BlockSystem`, or a `CsrMatrix` for the monolithic AMG) and
``apply(b, counters=None)`` returns the approximate solution of ``A w = b``.
"""

from .base import BlockDiagonalPreconditioner, BlockPreconditioner
from .config import (
    PRECOND_NAMES,
    PrecondConfig,
    adaptive_wrap,
    build_bdiag,
    build_mono,
    build_pctl,
    build_schur1,
    build_schur2,
    implied_preconditioner_dense,
    make_preconditioner,
)
from .inner import InnerSolveOption, InnerSolver, SchurFixedPoint, select_fast_option
from .mono import AMGPreconditioner, IdentityPreconditioner
from .pctl import PCTLPreconditioner
from .schur import Schur1Preconditioner, Schur2Preconditioner

__all__ = [
    "AMGPreconditioner",
    "BlockDiagonalPreconditioner",
    "BlockPreconditioner",
    "IdentityPreconditioner",
    "InnerSolveOption",
    "InnerSolver",
    "PCTLPreconditioner",
    "PRECOND_NAMES",
    "PrecondConfig",
    "Schur1Preconditioner",
    "Schur2Preconditioner",
    "SchurFixedPoint",
    "adaptive_wrap",
    "build_bdiag",
    "build_mono",
    "build_pctl",
    "build_schur1",
    "build_schur2",
    "implied_preconditioner_dense",
    "make_preconditioner",
    "select_fast_option",
]
