"""Block preconditioned solvers for multi-group radiation diffusion systems."""

from .blocks import BlockSystem, load_block_system, save_block_system, to_monolithic
from .counters import OperationCounters
from .generate import MgdCoefficients, capsule_profile, generate
from .krylov import GmresParams, SolveReport, gmres
from .precond import PrecondConfig, make_preconditioner
from .solver import GMRESSolver
from .sparse import CsrMatrix

__version__ = "0.1.0"

__all__ = [
    "BlockSystem",
    "CsrMatrix",
    "GMRESSolver",
    "GmresParams",
    "MgdCoefficients",
    "OperationCounters",
    "PrecondConfig",
    "SolveReport",
    "capsule_profile",
    "generate",
    "gmres",
    "load_block_system",
    "make_preconditioner",
    "save_block_system",
    "to_monolithic",
]
