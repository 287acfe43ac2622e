import time

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .blocks import BlockSystem, to_monolithic
from .counters import OperationCounters
from .krylov import GmresParams, gmres
from .precond import IdentityPreconditioner, PrecondConfig, make_preconditioner
from .sparse import CsrMatrix

__all__ = ["GMRESSolver"]


class GMRESSolver(BaseEstimator):
    """Preconditioned GMRES(m) as an estimator.

    Parameters
    ----------
    preconditioner : estimator, PrecondConfig, str or None
        An unfitted preconditioner (cloned on ``fit``), a `PrecondConfig`, a
        name such as ``"aschur1"``, or None for no preconditioning.
    restart, rel_tol, max_iters
        GMRES parameters.

    Attributes
    ----------
    preconditioner_ : fitted preconditioner
    matrix_ : CsrMatrix
        The monolithic matrix the Krylov iteration works on.
    setup_seconds_ : float
    report_ : SolveReport
        Set by `solve`.
    """

    def __init__(self, preconditioner=None, restart=30, rel_tol=1e-7, max_iters=1000):
        self.preconditioner = preconditioner
        self.restart = restart
        self.rel_tol = rel_tol
        self.max_iters = max_iters

    def _make_preconditioner(self):
        p = self.preconditioner
        if p is None:
            return IdentityPreconditioner()
        if isinstance(p, str):
            return make_preconditioner(PrecondConfig.from_name(p))
        if isinstance(p, PrecondConfig):
            return make_preconditioner(p)
        return clone(p)

    def fit(self, system, y=None):
        """Build the monolithic matrix and set up the preconditioner."""
        if isinstance(system, BlockSystem):
            self.matrix_ = to_monolithic(system)
        elif isinstance(system, CsrMatrix):
            self.matrix_ = system
        else:
            raise TypeError(f"expected a BlockSystem or CsrMatrix, got {type(system).__name__}")
        self.system_ = system
        self._params = GmresParams(self.restart, self.rel_tol, self.max_iters)
        M = self._make_preconditioner()
        t0 = time.perf_counter()
        M.fit(system)
        self.setup_seconds_ = time.perf_counter() - t0
        self.preconditioner_ = M
        return self

    def solve(self, b=None, x0=None):
        """Solve for `b` (defaults to the system right-hand side); returns ``x``.

        The `SolveReport` is stored as ``report_``.  Its ``counters`` hold
        the setup counts, the accumulated counts of all preconditioner
        applies and the number of applies.
        """
        check_is_fitted(self, "preconditioner_")
        if b is None:
            if not isinstance(self.system_, BlockSystem):
                raise ValueError("b is required when fitted on a bare matrix")
            b = self.system_.rhs
        b = np.asarray(b, dtype=np.float64).ravel()
        counters = OperationCounters()
        n_applies = 0
        M = self.preconditioner_

        def apply_M(v):
            nonlocal n_applies
            n_applies += 1
            return M.apply(v, counters)

        t0 = time.perf_counter()
        x, report = gmres(self.matrix_, apply_M, b, x0, self._params)
        report.solve_seconds = time.perf_counter() - t0
        report.setup_seconds = self.setup_seconds_
        report.counters = {
            "setup": M.setup_counters_.snapshot(),
            "solve": counters.snapshot(),
            "applies": n_applies,
        }
        self.report_ = report
        return x
