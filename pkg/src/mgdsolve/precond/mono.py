import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..amg import AmgParams, amg_setup, vcycle
from ..blocks import BlockSystem, to_monolithic
from ..counters import OperationCounters
from ..sparse import CsrMatrix
from .base import PreconditionerMixin

__all__ = ["AMGPreconditioner", "IdentityPreconditioner"]


def _as_matrix(A):
    if isinstance(A, BlockSystem):
        return to_monolithic(A)
    if isinstance(A, CsrMatrix):
        return A
    raise TypeError(f"expected a CsrMatrix or BlockSystem, got {type(A).__name__}")


class AMGPreconditioner(PreconditionerMixin, BaseEstimator):
    """One V(1,1) cycle from a zero guess on the whole (monolithic) matrix."""

    _fitted_attr = "hierarchy_"

    def __init__(
        self,
        strength_threshold=0.25,
        max_coarsest_size=100,
        n_presmooth=1,
        n_postsmooth=1,
        max_levels=25,
    ):
        self.strength_threshold = strength_threshold
        self.max_coarsest_size = max_coarsest_size
        self.n_presmooth = n_presmooth
        self.n_postsmooth = n_postsmooth
        self.max_levels = max_levels

    def fit(self, A, y=None):
        A = _as_matrix(A)
        if A.n_rows != A.n_cols:
            raise ValueError("the AMG preconditioner needs a square matrix")
        self.hierarchy_ = amg_setup(A, AmgParams(**self.get_params()))
        self.setup_counters_ = OperationCounters()
        return self

    def _n_unknowns(self):
        return self.hierarchy_.operator.n_rows

    def apply(self, b, counters=None):
        check_is_fitted(self, "hierarchy_")
        b = np.asarray(b, dtype=np.float64)
        x = vcycle(self.hierarchy_, b.ravel())
        if counters is not None:
            counters.matrix_inverse += 1
            counters.inner_cycles["A"] += 1
        return x.reshape(b.shape)


class IdentityPreconditioner(PreconditionerMixin, BaseEstimator):
    """No preconditioning: ``apply(b)`` returns a copy of `b`."""

    _fitted_attr = "n_"

    def fit(self, A, y=None):
        self.n_ = A.n_total if isinstance(A, BlockSystem) else _as_matrix(A).n_rows
        self.setup_counters_ = OperationCounters()
        return self

    def _n_unknowns(self):
        return self.n_

    def apply(self, b, counters=None):
        return np.array(b, dtype=np.float64)
