import numpy as np
from scipy.sparse.linalg import LinearOperator
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..amg import AmgParams
from ..blocks import BlockSystem, IndicatorConfig, weak_coupling_factor
from ..counters import OperationCounters
from .inner import InnerSolveOption, InnerSolver, select_fast_option

__all__ = ["BlockPreconditioner", "check_block_system"]


def check_block_system(system):
    if not isinstance(system, BlockSystem):
        raise TypeError(f"expected a BlockSystem, got {type(system).__name__}")
    return system


class PreconditionerMixin:
    """``apply``/``__call__``/``as_linear_operator`` shared by all preconditioners."""

    _fitted_attr = "system_"

    def __call__(self, b, counters=None):
        return self.apply(b, counters)

    def as_linear_operator(self):
        check_is_fitted(self, self._fitted_attr)
        n = self._n_unknowns()
        return LinearOperator((n, n), matvec=lambda x: self.apply(np.ravel(x)), dtype=np.float64)

    def _n_unknowns(self):
        return self.system_.n_total


class BlockPreconditioner(PreconditionerMixin, BaseEstimator):
    """Common setup for the block preconditioners.

    Subclasses implement ``_fit_core(s, groups, ion, counters)`` and
    ``_apply_core(b, w, counters)`` over the active variables: the group
    indices in `groups`, E, and I when `ion` is true.

    With ``adaptive=True``, each variable ``a`` (a group or I) whose weak
    coupling factor to E, ``gamma_wc(D_aE, A_a)``, exceeds `sigma_wc` is
    taken out of the block system.  It is solved first and independently;
    its effect on the electron equation is kept only where the reverse
    coupling ``D_Ea`` is strong.  The remaining variables are handled by the
    underlying preconditioner, and when only E remains it is a single inner
    solve.

    Parameters
    ----------
    adaptive : bool
    theta_wd, theta_wc, sigma_wc : float
        Indicator thresholds.
    sweeps_radiation, sweeps_ei : int
        Jacobi sweeps or V-cycles per fast inverse of a group block and of
        an electron/ion block.
    inner_tol : float
        Relative tolerance of the to-tolerance inverses.
    max_inner_cycles : int
        Cap on V-cycles per to-tolerance inverse.
    exact_inner : bool
        Replace every inner inverse with a dense direct solve.
    amg_params : AmgParams, optional
    """

    def __init__(
        self,
        adaptive=False,
        theta_wd=0.9,
        theta_wc=1e-2,
        sigma_wc=0.5,
        sweeps_radiation=3,
        sweeps_ei=1,
        inner_tol=1e-2,
        max_inner_cycles=200,
        exact_inner=False,
        amg_params=None,
    ):
        self.adaptive = adaptive
        self.theta_wd = theta_wd
        self.theta_wc = theta_wc
        self.sigma_wc = sigma_wc
        self.sweeps_radiation = sweeps_radiation
        self.sweeps_ei = sweeps_ei
        self.inner_tol = inner_tol
        self.max_inner_cycles = max_inner_cycles
        self.exact_inner = exact_inner
        self.amg_params = amg_params

    # -- inner solver factories ---------------------------------------------

    def _amg(self):
        return self.amg_params or AmgParams()

    def _label(self, s, k):
        return "A_" + s.labels[k]

    def _fast_option(self, s, k, A):
        if self.exact_inner:
            return InnerSolveOption("direct")
        sweeps = self.sweeps_radiation if k < s.G else self.sweeps_ei
        return select_fast_option(A, sweeps, self.theta_wd)

    def _fast_solver(self, s, k, A=None, label=None):
        A = s.blocks[k] if A is None else A
        return InnerSolver(
            label or self._label(s, k), A, self._fast_option(s, k, A), self._amg()
        )

    def _tol_solver(self, label, A):
        if self.exact_inner:
            opt = InnerSolveOption("direct")
        else:
            opt = InnerSolveOption(
                "vcycle_to_tol", tol=self.inner_tol, max_cycles=self.max_inner_cycles
            )
        return InnerSolver(label, A, opt, self._amg())

    # -- fit / apply --------------------------------------------------------

    def _extracted(self, s, gamma_to_E):
        if not self.adaptive:
            return []
        return [k for k, gam in gamma_to_E.items() if gam > self.sigma_wc]

    def fit(self, system, y=None):
        s = check_block_system(system)
        for name in ("sweeps_radiation", "sweeps_ei", "max_inner_cycles"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")
        IndicatorConfig(self.theta_wd, self.theta_wc, self.sigma_wc)

        G = s.G
        k_E, k_I = G, G + 1
        others = list(range(G)) + [k_I]
        gamma_to_E = {
            k: weak_coupling_factor(s.coupling_to_E(k), s.blocks[k], self.theta_wc) for k in others
        }
        gamma_from_E = {
            k: weak_coupling_factor(s.coupling_from_E(k), s.A_E, self.theta_wc) for k in others
        }
        self.system_ = s
        self.gamma_to_E_ = gamma_to_E
        self.gamma_from_E_ = gamma_from_E
        extracted = self._extracted(s, gamma_to_E)
        self.extracted_ = tuple(extracted)
        self.extracted_solvers_ = {k: self._fast_solver(s, k) for k in extracted}
        self.feedback_ = tuple(k for k in extracted if gamma_from_E[k] <= self.sigma_wc)

        counters = OperationCounters()
        groups = [g for g in range(G) if g not in extracted]
        ion = k_I not in extracted
        self.groups_ = tuple(groups)
        self.ion_ = ion
        if groups or ion:
            self.e_solver_ = None
            self._fit_core(s, groups, ion, counters)
        else:
            self.e_solver_ = self._fast_solver(s, k_E)
        self.setup_counters_ = counters
        return self

    def apply(self, b, counters=None):
        """Return ``w ~ A^{-1} b`` (flat or ``(G+2, N)`` input, same shape out).

        Operation counts of this call are added to `counters` when given.
        """
        check_is_fitted(self, "system_")
        s = self.system_
        b = np.asarray(b, dtype=np.float64)
        bb = s.as_blocks(b)
        w = np.zeros_like(bb)
        local = OperationCounters()
        k_E = s.G
        for k in self.extracted_:
            w[k] = self.extracted_solvers_[k].solve(bb[k], local)
        if self.feedback_:
            b_E = bb[k_E].copy()
            for k in self.feedback_:
                b_E -= s.coupling_from_E(k) * w[k]
                local.hadamard += 1
                local.vector_update += 1
            bb = bb.copy()
            bb[k_E] = b_E
        if self.e_solver_ is not None:
            w[k_E] = self.e_solver_.solve(bb[k_E], local)
        else:
            self._apply_core(bb, w, local)
        if counters is not None:
            counters.merge(local)
        return w.reshape(b.shape)

    def _fit_core(self, s, groups, ion, counters):
        raise NotImplementedError

    def _apply_core(self, b, w, counters):
        raise NotImplementedError


class BlockDiagonalPreconditioner(BlockPreconditioner):
    """Independent fast inverse of every diagonal block; couplings ignored."""

    def _extracted(self, s, gamma_to_E):
        return list(gamma_to_E)

    def fit(self, system, y=None):
        super().fit(system)
        self.feedback_ = ()
        return self
