"""Schur-complement block preconditioners.

Both eliminate the diagonal couplings blockwise and drop the fill that
appears between different groups (and between groups and I).

Schur2 eliminates E first.  Its Schur complements are
``S_g = A_g - D_gE A_E^{-1} D_Eg`` and ``S_I = A_I - D_IE A_E^{-1} D_EI``.

Schur1 eliminates I first and then E, through
``C_E = A_E - D_EI A_I^{-1} D_IE`` and ``C_g = A_g - D_gE C_E^{-1} D_Eg``.

`schur_mode` selects how the Schur complements are approximated:

``"diag"``
    explicit matrices with the inner inverse replaced by the inverse of its
    diagonal (``diag(A_E)`` for Schur2, ``diag(A_I)`` then ``diag(C_E)`` for
    Schur1), inverted by V-cycles to `inner_tol`;
``"iterative"``
    never formed; applied by `schur_sweeps` fixed-point steps over fast
    inverses of the pieces;
``"exact"``
    formed densely with exact inverses and solved directly (small systems
    only, for verification).
"""

import numpy as np

from ..sparse import CsrMatrix, add_to_diagonal, diag_of
from .base import BlockPreconditioner
from .inner import InnerSolveOption, InnerSolver, SchurFixedPoint

__all__ = ["Schur1Preconditioner", "Schur2Preconditioner"]

SCHUR_MODES = ("diag", "iterative", "exact")


def _dense_schur(A, d_left, Y, d_right):
    """``A - diag(d_left) Y^{-1} diag(d_right)`` as a dense matrix."""
    Yinv = np.linalg.inv(Y)
    return A - d_left[:, None] * Yinv * d_right[None, :]


class _SchurBase(BlockPreconditioner):
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
        schur_mode="diag",
        schur_sweeps=3,
    ):
        super().__init__(
            adaptive=adaptive,
            theta_wd=theta_wd,
            theta_wc=theta_wc,
            sigma_wc=sigma_wc,
            sweeps_radiation=sweeps_radiation,
            sweeps_ei=sweeps_ei,
            inner_tol=inner_tol,
            max_inner_cycles=max_inner_cycles,
            exact_inner=exact_inner,
            amg_params=amg_params,
        )
        self.schur_mode = schur_mode
        self.schur_sweeps = schur_sweeps

    def _check_mode(self):
        if self.schur_mode not in SCHUR_MODES:
            raise ValueError(f"schur_mode must be one of {SCHUR_MODES}, got {self.schur_mode!r}")
        if self.schur_sweeps < 1:
            raise ValueError("schur_sweeps must be >= 1")

    def _diag_schur(self, A, d_left, y_diag, d_right, counters):
        counters.hadamard += 1
        counters.matrix_update += 1
        return add_to_diagonal(A, -(d_left * d_right) / y_diag)

    def _schur_solver(self, label, S):
        if self.schur_mode == "exact":
            return InnerSolver(label, S, InnerSolveOption("direct"))
        return self._tol_solver(label, S)

    def _iterative(self, label, s, k, other, d_left, d_right):
        return SchurFixedPoint(
            label, self._fast_solver(s, k), other, d_left, d_right, self.schur_sweeps
        )


class Schur2Preconditioner(_SchurBase):
    """Eliminate E first; groups and I are solved with their Schur complements.

    One apply:

    1. ``w_E* = A_E^{-1} b_E``
    2. ``w_g = S_g^{-1}(b_g - D_gE w_E*)`` and ``w_I = S_I^{-1}(b_I - D_IE w_E*)``
    3. ``w_E = w_E* - A_E^{-1}(sum_g D_Eg w_g + D_EI w_I)``

    ``A_E^{-1}`` is the fast inverse (Jacobi or fixed V-cycles).
    """

    def _fit_core(self, s, groups, ion, counters):
        self._check_mode()
        k_E = s.G
        active = list(groups) + ([s.G + 1] if ion else [])
        self.active_ = tuple(active)
        self.e_inverse_ = self._fast_solver(s, k_E)
        self.schur_matrices_ = {}
        self.schur_solvers_ = {}
        a_e_diag = diag_of(s.A_E)
        for k in active:
            label = "S_" + s.labels[k]
            d_kE, d_Ek = s.coupling_to_E(k), s.coupling_from_E(k)
            if self.schur_mode == "iterative":
                self.schur_solvers_[k] = self._iterative(label, s, k, self.e_inverse_, d_kE, d_Ek)
                continue
            if self.schur_mode == "diag":
                S = self._diag_schur(s.blocks[k], d_kE, a_e_diag, d_Ek, counters)
            else:
                S = CsrMatrix.from_dense(
                    _dense_schur(s.blocks[k].to_dense(), d_kE, s.A_E.to_dense(), d_Ek),
                    drop_zeros=False,
                )
            self.schur_matrices_[k] = S
            self.schur_solvers_[k] = self._schur_solver(label, S)

    def _apply_core(self, b, w, counters):
        s = self.system_
        k_E = s.G
        w_star = self.e_inverse_.solve(b[k_E], counters)
        t = np.zeros(s.N)
        for k in self.active_:
            w[k] = self.schur_solvers_[k].solve(b[k] - s.coupling_to_E(k) * w_star, counters)
            t += s.coupling_from_E(k) * w[k]
            counters.hadamard += 2
            counters.vector_update += 2
        w[k_E] = w_star - self.e_inverse_.solve(t, counters)
        counters.vector_update += 1


class Schur1Preconditioner(_SchurBase):
    """Eliminate I, then E; groups are solved with ``C_g``.

    One apply:

    1. ``w_I* = A_I^{-1} b_I``
    2. ``w_E* = C_E^{-1}(b_E - D_EI w_I*)``
    3. ``w_g = C_g^{-1}(b_g - D_gE w_E*)``
    4. ``w_E = w_E* - C_E^{-1}(sum_g D_Eg w_g)``
    5. ``w_I = w_I* - A_I^{-1}(D_IE w_E)``

    ``A_I^{-1}`` is the fast inverse.  When I has been extracted by the
    adaptive rule, steps 1 and 5 vanish and ``C_E = A_E``.
    """

    def _fit_core(self, s, groups, ion, counters):
        self._check_mode()
        k_E, k_I = s.G, s.G + 1
        self.active_ = tuple(groups)
        self.i_inverse_ = self._fast_solver(s, k_I) if ion else None
        self.schur_matrices_ = {}
        self.schur_solvers_ = {}
        A_E = s.A_E
        mode = self.schur_mode
        # C_E
        if mode == "iterative" and ion:
            self.ce_solver_ = self._iterative("C_E", s, k_E, self.i_inverse_, s.d_EI, s.d_IE)
            C_E = None
        else:
            if not ion:
                C_E = A_E
            elif mode == "diag":
                C_E = self._diag_schur(A_E, s.d_EI, diag_of(s.A_I), s.d_IE, counters)
            else:
                C_E = CsrMatrix.from_dense(
                    _dense_schur(A_E.to_dense(), s.d_EI, s.A_I.to_dense(), s.d_IE),
                    drop_zeros=False,
                )
            self.schur_matrices_[k_E] = C_E
            self.ce_solver_ = self._schur_solver("C_E", C_E)
        # C_g
        for g in groups:
            label = "C_" + s.labels[g]
            if mode == "iterative":
                self.schur_solvers_[g] = self._iterative(
                    label, s, g, self.ce_solver_, s.d_gE[g], s.d_Eg[g]
                )
                continue
            if mode == "diag":
                C = self._diag_schur(s.blocks[g], s.d_gE[g], diag_of(C_E), s.d_Eg[g], counters)
            else:
                C = CsrMatrix.from_dense(
                    _dense_schur(s.blocks[g].to_dense(), s.d_gE[g], C_E.to_dense(), s.d_Eg[g]),
                    drop_zeros=False,
                )
            self.schur_matrices_[g] = C
            self.schur_solvers_[g] = self._schur_solver(label, C)

    def _apply_core(self, b, w, counters):
        s = self.system_
        k_E, k_I = s.G, s.G + 1
        ion = self.i_inverse_ is not None
        rhs_E = b[k_E]
        if ion:
            w_I_star = self.i_inverse_.solve(b[k_I], counters)
            rhs_E = rhs_E - s.d_EI * w_I_star
            counters.hadamard += 1
            counters.vector_update += 1
        w_E_star = self.ce_solver_.solve(rhs_E, counters)
        if self.active_:
            t = np.zeros(s.N)
            for g in self.active_:
                w[g] = self.schur_solvers_[g].solve(b[g] - s.d_gE[g] * w_E_star, counters)
                t += s.d_Eg[g] * w[g]
                counters.hadamard += 2
                counters.vector_update += 2
            w[k_E] = w_E_star - self.ce_solver_.solve(t, counters)
            counters.vector_update += 1
        else:
            w[k_E] = w_E_star
        if ion:
            w[k_I] = w_I_star - self.i_inverse_.solve(s.d_IE * w[k_E], counters)
            counters.hadamard += 1
            counters.vector_update += 1
