import numpy as np

from ..sparse import add, add_to_diagonal, scale, spmv
from .base import BlockPreconditioner

__all__ = ["PCTLPreconditioner"]


class PCTLPreconditioner(BlockPreconditioner):
    """Two-level preconditioner whose coarse level is the electron variable.

    The interpolation is diagonal: a coarse electron correction ``w_c``
    moves E by ``w_c`` and every other variable ``k`` by ``p_k * w_c`` with
    ``p_k = -A_k^{-1} D_kE 1``.  This is exact for constant functions.  The
    coarse operator is the Galerkin product with that interpolation,

        A_c = A_E + sum_k diag(p_k) A_k diag(p_k) + diag(D_Ek p_k + p_k D_kE),

    which keeps the sparsity pattern of ``A_E`` whenever the ``A_k`` share it.

    One apply runs a block Gauss-Seidel sweep in the order E, groups, I, then
    the coarse correction.  All inverses, including the ones defining
    ``p_k``, run V-cycles to the relative tolerance `inner_tol`.

    With ``adaptive=True`` the coarse correction is dropped when every
    electron-side coupling ``D_Ek`` is weak.
    """

    def fit(self, system, y=None):
        # defaults for the case where adaptivity leaves only E
        self.active_ = ()
        self.p_ = {}
        self.coarse_correction_ = False
        self.coarse_matrix_ = None
        self.coarse_solver_ = None
        return super().fit(system)

    def _fit_core(self, s, groups, ion, counters):
        k_E = s.G
        active = list(groups) + ([s.G + 1] if ion else [])
        self.active_ = tuple(active)
        self.relax_ = {k: self._tol_solver(self._label(s, k), s.blocks[k]) for k in active + [k_E]}
        self.coarse_correction_ = not (
            self.adaptive and all(g > self.sigma_wc for g in self.gamma_from_E_.values())
        )
        self.p_ = {}
        self.coarse_matrix_ = None
        self.coarse_solver_ = None
        if not self.coarse_correction_:
            return
        for k in active:
            self.p_[k] = -self.relax_[k].solve(s.coupling_to_E(k), counters)
        A_c = s.A_E
        corr = np.zeros(s.N)
        for k in active:
            p = self.p_[k]
            A_c = add(A_c, scale(s.blocks[k], p, p))
            counters.matrix_update += 1
            corr += s.coupling_from_E(k) * p + p * s.coupling_to_E(k)
            counters.hadamard += 2
            counters.vector_update += 2
        A_c = add_to_diagonal(A_c, corr)
        counters.matrix_update += 1
        self.coarse_matrix_ = A_c
        self.coarse_solver_ = self._tol_solver("A_c", A_c)

    def _apply_core(self, b, w, counters):
        s = self.system_
        k_E = s.G
        # block relaxation
        w[k_E] = self.relax_[k_E].solve(b[k_E], counters)
        for k in self.active_:
            w[k] = self.relax_[k].solve(b[k] - s.coupling_to_E(k) * w[k_E], counters)
            counters.hadamard += 1
            counters.vector_update += 1
        if not self.coarse_correction_:
            return
        # restricted residual r_c = r_E + sum_k p_k r_k
        r_c = b[k_E] - spmv(s.A_E, w[k_E])
        counters.matvec += 1
        counters.vector_update += 1
        for k in self.active_:
            r_k = b[k] - spmv(s.blocks[k], w[k]) - s.coupling_to_E(k) * w[k_E]
            r_c -= s.coupling_from_E(k) * w[k]
            r_c += self.p_[k] * r_k
            counters.matvec += 1
            counters.hadamard += 3
            counters.vector_update += 4
        w_c = self.coarse_solver_.solve(r_c, counters)
        w[k_E] += w_c
        counters.vector_update += 1
        for k in self.active_:
            w[k] += self.p_[k] * w_c
            counters.hadamard += 1
            counters.vector_update += 1
