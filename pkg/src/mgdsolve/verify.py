"""Self-check suites behind ``mgdsolve --verify``.

Each suite is a list of named checks; a check returns ``(ok, detail)``.
The dense oracles here are also used by the test suite.
"""

import numpy as np

from .amg import amg_setup, vcycle
from .blocks import BlockSystem, to_monolithic
from .counters import OperationCounters
from .generate import capsule_profile, generate
from .precond import PrecondConfig, implied_preconditioner_dense, make_preconditioner
from .sparse import CsrMatrix

__all__ = ["SUITES", "dense_schur_error", "poisson_2d", "random_dense_system", "run_suite"]


def poisson_2d(nx, ny=None):
    """Dirichlet 5-point Laplacian on an ``nx x ny`` grid (stencil 4, -1)."""
    ny = nx if ny is None else ny
    N = nx * ny
    idx = np.arange(N).reshape(ny, nx)
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [np.full(N, 4.0)]
    for a, b in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
        rows += [a.ravel(), b.ravel()]
        cols += [b.ravel(), a.ravel()]
        vals += [np.full(a.size, -1.0)] * 2
    return CsrMatrix.from_coo(N, N, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def random_dense_system(G, N, rng):
    """Random diagonally dominant block system with dense diagonal blocks."""
    blocks = []
    for _ in range(G + 2):
        B = -rng.uniform(0.0, 1.0, size=(N, N))
        np.fill_diagonal(B, 0.0)
        np.fill_diagonal(B, -B.sum(axis=1) + rng.uniform(2.0, 4.0, size=N))
        blocks.append(CsrMatrix.from_dense(B))
    d_gE = -rng.uniform(0.2, 1.0, size=(G, N))
    d_Eg = -rng.uniform(0.2, 1.0, size=(G, N))
    d_EI = -rng.uniform(0.2, 1.0, size=N)
    return BlockSystem(blocks, d_gE, d_Eg, d_EI)


def dense_schur_error(s, kind):
    """``A - M`` predicted for Schur1/Schur2 with exact inverses, as a dense matrix.

    Schur1 only misses ``-D_iE C_E^{-1} D_Ej`` between distinct groups
    ``i != j``; Schur2 misses ``-D_iE A_E^{-1} D_Ej`` between distinct
    members of {groups, I}.
    """
    G, N = s.G, s.N
    A_E = s.A_E.to_dense()
    D = {k: s.coupling_to_E(k) for k in list(range(G)) + [G + 1]}
    Dt = {k: s.coupling_from_E(k) for k in D}
    if kind == "schur1":
        A_I = s.A_I.to_dense()
        Y = A_E - s.d_EI[:, None] * np.linalg.inv(A_I) * s.d_IE[None, :]
        members = list(range(G))
    elif kind == "schur2":
        Y = A_E
        members = list(range(G)) + [G + 1]
    else:
        raise ValueError(f"no error formula for {kind!r}")
    Yinv = np.linalg.inv(Y)
    err = np.zeros((G + 2, N, G + 2, N))
    for i in members:
        for j in members:
            if i != j:
                err[i, :, j, :] = -D[i][:, None] * Yinv * Dt[j][None, :]
    return err.reshape(s.n_total, s.n_total)


def nonzero_blocks(M, G, N, tol):
    B = np.abs(M).reshape(G + 2, N, G + 2, N).max(axis=(1, 3))
    return {(i, j) for i in range(G + 2) for j in range(G + 2) if B[i, j] > tol}


def _exact_cfg(kind):
    return PrecondConfig(kind=kind, exact_inner=True, schur_mode="exact")


# -- oracle suite ---------------------------------------------------------


def _check_error_formula(kind):
    def check():
        rng = np.random.default_rng(7)
        worst = 0.0
        for G in (1, 2, 3):
            for N in (1, 4, 7):
                s = random_dense_system(G, N, rng)
                A = to_monolithic(s).to_dense()
                p = make_preconditioner(_exact_cfg(kind)).fit(s)
                M = np.linalg.inv(implied_preconditioner_dense(p, s.n_total))
                worst = max(worst, np.abs((A - M) - dense_schur_error(s, kind)).max())
        return worst <= 1e-11, f"max deviation {worst:.2e}"

    return check


def _check_schur1_exact_g1():
    s = generate(capsule_profile("smooth", 4, 4, 1), seed=3)
    A = to_monolithic(s).to_dense()
    p = make_preconditioner(_exact_cfg("schur1")).fit(s)
    dev = np.abs(implied_preconditioner_dense(p, s.n_total) @ A - np.eye(s.n_total)).max()
    return dev <= 1e-10, f"max |M^-1 A - I| = {dev:.2e}"


def _check_fill_count():
    rng = np.random.default_rng(11)
    ok = True
    for G in (2, 3):
        s = random_dense_system(G, 3, rng)
        A = to_monolithic(s).to_dense()
        counts = {}
        sets = {}
        for kind in ("schur1", "schur2"):
            p = make_preconditioner(_exact_cfg(kind)).fit(s)
            M = np.linalg.inv(implied_preconditioner_dense(p, s.n_total))
            sets[kind] = nonzero_blocks(A - M, G, s.N, 1e-12)
            counts[kind] = len(sets[kind])
        ok &= counts["schur2"] - counts["schur1"] == 2 * G and sets["schur1"] < sets["schur2"]
    return ok, "Schur2 error has 2G more nonzero blocks, a strict superset"


# -- counters suite -------------------------------------------------------

_EXPECTED_INVERSES = {"pctl": 3, "schur1": 4, "schur2": 3}


def _check_counters(kind, G):
    def check():
        s = generate(capsule_profile("smooth", 6, 5, G), seed=1)
        p = make_preconditioner(PrecondConfig(kind=kind)).fit(s)
        c = OperationCounters()
        p.apply(s.rhs, c)
        ok = c.matrix_inverse == G + _EXPECTED_INVERSES[kind]
        detail = f"apply inverses {c.matrix_inverse} (expected G+{_EXPECTED_INVERSES[kind]})"
        if kind == "pctl":
            sc = p.setup_counters_
            ok &= sc.matrix_inverse == G + 1 and sc.matrix_update == G + 2
            ok &= c.matvec == G + 2
            detail += f"; setup inverses {sc.matrix_inverse}, updates {sc.matrix_update}"
        return ok, detail

    return check


# -- invariants suite -----------------------------------------------------


def _check_galerkin():
    h = amg_setup(poisson_2d(32))
    worst = 0.0
    for fine, coarse in zip(h.levels[:-1], h.levels[1:]):
        P = fine.interpolation.to_dense()
        Ac = P.T @ fine.operator.to_dense() @ P
        scale = np.abs(Ac).max()
        worst = max(worst, np.abs(Ac - coarse.operator.to_dense()).max() / scale)
    return worst <= 1e-13, f"max relative deviation {worst:.2e}"


def _check_superposition():
    rng = np.random.default_rng(5)
    h = amg_setup(poisson_2d(32))
    b1, b2 = rng.standard_normal((2, h.operator.n_rows))
    lhs = vcycle(h, 2.0 * b1 - 3.0 * b2)
    rhs = 2.0 * vcycle(h, b1) - 3.0 * vcycle(h, b2)
    dev = np.abs(lhs - rhs).max() / np.abs(rhs).max()
    s = generate(capsule_profile("layered", 8, 6, 2), seed=2)
    for kind in ("schur1", "schur2"):
        p = make_preconditioner(PrecondConfig(kind=kind, schur_mode="iterative")).fit(s)
        c1, c2 = rng.standard_normal((2, s.n_total))
        ref = 2.0 * p.apply(c1) - 3.0 * p.apply(c2)
        dev = max(dev, np.abs(p.apply(2.0 * c1 - 3.0 * c2) - ref).max() / np.abs(ref).max())
    return dev <= 1e-12, f"max relative deviation {dev:.2e}"


def _check_degeneration():
    s = generate(capsule_profile("layered", 8, 6, 3), seed=4)
    zero = s.with_couplings(np.zeros((s.G, s.N)), np.zeros((s.G, s.N)), np.zeros(s.N))
    b = np.random.default_rng(9).standard_normal(s.n_total)
    ref = make_preconditioner(PrecondConfig(kind="bdiag")).fit(zero).apply(b)
    dev = 0.0
    for kind in ("pctl", "schur1", "schur2"):
        w = make_preconditioner(PrecondConfig(kind=kind, adaptive=True)).fit(zero).apply(b)
        dev = max(dev, np.abs(w - ref).max())
    return dev <= 1e-14, f"max deviation from block diagonal {dev:.2e}"


def _check_generator_dominance():
    s = generate(capsule_profile("stiff", 8, 6, 3), seed=0)
    A = to_monolithic(s).to_dense()
    d = np.diag(A)
    off = A - np.diag(d)
    ok = np.all(d > 0) and np.all(off <= 0) and np.all(A.sum(axis=0) >= -1e-12 * d.max())
    ev = np.linalg.eigvals(A).real.min()
    return bool(ok and ev > 0), f"min eigenvalue real part {ev:.3e}"


SUITES = {
    "oracle": [
        ("schur1 error formula", _check_error_formula("schur1")),
        ("schur2 error formula", _check_error_formula("schur2")),
        ("schur1 exact for G=1", _check_schur1_exact_g1),
        ("schur2 has 2G more error blocks", _check_fill_count),
    ],
    "counters": [
        (f"{kind} counts G={G}", _check_counters(kind, G))
        for kind in ("pctl", "schur1", "schur2")
        for G in (1, 5, 20)
    ],
    "invariants": [
        ("galerkin coarse operators", _check_galerkin),
        ("linearity of fixed-sweep applies", _check_superposition),
        ("adaptive degeneration", _check_degeneration),
        ("generated matrix column dominance", _check_generator_dominance),
    ],
}


def run_suite(name, out=print):
    """Run one suite, printing one line per check; returns True when all pass."""
    if name not in SUITES:
        raise ValueError(f"unknown verify suite {name!r}; choose from {sorted(SUITES)}")
    all_ok = True
    for label, check in SUITES[name]:
        try:
            ok, detail = check()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {label} ({detail})")
    return all_ok
