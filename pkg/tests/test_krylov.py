import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mgdsolve.krylov import GmresBreakdown, GmresParams, gmres
from mgdsolve.sparse import CsrMatrix
from mgdsolve.verify import poisson_2d


def krylov_min_residual(A, b, k):
    """min ||b - A x|| over x in span{b, Ab, ..., A^{k-1} b}, by dense least squares."""
    K = [b / np.linalg.norm(b)]
    for _ in range(k - 1):
        v = A @ K[-1]
        K.append(v / np.linalg.norm(v))
    Q, _ = np.linalg.qr(np.array(K).T)
    y, *_ = np.linalg.lstsq(A @ Q, b, rcond=None)
    return np.linalg.norm(b - A @ Q @ y) / np.linalg.norm(b)


def test_params_validation():
    for bad in (dict(restart=0), dict(rel_tol=0.0), dict(max_iters=-1)):
        with pytest.raises(ValueError):
            GmresParams(**bad)


def test_identity_converges_in_one_step(rng):
    b = rng.standard_normal(10)
    x, rep = gmres(CsrMatrix.identity(10), None, b)
    assert rep.iterations == 1 and rep.converged
    np.testing.assert_allclose(x, b, atol=1e-14)


def test_exact_preconditioner_one_step():
    A = CsrMatrix.diagonal(np.arange(1.0, 6.0))
    x, rep = gmres(A, lambda v: v / np.arange(1.0, 6.0), np.ones(5))
    assert rep.iterations == 1
    np.testing.assert_allclose(x, 1.0 / np.arange(1.0, 6.0), rtol=1e-14)


def test_zero_rhs():
    x, rep = gmres(poisson_2d(4), None, np.zeros(16))
    assert rep.iterations == 0 and rep.converged
    assert not x.any()


def test_history_matches_minimal_residual_oracle(rng):
    A = poisson_2d(6)
    b = rng.standard_normal(36)
    _, rep = gmres(A, None, b, params=GmresParams(restart=50, rel_tol=1e-12, max_iters=8))
    dense = A.to_dense()
    for k in range(1, 9):
        assert rep.residual_history[k] == pytest.approx(krylov_min_residual(dense, b, k), rel=1e-6)


def test_poisson_converges_with_true_residual(rng):
    A = poisson_2d(16)
    b = rng.standard_normal(256)
    x, rep = gmres(A, None, b, params=GmresParams(restart=20, rel_tol=1e-8))
    true = np.linalg.norm(b - A.to_dense() @ x) / np.linalg.norm(b)
    assert rep.converged
    assert true <= 1e-8
    assert rep.final_relative_residual == pytest.approx(true, rel=1e-10)
    assert len(rep.residual_history) == rep.iterations + 1


@given(st.integers(0, 2**31 - 1), st.integers(1, 10))
def test_history_monotone_within_cycle(seed, m):
    r = np.random.default_rng(seed)
    A = CsrMatrix.from_dense(np.eye(12) * 3 + r.uniform(-1, 1, (12, 12)))
    b = r.standard_normal(12)
    try:
        _, rep = gmres(A, None, b, params=GmresParams(restart=m, rel_tol=1e-10, max_iters=40))
    except GmresBreakdown:
        return
    h = rep.residual_history
    for k in range(1, len(h)):
        if (k - 1) % m:  # not the first step of a cycle
            assert h[k] <= h[k - 1] * (1 + 1e-12)


def test_max_iters_cap(rng):
    b = rng.standard_normal(400)
    _, rep = gmres(poisson_2d(20), None, b, params=GmresParams(restart=5, rel_tol=1e-12, max_iters=7))
    assert rep.iterations == 7 and not rep.converged


def test_deterministic(rng):
    A = poisson_2d(10)
    b = rng.standard_normal(100)
    x1, r1 = gmres(A, None, b)
    x2, r2 = gmres(A, None, b)
    np.testing.assert_array_equal(x1, x2)
    assert r1.residual_history == r2.residual_history


def test_breakdown_on_singular():
    A = CsrMatrix.from_dense([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(GmresBreakdown):
        gmres(A, None, np.array([0.0, 1.0]))


def test_input_checks():
    with pytest.raises(ValueError):
        gmres(CsrMatrix.identity(2), None, np.ones((2, 1)))
    with pytest.raises(ValueError):
        gmres(CsrMatrix.identity(2), None, np.ones(2), x0=np.ones(3))
    with pytest.raises(TypeError):
        gmres(object(), None, np.ones(2))


def test_history_csv():
    _, rep = gmres(CsrMatrix.diagonal([1.0, 2.0]), None, np.ones(2))
    buf = io.StringIO()
    rep.write_history_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "iteration,relative_residual"
    assert len(lines) == len(rep.residual_history) + 1
    assert float(lines[1].split(",")[1]) == 1.0
