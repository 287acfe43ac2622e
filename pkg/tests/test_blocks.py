import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import scalar
from mgdsolve.blocks import (
    BlockSystem,
    IndicatorConfig,
    ManifestError,
    block_residual,
    from_monolithic,
    load_block_system,
    save_block_system,
    to_monolithic,
    weak_coupling_factor,
    weak_diag_dominance_factor,
)
from mgdsolve.sparse import CsrMatrix, spmv
from mgdsolve.verify import random_dense_system


def random_system(rng, G, N):
    s = random_dense_system(G, N, rng)
    return BlockSystem(s.blocks, s.d_gE, s.d_Eg, s.d_EI, rng.standard_normal((G + 2, N)))


def dense_assembly(s):
    """Independent oracle: place blocks into a dense (G+2)N matrix by hand."""
    G, N = s.G, s.N
    A = np.zeros(((G + 2) * N,) * 2)
    sl = lambda k: slice(k * N, (k + 1) * N)  # noqa: E731
    for k, B in enumerate(s.blocks):
        A[sl(k), sl(k)] = B.to_dense()
    for g in range(G):
        A[sl(g), sl(G)] = np.diag(s.d_gE[g])
        A[sl(G), sl(g)] = np.diag(s.d_Eg[g])
    A[sl(G), sl(G + 1)] = np.diag(s.d_EI)
    A[sl(G + 1), sl(G)] = np.diag(s.d_IE)
    return A


def test_indicator_config_defaults_and_range():
    c = IndicatorConfig()
    assert (c.theta_wd, c.theta_wc, c.sigma_wc) == (0.9, 1e-2, 0.5)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            IndicatorConfig(theta_wd=bad)


def test_scalar_monolithic(scalar_system):
    np.testing.assert_array_equal(
        to_monolithic(scalar_system).to_dense(), [[2, -1, 0], [-1, 3, -1], [0, -1, 4]]
    )


def test_validation():
    ok = [scalar(1), scalar(1), scalar(1)]
    with pytest.raises(ValueError):
        BlockSystem(ok[:2], [[0.0]], [[0.0]], [0.0])
    with pytest.raises(ValueError):
        BlockSystem([scalar(1), scalar(-1), scalar(1)], [[0.0]], [[0.0]], [0.0])
    with pytest.raises(ValueError):
        BlockSystem(ok, [[0.0]], [[0.0]], [0.0], d_IE=[1.0])
    with pytest.raises(ValueError):
        BlockSystem(ok, [[0.0, 1.0]], [[0.0]], [0.0])
    with pytest.raises(ValueError):
        BlockSystem(ok, [[np.nan]], [[0.0]], [0.0])
    with pytest.raises(TypeError):
        BlockSystem([np.eye(1)] * 3, [[0.0]], [[0.0]], [0.0])


def test_zero_couplings_block_diagonal(rng):
    s = random_system(rng, 2, 5)
    z = s.with_couplings(np.zeros((2, 5)), np.zeros((2, 5)), np.zeros(5))
    x = rng.standard_normal(z.n_total)
    xb = z.as_blocks(x)
    expect = np.concatenate([spmv(B, xb[k]) for k, B in enumerate(z.blocks)])
    np.testing.assert_allclose(spmv(to_monolithic(z), x), expect, rtol=1e-15)


def test_dense_assembly_oracle(rng):
    s = random_system(rng, 3, 10)
    np.testing.assert_array_equal(to_monolithic(s).to_dense(), dense_assembly(s))


@given(st.integers(1, 4), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_monolithic_round_trip(G, N, seed):
    s = random_system(np.random.default_rng(seed), G, N)
    back = from_monolithic(to_monolithic(s), G, N, s.rhs)
    assert back == s


def test_from_monolithic_rejects_foreign_blocks():
    A = np.eye(3)
    A[0, 2] = -1.0  # group-to-I block is not part of the layout
    with pytest.raises(ValueError):
        from_monolithic(CsrMatrix.from_dense(A), 1, 1)
    with pytest.raises(ValueError):
        from_monolithic(CsrMatrix.identity(4), 1, 1)


def test_wd_examples():
    assert weak_diag_dominance_factor(CsrMatrix.identity(5)) == 0.0
    assert weak_diag_dominance_factor(CsrMatrix.from_dense([[2.0, -1.0], [-1.0, 2.0]]), 0.9) == 1.0
    # signed sums: a large positive off-diagonal makes the row "dominant"
    assert weak_diag_dominance_factor(CsrMatrix.from_dense([[1.0, 5.0], [0.0, 1.0]])) == 0.0
    with pytest.raises(ValueError):
        weak_diag_dominance_factor(CsrMatrix.from_dense([[0.0, 1.0], [1.0, 1.0]]))


def test_wc_examples():
    A = CsrMatrix.diagonal([2.0, 200.0])
    assert weak_coupling_factor(np.zeros(2), A) == 1.0
    assert weak_coupling_factor(np.array([-1.0, -1.0]), A, 0.01) == 0.5
    with pytest.raises(ValueError):
        weak_coupling_factor(np.zeros(3), A)


@given(st.integers(0, 2**31 - 1))
def test_indicators_monotone_in_threshold(seed):
    r = np.random.default_rng(seed)
    a = -np.abs(r.standard_normal((6, 6)))
    np.fill_diagonal(a, r.uniform(0.5, 6, 6))
    A = CsrMatrix.from_dense(a)
    d = -np.abs(r.standard_normal(6)) * r.uniform(0, 0.05, 6)
    thetas = np.linspace(0.01, 0.99, 25)
    wd = [weak_diag_dominance_factor(A, t) for t in thetas]
    wc = [weak_coupling_factor(d, A, t) for t in thetas]
    assert wd == sorted(wd) and wc == sorted(wc)


def test_block_residual_scalar(scalar_system):
    r = block_residual(scalar_system, np.array([1.0, 1.0, 1.0]), np.array([1.0, 1.0, 3.0]))
    # A x = (1, 1, 3)
    np.testing.assert_array_equal(r.ravel(), [0.0, 0.0, 0.0])
    r = block_residual(scalar_system, np.zeros(3), np.array([5.0, 6.0, 7.0]))
    np.testing.assert_array_equal(r.ravel(), [5.0, 6.0, 7.0])


@pytest.mark.parametrize("G,N", [(1, 3), (3, 20), (5, 100)])
def test_block_residual_matches_monolithic(rng, G, N):
    s = random_system(rng, G, N)
    x = rng.standard_normal(s.n_total)
    ref = s.rhs.ravel() - spmv(to_monolithic(s), x)
    np.testing.assert_allclose(block_residual(s, x).ravel(), ref, rtol=0, atol=1e-13 * np.abs(ref).max())
    exact = np.linalg.solve(dense_assembly(s), s.rhs.ravel())
    assert np.abs(block_residual(s, exact)).max() <= 1e-12 * np.abs(s.rhs).max()


def test_manifest_round_trip(tmp_path, rng):
    s = random_system(rng, 2, 6)
    path = save_block_system(s, tmp_path / "sys")
    assert load_block_system(path) == s
    assert load_block_system(tmp_path / "sys") == s


def test_manifest_rejects_bad_input(tmp_path, rng):
    s = random_system(rng, 1, 4)
    d = tmp_path / "sys"
    path = save_block_system(s, d)
    (d / "D_IE.vec").write_text((d / "D_1E.vec").read_text())
    with pytest.raises(ManifestError):
        load_block_system(path)
    text = (d / "system.manifest").read_text()
    (d / "system.manifest").write_text(text.replace("N=4", "N=x"))
    with pytest.raises(ManifestError):
        load_block_system(path)
    (d / "system.manifest").write_text(text.replace("A_E=A_E.mtx\n", ""))
    with pytest.raises(ManifestError):
        load_block_system(path)
