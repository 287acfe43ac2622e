from dataclasses import replace

import numpy as np
import pytest

from mgdsolve.blocks import (
    load_block_system,
    save_block_system,
    to_monolithic,
    weak_coupling_factor,
    weak_diag_dominance_factor,
)
from mgdsolve.generate import (
    PRESETS,
    MgdCoefficients,
    capsule_profile,
    diffusion_operator,
    generate,
    manufactured_solution,
)
from mgdsolve.krylov import GmresParams, gmres
from mgdsolve.precond import build_bdiag
from mgdsolve.solver import GMRESSolver
from mgdsolve.sparse import diag_of, row_sums


def test_coefficient_validation():
    with pytest.raises(ValueError):
        MgdCoefficients(nx=1, ny=4, G=1)
    with pytest.raises(ValueError):
        MgdCoefficients(nx=4, ny=4, G=1, dt=0.0)
    with pytest.raises(ValueError):
        MgdCoefficients(nx=4, ny=4, G=2)  # per-group tuples of the wrong length
    with pytest.raises(ValueError):
        MgdCoefficients(nx=4, ny=4, G=1, layer_bounds=(0.6, 0.3), diffusion_scale=(1, 1, 1), opacity_scale=(1, 1, 1))
    with pytest.raises(ValueError):
        MgdCoefficients(nx=4, ny=4, G=1, d_e=-1.0)
    with pytest.raises(ValueError):
        capsule_profile("bogus")


def test_no_exchange_gives_zero_couplings():
    c = MgdCoefficients(nx=3, ny=3, G=2, d_rad=(1, 1), sigma_p=(0, 0), sigma_b=(0, 0), omega_ie=0.0)
    s = generate(c)
    assert not s.d_gE.any() and not s.d_Eg.any() and not s.d_EI.any()


def test_hand_assembled_stencil_infinite_dt():
    c = MgdCoefficients(nx=2, ny=2, G=1, dt=np.inf, sigma_p=(2.0,), sigma_b=(2.0,), omega_ie=0.5)
    s = generate(c, seed=3)
    # unit coefficients: one unit transmissibility per interior face,
    # each cell of the 2x2 grid touches two faces; cell volume 1/4
    K = np.array([[2, -1, -1, 0], [-1, 2, 0, -1], [-1, 0, 2, -1], [0, -1, -1, 2]], dtype=float)
    np.testing.assert_array_equal(s.group(0).to_dense(), K + 0.5 * np.eye(4))
    np.testing.assert_array_equal(s.d_Eg[0], np.full(4, -0.5))
    np.testing.assert_array_equal(s.d_EI, np.full(4, -0.125))
    np.testing.assert_array_equal(s.A_I.to_dense(), K + 0.125 * np.eye(4))
    beta = -s.d_gE[0] / 0.5
    assert np.all((beta >= 0.5) & (beta <= 1.5))
    np.testing.assert_allclose(s.A_E.to_dense(), K + np.diag(0.5 * beta + 0.125), rtol=1e-15)


def test_harmonic_mean_faces():
    K = diffusion_operator(2, 1, [1.0, 3.0]).to_dense()
    np.testing.assert_allclose(K, [[1.5, -1.5], [-1.5, 1.5]])


@pytest.mark.parametrize("preset", PRESETS)
def test_blocks_are_m_matrix_like(preset):
    s = generate(capsule_profile(preset, 10, 8, 3), seed=0)
    for B in s.blocks:
        d = B.to_dense()
        assert np.all(np.diag(d) > 0)
        assert np.all(d - np.diag(np.diag(d)) <= 0)
        assert np.all(row_sums(B) >= -1e-12 * diag_of(B).max())
    assert not np.array_equal(s.d_gE, s.d_Eg)


def test_monolithic_eigenvalues_positive_real_part():
    s = generate(capsule_profile("stiff", 8, 8, 2), seed=1)
    A = to_monolithic(s).to_dense()
    assert not np.allclose(A, A.T)
    assert np.linalg.eigvals(A).real.min() > 0


def test_rhs_is_operator_times_manufactured_solution():
    c = capsule_profile("layered", 9, 7, 2)
    s = generate(c, seed=5)
    x = manufactured_solution(c, seed=5)
    assert x.min() > 0
    np.testing.assert_allclose(to_monolithic(s).to_dense() @ x.ravel(), s.rhs.ravel(), rtol=1e-12)


def test_deterministic():
    c = capsule_profile("stiff", 9, 6, 3)
    assert generate(c, 4) == generate(c, 4)
    assert generate(c, 4) != generate(c, 5)


def test_smooth_coupling_depends_on_dt():
    strong = generate(capsule_profile("smooth", 16, 16, 1, dt=1.0))
    weak = generate(capsule_profile("smooth", 16, 16, 1, dt=1e-6))
    assert weak_coupling_factor(strong.d_gE[0], strong.group(0)) == 0.0
    assert weak_coupling_factor(weak.d_gE[0], weak.group(0)) == 1.0


def test_preset_structure():
    layered = capsule_profile("layered")
    assert max(layered.diffusion_scale) / min(layered.diffusion_scale) == 1e3
    stiff = capsule_profile("stiff", 16, 16, 3)
    assert max(stiff.opacity_scale) / min(stiff.opacity_scale) == pytest.approx(1e6)
    s = generate(stiff)
    assert all(weak_diag_dominance_factor(s.group(g)) > 0 for g in range(3))
    assert stiff.with_grid(8, 4).N == 32
    assert stiff.with_grid(8, 4, G=5).G == 5


def test_zero_coupling_limit_matches_blockwise_solves():
    par = GmresParams(30, 1e-7, 1000)
    for preset in PRESETS:
        c = capsule_profile(preset, 12, 12, 3)
        c = replace(c, omega_ie=0.0, sigma_p=(0.0,) * 3, sigma_b=(0.0,) * 3)
        s = generate(c)
        M = build_bdiag(s)
        _, rep = gmres(to_monolithic(s), M, s.rhs.ravel(), params=par)
        blockwise = [
            gmres(B, M.extracted_solvers_.get(k, M.e_solver_).solve, s.rhs[k], params=par)[1].iterations
            for k, B in enumerate(s.blocks)
        ]
        assert abs(rep.iterations - max(blockwise)) <= 1


def test_manifest_round_trip_same_iterations(tmp_path):
    s = generate(capsule_profile("stiff", 12, 8, 2), seed=2)
    loaded = load_block_system(save_block_system(s, tmp_path / "stiff"))
    assert loaded == s
    reports = []
    for system in (s, loaded):
        solver = GMRESSolver("schur1").fit(system)
        solver.solve()
        reports.append(solver.report_)
    assert reports[0].iterations == reports[1].iterations
    assert reports[0].residual_history == reports[1].residual_history
