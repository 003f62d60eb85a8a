"""Per-mode symbol solves, closed forms, and the a-priori estimates."""

import numpy as np
import pytest

from tsflow.harness import manufacture, random_elliptic_tensor
from tsflow.navier_stokes import regularity_slope
from tsflow.spectral import (
    divergence,
    gradient,
    make_lattice,
    random_scalar_field,
    random_vector_field,
    sobolev_norm,
    vector_field,
    zero_scalar_field,
    zero_vector_field,
)
from tsflow.stokes import (
    NonPositiveMu,
    SingularSymbol,
    ZeroMode,
    assemble_symbol,
    estimate_constants,
    global_estimate_slack,
    mode_estimate_slack,
    solve_isotropic_mode,
    solve_mode,
    solve_stokes,
    solve_stokes_incompressible,
)
from tsflow.viscosity import make_isotropic, stokes_operator


ISO = make_isotropic(0.0, 1.0, 2)


class TestSymbolAssembly:
    def test_isotropic_structure(self):
        sym = assemble_symbol(ISO, (1, 0))
        expected_block = 4 * np.pi**2 * np.diag([2.0, 1.0])
        np.testing.assert_allclose(sym.mat[:2, :2], expected_block, atol=1e-13)
        np.testing.assert_allclose(sym.mat[:2, 2], [2j * np.pi, 0.0], atol=0)
        np.testing.assert_allclose(sym.mat[2, :2], [2j * np.pi, 0.0], atol=0)
        assert sym.mat[2, 2] == 0

    def test_zero_mode_rejected(self):
        with pytest.raises(ZeroMode):
            assemble_symbol(ISO, (0, 0))

    def test_nonsingular_for_elliptic_tensors(self):
        # oracle: direct determinant of the small complex matrix
        for seed in range(5):
            A = random_elliptic_tensor(seed, 2)
            sym = assemble_symbol(A, (1, 1))
            assert abs(np.linalg.det(sym.mat)) > 1e-6

    def test_velocity_block_symmetric(self):
        A = random_elliptic_tensor(3, 3)
        sym = assemble_symbol(A, (1, -2, 3))
        block = sym.mat[:3, :3]
        np.testing.assert_allclose(block, block.T, atol=1e-12)
        assert np.max(np.abs(block.imag)) == 0


class TestBatchedElimination:
    def test_matches_lapack_on_random_systems(self):
        # oracle: numpy's LU-based solver on the same stacked systems
        from tsflow.stokes import _solve_batched

        rng = np.random.default_rng(0)
        for d in (3, 4, 5):
            mats = rng.standard_normal((40, d, d)) + 1j * rng.standard_normal((40, d, d))
            mats += 3.0 * np.eye(d)  # keep them comfortably nonsingular
            rhs = rng.standard_normal((40, d)) + 1j * rng.standard_normal((40, d))
            mine = _solve_batched(mats, rhs)
            ref = np.linalg.solve(mats, rhs[..., None])[..., 0]
            assert np.max(np.abs(mine - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_detects_singular_member(self):
        from tsflow.stokes import _solve_batched

        mats = np.stack([np.eye(3, dtype=np.complex128)] * 3)
        mats[1, :, 0] = 0.0  # one singular system in the batch
        with pytest.raises(SingularSymbol):
            _solve_batched(mats, np.ones((3, 3), np.complex128), xis=[(1, 0), (2, 0), (3, 0)])


class TestSolveMode:
    def test_transverse_forcing(self):
        sym = assemble_symbol(ISO, (1, 0))
        uhat, phat = solve_mode(sym, np.array([0.0, 1.0]), 0.0)
        np.testing.assert_allclose(uhat, [0.0, 1.0 / (4 * np.pi**2)], atol=1e-15)
        assert abs(phat) <= 1e-15

    def test_parallel_forcing_goes_to_pressure(self):
        sym = assemble_symbol(ISO, (1, 0))
        uhat, phat = solve_mode(sym, np.array([1.0, 0.0]), 0.0)
        np.testing.assert_allclose(uhat, [0.0, 0.0], atol=1e-15)
        assert phat == pytest.approx(-1j / (2 * np.pi), abs=1e-15)

    def test_pure_divergence_data(self):
        sym = assemble_symbol(ISO, (1, 0))
        uhat, phat = solve_mode(sym, np.zeros(2), 1.0)
        np.testing.assert_allclose(uhat, [-1j / (2 * np.pi), 0.0], atol=1e-15)
        assert phat == pytest.approx(2.0, abs=1e-13)

    def test_singular_symbol_raises(self):
        # mu = 0 gives a rank-one velocity block
        bad = make_isotropic(1.0, 0.0, 2)
        sym = assemble_symbol(bad, (1, 0))
        with pytest.raises(SingularSymbol):
            solve_mode(sym, np.array([0.0, 1.0]), 0.0)


class TestIsotropicClosedForm:
    def test_matches_solve_mode_examples(self):
        for fhat, ghat in [
            (np.array([0.0, 1.0]), 0.0),
            (np.array([1.0, 0.0]), 0.0),
            (np.zeros(2), 1.0),
        ]:
            sym = assemble_symbol(ISO, (1, 0))
            u1, p1 = solve_mode(sym, fhat, ghat)
            u2, p2 = solve_isotropic_mode(0.0, 1.0, (1, 0), fhat, ghat)
            np.testing.assert_allclose(u1, u2, atol=1e-14)
            assert p1 == pytest.approx(p2, abs=1e-13)

    def test_bulk_pressure_coefficient(self):
        _, phat = solve_isotropic_mode(1.0, 2.0, (0, 1), np.zeros(2), 1.0)
        assert phat == pytest.approx(5.0)

    def test_linearity_in_f(self):
        fhat = np.array([0.3 + 0.1j, -0.7j])
        u1, p1 = solve_isotropic_mode(0.5, 1.5, (2, -1), fhat, 0.0)
        u2, p2 = solve_isotropic_mode(0.5, 1.5, (2, -1), 10.0 * fhat, 0.0)
        np.testing.assert_allclose(u2, 10.0 * u1, rtol=1e-14)
        assert p2 == pytest.approx(10.0 * p1, rel=1e-14)

    def test_rejects_bad_arguments(self):
        with pytest.raises(NonPositiveMu):
            solve_isotropic_mode(1.0, 0.0, (1, 0), np.zeros(2), 0.0)
        with pytest.raises(ZeroMode):
            solve_isotropic_mode(1.0, 1.0, (0, 0), np.zeros(2), 0.0)

    def test_agrees_with_general_path_on_random_modes(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            lam = float(rng.uniform(-5, 5))
            mu = float(rng.uniform(0.1, 5))
            xi = rng.integers(-8, 9, size=2)
            if np.all(xi == 0):
                xi[0] = 1
            fhat = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            ghat = complex(rng.standard_normal(), rng.standard_normal())
            A = make_isotropic(lam, mu, 2)
            u1, p1 = solve_mode(assemble_symbol(A, xi), fhat, ghat)
            u2, p2 = solve_isotropic_mode(lam, mu, xi, fhat, ghat)
            scale = max(np.max(np.abs(u2)), abs(p2), 1.0)
            assert np.max(np.abs(u1 - u2)) <= 1e-12 * scale
            assert abs(p1 - p2) <= 1e-12 * scale


class TestSolveStokes:
    def test_zero_data_gives_zero_solution(self):
        lat = make_lattice(2, 4)
        u, p, report = solve_stokes(ISO, zero_vector_field(lat), zero_scalar_field(lat))
        assert np.all(u.coeffs == 0)
        assert np.all(p.coeffs == 0)
        assert report.residual == 0.0

    def test_manufactured_round_trip(self):
        lat = make_lattice(2, 6)
        u_star = random_vector_field(1, lat, decay=3.0)
        p_star = random_scalar_field(2, lat, decay=3.0)
        prob = manufacture(u_star, p_star, ISO)
        u, p, report = solve_stokes(ISO, prob.f, prob.g)
        rel_u = sobolev_norm(u - u_star, 1.0) / sobolev_norm(u_star, 1.0)
        rel_p = sobolev_norm(p - p_star, 0.0) / sobolev_norm(p_star, 0.0)
        assert rel_u <= 1e-11 and rel_p <= 1e-11
        assert report.estimates_ok

    @pytest.mark.parametrize("decay", [0.5, 1.0, 2.0, 3.5])
    def test_round_trip_reapplies_to_data(self, decay):
        # solve, then push the solution back through the forward operators;
        # holds for rough through smooth data alike
        lat = make_lattice(2, 5)
        A = random_elliptic_tensor(7, 2)
        f = random_vector_field(3, lat, decay=decay)
        g = random_scalar_field(4, lat, decay=decay)
        u, p, _ = solve_stokes(A, f, g)
        f_back = -1.0 * stokes_operator(A, u, p)
        g_back = divergence(u)
        assert sobolev_norm(f_back - f, -1.0) <= 1e-11 * sobolev_norm(f, -1.0)
        assert sobolev_norm(g_back - g, 0.0) <= 1e-11 * sobolev_norm(g, 0.0)

    def test_three_dimensional_round_trip(self):
        lat = make_lattice(3, 3)
        A = make_isotropic(0.7, 1.2, 3)
        u_star = random_vector_field(5, lat, decay=3.0)
        p_star = random_scalar_field(6, lat, decay=3.0)
        prob = manufacture(u_star, p_star, A)
        u, p, _ = solve_stokes(A, prob.f, prob.g)
        assert sobolev_norm(u - u_star, 1.0) <= 1e-11 * sobolev_norm(u_star, 1.0)

    def test_deterministic_bitwise(self):
        lat = make_lattice(2, 5)
        A = random_elliptic_tensor(11, 2)
        f = random_vector_field(8, lat, decay=2.0)
        g = random_scalar_field(9, lat, decay=2.0)
        u1, p1, _ = solve_stokes(A, f, g)
        u2, p2, _ = solve_stokes(A, f, g)
        assert np.array_equal(u1.coeffs, u2.coeffs)
        assert np.array_equal(p1.coeffs, p2.coeffs)

    def test_solution_is_real_for_real_data(self):
        lat = make_lattice(2, 4)
        f = random_vector_field(10, lat, decay=2.0)
        u, p, _ = solve_stokes(ISO, f, None)
        np.testing.assert_allclose(u.coeffs, np.conj(u.coeffs[:, ::-1, ::-1]), atol=0)
        np.testing.assert_allclose(p.coeffs, np.conj(p.coeffs[::-1, ::-1]), atol=0)

    def test_nonzero_mean_projected_with_warning(self):
        from tsflow.spectral import NonzeroMeanWarning

        lat = make_lattice(2, 3)
        c = random_vector_field(12, lat, decay=2.0).coeffs.copy()
        c[(0,) + lat.zero_index] = 0.5
        f = vector_field(lat, c, is_real=False)
        with pytest.warns(NonzeroMeanWarning):
            u, p, report = solve_stokes(ISO, f, None)
        assert report.mean_removed_f
        assert u.coeffs[(0,) + lat.zero_index] == 0

    def test_matches_modewise_isotropic_assembly(self):
        # assemble the whole solution from the closed forms, mode by mode
        lam, mu = 0.3, 1.4
        A = make_isotropic(lam, mu, 2)
        lat = make_lattice(2, 4)
        f = random_vector_field(16, lat, decay=3.0)
        g = random_scalar_field(17, lat, decay=3.0)
        u, p, _ = solve_stokes(A, f, g)
        u_ref = np.zeros_like(u.coeffs)
        p_ref = np.zeros_like(p.coeffs)
        for xi in lat.indices():
            if np.all(xi == 0):
                continue
            pos = tuple(xi + lat.m)
            fhat = np.array([f.coeffs[0][pos], f.coeffs[1][pos]])
            uhat, phat = solve_isotropic_mode(lam, mu, xi, fhat, g.coeffs[pos])
            u_ref[0][pos], u_ref[1][pos] = uhat
            p_ref[pos] = phat
        assert np.max(np.abs(u.coeffs - u_ref)) <= 1e-12
        assert np.max(np.abs(p.coeffs - p_ref)) <= 1e-12

    def test_smoothness_propagation_surrogate(self):
        # forcing with decay slope a produces velocity with slope >= a + 2
        lat = make_lattice(2, 16)
        f = random_vector_field(13, lat, decay=3.0, divergence_free=True)
        u, _, _ = solve_stokes_incompressible(ISO, f)
        slope_f = regularity_slope(f).slope
        slope_u = regularity_slope(u).slope
        assert slope_f == pytest.approx(3.0, abs=0.2)
        assert slope_u >= slope_f + 2.0 - 0.2


class TestIncompressibleSolve:
    def test_transverse_single_mode(self):
        lat = make_lattice(2, 2)
        c = np.zeros((2,) + lat.shape, np.complex128)
        c[1][lat.m + 1, lat.m] = 1.0
        c[1][lat.m - 1, lat.m] = 1.0
        f = vector_field(lat, c, is_real=True)
        u, p, _ = solve_stokes_incompressible(ISO, f)
        assert sobolev_norm(p, 0.0) <= 1e-14
        np.testing.assert_allclose(
            u.coeffs[1][lat.m + 1, lat.m], 1.0 / (4 * np.pi**2), atol=1e-15
        )

    def test_gradient_forcing_absorbed_by_pressure(self):
        lat = make_lattice(2, 4)
        phi = random_scalar_field(14, lat, decay=3.0)
        f = gradient(phi)
        u, p, _ = solve_stokes_incompressible(ISO, f)
        assert sobolev_norm(u, 1.0) <= 1e-13 * sobolev_norm(phi, 1.0)
        assert sobolev_norm(p - phi, 0.0) <= 1e-12 * sobolev_norm(phi, 0.0)

    def test_divergence_free_output(self):
        lat = make_lattice(2, 6)
        f = random_vector_field(15, lat, decay=2.0)
        u, _, _ = solve_stokes_incompressible(ISO, f)
        assert u.divergence_free
        assert sobolev_norm(divergence(u), 0.0) <= 1e-12


class TestModeEstimates:
    def test_constants_for_unit_isotropic(self):
        constants = estimate_constants(ISO)
        assert constants["C_A"] == pytest.approx(0.5, rel=1e-12)
        assert constants["norm_A"] == pytest.approx(2.0)
        assert constants["C_uf"] == pytest.approx(1.0, rel=1e-12)
        assert constants["C_ug"] == pytest.approx(3.0, rel=1e-12)
        assert constants["C_pf"] == pytest.approx(3.0, rel=1e-12)
        assert constants["C_pg"] == pytest.approx(6.0, rel=1e-12)

    def test_zero_slack_at_tight_transverse_mode(self):
        fhat = np.array([0.0, 1.0])
        uhat, phat = solve_mode(assemble_symbol(ISO, (1, 0)), fhat, 0.0)
        slack_u, slack_p = mode_estimate_slack(ISO, (1, 0), fhat, 0.0, uhat, phat)
        assert slack_u == pytest.approx(0.0, abs=1e-13)
        assert slack_p >= -1e-13

    def test_trivial_data(self):
        slack_u, slack_p = mode_estimate_slack(ISO, (1, 0), np.zeros(2), 0.0, np.zeros(2), 0.0)
        assert slack_u == 0.0 and slack_p == 0.0

    def test_sweep_random_modes_and_tensors(self):
        rng = np.random.default_rng(1)
        for case in range(200):
            n = 2 if case % 3 else 3
            A = random_elliptic_tensor(case, n)
            xi = rng.integers(-8, 9, size=n)
            if np.all(xi == 0):
                xi[0] = 1
            fhat = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            ghat = complex(rng.standard_normal(), rng.standard_normal())
            uhat, phat = solve_mode(assemble_symbol(A, xi), fhat, ghat)
            slack_u, slack_p = mode_estimate_slack(A, xi, fhat, ghat, uhat, phat)
            assert slack_u >= -1e-12 and slack_p >= -1e-12


class TestGlobalEstimate:
    def test_holds_on_manufactured_solves(self):
        lat = make_lattice(2, 6)
        A = random_elliptic_tensor(21, 2)
        u_star = random_vector_field(22, lat, decay=3.0)
        p_star = random_scalar_field(23, lat, decay=3.0)
        prob = manufacture(u_star, p_star, A)
        u, p, _ = solve_stokes(A, prob.f, prob.g)
        for s in (0.0, 1.0, 2.0):
            gb = global_estimate_slack(A, u, p, prob.f, prob.g, s)
            assert gb["slack_u"] >= -1e-12 * gb["rhs_u"]
            assert gb["slack_p"] >= -1e-12 * gb["rhs_p"]

    def test_zero_data(self):
        lat = make_lattice(2, 3)
        gb = global_estimate_slack(
            ISO,
            zero_vector_field(lat),
            zero_scalar_field(lat),
            zero_vector_field(lat),
            zero_scalar_field(lat),
            1.0,
        )
        assert gb["lhs_u"] == 0.0 and gb["rhs_u"] == 0.0

    def test_homogeneity_in_f(self):
        lat = make_lattice(2, 4)
        f = random_vector_field(30, lat, decay=2.0)
        u1, p1, _ = solve_stokes(ISO, f, None)
        u10, p10, _ = solve_stokes(ISO, 10.0 * f, None)
        g1 = global_estimate_slack(ISO, u1, p1, f, zero_scalar_field(lat), 1.0)
        g10 = global_estimate_slack(ISO, u10, p10, 10.0 * f, zero_scalar_field(lat), 1.0)
        assert g10["rhs_u"] == pytest.approx(10.0 * g1["rhs_u"], rel=1e-12)
        assert g10["lhs_u"] == pytest.approx(10.0 * g1["lhs_u"], rel=1e-12)
