import numpy as np
import pytest

from hyploop.errors import NotOrthogonal
from hyploop.halfplane import rot90
from hyploop.linearized import (
    _project_kernel,
    apply_frame_operator,
    apply_linearization,
    frozen_solve,
    from_frame,
    kernel_basis,
    kernel_report,
    linearization_fd,
    mode_blocks,
    solve_frame_operator,
    tangent_fields,
    to_frame,
)
from hyploop.loops import curvature_radius, dot_mean, reference_loop

from conftest import band_limited_field

K_VALUES = (1.1, 2.0, 5.0, 50.0)
N = 256


def frame_field(rng, modes=8):
    return band_limited_field(rng, n=N, modes=modes)


def deproject(field, k):
    _, proj = _project_kernel(field, k)
    return field - proj


class TestFrameIsomorphism:
    def test_images_of_kernel_basis(self):
        k = 2.0
        base = reference_loop(k, N)
        om_p = tangent_fields(k, N)[0]
        e1, g, gp = kernel_basis(k, N)
        assert np.array_equal(from_frame(e1, k), om_p)  # frame image IS the tangent
        assert np.abs(om_p - base.deriv(1)).max() < 1e-12  # and matches the spectral one
        assert np.abs(from_frame(g, k) - base.samples).max() < 1e-12
        expected = np.column_stack((np.ones(N), np.zeros(N))) - om_p
        assert np.abs(from_frame(gp, k) - expected).max() < 1e-12

    def test_round_trip(self, rng):
        g = frame_field(rng)
        assert np.abs(to_frame(from_frame(g, 2.0), 2.0) - g).max() < 1e-13

    def test_weighted_pairing_identity(self, rng):
        # mean of w2^-2 Phi(g).Phi(h) equals R_k^2 mean of g.h
        k = 2.0
        base = reference_loop(k, N)
        g, h = frame_field(rng), frame_field(rng)
        lhs = dot_mean(from_frame(g, k) / base.samples[:, 1:2] ** 2, from_frame(h, k))
        rhs = curvature_radius(k) ** 2 * dot_mean(g, h)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestFrameOperator:
    @pytest.mark.parametrize("k", K_VALUES)
    def test_kernel_annihilated(self, k):
        for field in kernel_basis(k, N):
            assert np.abs(apply_frame_operator(field, k)).max() < 1e-12

    def test_constant_e1_killed(self):
        g = np.column_stack((np.ones(N), np.zeros(N)))
        assert np.abs(apply_frame_operator(g, 2.0)).max() == 0.0

    def test_tangential_multiplier_formula(self):
        # J(psi * u') = -psi'' u' - k R_k psi' i u' for scalar psi
        k = 2.0
        base = reference_loop(k, N)
        theta = base.theta
        psi = np.sin(2 * theta) + 0.3 * np.cos(5 * theta)
        psi_p = 2 * np.cos(2 * theta) - 1.5 * np.sin(5 * theta)
        psi_pp = -4 * np.sin(2 * theta) - 7.5 * np.cos(5 * theta)
        g = np.column_stack((psi, np.zeros(N)))
        image = from_frame(apply_frame_operator(g, k), k)
        rk = curvature_radius(k)
        expected = -psi_pp[:, None] * base.deriv(1) - k * rk * psi_p[:, None] * rot90(base.deriv(1))
        assert np.abs(image - expected).max() < 1e-10

    def test_symmetric(self, rng):
        for _ in range(5):
            g, h = frame_field(rng), frame_field(rng)
            lhs = dot_mean(apply_frame_operator(g, 2.0), h)
            rhs = dot_mean(g, apply_frame_operator(h, 2.0))
            assert abs(lhs - rhs) < 1e-12

    def test_matches_block_application(self, rng):
        # the sampled operator and the assembled blocks are the same map
        k = 2.0
        g = frame_field(rng)
        image = apply_frame_operator(g, k)
        blocks = mode_blocks(k, N)
        f1 = np.fft.rfft(g[:, 0])
        f2 = np.fft.rfft(g[:, 1])
        o1 = np.zeros_like(f1)
        o2 = np.zeros_like(f2)
        o1[0], o2[0] = blocks[0].matrix @ [f1[0].real, f2[0].real]
        for b in blocks[1:]:
            m = b.n
            a1, b1_, a2, b2 = b.matrix @ [f1[m].real, f1[m].imag, f2[m].real, f2[m].imag]
            o1[m] = a1 + 1j * b1_
            o2[m] = a2 + 1j * b2
        via_blocks = np.column_stack((np.fft.irfft(o1, n=N), np.fft.irfft(o2, n=N)))
        assert np.abs(image - via_blocks).max() < 1e-10


class TestModeBlocks:
    @pytest.mark.parametrize("k", K_VALUES)
    def test_zero_singular_value_layout(self, k):
        blocks = mode_blocks(k, N)
        zeros = {b.n: b.zero_count for b in blocks if b.zero_count}
        assert zeros == {0: 1, 1: 2}

    def test_blocks_symmetric(self):
        for b in mode_blocks(2.0, 64):
            assert np.abs(b.matrix - b.matrix.T).max() == 0.0

    @pytest.mark.parametrize("k", K_VALUES + (1.01,))
    def test_kernel_report(self, k):
        rep = kernel_report(k, N)
        assert rep.dimension == 3
        assert rep.max_principal_angle < 1e-8
        assert rep.sigma_min_nonzero > 0.0

    def test_conditioning_reported_near_one(self):
        # R_k blows up as k -> 1+; the smallest nonzero sigma is survey data
        rep = kernel_report(1.01, N)
        assert np.isfinite(rep.sigma_min_nonzero)


class TestSolve:
    def test_round_trip(self, rng):
        k = 2.0
        g0 = deproject(frame_field(rng), k)
        f = apply_frame_operator(g0, k)
        g = solve_frame_operator(f, k)
        assert np.abs(g - g0).max() < 1e-10

    def test_residual_of_solution(self, rng):
        k = 2.0
        f = apply_frame_operator(deproject(frame_field(rng), k), k)
        g = solve_frame_operator(f, k)
        assert np.abs(apply_frame_operator(g, k) - f).max() < 1e-10

    def test_kernel_rhs_rejected(self):
        k = 2.0
        _, g, _ = kernel_basis(k, N)
        with pytest.raises(NotOrthogonal) as info:
            solve_frame_operator(g, k)
        assert info.value.projection is not None

    def test_solution_is_kernel_orthogonal(self, rng):
        k = 2.0
        f = apply_frame_operator(deproject(frame_field(rng), k), k)
        g = solve_frame_operator(f, k)
        coeffs, _ = _project_kernel(g, k)
        assert np.abs(coeffs).max() < 1e-11


class TestLinearization:
    def test_kernel_fields(self):
        # tangent fields of the solution manifold are annihilated
        k = 2.0
        for z in ((0.0, 1.0), (3.0, 0.5)):
            for phi in tangent_fields(k, N):
                assert np.abs(apply_linearization(z, phi, k)).max() < 1e-11

    @pytest.mark.parametrize("z", [(0.0, 1.0), (3.0, 0.5), (-2.0, 4.0)])
    def test_matches_finite_differences(self, z, rng):
        k = 2.0
        phi = band_limited_field(rng, n=N, modes=6)
        lin = apply_linearization(z, phi, k)
        fd = linearization_fd(z, phi, k, h=1e-5)
        assert np.abs(fd - lin).max() / np.abs(lin).max() < 1e-5

    def test_self_adjoint(self, rng):
        k = 2.0
        z = (1.0, 2.0)
        phi, psi = band_limited_field(rng, n=N), band_limited_field(rng, n=N)
        lhs = dot_mean(apply_linearization(z, phi, k), psi)
        rhs = dot_mean(apply_linearization(z, psi, k), phi)
        assert abs(lhs - rhs) < 1e-11


class TestFrozenSolve:
    @pytest.mark.parametrize("z", [(0.0, 1.0), (0.5, 2.0)])
    def test_inverts_bordered_system(self, z, rng):
        k = 2.0
        rhs = band_limited_field(rng, n=N, modes=6)
        cons = rng.normal(size=3)
        phi, a, p = frozen_solve(z, k, rhs, cons)
        tang = tangent_fields(k, N)
        lhs1 = apply_linearization(z, phi, k) - a * tang[0] - p[0] * tang[1] - p[1] * tang[2]
        assert np.abs(lhs1 - rhs).max() < 1e-8
        lhs2 = np.array([dot_mean(phi, t) for t in tang])
        assert np.abs(lhs2 - cons).max() < 1e-12
