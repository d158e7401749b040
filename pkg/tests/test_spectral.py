"""Spectral core: transforms, Fourier multipliers, tensor calculus.

Every numeric expectation here is frozen from a hand computation on the
2 pi torus; none is read back from the implementation.
"""

import numpy as np
import pytest

from lanslab import (
    GridMismatchError,
    SingularModeError,
    SolenoidalityError,
    SpectralField,
    TorusGrid,
    advection_tensor,
    dealias,
    def_rot,
    divergence,
    forward_transform,
    gradient,
    helmholtz_inverse,
    inverse_transform,
    l2_inner,
    l2_norm,
    laplacian_power,
    leray_project,
    lp_norm,
    outer_product,
    random_solenoidal,
    relative_divergence,
    require_solenoidal,
    sobolev_norm,
    zero_field,
)

# volume of the unit torus [0, 2pi)^3; sqrt of it is the L2 norm of f == 1
VOLUME_3D = (2.0 * np.pi) ** 3
CONST_NORM_3D = 15.749609945722419  # (2 pi)^(3/2), frozen


def single_mode(grid, k_vec, lead=None):
    """cos(k . x) as a spectral field, optionally embedded in one vector slot."""
    phase = sum(k * x for k, x in zip(k_vec, grid.mesh))
    samples = np.cos(phase)
    if lead is not None:
        vec = np.zeros((grid.dim,) + grid.shape)
        vec[lead] = samples
        return forward_transform(vec, grid)
    return forward_transform(samples, grid)


class TestTorusGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            TorusGrid(dim=3, points_per_axis=24)

    def test_rejects_tiny_grids(self):
        with pytest.raises(ValueError):
            TorusGrid(dim=3, points_per_axis=4)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            TorusGrid(dim=4, points_per_axis=16)

    def test_spacing_and_volume(self, grid16):
        assert grid16.spacing == pytest.approx(2.0 * np.pi / 16)
        assert grid16.cell_volume * 16**3 == pytest.approx(VOLUME_3D)

    def test_dealias_cutoff_two_thirds(self, grid16):
        # keep |k| <= (2/3)(N/2) = 5.33 -> keep 5, kill 6 and above
        assert grid16.dealias_keep == 5
        mode5 = single_mode(grid16, (5, 0, 0))
        mode6 = single_mode(grid16, (6, 0, 0))
        assert l2_norm(dealias(mode5)) > 1.0
        assert l2_norm(dealias(mode6)) < 1e-13 * l2_norm(mode6)

    def test_wavenumber_scale_with_box_length(self):
        g = TorusGrid(dim=3, points_per_axis=16, box_length=np.pi)
        assert g.wavenumber_scale == pytest.approx(2.0)


class TestTransforms:
    def test_roundtrip_is_identity(self, grid16, rng):
        samples = rng.standard_normal((3,) + grid16.shape)
        back = inverse_transform(forward_transform(samples, grid16))
        np.testing.assert_allclose(back, samples, atol=1e-12)

    def test_constant_field_norm(self, grid16):
        f = forward_transform(np.ones(grid16.shape), grid16)
        assert l2_norm(f) == pytest.approx(CONST_NORM_3D, rel=1e-13)

    def test_cosine_coefficients_are_half(self, grid16):
        f = single_mode(grid16, (1, 0, 0))
        assert f.coeffs[1, 0, 0] == pytest.approx(0.5)
        assert f.coeffs[-1, 0, 0] == pytest.approx(0.5)

    def test_parseval_two_routes(self, grid16, rng):
        # physical quadrature (lp_norm) against coefficient sum (l2_norm)
        f = forward_transform(rng.standard_normal(grid16.shape), grid16)
        assert lp_norm(f, 2.0) == pytest.approx(l2_norm(f), rel=1e-12)

    def test_cosine_l2_norm_closed_form(self, grid16):
        # integral of cos^2 over the box is volume/2
        f = single_mode(grid16, (2, 1, 0))
        assert l2_norm(f) == pytest.approx(np.sqrt(VOLUME_3D / 2.0), rel=1e-13)

    def test_lp_infinity_is_peak_value(self, grid16):
        f = single_mode(grid16, (1, 0, 0))
        assert lp_norm(f, np.inf) == pytest.approx(1.0, rel=1e-12)


class TestDerivatives:
    def test_gradient_of_sine(self, grid16):
        samples = np.sin(grid16.mesh[0])
        g = gradient(forward_transform(samples, grid16))
        phys = inverse_transform(g)
        np.testing.assert_allclose(phys[0], np.cos(grid16.mesh[0]), atol=1e-12)
        np.testing.assert_allclose(phys[1], 0.0, atol=1e-13)

    def test_jacobian_convention(self, grid16):
        # u = (sin x2, 0, 0): G[i, j] = d_j u_i so G[0, 1] = cos x2
        u = single_mode_sin(grid16)
        G = inverse_transform(gradient(u))
        np.testing.assert_allclose(G[0, 1], np.cos(grid16.mesh[1]), atol=1e-12)
        np.testing.assert_allclose(G[1, 0], 0.0, atol=1e-13)

    def test_gradient_rejects_rank_two(self, grid16, rng):
        u = forward_transform(rng.standard_normal((3, 3) + grid16.shape), grid16)
        with pytest.raises(ValueError):
            gradient(u)

    def test_divergence_contracts_last_lead_axis(self, grid16, rng):
        # div(grad f) = Laplacian f = -|k|^2 f
        f = forward_transform(rng.standard_normal(grid16.shape), grid16)
        lap = divergence(gradient(f))
        expected = laplacian_power(f, 2.0) * (-1.0)
        np.testing.assert_allclose(lap.coeffs, expected.coeffs, atol=1e-12)

    def test_def_rot_at_origin(self, grid16):
        # u = (sin x2, 0, 0): at x = 0 the Jacobian is the unit entry
        # G[0, 1] = 1, so Def[0, 1] = Def[1, 0] = 1/2 and Rot[0, 1] = 1/2.
        u = single_mode_sin(grid16)
        D, R = def_rot(u)
        d0 = inverse_transform(D)[..., 0, 0, 0]
        r0 = inverse_transform(R)[..., 0, 0, 0]
        assert d0[0, 1] == pytest.approx(0.5, abs=1e-12)
        assert d0[1, 0] == pytest.approx(0.5, abs=1e-12)
        assert r0[0, 1] == pytest.approx(0.5, abs=1e-12)
        assert r0[1, 0] == pytest.approx(-0.5, abs=1e-12)
        recombined = D.coeffs + R.coeffs
        np.testing.assert_allclose(recombined, gradient(u).coeffs, atol=1e-13)


def single_mode_sin(grid):
    vec = np.zeros((grid.dim,) + grid.shape)
    vec[0] = np.sin(grid.mesh[1])
    return forward_transform(vec, grid)


class TestMultipliers:
    def test_laplacian_power_single_mode(self, grid16):
        f = single_mode(grid16, (2, 0, 0))
        out = laplacian_power(f, 1.5)
        assert out.coeffs[2, 0, 0] == pytest.approx(0.5 * 2.0**1.5, rel=1e-13)

    def test_negative_power_inverts(self, grid16, rng):
        f = forward_transform(rng.standard_normal(grid16.shape), grid16)
        f.coeffs[0, 0, 0] = 0.0
        back = laplacian_power(laplacian_power(f, 2.0), -2.0)
        np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-12)

    def test_negative_power_needs_zero_mean(self, grid16):
        f = forward_transform(np.ones(grid16.shape), grid16)
        with pytest.raises(SingularModeError):
            laplacian_power(f, -1.0)

    def test_helmholtz_inverse_single_mode(self, grid16):
        # (1 + alpha^2 |k|^2)^(-1) at |k|^2 = 4, alpha = 0.5 is 1/2
        f = single_mode(grid16, (2, 0, 0))
        out = helmholtz_inverse(f, 0.5)
        assert out.coeffs[2, 0, 0] == pytest.approx(0.25, rel=1e-13)

    def test_helmholtz_alpha_zero_is_identity(self, grid16, rng):
        f = forward_transform(rng.standard_normal(grid16.shape), grid16)
        np.testing.assert_allclose(helmholtz_inverse(f, 0.0).coeffs, f.coeffs)

    def test_sobolev_norm_single_mode(self, grid16):
        # homogeneous H^s of cos(2 x1): |k|^s times the L2 norm
        f = single_mode(grid16, (2, 0, 0))
        expected = 2.0**1.5 * np.sqrt(VOLUME_3D / 2.0)
        assert sobolev_norm(f, 1.5, homogeneous=True) == pytest.approx(expected, rel=1e-12)


class TestLerayProjection:
    def test_kills_gradients(self, grid16, rng):
        phi = forward_transform(rng.standard_normal(grid16.shape), grid16)
        assert l2_norm(leray_project(gradient(phi))) < 1e-13 * l2_norm(gradient(phi))

    def test_idempotent(self, grid16, rng):
        u = forward_transform(rng.standard_normal((3,) + grid16.shape), grid16)
        once = leray_project(u)
        twice = leray_project(once)
        np.testing.assert_allclose(twice.coeffs, once.coeffs, atol=1e-14)

    def test_output_is_solenoidal(self, grid16, rng):
        u = forward_transform(rng.standard_normal((3,) + grid16.shape), grid16)
        assert relative_divergence(leray_project(u)) < 1e-13

    def test_fixes_solenoidal_fields(self, grid16, rng):
        u = random_solenoidal(grid16, rng)
        np.testing.assert_allclose(leray_project(u).coeffs, u.coeffs, atol=1e-13)

    def test_require_solenoidal_raises(self, grid16):
        bad = gradient(single_mode(grid16, (1, 0, 0)))
        with pytest.raises(SolenoidalityError):
            require_solenoidal(bad)


class TestTensorOps:
    def test_divergence_of_outer_is_advection(self, grid16, rng):
        # for solenoidal v: div(u (x) v)_i = (v . grad) u_i; compare against
        # an independent physical-space contraction
        u = random_solenoidal(grid16, rng, k_min=1.0, k_max=3.0)
        v = random_solenoidal(grid16, rng, k_min=1.0, k_max=3.0)
        lhs = divergence(outer_product(u, v))
        pv = inverse_transform(v)
        jac = inverse_transform(gradient(u))
        rhs = forward_transform(np.einsum("j...,ij...->i...", pv, jac), grid16)
        np.testing.assert_allclose(lhs.coeffs, dealias(rhs).coeffs, atol=1e-12)

    def test_advection_tensor_symmetry(self, grid16, rng):
        u = random_solenoidal(grid16, rng, k_max=3.0)
        v = random_solenoidal(grid16, rng, k_max=3.0)
        ab = advection_tensor(u, v)
        ba = advection_tensor(v, u)
        np.testing.assert_allclose(ab.coeffs, ba.coeffs, atol=1e-13)
        np.testing.assert_allclose(
            ab.coeffs, np.swapaxes(ab.coeffs, 0, 1), atol=1e-13
        )

    def test_outer_product_single_modes(self, grid16):
        # cos(x1) * cos(x1) = 1/2 + cos(2 x1)/2: check the mean and second mode
        u = single_mode(grid16, (1, 0, 0), lead=0)
        v = single_mode(grid16, (1, 0, 0), lead=0)
        t = outer_product(u, v)
        assert t.coeffs[0, 0, 0, 0, 0] == pytest.approx(0.5)
        assert t.coeffs[0, 0, 2, 0, 0] == pytest.approx(0.25)

    def test_grid_mismatch_rejected(self, grid16, grid8, rng):
        a = forward_transform(rng.standard_normal((3,) + grid16.shape), grid16)
        b = forward_transform(rng.standard_normal((3,) + grid8.shape), grid8)
        with pytest.raises(GridMismatchError):
            outer_product(a, b)


class TestInnerProducts:
    def test_l2_inner_matches_quadrature(self, grid16, rng):
        fa = rng.standard_normal(grid16.shape)
        fb = rng.standard_normal(grid16.shape)
        a = forward_transform(fa, grid16)
        b = forward_transform(fb, grid16)
        quad = np.sum(fa * fb) * grid16.cell_volume
        assert l2_inner(a, b) == pytest.approx(quad, rel=1e-12)

    def test_zero_field(self, grid16):
        z = zero_field(grid16)
        assert l2_norm(z) == 0.0
        assert z.rank == 1
        assert relative_divergence(z) == 0.0
