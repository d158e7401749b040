"""Random field factories: support, symmetry, determinism, and the
coherent-profile construction used by the extremal-scaling checks.
"""

import numpy as np
import pytest

from lanslab import (
    as_rng,
    band_mask,
    coverage_k_max,
    inverse_transform,
    l2_norm,
    power_law_field,
    random_band_limited,
    random_solenoidal,
    relative_divergence,
    shell_field,
)


class TestFactoryBasics:
    def test_as_rng_accepts_seed_and_generator(self):
        g = as_rng(7)
        assert isinstance(g, np.random.Generator)
        assert as_rng(g) is g

    def test_coverage_matches_partition_ball(self, grid32):
        # N = 32: K_max = 10.67, deepest shell tops out at 2^3 = 8, so the
        # fully covered ball has radius 4
        assert coverage_k_max(grid32) == 4.0

    def test_band_mask_closed_interval(self, grid16):
        m = band_mask(grid16, 2.0, 4.0)
        r = grid16.k_magnitude
        assert m[2, 0, 0] and m[0, 4, 0]
        assert not m[1, 0, 0] and not m[5, 0, 0]
        assert np.all(r[m] >= 2.0) and np.all(r[m] <= 4.0)

    def test_fields_are_real(self, grid16, rng):
        for f in (
            random_band_limited(grid16, rng, 1.0, 4.0),
            random_solenoidal(grid16, rng),
            power_law_field(grid16, rng, 2.0),
        ):
            samples = inverse_transform(f)
            assert not np.iscomplexobj(samples)

    def test_determinism_per_seed(self, grid16):
        a = random_solenoidal(grid16, as_rng(3))
        b = random_solenoidal(grid16, as_rng(3))
        c = random_solenoidal(grid16, as_rng(4))
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        assert np.max(np.abs(a.coeffs - c.coeffs)) > 0.0


class TestSupport:
    def test_band_limited_support(self, grid16, rng):
        f = random_band_limited(grid16, rng, 2.0, 4.0)
        outside = ~band_mask(grid16, 2.0, 4.0)
        assert np.max(np.abs(f.coeffs[outside])) == 0.0
        assert l2_norm(f) > 0.0

    def test_zero_mean(self, grid16, rng):
        f = random_band_limited(grid16, rng, 1.0, 4.0)
        assert abs(f.coeffs[0, 0, 0]) == 0.0

    def test_lead_axes(self, grid16, rng):
        f = random_band_limited(grid16, rng, 1.0, 4.0, lead=(3,))
        assert f.rank == 1
        assert f.coeffs.shape == (3,) + grid16.shape

    def test_solenoidal_output(self, grid32, rng):
        u = random_solenoidal(grid32, rng, k_min=1.0, k_max=8.0)
        assert relative_divergence(u) < 1e-13

    def test_shell_field_annulus(self, grid32, rng):
        f = shell_field(grid32, 2, rng)
        r = grid32.k_magnitude
        live = np.abs(f.coeffs) > 0
        assert np.all(r[live] > 2.0)
        assert np.all(r[live] < 8.0)
        assert l2_norm(f) > 0.0

    def test_power_law_decay(self, grid32, rng):
        # coherent phases have unit modulus, so the radial amplitude decay
        # is read off directly
        f = power_law_field(grid32, rng, gamma=2.0, k_min=2.0, k_max=8.0, coherent=True)
        a2 = abs(f.coeffs[2, 0, 0])
        a8 = abs(f.coeffs[8, 0, 0])
        assert a2 / a8 == pytest.approx(16.0, rel=1e-10)


class TestCoherentProfiles:
    def test_peak_sits_on_a_lattice_node(self, grid32, rng):
        # the translated-bump phases are snapped to a grid node, so the
        # physical maximum equals the l1 mass of the coefficients exactly
        f = random_band_limited(grid32, rng, 1.0, 4.0, coherent=True)
        samples = inverse_transform(f)
        coeff_mass = np.sum(np.abs(f.coeffs))
        assert np.max(samples) == pytest.approx(coeff_mass, rel=1e-11)

    def test_coherent_seeds_move_the_center(self, grid32):
        a = random_band_limited(grid32, as_rng(0), 1.0, 4.0, coherent=True)
        b = random_band_limited(grid32, as_rng(1), 1.0, 4.0, coherent=True)
        ia = np.unravel_index(np.argmax(inverse_transform(a)), grid32.shape)
        ib = np.unravel_index(np.argmax(inverse_transform(b)), grid32.shape)
        assert ia != ib

    def test_shell_field_coherent_profile(self, grid32, rng):
        # radial envelope: the on-shell amplitude dominates the shell edges
        f = shell_field(grid32, 2, rng, coherent=True)
        r = grid32.k_magnitude
        on_shell = np.abs(r - 4.0) < 0.3
        edge = (np.abs(f.coeffs) > 0) & (r > 6.5)
        assert np.max(np.abs(f.coeffs[on_shell])) > 3.0 * np.max(
            np.abs(f.coeffs[edge]) if np.any(edge) else 0.0
        )
