"""Dyadic frequency decomposition: partition quality, block norms,
Besov norms with closed-form oracles, Bony splitting, kernels.
"""

import numpy as np
import pytest

from lanslab import (
    BesovIndex,
    DyadicPartition,
    TorusGrid,
    build_partition,
    dealias,
    forward_transform,
    l2_norm,
    lp_norm,
    random_band_limited,
)

VOLUME_3D = (2.0 * np.pi) ** 3
COS_NORM = np.sqrt(VOLUME_3D / 2.0)  # L2 norm of a single cosine mode


def cos_mode(grid, k_vec):
    phase = sum(k * x for k, x in zip(k_vec, grid.mesh))
    return forward_transform(np.cos(phase), grid)


class TestPartitionStructure:
    def test_default_depth_tracks_dealias_band(self):
        # top shell must fit under K_max = (2/3)(N/2)
        for n, expected in ((16, 1), (32, 2), (64, 3), (128, 4)):
            part = build_partition(TorusGrid(3, n))
            assert part.j_max == expected, f"N={n}"

    def test_too_deep_partition_rejected(self, grid16):
        with pytest.raises(ValueError):
            DyadicPartition(grid16, j_max=2)

    def test_unity_on_covered_ball(self, part32):
        assert part32.unity_defect <= 1e-12

    def test_non_adjacent_blocks_disjoint(self, part32):
        mults = part32.multipliers
        for j in range(len(mults)):
            for i in range(j + 2, len(mults)):
                overlap = np.max(np.abs(mults[j] * mults[i]))
                assert overlap <= 1e-14, f"blocks {j}, {i} overlap"

    def test_multipliers_nonnegative_and_bounded(self, part32):
        assert np.all(part32.multipliers >= -1e-15)
        assert np.all(part32.multipliers <= 1.0 + 1e-15)

    def test_telescoping_reconstruction(self, part32, grid32, rng):
        # fields limited to the covered ball are reassembled exactly
        f = random_band_limited(grid32, rng, 1.0, 2.0**part32.j_max)
        back = part32.decompose(f).reconstruct()
        assert l2_norm(back - f) <= 1e-13 * l2_norm(f)

    def test_sj_equals_partial_sum(self, part32, grid32, rng):
        f = random_band_limited(grid32, rng, 1.0, 8.0)
        blocks = part32.decompose(f)
        partial = blocks[0] + blocks[1]
        np.testing.assert_allclose(
            part32.s_j(f, 1).coeffs, partial.coeffs, atol=1e-14
        )

    def test_block_index_range_checked(self, part32, grid32, rng):
        f = random_band_limited(grid32, rng)
        with pytest.raises(ValueError):
            part32.delta_j(f, part32.j_max + 1)


class TestBesovNorms:
    def test_single_mode_all_q(self, part32, grid32):
        # |k| = 4 sits entirely in shell 2, so the norm is 4^s * ||cos||_2
        # for every summation index q
        f = cos_mode(grid32, (4, 0, 0))
        for q in (1.0, 2.0, np.inf):
            idx = BesovIndex(1.5, 2.0, q)
            assert part32.besov_norm(f, idx) == pytest.approx(
                4.0**1.5 * COS_NORM, rel=1e-12
            )

    def test_two_shell_combination(self, part32, grid32):
        # shells 1 and 2 each hold one cosine; the q-sum is explicit
        f = cos_mode(grid32, (2, 0, 0)) + cos_mode(grid32, (0, 4, 0))
        s = 1.5
        b1, b2 = 2.0**s * COS_NORM, 4.0**s * COS_NORM
        expected = {
            1.0: b1 + b2,
            2.0: np.hypot(b1, b2),
            np.inf: max(b1, b2),
        }
        for q, want in expected.items():
            got = part32.besov_norm(f, BesovIndex(s, 2.0, q))
            assert got == pytest.approx(want, rel=1e-12)

    def test_homogeneous_skips_low_ball(self, part32, grid32):
        f = forward_transform(np.ones(grid32.shape), grid32)
        idx = BesovIndex(1.5, 2.0, 2.0)
        assert part32.besov_norm(f, idx, homogeneous=True) == 0.0
        assert part32.besov_norm(f, idx) == pytest.approx(
            np.sqrt(VOLUME_3D), rel=1e-12
        )

    def test_q_monotonicity(self, part32, grid32, rng):
        # l^q norms shrink as q grows
        f = random_band_limited(grid32, rng, 1.0, 4.0)
        idx = lambda q: BesovIndex(0.5, 2.0, q)
        n1 = part32.besov_norm(f, idx(1.0))
        n2 = part32.besov_norm(f, idx(2.0))
        ninf = part32.besov_norm(f, idx(np.inf))
        assert n1 >= n2 >= ninf > 0.0

    def test_block_l2_shortcut_matches_fft_route(self, part32, grid32, rng):
        # the Parseval shortcut for p = 2 must agree with physically
        # transforming each block
        f = random_band_limited(grid32, rng, 1.0, 4.0, lead=(3,))
        shortcut = part32.block_lp_norms(f, 2.0)
        direct = [l2_norm(part32.delta_j(f, j)) for j in range(part32.j_max + 1)]
        np.testing.assert_allclose(shortcut, direct, rtol=1e-12)

    def test_index_validation(self):
        with pytest.raises(ValueError):
            BesovIndex(1.0, 0.5, 2.0)
        with pytest.raises(ValueError):
            BesovIndex(1.0, 2.0, 0.0)


class TestParaproduct:
    def test_pieces_sum_to_product(self, part32, grid32, rng):
        f = random_band_limited(grid32, rng, 1.0, 4.0)
        g = random_band_limited(grid32, rng, 1.0, 4.0)
        pieces = part32.paraproduct_split(f, g)
        fg = inverse_then_product(f, g)
        resid = l2_norm(pieces.total() - fg)
        assert resid <= 1e-10 * max(l2_norm(fg), 1e-300)

    def test_split_is_bilinear_symmetric(self, part32, grid32, rng):
        f = random_band_limited(grid32, rng, 1.0, 4.0)
        g = random_band_limited(grid32, rng, 1.0, 4.0)
        ab = part32.paraproduct_split(f, g)
        ba = part32.paraproduct_split(g, f)
        # swapping the arguments swaps the two lopsided pieces
        np.testing.assert_allclose(
            ab.low_high.coeffs, ba.high_low.coeffs, atol=1e-12
        )
        np.testing.assert_allclose(
            ab.resonant.coeffs, ba.resonant.coeffs, atol=1e-12
        )


def inverse_then_product(f, g):
    from lanslab import inverse_transform

    prod = inverse_transform(f) * inverse_transform(g)
    return dealias(forward_transform(prod, f.grid))


@pytest.fixture(scope="module")
def part64():
    return build_partition(TorusGrid(3, 64))


class TestKernels:
    def test_l1_uniformly_bounded(self, part64):
        # the annulus kernels are a rescaled single profile, so their L1
        # norms approach a constant instead of growing with j
        norms = [lp_norm(part64.kernel(j), 1.0) for j in range(1, part64.j_max + 1)]
        assert max(norms) <= 10.0
        assert max(norms) / min(norms) <= 2.0

    def test_l2_scaling(self, part64):
        # ||K_j||_2 ~ 2^(j n / 2): ratio 2^(3/2) between consecutive shells
        a = lp_norm(part64.kernel(2), 2.0)
        b = lp_norm(part64.kernel(3), 2.0)
        assert b / a == pytest.approx(2.0**1.5, rel=0.05)

    def test_linf_scaling(self, part64):
        # ||K_j||_inf ~ 2^(j n): ratio 8 between consecutive shells
        a = lp_norm(part64.kernel(2), np.inf)
        b = lp_norm(part64.kernel(3), np.inf)
        assert b / a == pytest.approx(8.0, rel=0.05)
