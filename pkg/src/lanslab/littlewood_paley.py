"""Dyadic Littlewood-Paley decomposition, Besov norms and the paraproduct.

The frequency partition is built from one smooth radial low-pass profile H
(an exp(-1/x) glue) with H = 1 for r <= 1/2 and H = 0 for r >= 1.  Shell
profiles telescope exactly:

    block 0:       Psi(k)   = H(|k| / 2)            low ball, = 1 for |k| <= 1
    block j >= 1:  psi_j(k) = H(|k| / 2^(j+1)) - H(|k| / 2^j)

so psi_j >= 0, psi_j is supported in the open annulus 2^(j-1) < |k| < 2^(j+1),
and Psi + sum_j psi_j = H(|k| / 2^(J+1)) = 1 for every |k| <= 2^J.  Block
operators Delta_j with |j - j'| >= 2 annihilate each other exactly because
the sampled profiles have disjoint supports.

Besov norms sum 2^(j*s)-weighted block L^p norms over blocks j = 0..J with
an l^q sum (sup for q = inf); content above the top shell's support is not
measured, so callers working near the dealias cutoff should band-limit data
to |k| <= 2^J.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import (
    SpectralField,
    TorusGrid,
    dealias,
    forward_transform,
    inverse_transform,
    l2_norm,
    lp_norm,
)

__all__ = [
    "BesovIndex",
    "DyadicPartition",
    "LPBlocks",
    "ParaproductPieces",
    "build_partition",
    "smooth_lowpass_profile",
]


def _smooth_ramp(x: np.ndarray) -> np.ndarray:
    """C-infinity ramp: 0 for x <= 0, 1 for x >= 1, strictly rising between."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        a = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        b = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return a / (a + b)


def smooth_lowpass_profile(r: np.ndarray) -> np.ndarray:
    """Radial low-pass H(r): exactly 1 for r <= 1/2, exactly 0 for r >= 1."""
    return 1.0 - _smooth_ramp(2.0 * np.asarray(r, dtype=float) - 1.0)


@dataclass(frozen=True)
class BesovIndex:
    """Regularity/integrability triple (s, p, q); p, q may be inf."""

    s: float
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        if self.p != np.inf and self.p < 1:
            raise ValueError(f"p must satisfy 1 <= p <= inf, got {self.p}")
        if self.q != np.inf and self.q < 1:
            raise ValueError(f"q must satisfy 1 <= q <= inf, got {self.q}")


@dataclass
class LPBlocks:
    """Block fields Delta_j f for j = 0..j_max (block 0 is the low ball)."""

    blocks: list

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, j):
        return self.blocks[j]

    def reconstruct(self) -> SpectralField:
        out = self.blocks[0]
        for b in self.blocks[1:]:
            out = out + b
        return out


@dataclass
class ParaproductPieces:
    """The three Bony pieces of a product f*g.

    low_high collects sum_k S_(k-3) f * Delta_k g (low frequencies of f
    against high of g), high_low the mirror image, resonant the near-diagonal
    interactions sum_k Delta_k f * sum_(|l|<=2) Delta_(k+l) g.  The pieces
    sum to the dealiased product.
    """

    low_high: SpectralField
    high_low: SpectralField
    resonant: SpectralField

    def total(self) -> SpectralField:
        return self.low_high + self.high_low + self.resonant


class DyadicPartition:
    """Sampled dyadic partition of unity on a grid's frequency lattice."""

    def __init__(self, grid: TorusGrid, j_max: int):
        if j_max < 1:
            raise ValueError("j_max must be at least 1")
        if 2.0 ** (j_max + 1) > grid.k_max * (1 + 1e-12):
            raise ValueError(
                f"j_max={j_max} too large: top shell needs 2^(j_max+1) <= K_max = {grid.k_max:.3f}"
            )
        self.grid = grid
        self.j_max = j_max
        r = grid.k_magnitude
        mults = [smooth_lowpass_profile(r / 2.0)]
        for j in range(1, j_max + 1):
            mults.append(
                smooth_lowpass_profile(r / 2.0 ** (j + 1)) - smooth_lowpass_profile(r / 2.0**j)
            )
        self.multipliers = np.stack(mults)  # (j_max+1,) + grid.shape

    @cached_property
    def unity_defect(self) -> float:
        """Max |1 - sum of profiles| over the lattice ball |k| <= 2^j_max."""
        total = np.sum(self.multipliers, axis=0)
        covered = self.grid.k_magnitude <= 2.0**self.j_max
        return float(np.max(np.abs(1.0 - total[covered])))

    def lowpass_multiplier(self, j: int) -> np.ndarray:
        """S_j multiplier = sum of blocks 0..j = H(|k| / 2^(j+1))."""
        if j < 0:
            return np.zeros(self.grid.shape)
        j = min(j, self.j_max)
        return smooth_lowpass_profile(self.grid.k_magnitude / 2.0 ** (j + 1))

    def delta_j(self, f: SpectralField, j: int) -> SpectralField:
        if not 0 <= j <= self.j_max:
            raise ValueError(f"block index {j} outside 0..{self.j_max}")
        self._check_grid(f)
        return SpectralField(f.grid, f.coeffs * self.multipliers[j], f.real_valued)

    def s_j(self, f: SpectralField, j: int) -> SpectralField:
        """Cumulative low-pass sum of blocks 0..j."""
        self._check_grid(f)
        return SpectralField(f.grid, f.coeffs * self.lowpass_multiplier(j), f.real_valued)

    def decompose(self, f: SpectralField) -> LPBlocks:
        self._check_grid(f)
        return LPBlocks([self.delta_j(f, j) for j in range(self.j_max + 1)])

    def block_lp_norms(self, f: SpectralField, p: float) -> np.ndarray:
        """||Delta_j f||_p for j = 0..j_max; p = 2 goes through Parseval."""
        self._check_grid(f)
        out = np.empty(self.j_max + 1)
        if p == 2:
            mags = np.abs(f.coeffs) ** 2
            # sum over lead axes so vectors use the Euclidean magnitude
            mags = mags.reshape((-1,) + f.grid.shape).sum(axis=0)
            vol = f.grid.box_length**f.grid.dim
            for j in range(self.j_max + 1):
                out[j] = np.sqrt(vol * np.sum(self.multipliers[j] ** 2 * mags))
        else:
            for j in range(self.j_max + 1):
                out[j] = lp_norm(self.delta_j(f, j), p)
        return out

    def besov_norm(self, f: SpectralField, index: BesovIndex, homogeneous: bool = False) -> float:
        """l^q sum over blocks of 2^(j*s) ||Delta_j f||_p.

        homogeneous=True skips block 0, matching homogeneous-space
        comparisons on mean-zero data.
        """
        norms = self.block_lp_norms(f, index.p)
        j0 = 1 if homogeneous else 0
        js = np.arange(j0, self.j_max + 1)
        terms = 2.0 ** (js * index.s) * norms[j0:]
        if index.q == np.inf:
            return float(np.max(terms)) if terms.size else 0.0
        return float(np.sum(terms**index.q) ** (1.0 / index.q))

    def paraproduct_split(self, f: SpectralField, g: SpectralField) -> ParaproductPieces:
        """Bony decomposition of the dealiased pointwise product f*g."""
        self._check_grid(f)
        self._check_grid(g)
        if f.rank != 0 or g.rank != 0:
            raise ValueError("paraproduct_split is defined for scalar fields")
        J = self.j_max
        blocks_f = [inverse_transform(self.delta_j(f, j)) for j in range(J + 1)]
        blocks_g = [inverse_transform(self.delta_j(g, j)) for j in range(J + 1)]
        # cumulative physical low-pass sums S_m, index m = -1 meaning zero
        cum_f = [np.zeros(self.grid.shape)]
        cum_g = [np.zeros(self.grid.shape)]
        for j in range(J + 1):
            cum_f.append(cum_f[-1] + blocks_f[j])
            cum_g.append(cum_g[-1] + blocks_g[j])

        low_high = np.zeros(self.grid.shape)
        high_low = np.zeros(self.grid.shape)
        resonant = np.zeros(self.grid.shape)
        for k in range(J + 1):
            s_idx = max(k - 3 + 1, 0)  # cum list is offset by one
            low_high += cum_f[s_idx] * blocks_g[k]
            high_low += cum_g[s_idx] * blocks_f[k]
            near = np.zeros(self.grid.shape)
            for l in range(-2, 3):
                if 0 <= k + l <= J:
                    near += blocks_g[k + l]
            resonant += blocks_f[k] * near

        real = f.real_valued and g.real_valued
        mk = lambda arr: dealias(forward_transform(arr, self.grid, real))
        return ParaproductPieces(mk(low_high), mk(high_low), mk(resonant))

    def kernel(self, j: int) -> SpectralField:
        """Physical convolution kernel of Delta_j as a scalar field.

        Normalized so that Delta_j f = kernel * f as a torus convolution;
        its L^p norms scale like 2^(j n (1 - 1/p)) in the shell index.
        """
        coeffs = self.multipliers[j].astype(np.complex128) / self.grid.box_length**self.grid.dim
        return SpectralField(self.grid, coeffs, True)

    def _check_grid(self, f: SpectralField):
        if f.grid != self.grid:
            raise ValueError("field grid does not match partition grid")


def build_partition(grid: TorusGrid, j_max: int | None = None) -> DyadicPartition:
    """Build the partition with the largest J satisfying 2^(J+1) <= K_max
    unless an explicit j_max is requested."""
    if j_max is None:
        j_max = int(np.floor(np.log2(grid.k_max + 1e-12))) - 1
        if j_max < 1:
            raise ValueError(
                f"grid too coarse for a dyadic partition: K_max = {grid.k_max:.2f} < 4"
            )
    return DyadicPartition(grid, j_max)
