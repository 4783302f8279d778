"""Site-resolved observables of the pair: reduced diagonal, moments, occupations."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .lattice import StateVector, Statistics, TwoParticleBasis


def single_particle_diagonal(state: StateVector) -> np.ndarray:
    """Diagonal of the single-particle reduced density matrix.

    p_i = sum_k |psi(i, k)|^2 over the product-space amplitudes; sums to 1
    for a normalized state.
    """
    basis = state.basis
    out = np.zeros(basis.n_sites)
    _kernels.pair_site_marginal(state.amplitudes, basis.cfg_j, basis.cfg_k,
                                basis.cfg_j == basis.cfg_k, out)
    return out


def position_moments(p: np.ndarray) -> tuple[float, float]:
    """First and second moments of the site index under the distribution p."""
    sites = np.arange(p.size, dtype=np.float64)
    return float(p @ sites), float(p @ sites**2)


def position_variance(p: np.ndarray) -> float:
    """Second central moment of the site index under p (sites are integer labels)."""
    m1, m2 = position_moments(p)
    return m2 - m1 * m1


def pair_populations(state: StateVector) -> np.ndarray:
    """Reduced-basis populations |amplitude|^2 of a pair state."""
    a = state.amplitudes
    return (a.real**2 + a.imag**2)


def occupation_numbers(basis: TwoParticleBasis, populations: np.ndarray) -> np.ndarray:
    """Mean particle number per site, from reduced-basis pair populations.

    n_k = 2 * sum_j rho_{kj,kj} evaluated on the product-space populations;
    the vector sums to 2 for trace-one populations.  For fermions the
    diagonal pairs (k, k) are structurally absent and contribute nothing.
    """
    populations = np.asarray(populations, dtype=np.float64)
    if populations.shape != (basis.dim,):
        raise ValueError("populations do not match the basis dimension")
    n = np.zeros(basis.n_sites)
    diag = basis.cfg_j == basis.cfg_k
    off = ~diag
    np.add.at(n, basis.cfg_j[off], populations[off])
    np.add.at(n, basis.cfg_k[off], populations[off])
    if basis.statistics is Statistics.BOSON:
        np.add.at(n, basis.cfg_j[diag], 2.0 * populations[diag])
    return n


def variance_gain(sigma2_fast: float, sigma2_nonoise: float,
                  stderr_fast: float = 0.0,
                  stderr_nonoise: float = 0.0) -> tuple[float, float]:
    """Relative spreading gain sigma2_fast / sigma2_nonoise - 1 with its error.

    Standard errors of the two variances propagate in quadrature through the
    ratio.  A vanishing noiseless variance leaves the gain undefined.
    """
    if sigma2_nonoise <= 0.0:
        raise ZeroDivisionError(
            "variance gain undefined: noiseless variance is zero at this time")
    ratio = sigma2_fast / sigma2_nonoise
    rel = 0.0
    if sigma2_fast != 0.0:
        rel = (stderr_fast / sigma2_fast) ** 2
    rel += (stderr_nonoise / sigma2_nonoise) ** 2
    return ratio - 1.0, abs(ratio) * float(np.sqrt(rel))
