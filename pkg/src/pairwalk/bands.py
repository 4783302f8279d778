"""Noiseless spectral analysis: quasimomentum sectors, minibands, projections.

For uniform links the two-particle Hamiltonian commutes with the rigid
translation T: |j,k> -> |j+1,k+1>.  The reduced basis splits into translation
orbits (one per pair separation), each carrying momentum states that
block-diagonalize H into sectors of size ~N/2.  Bound pairs are recognized by
their weight at small relative distance; the detached band they form is the
miniband, everything else the main (scattering) band.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse

from .hamiltonian import InteractionSpec, build_two_particle
from .lattice import (LatticeSpec, StateVector, Statistics, TwoParticleBasis,
                      build_basis)

BOUND_WEIGHT_THRESHOLD = 0.5
BOUND_RANGE = 2  # relative distance within which a bound pair concentrates
DEGENERACY_TOL = 1e-8


@dataclass
class Orbit:
    """One translation orbit of configurations, with cumulative exchange signs."""

    indices: np.ndarray
    signs: np.ndarray
    closure_sign: int
    separation: int

    @property
    def length(self) -> int:
        return self.indices.size


def translation_orbits(basis: TwoParticleBasis) -> list[Orbit]:
    """Orbits of the (signed) two-particle translation on the reduced basis."""
    n = basis.n_sites
    fermion = basis.statistics is Statistics.FERMION
    first = 1 if fermion else 0
    orbits = []
    for d in range(first, n // 2 + 1):
        j, k = 0, d
        idxs, signs = [], []
        cur = 1
        while True:
            idxs.append(basis.index_of(j, k)[0])
            signs.append(cur)
            nj, nk = (j + 1) % n, (k + 1) % n
            if nj > nk:
                nj, nk = nk, nj
                if fermion:
                    cur = -cur
            j, k = nj, nk
            if (j, k) == (0, d):
                break
        orbits.append(Orbit(np.array(idxs), np.array(signs, dtype=np.float64),
                            cur, d))
    return orbits


def translation_operator(basis: TwoParticleBasis) -> sparse.csr_matrix:
    """Signed permutation matrix of |j,k> -> |j+1,k+1| (mod N)."""
    rows, cols, vals = [], [], []
    n = basis.n_sites
    fermion = basis.statistics is Statistics.FERMION
    for c in range(basis.dim):
        j, k = int(basis.cfg_j[c]), int(basis.cfg_k[c])
        nj, nk = (j + 1) % n, (k + 1) % n
        sign = 1.0
        if nj > nk:
            nj, nk = nk, nj
            if fermion:
                sign = -1.0
        idx, _ = basis.index_of(nj, nk)
        rows.append(idx)
        cols.append(c)
        vals.append(sign)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def _sector_admits(orbit: Orbit, nu: int, n: int) -> bool:
    if orbit.closure_sign == 1:
        return (nu * orbit.length) % n == 0
    return n % 2 == 0 and (nu * orbit.length) % n == n // 2


def _sector_basis(orbits: list[Orbit], nu: int, n: int, dim: int):
    """Momentum states of sector nu as columns, plus their pair separations."""
    k_val = 2.0 * np.pi * nu / n
    cols, seps = [], []
    for orb in orbits:
        if not _sector_admits(orb, nu, n):
            continue
        v = np.zeros(dim, dtype=np.complex128)
        phases = np.exp(1j * k_val * np.arange(orb.length))
        v[orb.indices] = phases * orb.signs / np.sqrt(orb.length)
        cols.append(v)
        seps.append(orb.separation)
    if not cols:
        return np.zeros((dim, 0), dtype=np.complex128), np.empty(0, dtype=int)
    return np.column_stack(cols), np.array(seps, dtype=int)


def classify_bound_states(separations: np.ndarray, coeffs: np.ndarray,
                          threshold: float = BOUND_WEIGHT_THRESHOLD,
                          r_max: int = BOUND_RANGE) -> np.ndarray:
    """Label sector eigenstates bound (True) when their relative-coordinate
    weight within distance ``r_max`` exceeds ``threshold``."""
    near = separations <= r_max
    weight = (np.abs(coeffs[near, :]) ** 2).sum(axis=0)
    return weight > threshold


@dataclass
class BandStructure:
    """Per-quasimomentum eigenvalues with bound/scattering labels."""

    statistics: Statistics
    n_sites: int
    u_over_j: float
    nu: np.ndarray
    k_values: np.ndarray
    energies: list[np.ndarray]
    bound: list[np.ndarray]

    def sector(self, nu: int) -> tuple[np.ndarray, np.ndarray]:
        i = int(np.flatnonzero(self.nu == nu)[0])
        return self.energies[i], self.bound[i]

    def all_energies(self) -> np.ndarray:
        return np.concatenate(self.energies)

    def rows(self):
        """(nu, K, E, label) rows in deterministic order, for CSV export."""
        for i, nu in enumerate(self.nu):
            for e, b in zip(self.energies[i], self.bound[i]):
                yield int(nu), float(self.k_values[i]), float(e), \
                    ("bound" if b else "scattering")


def band_structure(lattice: LatticeSpec, interaction: InteractionSpec,
                   statistics: Statistics) -> BandStructure:
    """Block-diagonalize the uniform-link two-particle Hamiltonian by sector.

    Sectors are labelled nu = 1..N with quasimomentum K = 2*pi*nu/N; the
    union of the sector spectra is the full spectrum.
    """
    statistics = Statistics(statistics)
    basis = build_basis(lattice, statistics)
    h = build_two_particle(lattice, interaction, basis).to_csr()
    orbits = translation_orbits(basis)
    n = lattice.n_sites

    nus = np.arange(1, n + 1)
    energies, bound = [], []
    for nu in nus:
        v, seps = _sector_basis(orbits, int(nu), n, basis.dim)
        block = v.conj().T @ (h @ v)
        block = 0.5 * (block + block.conj().T)
        w, c = np.linalg.eigh(block)
        energies.append(w)
        bound.append(classify_bound_states(seps, c))
    return BandStructure(statistics, n, interaction.u / lattice.hopping,
                         nus, 2.0 * np.pi * nus / n, energies, bound)


def gap_at_k0(bands: BandStructure) -> float | None:
    """Width of the K=0 gap between the miniband and the main band.

    Undefined (None) when the K=0 sector holds no bound state or the bound
    energies are not detached from the scattering ones.
    """
    energies, bound = bands.sector(bands.n_sites)  # nu = N is the K=0 sector
    if not np.any(bound):
        return None
    gap = float(np.min(energies[bound]) - np.max(energies[~bound]))
    return gap if gap > 0 else None


@dataclass
class ProjectionSpectrum:
    """Projection weights of a state on the distinct eigenlevels of H."""

    energies: np.ndarray
    probabilities: np.ndarray
    bound_fraction: np.ndarray = field(repr=False, default=None)

    def total(self) -> float:
        return float(self.probabilities.sum())

    def miniband_weight(self) -> float:
        return float(np.sum(self.probabilities * self.bound_fraction))

    def mainband_weight(self) -> float:
        return float(np.sum(self.probabilities * (1.0 - self.bound_fraction)))


def eigen_projections(initial: StateVector, lattice: LatticeSpec,
                      interaction: InteractionSpec) -> ProjectionSpectrum:
    """Weights of ``initial`` on the eigenlevels of the noiseless Hamiltonian.

    Degenerate eigenvalues (within the merge tolerance) are aggregated, with
    the miniband share of each level tracked alongside.  Miniband membership
    is the union of the relative-coordinate localization rule and lying
    outside the free two-particle continuum of the state's sector; the two
    rules coincide whenever the miniband is detached, and the union keeps the
    barely-bound part of the branch when the bands overlap.
    """
    basis = initial.basis
    if basis.n_sites != lattice.n_sites:
        raise ValueError("state basis and lattice disagree on the lattice size")
    h = build_two_particle(lattice, interaction, basis).to_csr()
    orbits = translation_orbits(basis)
    n = lattice.n_sites
    psi = initial.amplitudes

    level_e, level_p, level_b = [], [], []
    for nu in range(1, n + 1):
        v, seps = _sector_basis(orbits, nu, n, basis.dim)
        if v.shape[1] == 0:
            continue
        block = v.conj().T @ (h @ v)
        block = 0.5 * (block + block.conj().T)
        w, c = np.linalg.eigh(block)
        overlaps = c.conj().T @ (v.conj().T @ psi)
        probs = np.abs(overlaps) ** 2
        edge = 4.0 * lattice.hopping * abs(np.cos(np.pi * nu / n))
        outside = np.abs(w - 2.0 * lattice.onsite) > edge + 1e-7
        labels = classify_bound_states(seps, c) | outside
        level_e.append(w)
        level_p.append(probs)
        level_b.append(labels.astype(np.float64))

    e = np.concatenate(level_e)
    p = np.concatenate(level_p)
    b = np.concatenate(level_b)
    order = np.argsort(e, kind="stable")
    e, p, b = e[order], p[order], b[order]

    # merge levels within the degeneracy tolerance
    merged_e, merged_p, merged_b = [], [], []
    i = 0
    while i < e.size:
        j = i + 1
        while j < e.size and e[j] - e[j - 1] <= DEGENERACY_TOL:
            j += 1
        psum = p[i:j].sum()
        merged_e.append(p[i:j] @ e[i:j] / psum if psum > 0 else e[i:j].mean())
        merged_p.append(psum)
        merged_b.append(p[i:j] @ b[i:j] / psum if psum > 0 else b[i:j].mean())
        i = j
    return ProjectionSpectrum(np.array(merged_e), np.array(merged_p),
                              np.array(merged_b))
