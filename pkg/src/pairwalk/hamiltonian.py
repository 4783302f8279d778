"""Hopping Hamiltonians on the ring, with per-link amplitudes that can fluctuate.

The two-particle operator acts on the symmetry-reduced basis.  Storage is a
fixed-width neighbour table (at most four hop entries per row plus a
diagonal), so updating the off-diagonal amplitudes after a telegraph flip
touches only the entries that cross the flipped link.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .lattice import LatticeSpec, Statistics, TwoParticleBasis

HOP_SLOTS = 4  # two particles, two directions each

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class InteractionSpec:
    """Distance-dependent pair interaction: u on site, u/3 on neighbours, else 0."""

    u: float = 0.0

    def strength(self, distance: int) -> float:
        if distance < 0:
            raise ValueError("distance must be >= 0")
        if distance == 0:
            return self.u
        if distance == 1:
            return self.u / 3.0
        return 0.0


def interaction_strength(spec: InteractionSpec, distance: int) -> float:
    """Interaction energy of a pair at the given (periodic) site distance."""
    return spec.strength(distance)


def uniform_links(n_links: int, value: float = 0.0) -> np.ndarray:
    """Per-link noise offsets, all equal (zero for the clean lattice)."""
    return np.full(n_links, value, dtype=np.float64)


class SparseHamiltonian:
    """Hermitian operator with at most four real off-diagonal entries per row.

    Off-diagonal entry values are ``-J * (1 + g_link) * factor`` where the
    factor carries the exchange sign (fermions) or the sqrt(2) enhancement
    between diagonal and off-diagonal configurations (bosons).  ``fac == 0``
    marks padding slots.  The sparsity pattern is fixed at construction;
    ``update_links`` / ``flip_links`` touch values only.
    """

    def __init__(self, diag, cols, fac, link_of, link_values, hopping,
                 basis: TwoParticleBasis | None = None):
        self.diag = np.ascontiguousarray(diag, dtype=np.float64)
        self.cols = np.ascontiguousarray(cols, dtype=np.int32)
        self.fac = np.ascontiguousarray(fac, dtype=np.float64)
        self.link_of = np.ascontiguousarray(link_of, dtype=np.int32)
        self.hopping = float(hopping)
        self.basis = basis
        self.dim = self.diag.size
        self.n_links = link_values.size
        # flat positions of the entries crossing each link, for O(1) flips
        order = np.argsort(self.link_of.ravel(), kind="stable")
        flat_links = self.link_of.ravel()[order]
        first_real = np.searchsorted(flat_links, 0)
        pos = order[first_real:].astype(np.int64)
        self.link_pos = np.ascontiguousarray(pos)
        self.link_fac = np.ascontiguousarray(self.fac.ravel()[pos])
        counts = np.bincount(flat_links[first_real:], minlength=self.n_links)
        self.link_indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        self._row_fac_sum = np.abs(self.fac).sum(axis=1)
        self.amps = np.empty_like(self.fac)
        self.link_values = np.empty(self.n_links, dtype=np.float64)
        self.update_links(link_values)

    def update_links(self, values) -> "SparseHamiltonian":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_links,):
            raise ValueError(
                f"expected {self.n_links} link values, got shape {values.shape}"
            )
        self.link_values[:] = values
        amp = -self.hopping * (1.0 + values[np.maximum(self.link_of, 0)])
        np.multiply(amp, self.fac, out=self.amps)
        return self

    def flip_links(self, link_indices) -> "SparseHamiltonian":
        """Negate the telegraph value on the given links (in place)."""
        flat = self.amps.ravel()
        for ell in np.atleast_1d(link_indices):
            self.link_values[ell] = -self.link_values[ell]
            amp = -self.hopping * (1.0 + self.link_values[ell])
            p = slice(self.link_indptr[ell], self.link_indptr[ell + 1])
            flat[self.link_pos[p]] = amp * self.link_fac[p]
        return self

    def copy(self) -> "SparseHamiltonian":
        h = object.__new__(SparseHamiltonian)
        h.__dict__.update(self.__dict__)
        h.amps = self.amps.copy()
        h.link_values = self.link_values.copy()
        return h

    def spectral_bounds(self, g_max: float | None = None) -> tuple[float, float]:
        """Interval certain to contain the spectrum for any |g| <= g_max."""
        if g_max is None:
            g_max = float(np.max(np.abs(self.link_values), initial=0.0))
        hop = self.hopping * (1.0 + g_max) * self._row_fac_sum
        return float(np.min(self.diag - hop)), float(np.max(self.diag + hop))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        out = self.diag * v
        for s in range(HOP_SLOTS):
            out += self.amps[:, s] * v[self.cols[:, s]]
        return out

    def to_csr(self) -> sparse.csr_matrix:
        rows = np.repeat(np.arange(self.dim), HOP_SLOTS)
        mask = self.fac.ravel() != 0.0
        m = sparse.coo_matrix(
            (self.amps.ravel()[mask], (rows[mask], self.cols.ravel()[mask])),
            shape=(self.dim, self.dim),
        )
        m = m.tocsr()
        m += sparse.diags(self.diag)
        return m.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()


def _require_links(lattice: LatticeSpec, links) -> np.ndarray:
    if links is None:
        return uniform_links(lattice.n_sites)
    links = np.asarray(links, dtype=np.float64)
    if links.shape != (lattice.n_sites,):
        raise ValueError(
            f"ring of {lattice.n_sites} sites has {lattice.n_sites} links, "
            f"got shape {links.shape}"
        )
    return links


def build_single_particle(lattice: LatticeSpec, links=None) -> SparseHamiltonian:
    """One-walker Hamiltonian: onsite energy plus (noisy) nearest-neighbour hops."""
    links = _require_links(lattice, links)
    n = lattice.n_sites
    diag = np.full(n, lattice.onsite)
    cols = np.tile(np.arange(n, dtype=np.int32)[:, None], (1, HOP_SLOTS))
    fac = np.zeros((n, HOP_SLOTS))
    link_of = np.full((n, HOP_SLOTS), -1, dtype=np.int32)
    for j in range(n):
        cols[j, 0], fac[j, 0], link_of[j, 0] = (j + 1) % n, 1.0, j
        cols[j, 1], fac[j, 1], link_of[j, 1] = (j - 1) % n, 1.0, (j - 1) % n
    return SparseHamiltonian(diag, cols, fac, link_of, links, lattice.hopping)


def build_two_particle(
    lattice: LatticeSpec,
    interaction: InteractionSpec,
    basis: TwoParticleBasis,
    links=None,
) -> SparseHamiltonian:
    """Two-particle Hamiltonian in the reduced basis for fixed link values.

    Diagonal entries are ``2*onsite + U(separation)``; each hop of one
    particle across one link contributes ``-J*(1 + g_link)`` times the
    exchange factor of the reordering it induces.
    """
    if basis.n_sites != lattice.n_sites:
        raise ValueError("basis and lattice disagree on the number of sites")
    links = _require_links(lattice, links)
    n = lattice.n_sites
    fermion = basis.statistics is Statistics.FERMION
    dim = basis.dim

    diag = 2.0 * lattice.onsite + np.array(
        [interaction.strength(int(d)) for d in basis.separation]
    )
    cols = np.tile(np.arange(dim, dtype=np.int32)[:, None], (1, HOP_SLOTS))
    fac = np.zeros((dim, HOP_SLOTS))
    link_of = np.full((dim, HOP_SLOTS), -1, dtype=np.int32)

    for c in range(dim):
        j, k = int(basis.cfg_j[c]), int(basis.cfg_k[c])
        slot = 0
        if j == k:
            # bosonic diagonal: one sqrt(2) entry per neighbouring pair
            for step in (1, -1):
                b = (j + step) % n
                link = j if step == 1 else b
                idx, _ = basis.index_of(min(j, b), max(j, b))
                cols[c, slot], fac[c, slot], link_of[c, slot] = idx, SQRT2, link
                slot += 1
            continue
        for a, other in ((j, k), (k, j)):
            for step in (1, -1):
                b = (a + step) % n
                link = a if step == 1 else b
                if b == other:
                    if fermion:
                        continue  # Pauli-blocked
                    idx, _ = basis.index_of(b, b)
                    cols[c, slot], fac[c, slot], link_of[c, slot] = idx, SQRT2, link
                else:
                    idx, _ = basis.index_of(min(b, other), max(b, other))
                    f = 1.0
                    if fermion and (b < other) != (a < other):
                        f = -1.0  # the hop carried the particle past its partner
                    cols[c, slot], fac[c, slot], link_of[c, slot] = idx, f, link
                slot += 1

    return SparseHamiltonian(diag, cols, fac, link_of, links, lattice.hopping, basis)


def rebuild_offdiagonals(h: SparseHamiltonian, links) -> SparseHamiltonian:
    """Copy of ``h`` with the off-diagonal values refreshed for new link values.

    The sparsity pattern is shared with the source; the result equals a fresh
    build on the same basis exactly.
    """
    return h.copy().update_links(links)
