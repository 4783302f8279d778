"""Periodic 1D lattice, symmetry-reduced two-particle basis and pair states."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Statistics(str, Enum):
    """Exchange symmetry of the pair: symmetric (bosons) or antisymmetric (fermions)."""

    BOSON = "boson"
    FERMION = "fermion"

    @property
    def exchange_sign(self) -> int:
        return 1 if self is Statistics.BOSON else -1


@dataclass(frozen=True)
class LatticeSpec:
    """Ring of ``n_sites`` sites with nearest-neighbour hopping ``hopping``.

    Energies are measured in units of the hopping amplitude, so ``hopping``
    is normally left at 1.  ``onsite`` adds a constant to every site; it only
    contributes a global phase to the two-particle dynamics.
    """

    n_sites: int
    hopping: float = 1.0
    onsite: float = 0.0

    def __post_init__(self):
        if self.n_sites < 3:
            raise ValueError(f"n_sites must be >= 3, got {self.n_sites}")
        if self.hopping <= 0:
            raise ValueError(f"hopping must be > 0, got {self.hopping}")

    def distance(self, j: int, k: int) -> int:
        """Shortest distance between sites j and k around the ring."""
        d = abs(j - k) % self.n_sites
        return min(d, self.n_sites - d)


@dataclass
class TwoParticleBasis:
    """Ordered basis of symmetrized two-particle site configurations.

    Configurations are site pairs (j, k) listed lexicographically with
    j < k for fermions and j <= k for bosons.  Basis state ``c = (j, k)``
    represents (|j,k> + s|k,j>)/sqrt(2) for j != k (s the exchange sign)
    and |j,j> for the bosonic diagonal.
    """

    statistics: Statistics
    n_sites: int
    cfg_j: np.ndarray  # smaller site of each configuration
    cfg_k: np.ndarray  # larger site of each configuration
    separation: np.ndarray  # periodic distance |j - k| per configuration
    _index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.cfg_j.size

    def index_of(self, j: int, k: int) -> tuple[int, int]:
        """Basis index of the pair (j, k) together with its exchange sign.

        (j, k) and (k, j) resolve to the same index; the sign is -1 for a
        fermionic pair given in descending order, +1 otherwise.
        """
        if not (0 <= j < self.n_sites and 0 <= k < self.n_sites):
            raise IndexError(f"sites ({j}, {k}) outside 0..{self.n_sites - 1}")
        if j == k and self.statistics is Statistics.FERMION:
            raise ValueError(f"fermionic basis has no diagonal pair ({j}, {j})")
        if j <= k:
            return self._index[(j, k)], 1
        return self._index[(k, j)], self.statistics.exchange_sign


def build_basis(lattice: LatticeSpec, statistics: Statistics) -> TwoParticleBasis:
    """Enumerate the reduced two-particle basis for the given statistics.

    The ordering is deterministic (lexicographic in (j, k)) and the index
    map is a bijection onto 0..D-1 with D = N(N-1)/2 for fermions and
    N(N+1)/2 for bosons.
    """
    statistics = Statistics(statistics)
    n = lattice.n_sites
    include_diag = statistics is Statistics.BOSON
    pairs = [(j, k) for j in range(n) for k in range(j if include_diag else j + 1, n)]
    cfg_j = np.array([p[0] for p in pairs], dtype=np.int64)
    cfg_k = np.array([p[1] for p in pairs], dtype=np.int64)
    sep = np.minimum(cfg_k - cfg_j, n - (cfg_k - cfg_j))
    index = {p: i for i, p in enumerate(pairs)}
    return TwoParticleBasis(statistics, n, cfg_j, cfg_k, sep, index)


@dataclass
class StateVector:
    """Complex amplitudes over a :class:`TwoParticleBasis`."""

    amplitudes: np.ndarray
    basis: TwoParticleBasis

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitude vector of length {self.amplitudes.size} does not match "
                f"basis dimension {self.basis.dim}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, j: int, k: int) -> complex:
        """Full product-space amplitude <j,k|psi>.

        For a reduced amplitude a on configuration (j, k) the product-space
        wavefunction carries a/sqrt(2) on |j,k> and s*a/sqrt(2) on |k,j>
        (a on |j,j> for the bosonic diagonal).  Fermionic diagonal entries
        are identically zero.
        """
        if j == k:
            if self.basis.statistics is Statistics.FERMION:
                return 0.0 + 0.0j
            idx, _ = self.basis.index_of(j, k)
            return complex(self.amplitudes[idx])
        idx, sign = self.basis.index_of(j, k)
        return complex(sign * self.amplitudes[idx] / np.sqrt(2.0))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.basis)


def localized_pair_state(basis: TwoParticleBasis, j: int, k: int) -> StateVector:
    """Unit state with one particle on site j and the other on site k.

    Realizes (|j,k> +- |k,j>)/sqrt(2) as a single reduced-basis element with
    amplitude 1 (the exchange sign is absorbed into the index map).  Fermions
    with j == k are rejected.
    """
    if j == k and basis.statistics is Statistics.FERMION:
        raise ValueError("two fermions cannot occupy the same site")
    idx, _ = basis.index_of(j, k)
    amps = np.zeros(basis.dim, dtype=np.complex128)
    amps[idx] = 1.0
    return StateVector(amps, basis)


def centered_pair_sites(n_sites: int, offset: int) -> tuple[int, int]:
    """Sites of a pair ``offset`` apart placed symmetrically around the ring middle."""
    if not 0 < offset < n_sites:
        raise ValueError(f"pair offset must be in 1..{n_sites - 1}, got {offset}")
    j = (n_sites - offset) // 2
    return j, j + offset
