"""Monte Carlo driver: noise realizations, moment accumulation, averaged dynamics.

Every realization is keyed by (master seed, realization index, link), so the
ensemble mean is a pure function of the configuration and seed: realizations
are processed in fixed-size chunks whose partial accumulators are merged in
chunk order, making the result bit-identical for any worker count.

The reported spreading observables are built from the noise-averaged state:
the position moments <x> and <x^2> are linear in the density matrix, so their
realization averages equal the moments of the averaged state, and the
variance is formed from the averaged moments.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .hamiltonian import InteractionSpec, SparseHamiltonian, build_two_particle
from .lattice import (LatticeSpec, StateVector, Statistics, TwoParticleBasis,
                      build_basis, localized_pair_state)
from .observables import position_moments, position_variance, single_particle_diagonal
from .propagate import DEFAULT_TOLERANCE, walk_samples
from .telegraph import EventGrid, NoiseSpec, merge_events, sample_link_trajectories

CHUNK_SIZE = 32  # realizations per partial accumulator; fixed for reproducibility
LEAK_THRESHOLD = 1e-3  # occupation at the antipodal sites that trips the guard


@dataclass
class ExperimentConfig:
    """Full description of one noise-averaged evolution."""

    lattice: LatticeSpec
    interaction: InteractionSpec
    statistics: Statistics
    initial_pair: tuple[int, int]
    sample_times: np.ndarray
    noise: NoiseSpec | None = None
    n_realizations: int = 1
    master_seed: int = 0
    collect_pair_populations: bool = False
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        self.sample_times = np.asarray(self.sample_times, dtype=np.float64)
        self.statistics = Statistics(self.statistics)

    @property
    def horizon(self) -> float:
        return float(self.sample_times[-1])

    def validate(self):
        if self.sample_times.size == 0:
            raise ValueError("sample_times must not be empty")
        if np.any(np.diff(self.sample_times) < 0) or self.sample_times[0] < 0:
            raise ValueError("sample_times must be sorted and non-negative")
        if self.sample_times[-1] <= 0:
            raise ValueError("the horizon (last sample time) must be positive")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        j, k = self.initial_pair
        n = self.lattice.n_sites
        if not (0 <= j < n and 0 <= k < n):
            raise ValueError(f"initial pair {self.initial_pair} outside the lattice")
        if j == k and self.statistics is Statistics.FERMION:
            raise ValueError("fermionic initial pair must occupy distinct sites")
        if self.noise is not None and self.noise.n_links != n:
            raise ValueError(
                f"noise carries {self.noise.n_links} links, lattice has {n}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")


class EnsembleAccumulator:
    """Count/mean/M2 statistics of the per-realization observables.

    Tracks the position moments (with their cross moment, needed for the
    standard error of the derived variance), the site marginal, optionally
    the reduced-basis populations, and the worst norm drift seen.
    """

    def __init__(self, n_times: int, n_sites: int, dim: int | None = None):
        self.count = 0
        t = n_times
        self.mean_m1 = np.zeros(t)
        self.mean_m2 = np.zeros(t)
        self.comoment_m1 = np.zeros(t)
        self.comoment_m2 = np.zeros(t)
        self.comoment_cross = np.zeros(t)
        self.mean_marginal = np.zeros((t, n_sites))
        self.mean_populations = np.zeros((t, dim)) if dim is not None else None
        self.max_norm_deviation = 0.0

    def add(self, m1, m2, marginal, populations, norm_deviation):
        self.count += 1
        inv = 1.0 / self.count
        d1 = m1 - self.mean_m1
        d2 = m2 - self.mean_m2
        self.mean_m1 += d1 * inv
        self.mean_m2 += d2 * inv
        self.comoment_m1 += d1 * (m1 - self.mean_m1)
        self.comoment_m2 += d2 * (m2 - self.mean_m2)
        self.comoment_cross += d1 * (m2 - self.mean_m2)
        self.mean_marginal += (marginal - self.mean_marginal) * inv
        if self.mean_populations is not None:
            self.mean_populations += (populations - self.mean_populations) * inv
        self.max_norm_deviation = max(self.max_norm_deviation, norm_deviation)

    def merge(self, other: "EnsembleAccumulator"):
        if other.count == 0:
            return self
        if self.count == 0:
            self.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v)
                                  for k, v in other.__dict__.items()})
            return self
        n1, n2 = self.count, other.count
        n = n1 + n2
        w = n1 * n2 / n
        d1 = other.mean_m1 - self.mean_m1
        d2 = other.mean_m2 - self.mean_m2
        self.comoment_m1 += other.comoment_m1 + d1 * d1 * w
        self.comoment_m2 += other.comoment_m2 + d2 * d2 * w
        self.comoment_cross += other.comoment_cross + d1 * d2 * w
        self.mean_m1 += d1 * n2 / n
        self.mean_m2 += d2 * n2 / n
        self.mean_marginal += (other.mean_marginal - self.mean_marginal) * n2 / n
        if self.mean_populations is not None:
            self.mean_populations += (
                other.mean_populations - self.mean_populations) * n2 / n
        self.max_norm_deviation = max(self.max_norm_deviation,
                                      other.max_norm_deviation)
        self.count = n
        return self

    def sigma2(self) -> np.ndarray:
        """Position variance of the averaged state at each sample time."""
        return self.mean_m2 - self.mean_m1**2

    def sigma2_stderr(self) -> np.ndarray:
        """Delta-method standard error of :meth:`sigma2` across realizations."""
        if self.count < 2:
            return np.zeros_like(self.mean_m1)
        denom = self.count * (self.count - 1)
        var_m1 = self.comoment_m1 / denom
        var_m2 = self.comoment_m2 / denom
        cov = self.comoment_cross / denom
        var = var_m2 + 4.0 * self.mean_m1**2 * var_m1 - 4.0 * self.mean_m1 * cov
        return np.sqrt(np.maximum(var, 0.0))


def merge_partials(a: EnsembleAccumulator, b: EnsembleAccumulator) -> EnsembleAccumulator:
    """Merge two partial accumulators (associative, numerically stable)."""
    return a.merge(b)


@dataclass
class EnsembleResult:
    """Noise-averaged time series with standard errors and diagnostics."""

    config: ExperimentConfig
    sample_times: np.ndarray
    sigma2: np.ndarray
    sigma2_stderr: np.ndarray
    raw_initial: float
    occupations: np.ndarray  # (time, site), rows sum to 2
    n_realizations: int
    max_norm_deviation: float
    wraparound_flag: bool
    mean_position: np.ndarray = field(repr=False, default=None)
    pair_populations: np.ndarray | None = field(repr=False, default=None)

    @property
    def sigma2_shifted(self) -> np.ndarray:
        """Variance series shifted to start at zero (for curve comparisons)."""
        return self.sigma2 - self.raw_initial

    def sigma2_at(self, tau: float) -> tuple[float, float]:
        """(sigma^2, stderr) at a sampled time."""
        idx = int(np.argmin(np.abs(self.sample_times - tau)))
        if abs(self.sample_times[idx] - tau) > 1e-9:
            raise KeyError(f"time {tau} was not sampled")
        return float(self.sigma2[idx]), float(self.sigma2_stderr[idx])


def _noiseless_grid(sample_times: np.ndarray, n_links: int) -> EventGrid:
    boundaries = np.unique(np.concatenate(([0.0], sample_times)))
    return EventGrid(
        boundaries=boundaries,
        flip_indptr=np.zeros(boundaries.size + 1, dtype=np.int64),
        flip_links=np.empty(0, dtype=np.int32),
        sample_indices=np.searchsorted(boundaries, sample_times).astype(np.int64),
        initial_values=np.zeros(n_links),
        horizon=float(boundaries[-1]),
    )


def _realization(config: ExperimentConfig, h_template: SparseHamiltonian,
                 basis: TwoParticleBasis, psi0: np.ndarray, r: int,
                 acc: EnsembleAccumulator):
    n_times = config.sample_times.size
    n_sites = config.lattice.n_sites
    if config.noise is None or (config.noise.g0 == 0.0 and config.noise.gamma == 0.0):
        grid = _noiseless_grid(config.sample_times, n_sites)
    else:
        trajectories = sample_link_trajectories(
            config.noise, config.horizon if config.horizon > 0 else 1.0,
            config.master_seed, r)
        grid = merge_events(trajectories, config.sample_times)

    m1 = np.empty(n_times)
    m2 = np.empty(n_times)
    marginal = np.empty((n_times, n_sites))
    pops = (np.empty((n_times, basis.dim))
            if config.collect_pair_populations else None)
    diag_cfg = basis.cfg_j == basis.cfg_k
    norm_dev = 0.0
    for i, _t, psi, nrm in walk_samples(h_template, grid, psi0, config.tolerance):
        _kernels.pair_site_marginal(psi, basis.cfg_j, basis.cfg_k, diag_cfg,
                                    marginal[i])
        m1[i], m2[i] = position_moments(marginal[i])
        if pops is not None:
            pops[i] = psi.real**2 + psi.imag**2
        norm_dev = max(norm_dev, abs(nrm - 1.0))
    acc.add(m1, m2, marginal, pops, norm_dev)


def _leaks_at_antipodes(config: ExperimentConfig, occupations: np.ndarray) -> bool:
    n = config.lattice.n_sites
    j, k = config.initial_pair
    antipodes = {(j + n // 2) % n, (k + n // 2) % n}
    return bool(np.any(occupations[:, sorted(antipodes)] > LEAK_THRESHOLD))


def run_ensemble(config: ExperimentConfig,
                 n_workers: int | None = None) -> EnsembleResult:
    """Average the pair dynamics over ``config.n_realizations`` noise histories.

    Results depend on the configuration and master seed only, not on the
    worker count.  If the averaged occupation ever exceeds the leak threshold
    at the sites antipodal to the launch pair, the wraparound flag is set
    (the ring is then no longer a faithful stand-in for the infinite line).
    """
    config.validate()
    _kernels.warmup()
    basis = build_basis(config.lattice, config.statistics)
    h_template = build_two_particle(config.lattice, config.interaction, basis)
    psi0 = localized_pair_state(basis, *config.initial_pair).amplitudes
    sample0 = StateVector(psi0.copy(), basis)

    n_times = config.sample_times.size
    dim = basis.dim if config.collect_pair_populations else None

    def do_chunk(lo: int) -> EnsembleAccumulator:
        acc = EnsembleAccumulator(n_times, config.lattice.n_sites, dim)
        for r in range(lo, min(lo + CHUNK_SIZE, config.n_realizations)):
            _realization(config, h_template, basis, psi0, r, acc)
        return acc

    starts = range(0, config.n_realizations, CHUNK_SIZE)
    if n_workers is None:
        n_workers = min(len(starts), os.cpu_count() or 1)
    if n_workers <= 1 or len(starts) == 1:
        partials = [do_chunk(lo) for lo in starts]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            partials = list(pool.map(do_chunk, starts))

    total = partials[0]
    for part in partials[1:]:
        total = merge_partials(total, part)

    occupations = 2.0 * total.mean_marginal
    raw_initial = position_variance(single_particle_diagonal(sample0))
    return EnsembleResult(
        config=config,
        sample_times=config.sample_times.copy(),
        sigma2=total.sigma2(),
        sigma2_stderr=total.sigma2_stderr(),
        raw_initial=float(raw_initial),
        occupations=occupations,
        n_realizations=total.count,
        max_norm_deviation=total.max_norm_deviation,
        wraparound_flag=_leaks_at_antipodes(config, occupations),
        mean_position=total.mean_m1.copy(),
        pair_populations=(total.mean_populations.copy()
                          if total.mean_populations is not None else None),
    )
