"""Random telegraph noise on the lattice links.

Each link carries an independent dichotomic process g(t) = +-g0 whose flips
form a Poisson stream with rate gamma (in units of the hopping time).  That
is the unique memoryless process with stationary autocorrelation
g0^2 * exp(-2*gamma*t), which the statistical validators below check
empirically.  Streams are keyed by (master seed, realization, link) so every
trajectory can be replayed bit-exactly regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSpec:
    """Telegraph amplitude g0 and switching rate gamma, both dimensionless."""

    g0: float
    gamma: float
    n_links: int

    def __post_init__(self):
        if self.g0 < 0:
            raise ValueError(f"g0 must be >= 0, got {self.g0}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.n_links < 1:
            raise ValueError(f"n_links must be >= 1, got {self.n_links}")

    def autocorrelation(self, lag: float) -> float:
        """Stationary autocovariance g0^2 * exp(-2*gamma*lag)."""
        return self.g0**2 * np.exp(-2.0 * self.gamma * abs(lag))


@dataclass
class RtnTrajectory:
    """One link's telegraph signal: initial sign, ordered flip times, amplitude."""

    initial_sign: int
    flip_times: np.ndarray
    amplitude: float
    horizon: float

    def value(self, t: float) -> float:
        """Signal value at time t; flips happening exactly at t are counted."""
        flips = int(np.searchsorted(self.flip_times, t, side="right"))
        return self.initial_sign * self.amplitude * (-1.0) ** flips

    def values(self, times) -> np.ndarray:
        flips = np.searchsorted(self.flip_times, np.asarray(times), side="right")
        return self.initial_sign * self.amplitude * np.where(flips % 2 == 0, 1.0, -1.0)


def stream_rng(master_seed: int, realization: int, link: int) -> np.random.Generator:
    """Independent generator for one (realization, link) pair of one experiment."""
    return np.random.default_rng([master_seed, realization, link])


def sample_trajectory(spec: NoiseSpec, horizon: float,
                      rng: np.random.Generator) -> RtnTrajectory:
    """Draw one telegraph trajectory over [0, horizon].

    The initial sign is equiprobable and waiting times between flips are
    i.i.d. exponential with rate gamma.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    sign = 1 if rng.random() < 0.5 else -1
    if spec.gamma == 0.0:
        return RtnTrajectory(sign, np.empty(0), spec.g0, horizon)
    flips = []
    t = 0.0
    # draw waiting times in batches sized from the expected count
    batch = max(16, int(1.25 * spec.gamma * horizon) + 1)
    while t <= horizon:
        for w in rng.exponential(1.0 / spec.gamma, size=batch):
            t += w
            if t > horizon:
                break
            flips.append(t)
    return RtnTrajectory(sign, np.array(flips), spec.g0, horizon)


def sample_link_trajectories(spec: NoiseSpec, horizon: float, master_seed: int,
                             realization: int) -> list[RtnTrajectory]:
    """All per-link trajectories of one noise realization."""
    return [
        sample_trajectory(spec, horizon, stream_rng(master_seed, realization, ell))
        for ell in range(spec.n_links)
    ]


@dataclass
class EventGrid:
    """Merged flip/sample timeline over which the Hamiltonian is piecewise constant.

    ``boundaries`` holds every flip time and every sample time (plus 0 and the
    horizon), strictly increasing.  Links flipping at boundary ``b`` are
    ``flip_links[flip_indptr[b]:flip_indptr[b+1]]`` and take effect for the
    segment starting there.  ``sample_indices`` locate the requested sample
    times within ``boundaries``.
    """

    boundaries: np.ndarray
    flip_indptr: np.ndarray
    flip_links: np.ndarray
    sample_indices: np.ndarray
    initial_values: np.ndarray
    horizon: float

    @property
    def n_segments(self) -> int:
        return self.boundaries.size - 1

    @property
    def sample_times(self) -> np.ndarray:
        return self.boundaries[self.sample_indices]

    def segment_values(self, segment: int) -> np.ndarray:
        """Link values on the given segment (test/inspection path, O(segment))."""
        if not 0 <= segment < self.n_segments:
            raise IndexError(f"segment {segment} out of range")
        values = self.initial_values.copy()
        for ell in self.flip_links[: self.flip_indptr[segment + 1]]:
            values[ell] = -values[ell]
        return values


def merge_events(trajectories: list[RtnTrajectory], sample_times) -> EventGrid:
    """Merge per-link flip times and sample times into one event grid."""
    sample_times = np.asarray(sample_times, dtype=np.float64)
    if sample_times.size == 0:
        raise ValueError("at least one sample time is required")
    if np.any(np.diff(sample_times) < 0):
        raise ValueError("sample_times must be sorted")
    horizon = trajectories[0].horizon
    for tr in trajectories:
        if tr.horizon != horizon:
            raise ValueError("trajectories do not share a horizon")
    if sample_times[0] < 0 or sample_times[-1] > horizon:
        raise ValueError("sample_times must lie within [0, horizon]")

    flip_t = [tr.flip_times for tr in trajectories]
    flip_l = [np.full(tr.flip_times.size, ell, dtype=np.int32)
              for ell, tr in enumerate(trajectories)]
    all_flips = np.concatenate(flip_t) if flip_t else np.empty(0)
    all_links = np.concatenate(flip_l) if flip_l else np.empty(0, dtype=np.int32)
    order = np.argsort(all_flips, kind="stable")
    all_flips = all_flips[order]
    all_links = all_links[order]

    boundaries = np.unique(np.concatenate(
        (sample_times, all_flips, [0.0, horizon])))
    where = np.searchsorted(boundaries, all_flips)
    counts = np.bincount(where, minlength=boundaries.size)
    flip_indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    sample_indices = np.searchsorted(boundaries, sample_times).astype(np.int64)
    initial = np.array([tr.initial_sign * tr.amplitude for tr in trajectories])
    return EventGrid(boundaries, flip_indptr, all_links, sample_indices,
                     initial, horizon)


def empirical_autocorrelation(spec: NoiseSpec, lags, n_samples: int,
                              rng: np.random.Generator):
    """Monte Carlo estimate of <g(0) g(lag)> with standard errors.

    Returns (lags, estimates, standard errors).  The process is stationary
    from t = 0 because the initial sign is equiprobable, so the product at
    lag 0 is g0^2 for every trajectory and carries zero standard error.
    """
    lags = np.asarray(lags, dtype=np.float64)
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100 for a meaningful estimate")
    horizon = max(float(lags.max()), 1e-9)
    products = np.empty((n_samples, lags.size))
    for m in range(n_samples):
        tr = sample_trajectory(spec, horizon * 1.0000001, rng)
        products[m] = tr.value(0.0) * tr.values(lags)
    est = products.mean(axis=0)
    err = products.std(axis=0, ddof=1) / np.sqrt(n_samples)
    return lags, est, err


def empirical_cross_correlation(spec: NoiseSpec, lags, n_samples: int,
                                rng: np.random.Generator):
    """Like :func:`empirical_autocorrelation` but between two independent links."""
    lags = np.asarray(lags, dtype=np.float64)
    horizon = max(float(lags.max()), 1e-9)
    products = np.empty((n_samples, lags.size))
    for m in range(n_samples):
        tr_a = sample_trajectory(spec, horizon * 1.0000001, rng)
        tr_b = sample_trajectory(spec, horizon * 1.0000001, rng)
        products[m] = tr_a.value(0.0) * tr_b.values(lags)
    est = products.mean(axis=0)
    err = products.std(axis=0, ddof=1) / np.sqrt(n_samples)
    return lags, est, err
