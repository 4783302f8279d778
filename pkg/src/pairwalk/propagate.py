"""Event-driven unitary propagation through piecewise-constant Hamiltonians.

Within a segment the evolution operator is exp(-i*H*dt); across segments the
ordered product realizes the time-ordered exponential.  Segment exponentials
act on the state through an adaptive truncated Taylor expansion of the
spectrum-centred operator (see :mod:`pairwalk._kernels`); a dense
eigendecomposition oracle for small dimensions lives alongside for tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .hamiltonian import SparseHamiltonian
from .lattice import StateVector
from .telegraph import EventGrid

DEFAULT_TOLERANCE = 1e-10
# per-segment truncation target; also caps the norm drift per segment
_DRIFT_CAP = 5e-13
_DENSE_ORACLE_MAX_DIM = 500


def _check_tolerance(tol: float):
    if not 0.0 < tol <= 1e-6:
        raise ValueError(f"tolerance must lie in (0, 1e-6], got {tol}")


def _centre(h: SparseHamiltonian, g_max: float | None = None) -> tuple[float, float]:
    lo, hi = h.spectral_bounds(g_max)
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def expm_state(h: SparseHamiltonian, dt: float, psi: np.ndarray,
               tol: float = DEFAULT_TOLERANCE) -> np.ndarray:
    """Return exp(-i*H*dt) @ psi for the current link values of ``h``."""
    _check_tolerance(tol)
    if dt < 0:
        raise ValueError("segment length must be >= 0")
    out = np.array(psi, dtype=np.complex128, copy=True)
    if dt == 0.0:
        return out
    mu, radius = _centre(h)
    eps = min(tol, _DRIFT_CAP)
    buf_a = np.empty_like(out)
    buf_b = np.empty_like(out)
    _kernels.expm_apply(h.diag - mu, h.amps, h.cols, out, float(dt), radius,
                        eps, buf_a, buf_b)
    out *= np.exp(-1j * mu * dt)
    if not np.all(np.isfinite(out.view(np.float64))):
        raise FloatingPointError(
            "non-finite amplitudes after segment step; the assembled "
            "Hamiltonian is corrupt")
    return out


def apply_segment(h: SparseHamiltonian, dt: float, state: StateVector,
                  tol: float = DEFAULT_TOLERANCE) -> StateVector:
    """Advance a state through one constant-Hamiltonian segment."""
    return StateVector(expm_state(h, dt, state.amplitudes, tol), state.basis)


@dataclass
class PropagationRequest:
    """One realization's propagation task over a merged event grid."""

    hamiltonian: SparseHamiltonian  # template; link values come from the grid
    grid: EventGrid
    initial: StateVector
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        _check_tolerance(self.tolerance)
        if self.hamiltonian.n_links != self.grid.initial_values.size:
            raise ValueError("event grid and Hamiltonian disagree on link count")
        if self.hamiltonian.dim != self.initial.basis.dim:
            raise ValueError("initial state dimension does not match Hamiltonian")


@dataclass
class StateSnapshots:
    """States recorded at the sample times, plus pre-renormalization norms."""

    times: np.ndarray
    states: list[StateVector]
    norms: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter(zip(self.times, self.states))


def walk_samples(hamiltonian: SparseHamiltonian, grid: EventGrid,
                 psi0: np.ndarray, tolerance: float = DEFAULT_TOLERANCE):
    """Yield (sample index, time, normalized state, pre-renorm norm) in order.

    The yielded state array is reused between samples; callers that keep it
    must copy.  Renormalization happens at sample times only, so the norm
    exposes the drift accumulated since the previous sample.
    """
    _check_tolerance(tolerance)
    h = hamiltonian.copy().update_links(grid.initial_values)
    g_max = float(np.max(np.abs(grid.initial_values), initial=0.0))
    mu, radius = _centre(h, g_max)
    diag_c = np.ascontiguousarray(h.diag - mu)
    eps = min(tolerance, _DRIFT_CAP)

    psi = np.array(psi0, dtype=np.complex128, copy=True)
    buf_a = np.empty_like(psi)
    buf_b = np.empty_like(psi)
    times = grid.boundaries
    amps_flat = h.amps.reshape(-1)

    b_prev = 0
    t_prev = times[0]
    for i, b in enumerate(grid.sample_indices):
        _kernels.advance_boundaries(
            diag_c, amps_flat, h.cols, times,
            grid.flip_indptr, grid.flip_links,
            h.link_values, h.link_indptr, h.link_pos, h.link_fac, h.hopping,
            b_prev, int(b), psi, radius, eps, buf_a, buf_b)
        if mu != 0.0:
            psi *= np.exp(-1j * mu * (times[b] - t_prev))
        nrm = float(np.linalg.norm(psi))
        if not np.isfinite(nrm) or nrm == 0.0:
            raise FloatingPointError("propagation produced a non-finite state")
        psi /= nrm
        yield i, float(times[b]), psi, nrm
        b_prev = int(b)
        t_prev = times[b]


def evolve_piecewise(req: PropagationRequest) -> StateSnapshots:
    """Propagate through every segment of the grid, snapshotting at sample times.

    The state is renormalized at sample times only, so ``norms`` exposes the
    accumulated drift of each inter-sample stretch.
    """
    states: list[StateVector] = []
    norms = np.empty(req.grid.sample_indices.size)
    for i, _t, psi, nrm in walk_samples(req.hamiltonian, req.grid,
                                        req.initial.amplitudes, req.tolerance):
        norms[i] = nrm
        states.append(StateVector(psi.copy(), req.initial.basis))
    return StateSnapshots(req.grid.sample_times.copy(), states, norms)


def dense_oracle(h_sequence, psi: np.ndarray) -> np.ndarray:
    """Ordered product of dense matrix exponentials, by full eigendecomposition.

    Exact up to LAPACK accuracy; restricted to small dimensions because every
    segment costs a dense diagonalization.
    """
    import scipy.linalg

    psi = np.asarray(psi, dtype=np.complex128).copy()
    for mat, dt in h_sequence:
        mat = np.asarray(mat)
        if mat.shape[0] > _DENSE_ORACLE_MAX_DIM:
            raise ValueError(
                f"dense oracle limited to dimension {_DENSE_ORACLE_MAX_DIM}")
        w, v = scipy.linalg.eigh(mat)
        psi = v @ (np.exp(-1j * w * dt) * (v.conj().T @ psi))
    return psi
