"""Numba kernels for the event-driven propagation hot path.

The state is advanced segment by segment with a truncated Taylor expansion of
``exp(-i*(H - mu)*dt)`` acting on the vector; ``mu`` centres the spectrum and
its phase is restored by the caller.  The truncation order is chosen from the
rigorous factorial remainder bound, so accuracy follows from the requested
tolerance and the spectral radius bound alone.  Long segments are split so
that ``|H - mu|*dt <= 2`` per sub-step, which keeps the expansion free of
cancellation.
"""

import numba as nb
import numpy as np

MAX_ORDER = 64
SUBSTEP_Z = 2.0


@nb.njit(cache=True, nogil=True, fastmath=True)
def taylor_order(z, eps):
    """Smallest order K with remainder bound of exp(z) truncation <= eps."""
    bound = 1.0
    k = 0
    while k < MAX_ORDER:
        k += 1
        bound *= z / k
        denom = 1.0 - z / (k + 2.0)
        if denom > 0.0 and bound * (z / (k + 1.0)) / denom <= eps:
            return k
    return MAX_ORDER


@nb.njit(cache=True, nogil=True, fastmath=True)
def expm_apply(diag, amps, cols, psi, dt, radius, eps, buf_a, buf_b):
    """In-place psi <- exp(-i*H_c*dt) psi with H_c = diag(diag) + hops - centred.

    ``radius`` must bound the spectral radius of the centred operator for the
    current (and any reachable) link values.
    """
    if dt == 0.0:
        return
    z_total = radius * dt
    nsub = 1
    if z_total > SUBSTEP_Z:
        nsub = int(np.ceil(z_total / SUBSTEP_Z))
    dt_sub = dt / nsub
    order = taylor_order(radius * dt_sub, eps)
    n = psi.size
    for _ in range(nsub):
        for i in range(n):
            buf_a[i] = psi[i]
        src = buf_a
        dst = buf_b
        for k in range(1, order + 1):
            c = dt_sub / k
            for r in range(n):
                acc = diag[r] * src[r]
                acc += amps[r, 0] * src[cols[r, 0]]
                acc += amps[r, 1] * src[cols[r, 1]]
                acc += amps[r, 2] * src[cols[r, 2]]
                acc += amps[r, 3] * src[cols[r, 3]]
                v = -1j * (c * acc)
                dst[r] = v
                psi[r] += v
            tmp = src
            src = dst
            dst = tmp


@nb.njit(cache=True, nogil=True, fastmath=True)
def advance_boundaries(diag, amps_flat, cols, times, flip_indptr, flip_links,
                       link_values, link_indptr, link_pos, link_fac, hopping,
                       b_lo, b_hi, psi, radius, eps, buf_a, buf_b):
    """Walk event boundaries b_lo..b_hi, applying link flips and segment steps.

    Flips recorded at boundary ``b`` take effect for the segment starting at
    ``times[b]``.  ``amps_flat`` is the flat view of the (dim, 4) hop table.
    """
    amps = amps_flat.reshape(diag.size, 4)
    for b in range(b_lo, b_hi):
        for f in range(flip_indptr[b], flip_indptr[b + 1]):
            ell = flip_links[f]
            link_values[ell] = -link_values[ell]
            amp = -hopping * (1.0 + link_values[ell])
            for p in range(link_indptr[ell], link_indptr[ell + 1]):
                amps_flat[link_pos[p]] = amp * link_fac[p]
        dt = times[b + 1] - times[b]
        if dt > 0.0:
            expm_apply(diag, amps, cols, psi, dt, radius, eps, buf_a, buf_b)


@nb.njit(cache=True, nogil=True, fastmath=True)
def pair_site_marginal(psi, cfg_j, cfg_k, diag_cfg, out):
    """Single-particle site distribution of a reduced-basis pair state."""
    out[:] = 0.0
    for c in range(psi.size):
        w = psi[c].real * psi[c].real + psi[c].imag * psi[c].imag
        if diag_cfg[c]:
            out[cfg_j[c]] += w
        else:
            out[cfg_j[c]] += 0.5 * w
            out[cfg_k[c]] += 0.5 * w


def warmup():
    """Compile the kernels on tiny inputs (avoids JIT races in worker threads)."""
    diag = np.zeros(2)
    amps = np.zeros((2, 4))
    cols = np.zeros((2, 4), dtype=np.int32)
    psi = np.ones(2, dtype=np.complex128) / np.sqrt(2.0)
    bufs = np.empty((2, 2), dtype=np.complex128)
    expm_apply(diag, amps, cols, psi, 0.1, 0.1, 1e-13, bufs[0], bufs[1])
    times = np.array([0.0, 0.5])
    nothing = np.zeros(2, dtype=np.int64)
    link_values = np.zeros(1)
    advance_boundaries(diag, amps.ravel(), cols, times, nothing,
                       nothing[:0].astype(np.int32), link_values, nothing,
                       nothing[:0], np.zeros(0), 1.0, 0, 1, psi, 0.1, 1e-13,
                       bufs[0], bufs[1])
    pair_site_marginal(psi, cols[:, 0].astype(np.int64),
                       cols[:, 0].astype(np.int64),
                       np.zeros(2, dtype=np.bool_), np.zeros(2))
