import numpy as np
import pytest
import scipy.linalg

from pairwalk import (InteractionSpec, LatticeSpec, Statistics, band_structure,
                      build_basis, build_two_particle, eigen_projections,
                      gap_at_k0, localized_pair_state)
from pairwalk.bands import (_sector_basis, translation_operator,
                            translation_orbits)
from pairwalk.propagate import expm_state


@pytest.mark.parametrize("stats", [Statistics.FERMION, Statistics.BOSON])
@pytest.mark.parametrize("n", [6, 9, 12])
def test_orbit_partition_and_momentum_states(stats, n):
    basis = build_basis(LatticeSpec(n), stats)
    orbits = translation_orbits(basis)
    seen = np.concatenate([o.indices for o in orbits])
    assert sorted(seen.tolist()) == list(range(basis.dim))

    t = translation_operator(basis)
    total = 0
    for nu in range(1, n + 1):
        v, _ = _sector_basis(orbits, nu, n, basis.dim)
        total += v.shape[1]
        if v.shape[1] == 0:
            continue
        # orthonormal eigenvectors of T with eigenvalue exp(-iK)
        np.testing.assert_allclose(v.conj().T @ v, np.eye(v.shape[1]),
                                   atol=1e-12)
        lam = np.exp(-2j * np.pi * nu / n)
        np.testing.assert_allclose(t @ v, lam * v, atol=1e-12)
    assert total == basis.dim


@pytest.mark.parametrize("stats", [Statistics.FERMION, Statistics.BOSON])
def test_block_spectra_match_dense(stats):
    n, u = 12, 9.0
    lat = LatticeSpec(n)
    bands = band_structure(lat, InteractionSpec(u), stats)
    basis = build_basis(lat, stats)
    dense = build_two_particle(lat, InteractionSpec(u), basis).to_dense()
    np.testing.assert_allclose(np.sort(bands.all_energies()),
                               np.sort(scipy.linalg.eigvalsh(dense)),
                               atol=1e-9)


def test_band_reflection_symmetry():
    bands = band_structure(LatticeSpec(16), InteractionSpec(11.0),
                           Statistics.FERMION)
    for nu in range(1, 8):
        e_plus, _ = bands.sector(nu)
        e_minus, _ = bands.sector(16 - nu)
        np.testing.assert_allclose(np.sort(e_plus), np.sort(e_minus),
                                   atol=1e-9)


def test_free_band_range_and_no_bound_states():
    bands = band_structure(LatticeSpec(80), InteractionSpec(0.0),
                           Statistics.FERMION)
    e = bands.all_energies()
    assert e.min() > -4.05 and e.max() < 4.05
    assert not any(b.any() for b in bands.bound)
    assert gap_at_k0(bands) is None


def test_fermion_miniband_detaches_and_sits_at_third_of_u():
    bands = band_structure(LatticeSpec(80), InteractionSpec(14.0),
                           Statistics.FERMION)
    counts = [int(b.sum()) for b in bands.bound]
    assert max(counts) == 1  # a single miniband
    e_pi, lab_pi = bands.sector(40)  # K = pi
    assert lab_pi.sum() == 1
    assert abs(float(e_pi[lab_pi][0]) - 14.0 / 3.0) / (14.0 / 3.0) < 0.10


def test_boson_second_miniband_near_u():
    bands = band_structure(LatticeSpec(80), InteractionSpec(14.0),
                           Statistics.BOSON)
    bound_e = np.concatenate([e[l] for e, l in zip(bands.energies, bands.bound)])
    assert bound_e.max() > 13.0  # on-site branch near U
    e_pi, lab_pi = bands.sector(40)
    assert lab_pi.sum() == 2  # both minibands present at the zone edge


@pytest.mark.parametrize("u,rel_tol", [(14.0, 0.05), (40.0, 0.05)])
def test_gap_matches_strong_coupling_formula(u, rel_tol):
    bands = band_structure(LatticeSpec(80), InteractionSpec(u),
                           Statistics.FERMION)
    gap = gap_at_k0(bands)
    formula = u / 3.0 + 12.0 / u - 4.0
    assert gap is not None
    assert abs(gap - formula) / formula < rel_tol


def test_bound_count_agrees_with_gap_detection():
    # cross-check of the two classifiers in the detached regime
    bands = band_structure(LatticeSpec(40), InteractionSpec(14.0),
                           Statistics.FERMION)
    for nu, energies, labels in zip(bands.nu, bands.energies, bands.bound):
        edge = 4.0 * abs(np.cos(np.pi * nu / 40))
        np.testing.assert_array_equal(labels, np.abs(energies) > edge + 1e-9)


def test_projections_sum_to_one_and_band_dominance():
    lat = LatticeSpec(80)
    basis = build_basis(lat, Statistics.FERMION)
    near = localized_pair_state(basis, 39, 40)
    far = localized_pair_state(basis, 38, 41)
    main_weights = []
    for u in (6.0, 14.0, 40.0):
        p_near = eigen_projections(near, lat, InteractionSpec(u))
        p_far = eigen_projections(far, lat, InteractionSpec(u))
        assert abs(p_near.total() - 1.0) < 1e-10
        assert abs(p_far.total() - 1.0) < 1e-10
        assert p_near.miniband_weight() > p_near.mainband_weight()
        assert p_far.mainband_weight() > p_far.miniband_weight()
        main_weights.append(p_near.mainband_weight())
    assert main_weights[0] >= main_weights[1] >= main_weights[2]


def test_spectral_evolution_matches_propagator():
    n, u, tau = 12, 5.0, 1.7
    lat = LatticeSpec(n)
    basis = build_basis(lat, Statistics.FERMION)
    h = build_two_particle(lat, InteractionSpec(u), basis)
    psi0 = localized_pair_state(basis, 5, 6).amplitudes

    w, v = scipy.linalg.eigh(h.to_dense())
    spectral = v @ (np.exp(-1j * w * tau) * (v.conj().T @ psi0))
    np.testing.assert_allclose(expm_state(h, tau, psi0), spectral, atol=1e-8)


def test_band_rows_export():
    bands = band_structure(LatticeSpec(8), InteractionSpec(14.0),
                           Statistics.FERMION)
    rows = list(bands.rows())
    assert len(rows) == 28
    nus = {r[0] for r in rows}
    assert nus == set(range(1, 9))
    assert {r[3] for r in rows} <= {"bound", "scattering"}
