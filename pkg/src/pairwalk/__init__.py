"""Two interacting identical walkers on a noisy ring: exact noise-resolved dynamics."""

from .bands import (BandStructure, ProjectionSpectrum, band_structure,
                    classify_bound_states, eigen_projections, gap_at_k0)
from .ensemble import (EnsembleAccumulator, EnsembleResult, ExperimentConfig,
                       merge_partials, run_ensemble)
from .hamiltonian import (InteractionSpec, SparseHamiltonian,
                          build_single_particle, build_two_particle,
                          interaction_strength, rebuild_offdiagonals,
                          uniform_links)
from .lattice import (LatticeSpec, StateVector, Statistics, TwoParticleBasis,
                      build_basis, centered_pair_sites, localized_pair_state)
from .observables import (occupation_numbers, pair_populations,
                          position_variance, single_particle_diagonal,
                          variance_gain)
from .propagate import (PropagationRequest, StateSnapshots, apply_segment,
                        dense_oracle, evolve_piecewise)
from .telegraph import (EventGrid, NoiseSpec, RtnTrajectory,
                        empirical_autocorrelation,
                        empirical_cross_correlation, merge_events,
                        sample_link_trajectories, sample_trajectory,
                        stream_rng)

__version__ = "0.1.0"
