"""Degenerate Neumann system: constrained dynamics, reduction, and actions."""

from .model import (PhasePoint, SpectrumSpec, constraint_values, hamiltonian,
                    random_phase_point, torus_dimension, validate_spectrum,
                    vector_field)
from .poisson import (MomentumValue, Observable, angular_momentum, dirac_bracket,
                      generic_integral, integral_f, j_flow, j_total, momentum_map)
from .reduction import (RegularCoordinates, ReducedState, hilbert_map,
                        integrate_reduced, reduced_bracket, reduced_hamiltonian,
                        reduced_vector_field, regular_coordinates,
                        rosochatius_invariants)
from .dynamics import (RelativeEquilibrium, Trajectory, critical_energy_hessian,
                       drift_report, integrate, integrate_batch, measure_period,
                       relative_equilibrium)
from .separation import (HyperellipticCurve, SeparatedState, build_polynomials,
                         curve_from_energy, from_separated, hamiltonian_separated,
                         jacobi_identities, separation_constants, to_separated)
from .spectral import (PeriodLattice, action_integral, action_integrals,
                       branch_points, branch_segments, period_lattice,
                       trivial_action_residue)
from .atlas import (BoundaryReport, convexity_check, convexity_threshold,
                    double_root_check, equilibrium_stratum,
                    equilibrium_stratum_at_energy, locus_l2, polyhedron_limit,
                    resolve_locus_exponent)

__version__ = "0.1.0"
