"""Simulation and control toolkit for the 1D bilinear Schrodinger equation.

Spectral discretization of -d2/dx2 + V with Dirichlet ends, exact-exponential
Strang propagation of i c' = Lam c + u B c, Lyapunov feedback stabilization
onto eigenstates, time-reversal steering between arbitrary unit states,
spectral non-degeneracy condition checks, a cubic (nonlinear) variant, and
Monte Carlo studies of Sobolev-norm growth under random forcing.
"""

__version__ = "0.1.0"

from .conditions import (ConditionReport, GenericityScan, check_alpha_admissible,
                         check_condition_2p, check_condition_p,
                         cosine_sum_sampler, exponential_coefficient,
                         genericity_scan)
from .errors import (BudgetError, CubicBlowupError, InputError, NumericalError,
                     ResolutionError, ResourceError, StabilizationTimeout)
from .lyapunov import (ClosedLoopRecord, FeedbackParams, closed_loop,
                       excite_from_orthogonal, feedback_gain, lyapunov_value)
from .nonlinear import (CubicTables, cubic_closed_loop, cubic_lyapunov_value,
                        embed_state, linearized_response, make_cubic_tables,
                        nonlinear_feedback_gain, propagate_cubic)
from .potentials import evaluate_family, family_callable, load_potential_csv
from .propagator import (ControlSignal, PropagatorTables, conjugate,
                         constant_control, empty_control, make_tables,
                         propagate, propagate_sampled, reverse_control,
                         sample_control)
from .spectral import (Grid, PotentialPair, SpectralBasis, basis_state,
                       build_basis, coupling_matrix, dirichlet_scale,
                       eigenvalue_derivative, project, random_unit_state,
                       refined_eigenvalues, sobolev_norm, synthesize)
from .steering import (StabilizationResult, SteeringResult, distance_to_mode,
                       stabilize_to_eigenstate, steer)
from .stochastic import (ChainTrajectory, GrowthReport, RandomAmplitudeModel,
                         StoppingConfig, TailReport, default_model,
                         entrance_ensemble, first_entrance_time, flat_model,
                         growth_report, path_rng, sample_eta, simulate_chain,
                         tail_statistics)
