"""qestim: unbiased-estimability analysis for quantum states and channels."""

from .errors import (DomainError, InvalidChannel, InvalidInput, InvalidModel,
                     InvalidScenario, NotEstimable, QestimError, Unsupported)
from .estimability import (EstimabilityVerdict, OptimalMeasurement, QfimResult,
                           block_diagonal_reparam, check_lemma1, check_theorem1,
                           fgqcrb_bound, generalized_qcrb, optimal_measurement,
                           qfim, sld_operators)
from .learnability import (CycleModel, LearnabilityReport, ParameterizedChannel,
                           build_cycle_stack, check_corollary1, cnot_commutant,
                           cnot_cycle_model, cycle_ptms, learnability_report,
                           rz_cycle_model)
from .linalg import (SpanVerdict, eig_hermitian, pseudo_inverse, residual_in_span,
                     support_projector, vectorize_hermitian)
from .pauli import (PauliChannel, PauliIndex, brute_force_twirl, choi_of, compose,
                    eigenvalues_to_rates, pauli_matrix, ptm_of, ptm_of_choi,
                    rates_to_eigenvalues, symmetric_clifford_twirl, tensor)
from .sensing import (BiasVarianceReport, Scenario, ShotRecord, build_scenario,
                      demonstrate_naive_bias, estimate, run_scenario, sample)
from .states import (EvaluatedModel, ParameterizedState, evaluate, ghz_ancilla_probe,
                     naive_phase_probe, twirled_qubit_probe)

__version__ = "0.1.0"
