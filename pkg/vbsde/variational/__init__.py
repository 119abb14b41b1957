from .candidates import (CandidateFamily, FamilyScores, build_candidates, default_family, perturbation_candidates,
                         random_candidates, PERTURBATION_SCALES)
from .functional import (EnergyBalance, energy_identity, functional_contributions, eval_E_pair, eval_E_sup,
                         functional_rearranged, terminal_gap_error, default_radius, optimality_residual,
                         driver_match_residual)
from .minimize import MinimizerConfig, MinimizationResult, minimize_E
