from .claims import Claim, CallClaim, PutClaim, ForwardClaim, CustomClaim, claim_map, create_claim
from .report import CSV_COLUMNS, LOWER_BOUND_NOTE, SolverResult, PricingReport
from .price import PricingContext, prepare_context, solver_map, price_claim
from .verify import VERIFY_COLUMNS, VerifyTable, verify_suite
