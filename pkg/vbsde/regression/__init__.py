from .basis import BasisSpec, Regressor, StepDesign, monomial_exponents, state_map
from .estimators import cond_expect, martingale_z
