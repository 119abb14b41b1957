from typing import Callable, List

from .context import CheckContext, CheckResult
from .generator_checks import (check_lipschitz, check_monotonicity, check_growth, check_resolvent,
                               check_transform)
from .functional_checks import (check_linearity, check_energy_identity, check_convexity, check_nonnegativity,
                                check_equivalence)

# Checks run in this order
check_list: List[Callable[[CheckContext], CheckResult]] = [
    check_lipschitz,
    check_monotonicity,
    check_growth,
    check_linearity,
    check_energy_identity,
    check_convexity,
    check_nonnegativity,
    check_resolvent,
    check_transform,
    check_equivalence,
]
