from dataclasses import dataclass
from typing import List

from ..core import ControlPair, Generator, TerminalVariable
from ..regression import Regressor
from ..variational import random_candidates


@dataclass(frozen=True)
class CheckResult:
    check: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def to_dict(self):
        return {"check": self.check, "passed": self.passed, "value": self.value,
                "tolerance": self.tolerance, "detail": self.detail}


@dataclass
class CheckContext:
    """Shared inputs of the invariant checks.

    span_regressor regresses on polynomials of the Brownian state with no ridge,
    so pairs drawn from its span make the discrete identities exact.
    """

    generator: Generator
    xi: TerminalVariable
    regressor: Regressor
    span_regressor: Regressor
    seed: int = 0
    num_pairs: int = 20
    picard_tol: float = 1e-6
    picard_max_iter: int = 50
    yosida_eps: float = 1e-4
    yosida_tol: float = 1e-10
    yosida_max_inner: int = 200
    candidate_count: int = 8

    @property
    def grid(self):
        return self.regressor.grid

    @property
    def noise_dim(self) -> int:
        return self.regressor.paths.dim

    def random_pairs(self, count: int, offset: int = 0, radius: float = 1.0) -> List[ControlPair]:
        return random_candidates(self.span_regressor, self.xi.dim, count, radius, self.seed + offset)
