import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence
import torch
from joblib import Parallel, delayed

from ..core import DTYPE, AdaptedProcess, ControlPair, Generator, SolutionPair, TerminalVariable, b_norm, standard_error
from ..errors import InvalidFamilyError, InvalidRadiusError
from ..regression import Regressor
from ..solvers import driver_of, solve_test_bsde

# lambda values of the perturbations (eta, f -+ lambda (f - F(y, z)))
PERTURBATION_SCALES = (1.0, 0.1, 0.01)
DEFAULT_CANDIDATE_COUNT = 8


@dataclass
class FamilyScores:
    values: List[float]
    best_index: int
    contributions: torch.Tensor  # per-path values of the best candidate

    @property
    def value(self) -> float:
        return self.values[self.best_index]

    @property
    def std_error(self) -> float:
        return standard_error(self.contributions)


@dataclass
class CandidateFamily:
    """Finite set of competitors (alpha, g) standing in for the ball B^K."""

    members: List[ControlPair]
    radius: Optional[float] = None
    seed: int = 0
    labels: List[str] = field(default_factory=list)
    solutions: List[Optional[SolutionPair]] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise InvalidFamilyError("Candidate family is empty")
        if not self.labels:
            self.labels = [f"member[{j}]" for j in range(len(self.members))]
        if not self.solutions:
            self.solutions = [None] * len(self.members)
        if len(self.labels) != len(self.members) or len(self.solutions) != len(self.members):
            raise InvalidFamilyError("Labels and cached solutions must align with the members")

    def __len__(self) -> int:
        return len(self.members)

    def contains(self, pair: ControlPair) -> bool:
        return any(member is pair for member in self.members)

    def solution(self, j: int, regressor: Regressor) -> SolutionPair:
        if self.solutions[j] is None:
            self.solutions[j] = solve_test_bsde(self.members[j], regressor)
        return self.solutions[j]

    def extended(self, members: Sequence[ControlPair], labels: Sequence[str],
                 solutions: Optional[Sequence[Optional[SolutionPair]]] = None) -> "CandidateFamily":
        solutions = list(solutions) if solutions is not None else [None] * len(members)
        return CandidateFamily(self.members + list(members), self.radius, self.seed,
                               self.labels + list(labels), self.solutions + solutions)

    def evaluate(self, pair: ControlPair, xi: TerminalVariable, gen: Generator, regressor: Regressor,
                 pair_solution: Optional[SolutionPair] = None, n_jobs: int = 1) -> FamilyScores:
        """E_comp(pair) for every member; the max is the family's estimate of the functional."""
        from .functional import functional_contributions

        pair_solution = pair_solution or solve_test_bsde(pair, regressor)
        comp_solutions = [self.solution(j, regressor) for j in range(len(self))]
        contributions = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(functional_contributions)(comp, pair, xi, gen, regressor, sol, pair_solution)
            for comp, sol in zip(self.members, comp_solutions)
        )
        values = [float(c.mean().item()) for c in contributions]
        best = max(range(len(values)), key=lambda j: values[j])
        return FamilyScores(values=values, best_index=best, contributions=contributions[best])


def perturbation_candidates(pair: ControlPair, solution: SolutionPair, gen: Generator,
                            scales: Sequence[float] = PERTURBATION_SCALES) -> List[ControlPair]:
    """(eta, f - lambda h) for h = +-(f - F(y, z)) and each lambda."""
    mismatch = pair.f - driver_of(gen, solution)
    members = []
    for lam in scales:
        members.append(pair.with_driver(pair.f - lam * mismatch))
        members.append(pair.with_driver(pair.f + lam * mismatch))
    return members


def random_candidates(regressor: Regressor, dim: int, count: int, radius: float, seed: int) -> List[ControlPair]:
    """
    Random pairs spanned by the regression basis, with B-norm drawn uniformly in (0, K].

    Every step's value is a random combination of that step's basis functions,
    so the candidates stay inside the space the projections act on.
    """
    if radius <= 0:
        raise InvalidRadiusError(f"Radius must be positive, got {radius}")
    gen = torch.Generator().manual_seed(seed)
    grid = regressor.grid
    M = regressor.num_paths
    members = []
    for _ in range(count):
        steps = []
        for i in range(grid.num_steps + 1):
            columns = regressor.design(i).columns
            coeffs = torch.randn(columns.shape[1] + 1, dim, generator=gen, dtype=DTYPE)
            steps.append(coeffs[0].expand(M, dim) + columns @ coeffs[1:])
        values = torch.stack(steps, dim=1)
        candidate = ControlPair(TerminalVariable(values[:, -1].clone()), AdaptedProcess(values, grid))
        norm = b_norm(candidate)
        target = radius * float(torch.rand(1, generator=gen, dtype=DTYPE).item())
        members.append(candidate * (target / norm) if norm > 0 else candidate)
    return members


def build_candidates(pair: ControlPair, xi: TerminalVariable, gen: Generator, radius: float, count: int,
                     seed: int, regressor: Regressor, anchor: Optional[SolutionPair] = None,
                     scales: Sequence[float] = ()) -> CandidateFamily:
    """
    Assemble the competitor family for evaluating E at `pair`.

    Members: the pair itself; (xi, F(., Y, Z)) when an anchor solution is given;
    the lambda-perturbations for each scale; `count` random pairs of B-norm <= radius.
    """
    if radius <= 0:
        raise InvalidRadiusError(f"Radius must be positive, got {radius}")
    return _assemble(pair, xi, gen, regressor, radius, count, seed, anchor, scales)


def _assemble(pair: ControlPair, xi: TerminalVariable, gen: Generator, regressor: Regressor,
              radius: Optional[float], count: int, seed: int, anchor: Optional[SolutionPair],
              scales: Sequence[float]) -> CandidateFamily:
    family = CandidateFamily([pair], radius=radius, seed=seed, labels=["self"])
    if anchor is not None:
        family = family.extended([ControlPair(xi, driver_of(gen, anchor))], ["picard"])
    if scales:
        solution = family.solution(0, regressor)
        members = perturbation_candidates(pair, solution, gen, scales)
        labels = [f"perturb[{sign}{lam:g}]" for lam in scales for sign in ("-", "+")]
        family = family.extended(members, labels)
    if count > 0:
        family = family.extended(random_candidates(regressor, pair.dim, count, radius, seed),
                                 [f"random[{j}]" for j in range(count)])
    return family


def default_family(pair: ControlPair, xi: TerminalVariable, gen: Generator, regressor: Regressor,
                   count: int = DEFAULT_CANDIDATE_COUNT, seed: int = 0,
                   anchor: Optional[SolutionPair] = None, radius: Optional[float] = None) -> CandidateFamily:
    """The family used by the solvers' diagnostics: perturbations plus random pairs in B^K, K from the a-priori bound."""
    from .functional import default_radius

    radius = default_radius(gen, xi, regressor) if radius is None else radius
    if radius <= 0 or not math.isfinite(radius):
        # zero data: no ball to sample from
        return _assemble(pair, xi, gen, regressor, None, 0, seed, anchor, PERTURBATION_SCALES)
    return build_candidates(pair, xi, gen, radius, count, seed, regressor, anchor, PERTURBATION_SCALES)
