import logging
from dataclasses import dataclass, field
from typing import List, Optional
import torch

from ..core import AdaptedProcess, ControlPair, Generator, SolutionPair, TerminalVariable
from ..errors import StallError
from ..regression import Regressor
from ..solvers import driver_of, solve_test_bsde
from .candidates import (DEFAULT_CANDIDATE_COUNT, PERTURBATION_SCALES, CandidateFamily, FamilyScores,
                         perturbation_candidates, random_candidates)
from .functional import (default_radius, driver_match_residual, functional_contributions,
                         terminal_gap_error)

logger = logging.getLogger(__name__)

GRADIENT_MODES = ("autograd", "finite_difference")


@dataclass(frozen=True)
class MinimizerConfig:
    max_iter: int = 25
    patience: int = 3
    backtrack_factor: float = 0.5
    max_backtracks: int = 6
    gradient_step: float = 1.0
    armijo: float = 1e-4
    gradient_mode: str = "autograd"
    fd_step: float = 1e-4
    threshold_floor: float = 1e-3
    se_multiplier: float = 3.0
    driver_tol: float = 1e-10
    candidate_count: int = DEFAULT_CANDIDATE_COUNT
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 0 or self.patience < 0 or self.max_backtracks < 0:
            raise ValueError("Iteration limits must be nonnegative")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError(f"Backtracking factor must lie in (0, 1), got {self.backtrack_factor}")
        if self.gradient_step <= 0 or self.fd_step <= 0:
            raise ValueError("Step sizes must be positive")
        if self.threshold_floor < 0 or self.se_multiplier < 0 or self.driver_tol < 0:
            raise ValueError("Stopping thresholds must be nonnegative")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"Unknown gradient mode '{self.gradient_mode}', expected one of {GRADIENT_MODES}")


@dataclass
class _Iterate:
    pair: ControlPair
    solution: SolutionPair
    scores: FamilyScores
    family: CandidateFamily
    driver_match: float

    @property
    def value(self) -> float:
        return self.scores.value


@dataclass
class MinimizationResult:
    pair: ControlPair
    solution: SolutionPair
    trace: List[float] = field(default_factory=list)
    driver_match: float = 0.0
    threshold: float = 0.0
    iterations: int = 0
    converged: bool = False


class _Objective:
    """E-hat as a function of the driver, with eta fixed at xi and the random competitors drawn once."""

    def __init__(self, xi: TerminalVariable, gen: Generator, regressor: Regressor, cfg: MinimizerConfig,
                 anchor: Optional[SolutionPair]):
        self.xi = xi
        self.gen = gen
        self.regressor = regressor
        self.anchor_pair = ControlPair(xi, driver_of(gen, anchor)) if anchor is not None else None
        self.anchor_solution = anchor
        radius = default_radius(gen, xi, regressor)
        self.random = []
        if radius > 0 and cfg.candidate_count > 0:
            self.random = random_candidates(regressor, xi.dim, cfg.candidate_count, radius, cfg.seed)
        self.random_solutions = [solve_test_bsde(member, regressor) for member in self.random]
        self.radius = radius
        self.seed = cfg.seed

    def __call__(self, f: AdaptedProcess) -> _Iterate:
        pair = ControlPair(self.xi, f)
        solution = solve_test_bsde(pair, self.regressor)
        members, labels, solutions = [pair], ["self"], [solution]
        if self.anchor_pair is not None:
            members.append(self.anchor_pair)
            labels.append("picard")
            solutions.append(None)
        perturbed = perturbation_candidates(pair, solution, self.gen, PERTURBATION_SCALES)
        members += perturbed
        labels += [f"perturb[{j}]" for j in range(len(perturbed))]
        solutions += [None] * len(perturbed)
        members += self.random
        labels += [f"random[{j}]" for j in range(len(self.random))]
        solutions += self.random_solutions
        family = CandidateFamily(members, self.radius, self.seed, labels, solutions)
        scores = family.evaluate(pair, self.xi, self.gen, self.regressor, pair_solution=solution)
        match = driver_match_residual(pair, self.gen, self.regressor, solution)
        return _Iterate(pair, solution, scores, family, match)


def _better(new: _Iterate, old: _Iterate) -> bool:
    return new.value < old.value or (new.value <= old.value and new.driver_match < old.driver_match)


def _substitution_step(objective: _Objective, state: _Iterate, cfg: MinimizerConfig) -> Optional[_Iterate]:
    """f <- f + s (F(., C(xi, f), D(xi, f)) - f) for s = 1, 1/2, 1/4, ..."""
    target = driver_of(objective.gen, state.solution)
    step = 1.0
    for _ in range(cfg.max_backtracks + 1):
        trial = objective(state.pair.f + step * (target - state.pair.f))
        if _better(trial, state):
            logger.debug("Substitution step accepted with s=%g: E=%.4e", step, trial.value)
            return trial
        step *= cfg.backtrack_factor
    return None


def _l2_gradient(objective: _Objective, state: _Iterate) -> torch.Tensor:
    """Gradient of the active competitor's E with respect to f, in the L^2(dP x dt) metric."""
    regressor = objective.regressor
    j = state.scores.best_index
    comp = state.family.members[j]
    comp_solution = state.family.solution(j, regressor)
    with torch.enable_grad():
        f_var = state.pair.f.values.detach().clone().requires_grad_(True)
        pair = ControlPair(objective.xi, AdaptedProcess(f_var, regressor.grid))
        value = functional_contributions(comp, pair, objective.xi, objective.gen, regressor,
                                         comp_solution=comp_solution).mean()
        (grad,) = torch.autograd.grad(value, f_var)
    dt = regressor.grid.dt
    grad = grad.clone()
    grad[:, :-1] = grad[:, :-1] * regressor.num_paths / dt.view(1, -1, 1)
    grad[:, -1] = 0.0
    return grad


def _gradient_step(objective: _Objective, state: _Iterate, cfg: MinimizerConfig,
                   initial_step: float) -> Optional[_Iterate]:
    grid = objective.regressor.grid
    if cfg.gradient_mode == "autograd":
        direction = -_l2_gradient(objective, state)
        slope = -float((direction[:, :-1].pow(2).sum(-1) * grid.dt.view(1, -1)).sum(1).mean().item())
    else:
        # central difference of E-hat along the driver mismatch
        residual = (driver_of(objective.gen, state.solution) - state.pair.f).values
        h = cfg.fd_step
        up = objective(AdaptedProcess(state.pair.f.values + h * residual, grid)).value
        down = objective(AdaptedProcess(state.pair.f.values - h * residual, grid)).value
        slope = (up - down) / (2.0 * h)
        direction = -residual if slope > 0 else residual
        slope = -abs(slope)
    if slope >= 0:
        return None

    step = initial_step
    for _ in range(cfg.max_backtracks + 1):
        trial = objective(AdaptedProcess(state.pair.f.values + step * direction, grid))
        # Armijo sufficient decrease
        if trial.value <= state.value + cfg.armijo * step * slope and _better(trial, state):
            logger.debug("Gradient step accepted with step=%g: E=%.4e", step, trial.value)
            return trial
        step *= cfg.backtrack_factor
    return None


def minimize_E(xi: TerminalVariable, gen: Generator, init_f: AdaptedProcess, regressor: Regressor,
               cfg: Optional[MinimizerConfig] = None, anchor: Optional[SolutionPair] = None) -> MinimizationResult:
    """
    Minimize the sampled functional E-hat over drivers f, holding eta = xi.

    Each outer iteration first tries the substitution f <- F(., C(xi, f), D(xi, f))
    with backtracking, then a gradient step with Armijo backtracking. A step is
    accepted only if E-hat does not increase, so the trace is non-increasing.
    The run stops once E-hat <= max(se_multiplier * SE, threshold_floor) and the
    driver mismatch is below driver_tol, or when no step improves an iterate that
    is already below the threshold.

    Args:
        xi: Terminal value (also the fixed eta)
        gen: Generator F
        init_f: Initial driver
        regressor: Basis bound to the ensemble
        cfg: Minimizer settings
        anchor: Optional known solution added to every competitor family

    Returns:
        MinimizationResult with the final pair, its C,D image and the trace of E-hat
    """
    cfg = cfg or MinimizerConfig()
    objective = _Objective(xi, gen, regressor, cfg, anchor)
    state = objective(init_f)
    threshold = max(cfg.se_multiplier * terminal_gap_error(state.pair, xi), cfg.threshold_floor)
    trace = [state.value]
    logger.info("Minimizing E for %s: initial E=%.4e, threshold %.1e", gen.name, state.value, threshold)

    def done(it: _Iterate) -> bool:
        return it.value <= threshold and it.driver_match <= cfg.driver_tol

    def result(iterations: int, converged: bool) -> MinimizationResult:
        return MinimizationResult(pair=state.pair, solution=state.solution, trace=trace,
                                  driver_match=state.driver_match, threshold=threshold,
                                  iterations=iterations, converged=converged)

    if done(state):
        return result(0, True)

    stalls = 0
    gradient_step = cfg.gradient_step
    for iteration in range(1, cfg.max_iter + 1):
        new = _substitution_step(objective, state, cfg)
        if new is None:
            new = _gradient_step(objective, state, cfg, gradient_step)
        if new is None:
            if state.value <= threshold:
                logger.info("No further decrease below the threshold after %d iterations", iteration - 1)
                return result(iteration - 1, True)
            stalls += 1
            if stalls > cfg.patience:
                raise StallError(f"E-hat stalled at {state.value:.4e} above threshold {threshold:.1e}", trace)
            gradient_step *= cfg.backtrack_factor ** (cfg.max_backtracks + 1)
            continue

        stalls = 0
        state = new
        trace.append(state.value)
        logger.debug("Iteration %d: E=%.4e, driver mismatch %.3e", iteration, state.value, state.driver_match)
        if done(state):
            logger.info("E-hat below threshold after %d iterations (E=%.4e)", iteration, state.value)
            return result(iteration, True)

    if state.value <= threshold:
        return result(cfg.max_iter, True)
    raise StallError(f"E-hat still {state.value:.4e} above threshold {threshold:.1e} after {cfg.max_iter} iterations",
                     trace)
