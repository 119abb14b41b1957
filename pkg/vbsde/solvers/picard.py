import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import torch

from ..core import (DTYPE, AdaptedProcess, ControlPair, Generator, ProcessKind, SolutionPair,
                    TerminalVariable, left_sum)
from ..errors import DimensionError, NonConvergenceError
from ..regression import Regressor
from .test_bsde import solve_test_bsde
from .transform import auto_transform_alpha, exp_transform

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 50


@dataclass
class PicardReport:
    iterations: int
    residuals: List[float] = field(default_factory=list)
    converged: bool = False
    bound_constant: float = 0.0  # C_1
    bound_lhs: float = 0.0  # E sup|Y|^2 + E int |Z|^2
    bound_rhs: float = 0.0  # C_1 E(|xi|^2 + int |F(s,0,0)|^2 ds)
    transform_alpha: Optional[float] = None

    @property
    def fixed_point_residual(self) -> float:
        return self.residuals[-1] if self.residuals else math.inf

    @property
    def bound_holds(self) -> bool:
        return self.bound_lhs <= self.bound_rhs


def a_priori_constant(gen: Generator, horizon: float) -> float:
    """C_1 = 8 exp((1 + 2M + 2L^2) T)."""
    return 8.0 * math.exp((1.0 + 2.0 * gen.mono_M + 2.0 * gen.lip_L ** 2) * horizon)


def data_size(gen: Generator, xi: TerminalVariable, regressor: Regressor) -> float:
    """E|xi|^2 + E int_0^T |F(s, 0, 0)|^2 ds."""
    grid = regressor.grid
    M, d, k = xi.num_paths, xi.dim, regressor.paths.dim
    y0 = torch.zeros(M, d, dtype=DTYPE)
    z0 = torch.zeros(M, d, k, dtype=DTYPE)
    f0 = torch.stack([gen(i, grid.time(i), y0, z0) for i in range(grid.num_steps + 1)], dim=1)
    total = xi.values.pow(2).sum(-1) + left_sum(f0.pow(2).sum(-1), grid)
    return float(total.mean().item())


def driver_of(gen: Generator, solution: SolutionPair) -> AdaptedProcess:
    """The adapted driver F(t, Y_t, Z_t)."""
    return AdaptedProcess(gen.on_process(solution.grid, solution.Y.values, solution.Z.values), solution.grid)


def _initial_iterate(init: str, xi: TerminalVariable, regressor: Regressor) -> SolutionPair:
    grid = regressor.grid
    M, d, k = xi.num_paths, xi.dim, regressor.paths.dim
    Z = AdaptedProcess.zeros(grid, M, d, ProcessKind.Z, noise_dim=k)
    if init == "zero":
        Y = AdaptedProcess.zeros(grid, M, d)
    elif init == "terminal":
        Y = AdaptedProcess(xi.values.unsqueeze(1).expand(M, grid.num_steps + 1, d).clone(), grid)
    else:
        raise ValueError(f"Unknown Picard initialization '{init}', expected 'zero' or 'terminal'")
    return SolutionPair(Y, Z)


def _iterate(gen: Generator, xi: TerminalVariable, regressor: Regressor, tol: float, max_iter: int,
             init: str) -> Tuple[SolutionPair, List[float], bool]:
    current = _initial_iterate(init, xi, regressor)
    residuals: List[float] = []
    for n in range(1, max_iter + 1):
        image = solve_test_bsde(ControlPair(xi, driver_of(gen, current)), regressor)
        increment = (image.Y.values - current.Y.values).pow(2).sum(-1).mean(0)
        residual = float(increment.max().item())
        residuals.append(residual)
        logger.debug("Picard iteration %d: residual %.3e", n, residual)
        if residual < tol:
            # the previous iterate is certified by its image
            return current, residuals, True
        current = image
    return current, residuals, False


def solve_picard(gen: Generator, xi: TerminalVariable, regressor: Regressor, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER, init: str = "zero",
                 auto_transform: bool = True) -> Tuple[SolutionPair, PicardReport]:
    """
    Solve the BSDE(xi, F) by Picard iteration through the test-BSDE solution map.

    (Y^{n+1}, Z^{n+1}) = (C, D)(xi, F(., Y^n, Z^n)), stopped when the largest
    mean-square increment over the grid drops below tol. The returned pair Y
    satisfies ||C(xi, F(., Y, Z)) - Y|| < tol. When M + L^2/2 > 0 the equation
    is first rescaled with alpha = -(M + L^2/2) and the result mapped back.

    Args:
        gen: Generator F
        xi: Terminal value
        regressor: Basis bound to the ensemble
        tol: Stopping threshold on the mean-square increment
        max_iter: Maximum number of Picard maps
        init: 'zero' for Y^0 = 0, 'terminal' for Y^0 = xi at every step
        auto_transform: Apply the exponential transform when needed

    Returns:
        Tuple of (solution, report)
    """
    if xi.num_paths != regressor.num_paths:
        raise DimensionError(f"Terminal value has {xi.num_paths} paths, regressor has {regressor.num_paths}")
    grid = regressor.grid
    alpha = auto_transform_alpha(gen) if auto_transform else None

    logger.info("Picard solve of %s on %d paths, %d steps%s", gen.name, xi.num_paths, grid.num_steps,
                f" (transformed, alpha={alpha:.4g})" if alpha is not None else "")
    if alpha is None:
        solution, residuals, converged = _iterate(gen, xi, regressor, tol, max_iter, init)
    else:
        t_gen, t_xi = exp_transform(gen, xi, alpha, grid.horizon)
        t_solution, residuals, converged = _iterate(t_gen, t_xi, regressor, tol, max_iter, init)
        solution = t_solution.scaled_in_time(torch.exp(alpha * grid.times))

    if not converged:
        raise NonConvergenceError(
            f"Picard iteration did not reach tol={tol:.1e} in {max_iter} iterations "
            f"(last residual {residuals[-1]:.3e})", residuals
        )

    constant = a_priori_constant(gen, grid.horizon)
    lhs = solution.Y.values.pow(2).sum(-1).max(dim=1).values + left_sum(solution.Z.values.pow(2).sum((-2, -1)), grid)
    report = PicardReport(
        iterations=len(residuals) - 1,
        residuals=residuals,
        converged=True,
        bound_constant=constant,
        bound_lhs=float(lhs.mean().item()),
        bound_rhs=constant * data_size(gen, xi, regressor),
        transform_alpha=alpha,
    )
    logger.info("Picard converged after %d iterations, Y0=%s, residual %.3e", report.iterations,
                [round(v, 6) for v in solution.Y.values[:, 0].mean(0).tolist()], report.fixed_point_residual)
    return solution, report
