from typing import NamedTuple, Optional
import torch

from ..core import AdaptedProcess, ControlPair, Generator, SolutionPair, TerminalVariable, left_sum, standard_error
from ..regression import Regressor
from ..solvers import a_priori_constant, data_size, martingale_increments, solve_test_bsde
from .candidates import CandidateFamily


class EnergyBalance(NamedTuple):
    lhs: float  # E|y_0 - u_0|^2 + E sum |dM_i|^2
    rhs: float  # E|eta - alpha|^2 + 2 E int <y - u, f - g> (with the scheme's dt^2 correction)
    residual: float
    z_gap: float = 0.0  # E sum |dM_i|^2 - E int |z - v|^2

    @property
    def relative(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return self.residual / scale if scale > 0 else 0.0


def energy_identity(pair_a: ControlPair, pair_b: ControlPair, regressor: Regressor) -> EnergyBalance:
    """
    Both sides of the energy equality for the difference of two test-BSDE solutions.

    The martingale energy is measured by the realized increments dM_i of the
    scheme. With -sum dt_i^2 |f_i - g_i|^2 on the right the identity
    telescopes path by path up to the cross terms sum <y_i, dM_i> and
    sum dt_i <f_i, dM_i>, which vanish in the mean when f lies in the
    regression span. The gap between sum |dM_i|^2 and sum dt_i |z_i|^2 is
    reported separately as z_gap.
    """
    diff = pair_a - pair_b
    sol = solve_test_bsde(diff, regressor)
    grid = regressor.grid
    dt = grid.dt.view(1, -1)

    y0 = sol.Y.values[:, 0].pow(2).sum(-1)
    dm_energy = martingale_increments(diff, sol).pow(2).sum(-1).sum(1)
    z_energy = left_sum(sol.Z.values.pow(2).sum((-2, -1)), grid)
    lhs = float((y0 + dm_energy).mean().item())

    eta = diff.eta.values.pow(2).sum(-1)
    cross = left_sum((sol.Y.values * diff.f.values).sum(-1), grid)
    correction = (dt.pow(2) * diff.f.values[:, :-1].pow(2).sum(-1)).sum(1)
    rhs = float((eta + 2.0 * cross - correction).mean().item())
    z_gap = float((dm_energy - z_energy).mean().item())
    return EnergyBalance(lhs, rhs, abs(lhs - rhs), z_gap)


def functional_contributions(comp: ControlPair, pair: ControlPair, xi: TerminalVariable, gen: Generator,
                             regressor: Regressor, comp_solution: Optional[SolutionPair] = None,
                             pair_solution: Optional[SolutionPair] = None) -> torch.Tensor:
    """
    Per-path values of E_comp(pair), shape (M,).

    |eta - xi|^2 + 2 sum dt <y - u, f - F(u, v)> - sum |dM^y - dM^u|^2 - sum dt^2 |f - g|^2,
    with (y, z) = C,D(pair), (u, v) = C,D(comp) and dM the realized martingale
    increments of the scheme.
    """
    grid = regressor.grid
    if comp_solution is None:
        comp_solution = solve_test_bsde(comp, regressor)
    if pair_solution is None:
        pair_solution = solve_test_bsde(pair, regressor)
    u, v = comp_solution.Y.values, comp_solution.Z.values
    y = pair_solution.Y.values

    F_comp = gen.on_process(grid, u, v)
    terminal = (pair.eta.values - xi.values).pow(2).sum(-1)
    cross = left_sum(((y - u) * (pair.f.values - F_comp)).sum(-1), grid)
    increments = (martingale_increments(pair, pair_solution)
                  - martingale_increments(comp, comp_solution)).pow(2).sum(-1).sum(1)
    dt = grid.dt.view(1, -1)
    correction = (dt.pow(2) * (pair.f.values - comp.f.values)[:, :-1].pow(2).sum(-1)).sum(1)
    return terminal + 2.0 * cross - increments - correction


def eval_E_pair(comp: ControlPair, pair: ControlPair, xi: TerminalVariable, gen: Generator,
                regressor: Regressor) -> float:
    """Discrete E_{(alpha, g)}(eta, f)."""
    return float(functional_contributions(comp, pair, xi, gen, regressor).mean().item())


def eval_E_sup(pair: ControlPair, xi: TerminalVariable, gen: Generator, family: CandidateFamily,
               regressor: Regressor) -> float:
    """
    Max of E_comp(pair) over the family; a lower bound for the supremum over the whole space.

    The pair itself is always scored, so the result is at least E|eta - xi|^2.
    """
    if not family.contains(pair):
        family = family.extended([pair], ["self"])
    return family.evaluate(pair, xi, gen, regressor).value


def functional_rearranged(comp: ControlPair, pair: ControlPair, xi: TerminalVariable, gen: Generator,
                          regressor: Regressor) -> float:
    """E|alpha - xi|^2 + E|y_0 - u_0|^2 + 2E<alpha - xi, eta - alpha> + 2E int <y - u, g - F(u, v)> dt."""
    grid = regressor.grid
    comp_solution = solve_test_bsde(comp, regressor)
    pair_solution = solve_test_bsde(pair, regressor)
    u, v = comp_solution.Y.values, comp_solution.Z.values
    y = pair_solution.Y.values
    gap = comp.eta.values - xi.values
    total = (
        gap.pow(2).sum(-1)
        + (y[:, 0] - u[:, 0]).pow(2).sum(-1)
        + 2.0 * (gap * (pair.eta.values - comp.eta.values)).sum(-1)
        + 2.0 * left_sum(((y - u) * (comp.f.values - gen.on_process(grid, u, v))).sum(-1), grid)
    )
    return float(total.mean().item())


def terminal_gap_error(pair: ControlPair, xi: TerminalVariable) -> float:
    """Monte Carlo standard error of the E|eta - xi|^2 term."""
    return standard_error((pair.eta.values - xi.values).pow(2).sum(-1))


def default_radius(gen: Generator, xi: TerminalVariable, regressor: Regressor) -> float:
    """K = 2 C_1 (E|xi|^2 + E int |F(s, 0, 0)|^2 ds)."""
    return 2.0 * a_priori_constant(gen, regressor.grid.horizon) * data_size(gen, xi, regressor)


def optimality_residual(pair: ControlPair, direction: AdaptedProcess, gen: Generator, regressor: Regressor,
                        solution: Optional[SolutionPair] = None) -> float:
    """E int <u_t, f_t - F(t, y_t, z_t)> dt with (y, z) = C,D(pair)."""
    solution = solution or solve_test_bsde(pair, regressor)
    mismatch = pair.f.values - gen.on_process(regressor.grid, solution.Y.values, solution.Z.values)
    return float(left_sum((direction.values * mismatch).sum(-1), regressor.grid).mean().item())


def driver_match_residual(pair: ControlPair, gen: Generator, regressor: Regressor,
                          solution: Optional[SolutionPair] = None) -> float:
    """E int |f_t - F(t, y_t, z_t)|^2 dt with (y, z) = C,D(pair)."""
    solution = solution or solve_test_bsde(pair, regressor)
    mismatch = pair.f.values - gen.on_process(regressor.grid, solution.Y.values, solution.Z.values)
    return float(left_sum(mismatch.pow(2).sum(-1), regressor.grid).mean().item())
