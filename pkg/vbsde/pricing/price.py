import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import torch

from ..core import AdaptedProcess, ControlPair, Generator, SolutionPair, TerminalVariable, standard_error
from ..regression import Regressor
from ..sde import MarketModel, discount_exponent, simulate_assets, simulate_brownian
from ..solvers import (YosidaParams, driver_of, hedge_portfolio, solve_linear_closed_form, solve_picard,
                       yosida_sequence)
from ..utils.load_config import PricingConfig, config_to_dict, create_basis, create_grid, create_market
from ..variational import (MinimizerConfig, default_family, driver_match_residual, energy_identity, eval_E_sup,
                           minimize_E)
from .claims import create_claim
from .report import PricingReport, SolverResult

logger = logging.getLogger(__name__)


@dataclass
class PricingContext:
    """Everything the solvers share: one market, one seeded ensemble, one regression basis."""

    config: PricingConfig
    market: MarketModel
    generator: Generator
    xi: TerminalVariable
    regressor: Regressor

    @property
    def paths(self):
        return self.regressor.paths


def prepare_context(config: PricingConfig) -> PricingContext:
    market = create_market(config.market)
    grid = create_grid(config.grid)
    paths = simulate_brownian(grid, config.ensemble.M, market.noise_dim, config.ensemble.seed,
                              n_jobs=config.ensemble.n_jobs)
    assets = simulate_assets(market, paths)
    claim = create_claim(config.claim.type, market.num_assets, strike=config.claim.strike,
                         asset=config.claim.asset, expression=config.claim.expression)
    xi = claim.terminal_value(assets)
    regressor = Regressor(paths, create_basis(config.basis), assets=assets)
    return PricingContext(config, market, market.generator(), xi, regressor)


def _price_error(ctx: PricingContext, solution: SolutionPair) -> float:
    """SE of xi + sum f_i dt_i, whose mean is Y_0 for the driver f = F(Y, Z)."""
    f = driver_of(ctx.generator, solution).values
    total = ctx.xi.values + (f[:, :-1] * ctx.regressor.grid.dt.view(1, -1, 1)).sum(1)
    return standard_error(total[:, 0])


def _hedge0(ctx: PricingContext, solution: SolutionPair) -> Optional[List[float]]:
    if ctx.market.num_assets != ctx.market.noise_dim:
        return None
    pi = hedge_portfolio(ctx.market, solution)
    return [float(v) for v in pi.values[:, 0].mean(0).tolist()]


def _diagnostics(ctx: PricingContext, solution: SolutionPair) -> Dict[str, float]:
    """E_hat, energy residual and driver mismatch at the pair (xi, F(., Y, Z))."""
    tol = ctx.config.tolerances
    pair = ControlPair(ctx.xi, driver_of(ctx.generator, solution))
    family = default_family(pair, ctx.xi, ctx.generator, ctx.regressor, count=tol.candidate_count,
                            seed=ctx.config.ensemble.seed)
    zero = ControlPair.zeros(ctx.regressor.grid, ctx.xi.num_paths, ctx.xi.dim)
    return {
        "E_hat": eval_E_sup(pair, ctx.xi, ctx.generator, family, ctx.regressor),
        "energy_residual": energy_identity(pair, zero, ctx.regressor).relative,
        "driver_match": driver_match_residual(pair, ctx.generator, ctx.regressor),
    }


def _price(solution: SolutionPair) -> float:
    return float(solution.Y.values[:, 0, 0].mean().item())


def run_closed_form(ctx: PricingContext) -> SolverResult:
    solution = solve_linear_closed_form(ctx.market, ctx.xi, ctx.regressor)
    kernel = torch.exp(-discount_exponent(ctx.market, ctx.paths)[:, -1])
    return SolverResult("closed_form", _price(solution), standard_error(kernel * ctx.xi.values[:, 0]),
                        _hedge0(ctx, solution), _diagnostics(ctx, solution))


def run_picard(ctx: PricingContext) -> SolverResult:
    tol = ctx.config.tolerances
    solution, report = solve_picard(ctx.generator, ctx.xi, ctx.regressor, tol=tol.picard_tol,
                                    max_iter=tol.picard_max_iter)
    diagnostics = _diagnostics(ctx, solution)
    diagnostics["picard_trace"] = report.residuals
    diagnostics["bound_holds"] = report.bound_holds
    return SolverResult("picard", _price(solution), _price_error(ctx, solution), _hedge0(ctx, solution),
                        diagnostics)


def run_variational(ctx: PricingContext) -> SolverResult:
    tol = ctx.config.tolerances
    cfg = MinimizerConfig(max_iter=tol.minimize_max_iter, patience=tol.minimize_patience,
                          candidate_count=tol.candidate_count, seed=ctx.config.ensemble.seed)
    init = AdaptedProcess.zeros(ctx.regressor.grid, ctx.xi.num_paths, ctx.xi.dim)
    result = minimize_E(ctx.xi, ctx.generator, init, ctx.regressor, cfg)
    zero = ControlPair.zeros(ctx.regressor.grid, ctx.xi.num_paths, ctx.xi.dim)
    diagnostics = {
        "E_hat": result.trace[-1],
        "energy_residual": energy_identity(result.pair, zero, ctx.regressor).relative,
        "driver_match": result.driver_match,
        "E_trace": result.trace,
    }
    return SolverResult("variational", _price(result.solution), _price_error(ctx, result.solution),
                        _hedge0(ctx, result.solution), diagnostics)


def run_yosida(ctx: PricingContext) -> SolverResult:
    tol = ctx.config.tolerances
    seed = ctx.config.ensemble.seed

    def sequence(eps: float, with_theta: bool = True):
        params = YosidaParams(eps=eps, tol=tol.yosida_tol, max_inner=tol.yosida_max_inner)
        return yosida_sequence(ctx.generator, ctx.xi, ctx.regressor, params, tol=tol.picard_tol,
                               max_iter=tol.picard_max_iter, candidate_count=tol.candidate_count, seed=seed,
                               with_theta=with_theta)

    result = sequence(tol.yosida_eps)
    zero = ControlPair.zeros(ctx.regressor.grid, ctx.xi.num_paths, ctx.xi.dim)
    diagnostics = {
        "E_hat": result.theta_hat,
        "energy_residual": energy_identity(result.pair, zero, ctx.regressor).relative,
        "driver_match": driver_match_residual(result.pair, ctx.generator, ctx.regressor),
    }
    if tol.theta_eps:
        thetas = {f"{eps:g}": sequence(eps).theta_hat for eps in tol.theta_eps}
        diagnostics["theta_hat"] = thetas
        values = list(thetas.values())
        if any(later > earlier for earlier, later in zip(values, values[1:])):
            logger.warning("Theta(eps) is not non-increasing along %s: %s", list(thetas), values)
    return SolverResult("yosida", _price(result.solution), _price_error(ctx, result.solution),
                        _hedge0(ctx, result.solution), diagnostics)


# Add more solvers as needed
solver_map: Dict[str, Callable[[PricingContext], SolverResult]] = {
    "closed_form": run_closed_form,
    "picard": run_picard,
    "variational": run_variational,
    "yosida": run_yosida,
}


def price_claim(config: PricingConfig) -> PricingReport:
    """
    Run every selected solver on one seeded ensemble and collect prices, hedges and diagnostics.

    Args:
        config: Validated pricing configuration

    Returns:
        PricingReport with one result per solver, in the configured order
    """
    timings: Dict[str, float] = {}
    start = time.perf_counter()
    ctx = prepare_context(config)
    timings["simulation"] = time.perf_counter() - start
    logger.info("Simulated %d paths on %d steps (seed=%d)", config.ensemble.M, config.grid.N, config.ensemble.seed)

    report = PricingReport(config=config_to_dict(config), timings=timings)
    for name in config.solvers:
        start = time.perf_counter()
        result = solver_map[name](ctx)
        result.seconds = time.perf_counter() - start
        timings[name] = result.seconds
        report.results.append(result)
        logger.info("%s: price %.6f (SE %.2e) in %.2fs", name, result.price, result.std_err, result.seconds)
    timings["total"] = sum(timings.values())
    return report
