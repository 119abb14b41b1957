import logging
from typing import Tuple
import torch

from ..core import AdaptedProcess, ProcessKind, SolutionPair, TerminalVariable
from ..errors import DimensionError
from ..regression import Regressor, cond_expect, martingale_z
from ..sde import MarketModel, discount_exponent

logger = logging.getLogger(__name__)


def closed_form_representation(market: MarketModel, xi: TerminalVariable,
                               regressor: Regressor) -> Tuple[SolutionPair, AdaptedProcess]:
    """
    Price a claim in the linear market through the pricing kernel.

    V_t = E[V~_T^t xi | F_t]; the discounted value V~_t^0 V_t is a martingale with
    integrand U, and Z_t = (V~_t^0)^{-1} U_t + V_t theta^*.

    Returns:
        Tuple of (SolutionPair (V, Z), U as a z-type process)
    """
    # the market must be complete
    market.sigma_transpose_inverse()
    paths = regressor.paths
    grid = paths.grid
    N = grid.num_steps
    M, d, k = xi.num_paths, xi.dim, paths.dim
    if k != market.noise_dim:
        raise DimensionError(f"Market is driven by {market.noise_dim} factors, paths have {k}")

    exponent = discount_exponent(market, paths)
    kernel0 = torch.exp(-exponent)  # V~_t^0, shape (M, N+1)
    theta = market.theta

    Y = torch.zeros(M, N + 1, d, dtype=xi.values.dtype)
    U = torch.zeros(M, N + 1, d, k, dtype=xi.values.dtype)
    Z = torch.zeros(M, N + 1, d, k, dtype=xi.values.dtype)
    Y[:, N] = xi.values
    for i in range(N - 1, -1, -1):
        kernel = torch.exp(-(exponent[:, N] - exponent[:, i])).unsqueeze(-1)
        Y[:, i] = cond_expect(kernel * xi.values, i, regressor)
        U[:, i] = martingale_z(kernel0[:, i + 1].unsqueeze(-1) * Y[:, i + 1], i, regressor)
        Z[:, i] = U[:, i] / kernel0[:, i].view(-1, 1, 1) + Y[:, i].unsqueeze(-1) * theta.view(1, 1, -1)

    logger.info("Closed-form price %s", [round(v, 6) for v in Y[:, 0].mean(0).tolist()])
    solution = SolutionPair(AdaptedProcess(Y, grid), AdaptedProcess(Z, grid, ProcessKind.Z))
    return solution, AdaptedProcess(U, grid, ProcessKind.Z)


def solve_linear_closed_form(market: MarketModel, xi: TerminalVariable, regressor: Regressor) -> SolutionPair:
    """Y_{t_i} = E[V~_T^{t_i} xi | F_{t_i}] with Z from the martingale representation of the discounted value."""
    solution, _ = closed_form_representation(market, xi, regressor)
    return solution


def _portfolio(market: MarketModel, Z: torch.Tensor) -> torch.Tensor:
    # pi^* sigma = Z  <=>  sigma^* pi = Z^*
    if Z.shape[-2] != 1:
        raise DimensionError(f"Hedging is defined for scalar wealth processes, got d={Z.shape[-2]}")
    market.sigma_transpose_inverse()
    M, n_points, _, k = Z.shape
    rhs = Z.reshape(M * n_points, k).T
    pi = torch.linalg.solve(market.sigma.T, rhs).T
    return pi.reshape(M, n_points, market.num_assets)


def hedge_portfolio(market: MarketModel, solution: SolutionPair) -> AdaptedProcess:
    """Amounts held in each stock, pi_t = (sigma^*)^{-1} Z_t^*, shape (M, N+1, n)."""
    return AdaptedProcess(_portfolio(market, solution.Z.values), solution.grid)


def hedge_from_representation(market: MarketModel, Y: AdaptedProcess, U: AdaptedProcess,
                              regressor: Regressor) -> AdaptedProcess:
    """pi_t = (sigma^*)^{-1}((V~_t^0)^{-1} U_t + V_t theta)."""
    kernel0 = torch.exp(-discount_exponent(market, regressor.paths))
    Z = U.values / kernel0.view(kernel0.shape[0], -1, 1, 1) + Y.values.unsqueeze(-1) * market.theta.view(1, 1, 1, -1)
    Z[:, -1] = 0.0  # no increment after T
    return AdaptedProcess(_portfolio(market, Z), Y.grid)
