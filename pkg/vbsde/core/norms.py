import math
import torch

from ..errors import DimensionError, InvalidRadiusError
from .grid import TimeGrid
from .process import ControlPair


def left_sum(values: torch.Tensor, grid: TimeGrid) -> torch.Tensor:
    """Left-endpoint Riemann sum over time of a per-path quantity of shape (M, N+1)."""
    return (values[:, :-1] * grid.dt.view(1, -1)).sum(dim=1)


def standard_error(contributions: torch.Tensor) -> float:
    """Monte Carlo standard error of the mean of per-path contributions."""
    n = contributions.shape[0]
    if n < 2:
        return 0.0
    return float(contributions.std(unbiased=True).item()) / math.sqrt(n)


def b_norm(pair: ControlPair) -> float:
    """sqrt( E|eta|^2 + E sum_i |f_i|^2 dt_i ) on the sampled pair."""
    if pair.eta.num_paths != pair.f.num_paths:
        raise DimensionError(
            f"Terminal has {pair.eta.num_paths} paths, driver has {pair.f.num_paths}"
        )
    terminal = pair.eta.values.pow(2).sum(dim=-1)
    driver = left_sum(pair.f.values.pow(2).sum(dim=-1), pair.grid)
    return math.sqrt(float((terminal + driver).mean().item()))


def in_ball(pair: ControlPair, R: float) -> bool:
    """Membership of the closed, origin-centred ball of radius R."""
    if R <= 0:
        raise InvalidRadiusError(f"Radius must be positive, got {R}")
    return b_norm(pair) <= R
