from typing import Optional
import torch

from ..errors import DegenerateStepError, GridRangeError
from .basis import Regressor


def cond_expect(target: torch.Tensor, step: int, regressor: Regressor) -> torch.Tensor:
    """
    Estimate E[target | F_{t_i}] by least squares on the step-i basis.

    Args:
        target: Per-path values, shape (M, ...) (e.g. y_{i+1} + f_i dt_i)
        step: Grid index i whose state forms the regressors
        regressor: Basis bound to the ensemble

    Returns:
        Adapted estimate with the same shape as target
    """
    if not 0 <= step <= regressor.grid.num_steps:
        raise GridRangeError(f"Step {step} outside 0..{regressor.grid.num_steps}")
    return regressor.project(step, target)


def martingale_z(y_next: torch.Tensor, step: int, regressor: Regressor,
                 dW: Optional[torch.Tensor] = None, dt: Optional[float] = None) -> torch.Tensor:
    """
    Estimate z_i = E[y_{i+1} dW_i^* | F_{t_i}] / dt_i.

    y_next has shape (M, d); the result has shape (M, d, k). The increment and
    step default to those of the regressor's ensemble.
    """
    if not 0 <= step < regressor.grid.num_steps:
        raise GridRangeError(f"Step {step} has no forward increment on a grid of {regressor.grid.num_steps} steps")
    dW = regressor.paths.dW[:, step] if dW is None else dW
    dt = regressor.grid.step(step) if dt is None else dt
    if dt <= 0:
        raise DegenerateStepError(f"Step size at index {step} is {dt}")
    # E[y_{i+1} dW_i | F_i] = E[(y_{i+1} - E_i y_{i+1}) dW_i | F_i]
    innovation = y_next - regressor.project(step, y_next)
    return regressor.project(step, innovation.unsqueeze(-1) * dW.unsqueeze(1) / dt)
