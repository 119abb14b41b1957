import torch

from ..core import AdaptedProcess, ControlPair, ProcessKind, SolutionPair
from ..errors import DimensionError
from ..regression import Regressor, cond_expect, martingale_z


def _check_pair(pair: ControlPair, regressor: Regressor) -> None:
    if pair.num_paths != regressor.num_paths or not pair.grid.same_as(regressor.grid):
        raise DimensionError(
            f"Pair with {pair.num_paths} paths on {pair.grid.num_steps} steps does not live on the "
            f"regressor's ensemble ({regressor.num_paths} paths, {regressor.grid.num_steps} steps)"
        )


def solve_test_bsde(pair: ControlPair, regressor: Regressor) -> SolutionPair:
    """
    Solve y_t = eta + int_t^T f ds - int_t^T z dW backward on the grid.

    y_N = eta, z_i = E[y_{i+1} dW_i^* | F_i] / dt_i, y_i = E[y_{i+1} + f_i dt_i | F_i].
    The result defines the linear maps C(eta, f) = y and D(eta, f) = z.
    """
    _check_pair(pair, regressor)
    grid = regressor.grid
    N = grid.num_steps
    M, d, k = pair.num_paths, pair.dim, regressor.paths.dim
    f = pair.f.values

    y_steps = [None] * (N + 1)
    z_steps = [None] * (N + 1)
    y_steps[N] = pair.eta.values
    z_steps[N] = torch.zeros(M, d, k, dtype=f.dtype)
    for i in range(N - 1, -1, -1):
        y_next = y_steps[i + 1]
        z_steps[i] = martingale_z(y_next, i, regressor)
        y_steps[i] = cond_expect(y_next + f[:, i] * grid.step(i), i, regressor)

    return SolutionPair(AdaptedProcess.from_steps(y_steps, grid),
                        AdaptedProcess.from_steps(z_steps, grid, ProcessKind.Z))


def martingale_increments(pair: ControlPair, solution: SolutionPair) -> torch.Tensor:
    """Realized increments dM_i = y_{i+1} - y_i + f_i dt_i of the scheme, shape (M, N, d)."""
    y = solution.Y.values
    dt = pair.grid.dt.view(1, -1, 1)
    return y[:, 1:] - y[:, :-1] + pair.f.values[:, :-1] * dt


def linearity_check(pair1: ControlPair, pair2: ControlPair, a: float, b: float, regressor: Regressor) -> float:
    """sup over steps and paths of |C(a p1 + b p2) - a C(p1) - b C(p2)|."""
    combined = solve_test_bsde(a * pair1 + b * pair2, regressor).Y.values
    separate = a * solve_test_bsde(pair1, regressor).Y.values + b * solve_test_bsde(pair2, regressor).Y.values
    return float((combined - separate).abs().max().item())
