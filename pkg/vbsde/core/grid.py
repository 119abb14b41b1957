from dataclasses import dataclass
from typing import Optional, Sequence, Union
import torch

from ..errors import DimensionError, InvalidShapeError

DTYPE = torch.float64


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Discretization 0 = t_0 < t_1 < ... < t_N = T of the horizon."""

    times: torch.Tensor

    def __post_init__(self):
        times = torch.as_tensor(self.times, dtype=DTYPE)
        if times.dim() != 1 or times.numel() < 2:
            raise InvalidShapeError(f"Time grid needs at least two points, got shape {list(times.shape)}")
        if times[0].item() != 0.0:
            raise ValueError(f"Time grid must start at 0, got {times[0].item()}")
        if not bool(torch.all(times[1:] - times[:-1] > 0)):
            raise ValueError("Time grid must be strictly increasing")
        object.__setattr__(self, "times", times)

    @classmethod
    def uniform(cls, horizon: float, num_steps: int) -> "TimeGrid":
        if horizon <= 0:
            raise ValueError(f"Horizon must be positive, got {horizon}")
        if num_steps < 1:
            raise ValueError(f"Number of steps must be at least 1, got {num_steps}")
        times = torch.linspace(0.0, horizon, num_steps + 1, dtype=DTYPE)
        # pin the last point so sums of steps hit T exactly
        times[-1] = horizon
        return cls(times)

    @classmethod
    def from_points(cls, points: Sequence[float]) -> "TimeGrid":
        return cls(torch.tensor(list(points), dtype=DTYPE))

    @property
    def num_steps(self) -> int:
        return self.times.numel() - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1].item())

    @property
    def dt(self) -> torch.Tensor:
        """Step sizes, shape (N,)."""
        return self.times[1:] - self.times[:-1]

    def step(self, i: int) -> float:
        return float((self.times[i + 1] - self.times[i]).item())

    def time(self, i: int) -> float:
        return float(self.times[i].item())

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or (
            self.times.shape == other.times.shape and bool(torch.equal(self.times, other.times))
        )


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """M sampled k-dimensional Brownian paths on a grid.

    W has shape (M, N+1, k) with W[:, 0] = 0, dW has shape (M, N, k).
    """

    grid: TimeGrid
    W: torch.Tensor
    dW: torch.Tensor
    seed: Optional[int] = None

    def __post_init__(self):
        if self.W.dim() != 3 or self.dW.dim() != 3:
            raise InvalidShapeError(
                f"Expected W of shape (M, N+1, k) and dW of shape (M, N, k), "
                f"got {list(self.W.shape)} and {list(self.dW.shape)}"
            )
        M, n_points, k = self.W.shape
        if n_points != self.grid.num_steps + 1:
            raise DimensionError(f"W has {n_points} time points, grid has {self.grid.num_steps + 1}")
        if list(self.dW.shape) != [M, n_points - 1, k]:
            raise DimensionError(f"dW shape {list(self.dW.shape)} does not match W shape {list(self.W.shape)}")

    @classmethod
    def from_increments(cls, grid: TimeGrid, dW: torch.Tensor, seed: Optional[int] = None) -> "PathEnsemble":
        dW = torch.as_tensor(dW, dtype=DTYPE)
        if dW.dim() == 2:
            dW = dW.unsqueeze(-1)
        W = torch.zeros(dW.shape[0], dW.shape[1] + 1, dW.shape[2], dtype=DTYPE)
        W[:, 1:] = torch.cumsum(dW, dim=1)
        return cls(grid=grid, W=W, dW=dW, seed=seed)

    @property
    def num_paths(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[2]

    def compatible(self, other: Union["PathEnsemble", None]) -> bool:
        return other is self or (
            other is not None
            and self.grid.same_as(other.grid)
            and self.W.shape == other.W.shape
            and bool(torch.equal(self.W, other.W))
        )
