from dataclasses import dataclass
from enum import Enum, auto
from typing import Callable, List, Optional, Union
import torch

from ..errors import DimensionError, InvalidShapeError
from .grid import DTYPE, PathEnsemble, TimeGrid

Scalar = Union[int, float]


class ProcessKind(Enum):
    Y = auto()  # values in R^d
    Z = auto()  # values in R^{d x k}


def _as_matrix(values: torch.Tensor, num_paths: int) -> torch.Tensor:
    values = torch.as_tensor(values, dtype=DTYPE)
    if values.dim() == 0:
        values = values.expand(num_paths).clone()
    if values.dim() == 1:
        values = values.unsqueeze(-1)
    return values


@dataclass(frozen=True, eq=False)
class TerminalVariable:
    """Terminal random vector, one value per path: shape (M, d)."""

    values: torch.Tensor

    def __post_init__(self):
        values = torch.as_tensor(self.values, dtype=DTYPE)
        if values.dim() == 1:
            values = values.unsqueeze(-1)
        if values.dim() != 2:
            raise InvalidShapeError(f"Terminal values must have shape (M, d), got {list(values.shape)}")
        if not bool(torch.isfinite(values).all()):
            raise ValueError("Terminal values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value: Union[Scalar, List[float]], num_paths: int) -> "TerminalVariable":
        row = torch.as_tensor(value, dtype=DTYPE).reshape(-1)
        return cls(row.expand(num_paths, row.numel()).clone())

    @classmethod
    def from_paths(cls, fn: Callable[[torch.Tensor], torch.Tensor], paths: PathEnsemble) -> "TerminalVariable":
        """Apply a deterministic map to the terminal Brownian value W_T."""
        return cls(_as_matrix(fn(paths.W[:, -1]), paths.num_paths))

    @classmethod
    def from_process(cls, fn: Callable[[torch.Tensor], torch.Tensor], process: "AdaptedProcess") -> "TerminalVariable":
        """Apply a deterministic map to the terminal value of a y-type process (e.g. S_T)."""
        return cls(_as_matrix(fn(process.values[:, -1]), process.num_paths))

    @property
    def num_paths(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __add__(self, other: "TerminalVariable") -> "TerminalVariable":
        return TerminalVariable(self.values + other.values)

    def __sub__(self, other: "TerminalVariable") -> "TerminalVariable":
        return TerminalVariable(self.values - other.values)

    def __mul__(self, scale: Scalar) -> "TerminalVariable":
        return TerminalVariable(self.values * scale)

    __rmul__ = __mul__

    def __neg__(self) -> "TerminalVariable":
        return TerminalVariable(-self.values)


@dataclass(frozen=True, eq=False)
class AdaptedProcess:
    """Process sampled on every grid point of every path.

    y-type values have shape (M, N+1, d), z-type values (M, N+1, d, k).
    A z-type value at step N is zero by convention: there is no increment after T.
    """

    values: torch.Tensor
    grid: TimeGrid
    kind: ProcessKind = ProcessKind.Y

    def __post_init__(self):
        values = torch.as_tensor(self.values, dtype=DTYPE)
        expected_dims = 3 if self.kind == ProcessKind.Y else 4
        if values.dim() == expected_dims - 1 and self.kind == ProcessKind.Y:
            values = values.unsqueeze(-1)
        if values.dim() != expected_dims:
            raise InvalidShapeError(
                f"{self.kind.name}-type process needs {expected_dims} dims, got shape {list(values.shape)}"
            )
        if values.shape[1] != self.grid.num_steps + 1:
            raise DimensionError(f"Process has {values.shape[1]} time points, grid has {self.grid.num_steps + 1}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: TimeGrid, num_paths: int, dim: int, kind: ProcessKind = ProcessKind.Y,
              noise_dim: Optional[int] = None) -> "AdaptedProcess":
        shape = [num_paths, grid.num_steps + 1, dim]
        if kind == ProcessKind.Z:
            if noise_dim is None:
                raise ValueError("z-type processes need the noise dimension k")
            shape.append(noise_dim)
        return cls(torch.zeros(shape, dtype=DTYPE), grid, kind)

    @classmethod
    def constant(cls, value: Union[Scalar, List[float]], grid: TimeGrid, num_paths: int) -> "AdaptedProcess":
        row = torch.as_tensor(value, dtype=DTYPE).reshape(-1)
        return cls(row.expand(num_paths, grid.num_steps + 1, row.numel()).clone(), grid)

    @classmethod
    def from_state(cls, fn: Callable[[float, torch.Tensor], torch.Tensor], paths: PathEnsemble) -> "AdaptedProcess":
        """Pointwise map of the time-i Brownian value: P[m][i] = fn(t_i, W[m][i])."""
        steps = [_as_matrix(fn(paths.grid.time(i), paths.W[:, i]), paths.num_paths)
                 for i in range(paths.grid.num_steps + 1)]
        return cls(torch.stack(steps, dim=1), paths.grid)

    @classmethod
    def from_history(cls, fn: Callable[[float, torch.Tensor], torch.Tensor], paths: PathEnsemble) -> "AdaptedProcess":
        """Map of the path history: P[m][i] = fn(t_i, W[m][0..i])."""
        steps = [_as_matrix(fn(paths.grid.time(i), paths.W[:, : i + 1]), paths.num_paths)
                 for i in range(paths.grid.num_steps + 1)]
        return cls(torch.stack(steps, dim=1), paths.grid)

    @classmethod
    def from_steps(cls, steps: List[torch.Tensor], grid: TimeGrid, kind: ProcessKind = ProcessKind.Y) -> "AdaptedProcess":
        return cls(torch.stack(steps, dim=1), grid, kind)

    @property
    def num_paths(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    def at(self, i: int) -> torch.Tensor:
        return self.values[:, i]

    def _check(self, other: "AdaptedProcess") -> None:
        if self.kind != other.kind or self.values.shape != other.values.shape or not self.grid.same_as(other.grid):
            raise DimensionError(
                f"Cannot combine processes of shapes {list(self.values.shape)} and {list(other.values.shape)}"
            )

    def __add__(self, other: "AdaptedProcess") -> "AdaptedProcess":
        self._check(other)
        return AdaptedProcess(self.values + other.values, self.grid, self.kind)

    def __sub__(self, other: "AdaptedProcess") -> "AdaptedProcess":
        self._check(other)
        return AdaptedProcess(self.values - other.values, self.grid, self.kind)

    def __mul__(self, scale: Scalar) -> "AdaptedProcess":
        return AdaptedProcess(self.values * scale, self.grid, self.kind)

    __rmul__ = __mul__

    def __neg__(self) -> "AdaptedProcess":
        return AdaptedProcess(-self.values, self.grid, self.kind)


@dataclass(frozen=True, eq=False)
class ControlPair:
    """Element (eta, f) of the space B: terminal vector plus adapted driver."""

    eta: TerminalVariable
    f: AdaptedProcess

    def __post_init__(self):
        if self.f.kind != ProcessKind.Y:
            raise InvalidShapeError("The driver of a control pair must be a y-type process")
        if self.eta.num_paths != self.f.num_paths or self.eta.dim != self.f.dim:
            raise DimensionError(
                f"Terminal shape {list(self.eta.values.shape)} does not match driver shape {list(self.f.values.shape)}"
            )

    @classmethod
    def zeros(cls, grid: TimeGrid, num_paths: int, dim: int) -> "ControlPair":
        return cls(TerminalVariable(torch.zeros(num_paths, dim, dtype=DTYPE)),
                   AdaptedProcess.zeros(grid, num_paths, dim))

    @property
    def grid(self) -> TimeGrid:
        return self.f.grid

    @property
    def num_paths(self) -> int:
        return self.f.num_paths

    @property
    def dim(self) -> int:
        return self.f.dim

    def with_driver(self, f: AdaptedProcess) -> "ControlPair":
        return ControlPair(self.eta, f)

    def __add__(self, other: "ControlPair") -> "ControlPair":
        return ControlPair(self.eta + other.eta, self.f + other.f)

    def __sub__(self, other: "ControlPair") -> "ControlPair":
        return ControlPair(self.eta - other.eta, self.f - other.f)

    def __mul__(self, scale: Scalar) -> "ControlPair":
        return ControlPair(self.eta * scale, self.f * scale)

    __rmul__ = __mul__

    def __neg__(self) -> "ControlPair":
        return ControlPair(-self.eta, -self.f)


@dataclass(frozen=True, eq=False)
class SolutionPair:
    """Adapted pair (Y, Z) on one grid and one ensemble."""

    Y: AdaptedProcess
    Z: AdaptedProcess

    def __post_init__(self):
        if self.Y.kind != ProcessKind.Y or self.Z.kind != ProcessKind.Z:
            raise InvalidShapeError("SolutionPair expects a y-type Y and a z-type Z")
        if not self.Y.grid.same_as(self.Z.grid) or self.Y.num_paths != self.Z.num_paths:
            raise DimensionError("Y and Z must share one grid and one ensemble")

    @property
    def grid(self) -> TimeGrid:
        return self.Y.grid

    def scaled_in_time(self, factors: torch.Tensor) -> "SolutionPair":
        """Multiply both components by a per-time factor of shape (N+1,)."""
        factors = factors.to(DTYPE)
        return SolutionPair(
            AdaptedProcess(self.Y.values * factors.view(1, -1, 1), self.Y.grid),
            AdaptedProcess(self.Z.values * factors.view(1, -1, 1, 1), self.Z.grid, ProcessKind.Z),
        )
