from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Type, Union
import math
import torch

from ..errors import DimensionError
from .grid import DTYPE, TimeGrid

# Absolute slack for the sampled hypothesis checks
PROBE_SLACK = 1e-9


@dataclass(frozen=True)
class ProbeResult:
    name: str
    passed: bool
    worst_ratio: float
    bound: float


class Generator(ABC):
    """The driver F(t, y, z) of a BSDE together with its structural constants.

    mono_M is the one-sided Lipschitz (monotonicity) constant in y, lip_L the
    Lipschitz constant in z, and |F(t, y, 0)| <= growth_eta + growth_gamma |y|.
    """

    def __init__(self, name: str, mono_M: float, lip_L: float, growth_gamma: float,
                 growth_eta: float = 0.0,
                 linear_structure: Optional[Tuple[float, Optional[torch.Tensor]]] = None):
        if lip_L < 0:
            raise ValueError(f"Lipschitz constant must be nonnegative, got {lip_L}")
        if growth_gamma <= 0:
            raise ValueError(f"Growth constant must be positive, got {growth_gamma}")
        self.name = name
        self.mono_M = float(mono_M)
        self.lip_L = float(lip_L)
        self.growth_gamma = float(growth_gamma)
        self.growth_eta = float(growth_eta)
        self.linear_structure = linear_structure

    @abstractmethod
    def forward(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """Evaluate F on a batch: y has shape (M, d), z has shape (M, d, k)."""
        pass

    def __call__(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        if y.dim() != 2 or z.dim() != 3 or z.shape[:2] != y.shape:
            raise DimensionError(f"Generator expects y (M, d) and z (M, d, k), got {list(y.shape)} and {list(z.shape)}")
        return self.forward(step, t, y, z)

    @property
    def transform_exponent(self) -> float:
        """M + L^2/2, the constant whose sign decides whether the functional inequality holds directly."""
        return self.mono_M + 0.5 * self.lip_L ** 2

    def on_process(self, grid: TimeGrid, Y: torch.Tensor, Z: torch.Tensor) -> torch.Tensor:
        """Evaluate F(t_i, Y_i, Z_i) for every grid point; Y is (M, N+1, d), Z is (M, N+1, d, k)."""
        return torch.stack([self(i, grid.time(i), Y[:, i], Z[:, i]) for i in range(grid.num_steps + 1)], dim=1)

    # Sampled checks of the structural hypotheses

    def _probe_points(self, grid: TimeGrid, dim: int, noise_dim: int, num_probes: int,
                      radius: float, seed: int):
        gen = torch.Generator().manual_seed(seed)
        steps = torch.randint(0, grid.num_steps + 1, (num_probes,), generator=gen)
        y1 = radius * (2 * torch.rand(num_probes, dim, generator=gen, dtype=DTYPE) - 1)
        y2 = radius * (2 * torch.rand(num_probes, dim, generator=gen, dtype=DTYPE) - 1)
        z1 = radius * (2 * torch.rand(num_probes, dim, noise_dim, generator=gen, dtype=DTYPE) - 1)
        z2 = radius * (2 * torch.rand(num_probes, dim, noise_dim, generator=gen, dtype=DTYPE) - 1)
        return steps, y1, y2, z1, z2

    def _per_probe(self, grid: TimeGrid, steps: torch.Tensor, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        rows = [self(int(s), grid.time(int(s)), y[j:j + 1], z[j:j + 1]) for j, s in enumerate(steps.tolist())]
        return torch.cat(rows, dim=0)

    def probe_monotonicity(self, grid: TimeGrid, dim: int = 1, noise_dim: int = 1, num_probes: int = 256,
                           radius: float = 1.0, seed: int = 0) -> ProbeResult:
        steps, y1, y2, z1, _ = self._probe_points(grid, dim, noise_dim, num_probes, radius, seed)
        diff = self._per_probe(grid, steps, y1, z1) - self._per_probe(grid, steps, y2, z1)
        dy = y1 - y2
        ratio = (diff * dy).sum(-1) / dy.pow(2).sum(-1).clamp_min(1e-300)
        worst = float(ratio.max().item())
        return ProbeResult("monotonicity", worst <= self.mono_M + PROBE_SLACK, worst, self.mono_M)

    def probe_lipschitz(self, grid: TimeGrid, dim: int = 1, noise_dim: int = 1, num_probes: int = 256,
                        radius: float = 1.0, seed: int = 0) -> ProbeResult:
        steps, y1, _, z1, z2 = self._probe_points(grid, dim, noise_dim, num_probes, radius, seed)
        diff = self._per_probe(grid, steps, y1, z1) - self._per_probe(grid, steps, y1, z2)
        dz = (z1 - z2).flatten(1).norm(dim=-1)
        ratio = diff.norm(dim=-1) / dz.clamp_min(1e-300)
        worst = float(ratio.max().item())
        return ProbeResult("lipschitz", worst <= self.lip_L + PROBE_SLACK, worst, self.lip_L)

    def probe_growth(self, grid: TimeGrid, dim: int = 1, noise_dim: int = 1, num_probes: int = 256,
                     radius: float = 1.0, seed: int = 0) -> ProbeResult:
        steps, y1, _, z1, _ = self._probe_points(grid, dim, noise_dim, num_probes, radius, seed)
        value = self._per_probe(grid, steps, y1, torch.zeros_like(z1)).norm(dim=-1)
        bound = self.growth_eta + self.growth_gamma * y1.norm(dim=-1)
        excess = float((value - bound).max().item())
        return ProbeResult("growth", excess <= PROBE_SLACK, excess, 0.0)

    def probe_linear_structure(self, grid: TimeGrid, dim: int = 1, noise_dim: int = 1, num_probes: int = 256,
                               radius: float = 1.0, seed: int = 0) -> ProbeResult:
        if self.linear_structure is None:
            return ProbeResult("linear_structure", True, 0.0, 0.0)
        r, theta = self.linear_structure
        steps, y1, _, z1, _ = self._probe_points(grid, dim, noise_dim, num_probes, radius, seed)
        expected = -r * y1
        if theta is not None:
            expected = expected - z1 @ theta.to(DTYPE)
        gap = float((self._per_probe(grid, steps, y1, z1) - expected).abs().max().item())
        return ProbeResult("linear_structure", gap <= PROBE_SLACK, gap, 0.0)


class ZeroGenerator(Generator):
    def __init__(self):
        super().__init__("zero", mono_M=0.0, lip_L=0.0, growth_gamma=1.0, linear_structure=(0.0, None))

    def forward(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return torch.zeros_like(y)


class AffineGenerator(Generator):
    """F(t, y, z) = a y + c, deterministic and free of z."""

    def __init__(self, a: float = 0.0, c: Union[float, Sequence[float]] = 0.0):
        self.a = float(a)
        self.c = torch.as_tensor(c, dtype=DTYPE)
        linear = (-self.a, None) if bool(torch.all(self.c == 0)) else None
        super().__init__("affine", mono_M=self.a, lip_L=0.0, growth_gamma=max(abs(self.a), 1e-12),
                         growth_eta=float(self.c.abs().max().item()) * math.sqrt(self.c.numel()),
                         linear_structure=linear)

    def forward(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return self.a * y + self.c


class LinearGenerator(Generator):
    """Pricing generator of a complete market: F(t, y, z) = -r y - z theta."""

    def __init__(self, r: float, theta: Union[float, Sequence[float], torch.Tensor] = 0.0):
        self.r = float(r)
        self.theta = torch.as_tensor(theta, dtype=DTYPE).reshape(-1)
        super().__init__("linear", mono_M=-self.r, lip_L=float(self.theta.norm().item()),
                         growth_gamma=max(abs(self.r), 1e-12), linear_structure=(self.r, self.theta))

    def forward(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        if z.shape[-1] != self.theta.numel():
            raise DimensionError(f"Risk premium has {self.theta.numel()} components, z has {z.shape[-1]}")
        return -self.r * y - z @ self.theta


class CubicGenerator(Generator):
    """F(t, y, z) = a y - c y^3 (componentwise), monotone with constant a for c >= 0."""

    def __init__(self, c: float = 1.0, a: float = 0.0, growth_gamma: float = 1.0):
        if c < 0:
            raise ValueError(f"Cubic coefficient must be nonnegative, got {c}")
        self.c = float(c)
        self.a = float(a)
        super().__init__("cubic", mono_M=self.a, lip_L=0.0, growth_gamma=growth_gamma)

    def forward(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return self.a * y - self.c * y.pow(3)


class SineGenerator(Generator):
    """F(t, y, z) = a y + b sin(y) + l mean_k tanh(z_{., k}); Lipschitz in both arguments."""

    def __init__(self, a: float = 0.0, b: float = 0.0, l: float = 0.0):
        self.a = float(a)
        self.b = float(b)
        self.l = float(l)
        super().__init__("sine", mono_M=self.a + abs(self.b), lip_L=abs(self.l),
                         growth_gamma=max(abs(self.a) + abs(self.b), 1e-12))

    def forward(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return self.a * y + self.b * torch.sin(y) + self.l * torch.tanh(z).mean(dim=-1)


# Add more generators as needed
generator_map: Dict[str, Type[Generator]] = {
    "zero": ZeroGenerator,
    "affine": AffineGenerator,
    "linear": LinearGenerator,
    "cubic": CubicGenerator,
    "sine": SineGenerator,
}
