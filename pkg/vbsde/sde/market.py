from dataclasses import dataclass
from typing import Optional, Sequence, Union
import torch

from ..core import DTYPE, AdaptedProcess, LinearGenerator, PathEnsemble
from ..errors import DimensionError, GridRangeError, InvalidPriceError, SingularVolatilityError

CONSISTENCY_TOL = 1e-10

ArrayLike = Union[float, Sequence[float], Sequence[Sequence[float]], torch.Tensor]


def _vector(value: ArrayLike, size: Optional[int] = None) -> torch.Tensor:
    vec = torch.as_tensor(value, dtype=DTYPE).reshape(-1)
    if size is not None and vec.numel() == 1 and size > 1:
        vec = vec.expand(size).clone()
    return vec


@dataclass(frozen=True, eq=False)
class MarketModel:
    """Complete market with constant coefficients.

    r is the short rate, b the appreciation rates (n,), sigma the volatility
    matrix (n, k), theta the risk premium (k,) with b - r 1 = sigma theta.
    """

    r: float
    b: torch.Tensor
    sigma: torch.Tensor
    theta: torch.Tensor
    s0: torch.Tensor

    def __post_init__(self):
        n, k = self.sigma.shape
        if self.b.numel() != n or self.s0.numel() != n or self.theta.numel() != k:
            raise DimensionError(
                f"Inconsistent market dimensions: sigma {list(self.sigma.shape)}, b {self.b.numel()}, "
                f"s0 {self.s0.numel()}, theta {self.theta.numel()}"
            )
        gap = (self.b - self.r - self.sigma @ self.theta).abs().max().item()
        if gap > CONSISTENCY_TOL:
            raise ValueError(f"Risk premium relation b - r1 = sigma theta violated by {gap:.3e}")

    @classmethod
    def create(cls, r: float, sigma: ArrayLike, s0: ArrayLike,
               b: Optional[ArrayLike] = None, theta: Optional[ArrayLike] = None) -> "MarketModel":
        """Build a market, deriving whichever of b and theta is missing."""
        sigma = torch.as_tensor(sigma, dtype=DTYPE)
        if sigma.dim() == 0:
            sigma = sigma.reshape(1, 1)
        elif sigma.dim() == 1:
            sigma = torch.diag(sigma)
        n, k = sigma.shape
        s0 = _vector(s0, n)

        if theta is not None:
            theta = _vector(theta, k)
            if b is None:
                b = r + sigma @ theta
            else:
                b = _vector(b, n)
        elif b is not None:
            b = _vector(b, n)
            # least squares covers the non-square case; __post_init__ checks the fit
            theta = torch.linalg.lstsq(sigma, (b - r).unsqueeze(-1)).solution.reshape(-1)
        else:
            b = torch.full((n,), float(r), dtype=DTYPE)
            theta = torch.zeros(k, dtype=DTYPE)
        return cls(r=float(r), b=b, sigma=sigma, theta=theta, s0=s0)

    @property
    def num_assets(self) -> int:
        return self.sigma.shape[0]

    @property
    def noise_dim(self) -> int:
        return self.sigma.shape[1]

    def generator(self) -> LinearGenerator:
        """Pricing generator F(t, y, z) = -r y - z theta of this market."""
        return LinearGenerator(self.r, self.theta)

    def sigma_transpose_inverse(self) -> torch.Tensor:
        n, k = self.sigma.shape
        if n != k:
            raise SingularVolatilityError(f"Hedging needs a square volatility matrix, got {n}x{k}")
        inverse, info = torch.linalg.inv_ex(self.sigma.T)
        if int(info.item()) != 0 or not bool(torch.isfinite(inverse).all()):
            raise SingularVolatilityError("Volatility matrix is singular")
        cond = torch.linalg.cond(self.sigma).item()
        if cond > 1e12:
            raise SingularVolatilityError(f"Volatility matrix is numerically singular (cond={cond:.3e})")
        return inverse


def simulate_assets(market: MarketModel, paths: PathEnsemble) -> AdaptedProcess:
    """
    Simulate asset prices with the log-Euler scheme, exact for constant coefficients:
    S_{i+1} = S_i exp((b - diag(sigma sigma*)/2) dt_i + sigma dW_i).

    Returns:
        y-type AdaptedProcess of shape (M, N+1, n)
    """
    if bool((market.s0 <= 0).any()):
        raise InvalidPriceError(f"Initial prices must be positive, got {market.s0.tolist()}")
    if market.noise_dim != paths.dim:
        raise DimensionError(f"Market is driven by {market.noise_dim} factors, paths have {paths.dim}")

    drift = market.b - 0.5 * (market.sigma ** 2).sum(dim=1)
    increments = paths.grid.dt.view(1, -1, 1) * drift.view(1, 1, -1) + paths.dW @ market.sigma.T
    log_s = torch.zeros(paths.num_paths, paths.grid.num_steps + 1, market.num_assets, dtype=DTYPE)
    log_s[:, 1:] = torch.cumsum(increments, dim=1)
    return AdaptedProcess(market.s0.view(1, 1, -1) * torch.exp(log_s), paths.grid)


def discount_exponent(market: MarketModel, paths: PathEnsemble) -> torch.Tensor:
    """Cumulative exponent A_i = sum_{l<i} (r + |theta|^2/2) dt_l + theta* dW_l, shape (M, N+1)."""
    rate = market.r + 0.5 * float(market.theta.pow(2).sum().item())
    increments = rate * paths.grid.dt.view(1, -1) + paths.dW @ market.theta
    exponent = torch.zeros(paths.num_paths, paths.grid.num_steps + 1, dtype=DTYPE)
    exponent[:, 1:] = torch.cumsum(increments, dim=1)
    return exponent


def discount_factor(market: MarketModel, paths: PathEnsemble, t_index: int, t_prime_index: int) -> torch.Tensor:
    """Pathwise pricing kernel V~_{t'}^{t} = exp(-(A_{t'} - A_t)), shape (M,)."""
    if not 0 <= t_index <= t_prime_index <= paths.grid.num_steps:
        raise GridRangeError(
            f"Need 0 <= t_index <= t'_index <= {paths.grid.num_steps}, got {t_index} and {t_prime_index}"
        )
    exponent = discount_exponent(market, paths)
    return torch.exp(-(exponent[:, t_prime_index] - exponent[:, t_index]))
