import logging
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Dict, List, Optional, Tuple
import torch

from ..core import DTYPE, AdaptedProcess, PathEnsemble
from ..errors import DimensionError, InvalidShapeError, SingularRegressionError

logger = logging.getLogger(__name__)

# Columns whose sample std falls below this (relative) level are treated as constants
_FLAT_COLUMN = 1e-12
# Cholesky pivots below this fraction of the largest one mean a rank-deficient design
_RANK_TOL = 1e-13


def _brownian_state(paths: PathEnsemble, assets: Optional[AdaptedProcess]) -> torch.Tensor:
    return paths.W


def _asset_state(paths: PathEnsemble, assets: Optional[AdaptedProcess]) -> torch.Tensor:
    if assets is None:
        raise ValueError("The 'asset' regression state needs simulated asset prices")
    return assets.values


def _log_asset_state(paths: PathEnsemble, assets: Optional[AdaptedProcess]) -> torch.Tensor:
    return torch.log(_asset_state(paths, assets))


def _no_state(paths: PathEnsemble, assets: Optional[AdaptedProcess]) -> torch.Tensor:
    return torch.zeros(paths.num_paths, paths.grid.num_steps + 1, 0, dtype=DTYPE)


# Add more state extractors as needed
state_map: Dict[str, Callable[[PathEnsemble, Optional[AdaptedProcess]], torch.Tensor]] = {
    "brownian": _brownian_state,
    "asset": _asset_state,
    "log_asset": _log_asset_state,
    "none": _no_state,
}


@dataclass(frozen=True)
class BasisSpec:
    """Polynomial regression basis: all monomials up to `degree` in the state, plus a constant.

    ridge=None resolves to 1e-8 * M once the ensemble size is known. The columns
    are standardized, so that default shrinks in-span fits by about 1e-8
    relative; targets in the span are reproduced to round-off only with ridge=0.
    """

    state: str = "brownian"
    degree: int = 3
    ridge: Optional[float] = None

    def __post_init__(self):
        if self.state not in state_map:
            raise ValueError(f"Unknown regression state '{self.state}', expected one of {sorted(state_map)}")
        if self.degree < 0:
            raise ValueError(f"Polynomial degree must be nonnegative, got {self.degree}")
        if self.ridge is not None and self.ridge < 0:
            raise ValueError(f"Ridge parameter must be nonnegative, got {self.ridge}")

    def resolved_ridge(self, num_paths: int) -> float:
        return 1e-8 * num_paths if self.ridge is None else float(self.ridge)


def monomial_exponents(state_dim: int, degree: int) -> List[Tuple[int, ...]]:
    """Index tuples of every monomial of total degree 1..degree in state_dim variables."""
    monomials = []
    for p in range(1, degree + 1):
        monomials.extend(combinations_with_replacement(range(state_dim), p))
    return monomials


@dataclass
class StepDesign:
    """Standardized design at one grid step and the factor of its normal equations."""

    columns: torch.Tensor  # (M, q) centred, unit-variance, non-constant features
    factor: Optional[torch.Tensor] = None  # Cholesky factor of columns^T columns + ridge I
    pinv: Optional[torch.Tensor] = None  # fallback when the factorization fails

    def coefficients(self, centred_target: torch.Tensor) -> torch.Tensor:
        rhs = self.columns.T @ centred_target
        if self.factor is not None:
            return torch.cholesky_solve(rhs, self.factor)
        return self.pinv @ rhs


@dataclass
class Regressor:
    """
    Least-squares projection onto polynomials of the time-i state of one ensemble.

    The design and its factorization at each step are built on first use and
    reused by every later projection on the same ensemble.
    """

    paths: PathEnsemble
    spec: BasisSpec = field(default_factory=BasisSpec)
    assets: Optional[AdaptedProcess] = None
    states: Optional[torch.Tensor] = None
    _cache: Dict[int, StepDesign] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.states is None:
            self.states = state_map[self.spec.state](self.paths, self.assets)
        self.states = torch.as_tensor(self.states, dtype=DTYPE)
        if self.states.dim() == 2:
            self.states = self.states.unsqueeze(-1)
        if self.states.shape[:2] != (self.paths.num_paths, self.paths.grid.num_steps + 1):
            raise DimensionError(
                f"State of shape {list(self.states.shape)} does not cover "
                f"{self.paths.num_paths} paths and {self.paths.grid.num_steps + 1} grid points"
            )
        self.monomials = monomial_exponents(self.states.shape[-1], self.spec.degree)
        # guard against overfitting: at least ten paths per basis function
        if 10 * self.num_basis > self.paths.num_paths:
            raise InvalidShapeError(
                f"{self.num_basis} basis functions need at least {10 * self.num_basis} paths, "
                f"got {self.paths.num_paths}"
            )
        self.ridge = self.spec.resolved_ridge(self.paths.num_paths)

    @property
    def grid(self):
        return self.paths.grid

    @property
    def num_paths(self) -> int:
        return self.paths.num_paths

    @property
    def num_basis(self) -> int:
        return 1 + len(self.monomials)

    def features(self, i: int) -> torch.Tensor:
        """Raw monomial features of the step-i state, shape (M, num_basis - 1)."""
        state = self.states[:, i]
        if not self.monomials:
            return torch.zeros(self.num_paths, 0, dtype=DTYPE)
        return torch.stack([state[:, list(idx)].prod(dim=1) for idx in self.monomials], dim=1)

    def design(self, i: int) -> StepDesign:
        if i not in self._cache:
            self._cache[i] = self._build_design(i)
        return self._cache[i]

    def _build_design(self, i: int) -> StepDesign:
        raw = self.features(i)
        mean = raw.mean(dim=0, keepdim=True)
        std = raw.std(dim=0, unbiased=False, keepdim=True)
        keep = (std > _FLAT_COLUMN * (1.0 + mean.abs())).reshape(-1)
        columns = (raw[:, keep] - mean[:, keep]) / std[:, keep]
        if columns.shape[1] == 0:
            return StepDesign(columns=columns)

        gram = columns.T @ columns
        gram = gram + self.ridge * torch.eye(gram.shape[0], dtype=DTYPE)
        factor, info = torch.linalg.cholesky_ex(gram)
        pivots = torch.diagonal(factor).pow(2)
        if int(info.item()) == 0 and pivots.min() > _RANK_TOL * pivots.max():
            return StepDesign(columns=columns, factor=factor)

        if self.ridge == 0:
            raise SingularRegressionError(
                f"Rank-deficient design at step {i} with zero ridge; set a positive ridge parameter"
            )
        logger.warning("Cholesky factorization failed at step %d, falling back to a pseudo-inverse", i)
        return StepDesign(columns=columns, pinv=torch.linalg.pinv(gram, hermitian=True))

    def project(self, i: int, target: torch.Tensor) -> torch.Tensor:
        """Fitted values of the regression of target (M, ...) on the step-i basis."""
        if target.shape[0] != self.num_paths:
            raise DimensionError(f"Target has {target.shape[0]} paths, regressor has {self.num_paths}")
        if not bool(torch.isfinite(target).all()):
            raise ValueError(f"Regression target at step {i} is not finite")
        flat = target.reshape(self.num_paths, -1)
        # the intercept is fitted unpenalized through centring
        level = flat.mean(dim=0, keepdim=True)
        design = self.design(i)
        if design.columns.shape[1] == 0:
            fitted = level.expand_as(flat)
        else:
            fitted = level + design.columns @ design.coefficients(flat - level)
        return fitted.reshape(target.shape)
