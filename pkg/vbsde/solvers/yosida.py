import logging
from dataclasses import dataclass
from typing import Optional
import torch

from ..core import ControlPair, Generator, SolutionPair, TerminalVariable
from ..errors import InconsistencyError, ResolventError
from ..regression import Regressor
from .picard import DEFAULT_MAX_ITER, DEFAULT_TOL, PicardReport, driver_of, solve_picard

logger = logging.getLogger(__name__)

# Below this damping the fixed-point map is treated as non-contractive
_MIN_DAMPING = 1.0 / 16.0
_NEWTON_BACKTRACKS = 10


@dataclass(frozen=True)
class YosidaParams:
    eps: float
    tol: float = 1e-10
    max_inner: int = 200

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"Inner tolerance must be positive, got {self.tol}")
        if self.max_inner < 1:
            raise ValueError(f"Need at least one inner iteration, got {self.max_inner}")

    def upper_bound(self, gen: Generator) -> float:
        return min(1.0, 1.0 / (2.0 * gen.growth_gamma))

    def validate(self, gen: Generator) -> None:
        bound = self.upper_bound(gen)
        if not 0.0 < self.eps < bound:
            raise ValueError(f"Yosida parameter must lie in (0, {bound:.6g}) for {gen.name}, got {self.eps}")
        if self.eps * gen.mono_M >= 1.0:
            raise ValueError(f"Resolvent of {gen.name} is not unique for eps={self.eps} (monotonicity constant {gen.mono_M})")


def _residual(gen: Generator, step: int, t: float, J: torch.Tensor, y: torch.Tensor, z: torch.Tensor,
              eps: float) -> torch.Tensor:
    return J - eps * gen(step, t, J, z) - y


def _newton_step(gen: Generator, step: int, t: float, J: torch.Tensor, y: torch.Tensor, z: torch.Tensor,
                 eps: float) -> torch.Tensor:
    """Newton direction for R(J) = J - eps F(t, J, z) - y with a per-path Jacobian from autograd."""
    with torch.enable_grad():
        J_var = J.detach().clone().requires_grad_(True)
        R = _residual(gen, step, t, J_var, y.detach(), z.detach(), eps)
        rows = []
        for j in range(R.shape[1]):
            (grad,) = torch.autograd.grad(R[:, j].sum(), J_var, retain_graph=j + 1 < R.shape[1])
            rows.append(grad)
    jacobian = torch.stack(rows, dim=1)  # (M, d, d); paths do not interact
    return torch.linalg.solve(jacobian, R.detach().unsqueeze(-1)).squeeze(-1)


def yosida_resolvent(gen: Generator, step: int, t: float, y: torch.Tensor, z: torch.Tensor,
                     params: YosidaParams) -> torch.Tensor:
    """
    Solve J - eps F(t, J, z) = y path by path.

    Damped fixed-point iteration J <- J + w (y + eps F(t, J, z) - J), halving w on
    the paths whose residual grows, with a switch to Newton once the map is
    clearly non-contractive. A last Newton step polishes the root when it helps.
    """
    params.validate(gen)
    eps = params.eps
    y = y.detach()
    z = z.detach()
    J = y.clone()
    R = _residual(gen, step, t, J, y, z, eps)
    res = R.norm(dim=-1)
    target = params.tol * eps * (1.0 + y.norm(dim=-1))
    damping = torch.ones_like(res)

    use_newton = False
    for _ in range(params.max_inner):
        if bool((res <= target).all()):
            break
        if use_newton:
            direction = _newton_step(gen, step, t, J, y, z, eps)
            scale = torch.ones_like(res)
            for _ in range(_NEWTON_BACKTRACKS):
                trial = J - scale.unsqueeze(-1) * direction
                trial_res = _residual(gen, step, t, trial, y, z, eps).norm(dim=-1)
                worse = trial_res > res
                if not bool(worse.any()):
                    break
                scale = torch.where(worse, scale / 2, scale)
            improved = trial_res <= res
        else:
            trial = J - damping.unsqueeze(-1) * R
            trial_res = _residual(gen, step, t, trial, y, z, eps).norm(dim=-1)
            improved = trial_res <= res
            damping = torch.where(improved, damping, damping / 2)
            if bool((damping < _MIN_DAMPING).any()):
                logger.debug("Resolvent fixed point not contractive at step %d, switching to Newton", step)
                use_newton = True
        J = torch.where(improved.unsqueeze(-1), trial, J)
        R = _residual(gen, step, t, J, y, z, eps)
        res = R.norm(dim=-1)

    # one Newton polish; exact for generators affine in y
    polished = J - _newton_step(gen, step, t, J, y, z, eps)
    polished_res = _residual(gen, step, t, polished, y, z, eps).norm(dim=-1)
    better = polished_res < res
    J = torch.where(better.unsqueeze(-1), polished, J)
    res = torch.where(better, polished_res, res)

    if not bool((res <= target).all()):
        worst = float(res.max().item())
        raise ResolventError(f"Resolvent did not converge in {params.max_inner} iterations "
                             f"(eps={eps}, residual {worst:.3e})", worst)
    return J


def yosida_generator(gen: Generator, step: int, t: float, y: torch.Tensor, z: torch.Tensor,
                     params: YosidaParams) -> torch.Tensor:
    """F_eps(t, y, z) = (y - J_eps)/eps, cross-checked against -F(t, J_eps, z)."""
    J = yosida_resolvent(gen, step, t, y, z, params)
    from_resolvent = (y.detach() - J) / params.eps
    from_generator = -gen(step, t, J, z.detach())
    gap = (from_resolvent - from_generator).norm(dim=-1)
    allowed = 10.0 * params.tol * (1.0 + y.detach().norm(dim=-1))
    if bool((gap > allowed).any()):
        raise InconsistencyError(
            f"Yosida formulas disagree by {float(gap.max().item()):.3e} at step {step} (eps={params.eps})"
        )
    return from_resolvent


class YosidaGenerator(Generator):
    """The Lipschitz driver -F_eps(t, y, z) = F(t, J_eps(t, y, z), z)."""

    def __init__(self, base: Generator, params: YosidaParams):
        params.validate(base)
        self.base = base
        self.params = params
        eps = params.eps
        positive_M = max(base.mono_M, 0.0)
        shrink = 1.0 - eps * base.growth_gamma
        linear = None
        if base.linear_structure is not None:
            r, theta = base.linear_structure
            factor = 1.0 + eps * r
            linear = (r / factor, None if theta is None else theta / factor)
        super().__init__(f"yosida({base.name}, eps={eps:g})",
                         mono_M=base.mono_M / (1.0 - eps * base.mono_M),
                         lip_L=base.lip_L / (1.0 - eps * positive_M),
                         growth_gamma=base.growth_gamma / shrink,
                         growth_eta=base.growth_eta / shrink,
                         linear_structure=linear)

    def forward(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return -yosida_generator(self.base, step, t, y, z, self.params)


@dataclass
class YosidaResult:
    pair: ControlPair  # (xi, -F_eps(., y^eps, z^eps))
    solution: SolutionPair
    theta_hat: Optional[float]
    report: PicardReport


def yosida_sequence(gen: Generator, xi: TerminalVariable, regressor: Regressor, params: YosidaParams,
                    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                    candidate_count: int = 8, seed: int = 0, with_theta: bool = True) -> YosidaResult:
    """
    Solve the eps-regularized BSDE and evaluate the original functional on its pair.

    Returns the pair (xi, -F_eps(., y^eps, z^eps)), its solution and the
    diagnostic Theta(eps) = sup of E over the default candidate family.
    """
    from ..variational import default_family, eval_E_sup

    regularized = YosidaGenerator(gen, params)
    solution, report = solve_picard(regularized, xi, regressor, tol=tol, max_iter=max_iter)
    pair = ControlPair(xi, driver_of(regularized, solution))

    theta_hat = None
    if with_theta:
        family = default_family(pair, xi, gen, regressor, count=candidate_count, seed=seed)
        theta_hat = eval_E_sup(pair, xi, gen, family, regressor)
        logger.info("Yosida eps=%g: Theta=%.4e", params.eps, theta_hat)
    return YosidaResult(pair=pair, solution=solution, theta_hat=theta_hat, report=report)
