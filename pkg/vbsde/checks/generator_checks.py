import math
import torch

from ..core import DTYPE
from ..errors import BSDEError
from ..solvers import YosidaParams, exp_transform, yosida_generator, yosida_resolvent
from .context import CheckContext, CheckResult


def _probe_row(ctx: CheckContext, name: str) -> CheckResult:
    probe = getattr(ctx.generator, f"probe_{name}")
    result = probe(ctx.grid, dim=ctx.xi.dim, noise_dim=ctx.noise_dim, seed=ctx.seed)
    return CheckResult(name, result.passed, result.worst_ratio, result.bound, f"generator {ctx.generator.name}")


def check_lipschitz(ctx: CheckContext) -> CheckResult:
    return _probe_row(ctx, "lipschitz")


def check_monotonicity(ctx: CheckContext) -> CheckResult:
    return _probe_row(ctx, "monotonicity")


def check_growth(ctx: CheckContext) -> CheckResult:
    return _probe_row(ctx, "growth")


def _probe_batch(ctx: CheckContext, num: int = 64):
    gen = torch.Generator().manual_seed(ctx.seed)
    y = 2 * torch.rand(num, ctx.xi.dim, generator=gen, dtype=DTYPE) - 1
    z = 2 * torch.rand(num, ctx.xi.dim, ctx.noise_dim, generator=gen, dtype=DTYPE) - 1
    return y, z


def check_resolvent(ctx: CheckContext) -> CheckResult:
    """J - eps F(J) = y to tolerance, both F_eps formulas agree, and the linear resolvent is exact."""
    gen = ctx.generator
    eps = min(ctx.yosida_eps, 0.5 * YosidaParams(eps=1.0).upper_bound(gen))
    params = YosidaParams(eps=eps, tol=ctx.yosida_tol, max_inner=ctx.yosida_max_inner)
    y, z = _probe_batch(ctx)
    step = ctx.grid.num_steps // 2
    t = ctx.grid.time(step)
    try:
        J = yosida_resolvent(gen, step, t, y, z, params)
        yosida_generator(gen, step, t, y, z, params)
    except BSDEError as exc:
        return CheckResult("resolvent", False, math.inf, params.tol, str(exc))

    scale = 1.0 + y.norm(dim=-1)
    residual = ((J - eps * gen(step, t, J, z) - y).norm(dim=-1) / (eps * scale)).max().item()
    worst, tolerance, detail = float(residual), params.tol, f"eps={eps:g}"
    if gen.linear_structure is not None:
        r, theta = gen.linear_structure
        exact = y if theta is None else y - eps * (z @ theta)
        exact = exact / (1.0 + eps * r)
        error = float(((J - exact).norm(dim=-1) / scale).max().item())
        detail += f", linear error {error:.2e}"
        if error > 1e-12:
            return CheckResult("resolvent", False, error, 1e-12, detail)
    return CheckResult("resolvent", worst <= tolerance, worst, tolerance, detail)


def check_transform(ctx: CheckContext) -> CheckResult:
    """alpha = 0 is the identity and F~(t, e^{-at} y, e^{-at} z) = e^{-at}(a y + F(t, y, z))."""
    gen = ctx.generator
    xi = ctx.xi
    alpha = -gen.transform_exponent if gen.transform_exponent > 0 else -1.0
    same_gen, same_xi = exp_transform(gen, xi, 0.0, ctx.grid.horizon)
    if same_gen is not gen or same_xi is not xi:
        return CheckResult("transform", False, math.inf, 0.0, "alpha=0 is not the identity")

    t_gen, t_xi = exp_transform(gen, xi, alpha, ctx.grid.horizon)
    y, z = _probe_batch(ctx)
    worst = float((t_xi.values - math.exp(-alpha * ctx.grid.horizon) * xi.values).abs().max().item())
    for step in (0, ctx.grid.num_steps // 2, ctx.grid.num_steps):
        t = ctx.grid.time(step)
        damp = math.exp(-alpha * t)
        expected = damp * (alpha * y + gen(step, t, y, z))
        got = t_gen(step, t, damp * y, damp * z)
        worst = max(worst, float(((got - expected).norm(dim=-1) / (1.0 + expected.norm(dim=-1))).max().item()))
    worst = max(worst, abs(t_gen.mono_M - gen.mono_M - alpha), abs(t_gen.lip_L - gen.lip_L))
    tolerance = 1e-10
    if gen.linear_structure is not None:
        probe = t_gen.probe_linear_structure(ctx.grid, dim=ctx.xi.dim, noise_dim=ctx.noise_dim, seed=ctx.seed)
        worst = max(worst, probe.worst_ratio)
    return CheckResult("transform", worst <= tolerance, worst, tolerance, f"alpha={alpha:g}")
