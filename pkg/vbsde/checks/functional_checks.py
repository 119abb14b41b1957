import math

from ..core import ControlPair
from ..errors import BSDEError
from ..solvers import driver_of, linearity_check, solve_picard
from ..variational import (build_candidates, default_family, driver_match_residual, energy_identity, eval_E_pair,
                           eval_E_sup)
from .context import CheckContext, CheckResult

ENERGY_TOL = 1e-8
CONVEXITY_SLACK = 1e-8
LINEARITY_TOL = 1e-10


def check_linearity(ctx: CheckContext) -> CheckResult:
    p1, p2 = ctx.random_pairs(2, offset=1)
    residual = linearity_check(p1, p2, 2.0, -1.0, ctx.span_regressor)
    return CheckResult("linearity", residual <= LINEARITY_TOL, residual, LINEARITY_TOL, "a=2, b=-1")


def check_energy_identity(ctx: CheckContext) -> CheckResult:
    pairs = ctx.random_pairs(2 * ctx.num_pairs, offset=2)
    worst = max(energy_identity(a, b, ctx.span_regressor).relative for a, b in zip(pairs[::2], pairs[1::2]))
    return CheckResult("energy_identity", worst <= ENERGY_TOL, worst, ENERGY_TOL,
                       f"{ctx.num_pairs} random pairs, relative residual")


def check_convexity(ctx: CheckContext) -> CheckResult:
    """Midpoint convexity of E_comp for fixed competitors."""
    pairs = ctx.random_pairs(3 * ctx.num_pairs, offset=3)
    worst = -math.inf
    for comp, a, b in zip(pairs[::3], pairs[1::3], pairs[2::3]):
        mid = 0.5 * a + 0.5 * b
        excess = (eval_E_pair(comp, mid, ctx.xi, ctx.generator, ctx.span_regressor)
                  - 0.5 * (eval_E_pair(comp, a, ctx.xi, ctx.generator, ctx.span_regressor)
                           + eval_E_pair(comp, b, ctx.xi, ctx.generator, ctx.span_regressor)))
        worst = max(worst, excess)
    return CheckResult("convexity", worst <= CONVEXITY_SLACK, worst, CONVEXITY_SLACK,
                       f"{ctx.num_pairs} random triples, E(mid) - mean(E)")


def check_nonnegativity(ctx: CheckContext) -> CheckResult:
    worst = math.inf
    for j, pair in enumerate(ctx.random_pairs(max(1, ctx.num_pairs // 4), offset=4)):
        family = build_candidates(pair, ctx.xi, ctx.generator, 1.0, ctx.candidate_count, ctx.seed + j,
                                  ctx.span_regressor)
        worst = min(worst, eval_E_sup(pair, ctx.xi, ctx.generator, family, ctx.span_regressor))
    return CheckResult("nonnegativity", worst >= 0.0, worst, 0.0, "smallest E_hat over random pairs")


def check_equivalence(ctx: CheckContext) -> CheckResult:
    """At the Picard solution E_hat is within Monte Carlo noise of zero and the driver matches."""
    try:
        solution, report = solve_picard(ctx.generator, ctx.xi, ctx.regressor, tol=ctx.picard_tol,
                                        max_iter=ctx.picard_max_iter)
    except BSDEError as exc:
        return CheckResult("equivalence", False, math.inf, 0.0, str(exc))
    pair = ControlPair(ctx.xi, driver_of(ctx.generator, solution))
    family = default_family(pair, ctx.xi, ctx.generator, ctx.regressor, count=ctx.candidate_count, seed=ctx.seed)
    scores = family.evaluate(pair, ctx.xi, ctx.generator, ctx.regressor)
    threshold = max(3.0 * scores.std_error, 1e-3)
    match = driver_match_residual(pair, ctx.generator, ctx.regressor)
    constant = max(1.0, abs(ctx.generator.mono_M), ctx.generator.lip_L)
    match_tol = 10.0 * ctx.picard_tol * ctx.grid.horizon * constant ** 2
    passed = 0.0 <= scores.value <= threshold and match <= match_tol
    return CheckResult("equivalence", passed, scores.value, threshold,
                       f"driver mismatch {match:.2e} (tol {match_tol:.1e}), {report.iterations} Picard iterations")
