import math
import pytest
import torch

from vbsde import (AffineGenerator, BasisSpec, CallClaim, DimensionError, ForwardClaim, LinearGenerator,
                   MarketModel, NonConvergenceError, Regressor, SingularVolatilityError, TerminalVariable, TimeGrid,
                   ZeroGenerator, closed_form_representation, discount_exponent, exp_transform,
                   hedge_from_representation, hedge_portfolio, linearity_check, simulate_assets, simulate_brownian,
                   solve_linear_closed_form, solve_picard, solve_test_bsde)


def test_test_bsde_constant_terminal(grid, span_regressor, make_pair):
    solution = solve_test_bsde(make_pair(grid, 2000, 1.5, 0.0), span_regressor)
    assert torch.all(solution.Y.values == 1.5)
    assert torch.all(solution.Z.values == 0.0)


def test_test_bsde_constant_driver(grid, span_regressor, make_pair):
    solution = solve_test_bsde(make_pair(grid, 2000, 0.0, 1.0), span_regressor)
    expected = (grid.horizon - grid.times).view(1, -1, 1).expand_as(solution.Y.values)
    assert torch.allclose(solution.Y.values, expected, atol=1e-12)


def test_test_bsde_brownian_terminal(grid, span_regressor, paths):
    from vbsde import AdaptedProcess, ControlPair

    pair = ControlPair(TerminalVariable(paths.W[:, -1]), AdaptedProcess.zeros(grid, 2000, 1))
    solution = solve_test_bsde(pair, span_regressor)
    assert (solution.Y.values - paths.W).pow(2).mean().item() < 1e-2
    z = solution.Z.values[:, :-1, 0, 0]
    assert z.mean().item() == pytest.approx(1.0, abs=3 * math.sqrt(2.0 / (2000 * grid.num_steps)) + 1e-2)


def test_test_bsde_checks_ensemble(grid, span_regressor, make_pair):
    with pytest.raises(DimensionError):
        solve_test_bsde(make_pair(grid, 10, 0.0, 0.0), span_regressor)


def test_linearity(span_regressor, random_pairs):
    p1, p2 = random_pairs(2, seed=4)
    assert linearity_check(p1, p2, 1.0, 0.0, span_regressor) == 0.0
    assert linearity_check(p1, p1, 0.5, 0.5, span_regressor) == 0.0
    assert linearity_check(p1, p2, 2.0, -1.0, span_regressor) <= 1e-10


def test_picard_zero_generator(grid, span_regressor):
    xi = TerminalVariable.constant(2.0, 2000)
    solution, report = solve_picard(ZeroGenerator(), xi, span_regressor)
    assert report.iterations == 1
    assert torch.all(solution.Y.values == 2.0)
    assert torch.all(solution.Z.values == 0.0)
    assert report.fixed_point_residual == 0.0


def test_picard_discounting(span_regressor):
    xi = TerminalVariable.constant(1.0, 2000)
    solution, report = solve_picard(LinearGenerator(0.05), xi, span_regressor, tol=1e-20)
    y0 = solution.Y.values[:, 0, 0]
    assert y0.mean().item() == pytest.approx(math.exp(-0.05), abs=1e-3)
    # the scheme is implicit in y: y_i = y_{i+1} / (1 + r dt)
    assert torch.allclose(y0, torch.full_like(y0, (1.0 + 0.05 * 0.1) ** -10), atol=1e-9)
    assert report.bound_holds
    assert report.residuals == sorted(report.residuals, reverse=True)


def test_picard_initializations_agree(span_regressor, paths):
    xi = TerminalVariable(torch.sin(paths.W[:, -1]))
    gen = LinearGenerator(0.1)
    zero, _ = solve_picard(gen, xi, span_regressor, tol=1e-20, init="zero")
    terminal, _ = solve_picard(gen, xi, span_regressor, tol=1e-20, init="terminal")
    assert torch.allclose(zero.Y.values, terminal.Y.values, atol=1e-7)
    with pytest.raises(ValueError):
        solve_picard(gen, xi, span_regressor, init="random")


def test_picard_non_convergence(span_regressor):
    xi = TerminalVariable.constant(1.0, 2000)
    with pytest.raises(NonConvergenceError) as info:
        solve_picard(LinearGenerator(0.05), xi, span_regressor, max_iter=1)
    assert len(info.value.residuals) == 1


def test_picard_transform_is_applied(span_regressor):
    xi = TerminalVariable.constant(1.0, 2000)
    # F(y) = y: the rescaled generator vanishes and the solution is e^{T - t}
    solution, report = solve_picard(AffineGenerator(a=1.0), xi, span_regressor, tol=1e-16)
    assert report.transform_alpha == pytest.approx(-1.0)
    expected = torch.exp(1.0 - span_regressor.grid.times).view(1, -1, 1).expand_as(solution.Y.values)
    assert torch.allclose(solution.Y.values, expected, atol=1e-10)


def test_transform_matches_direct_solve():
    grid = TimeGrid.uniform(0.2, 100)
    paths = simulate_brownian(grid, 200, 1, seed=2)
    regressor = Regressor(paths, BasisSpec(degree=1, ridge=0.0))
    xi = TerminalVariable.constant(1.0, 200)
    gen = AffineGenerator(a=2.0)
    transformed, _ = solve_picard(gen, xi, regressor, tol=1e-16)
    direct, _ = solve_picard(gen, xi, regressor, tol=1e-16, auto_transform=False)
    y_t, y_d = transformed.Y.values[:, 0, 0].mean().item(), direct.Y.values[:, 0, 0].mean().item()
    assert y_t == pytest.approx(math.exp(0.4), rel=1e-10)
    assert abs(y_t - y_d) / abs(y_d) < 1e-2


def test_exp_transform_of_linear_generator(grid):
    gen = LinearGenerator(0.05)
    xi = TerminalVariable.constant(1.0, 4)
    same_gen, same_xi = exp_transform(gen, xi, 0.0, 1.0)
    assert same_gen is gen and same_xi is xi
    t_gen, t_xi = exp_transform(gen, xi, 0.3, 1.0)
    y = torch.linspace(-1, 1, 4, dtype=torch.float64).view(4, 1)
    z = torch.zeros(4, 1, 1, dtype=torch.float64)
    assert torch.allclose(t_gen(3, grid.time(3), y, z), (0.3 - 0.05) * y)
    assert torch.allclose(t_xi.values, torch.full((4, 1), math.exp(-0.3), dtype=torch.float64))
    assert t_gen.mono_M == pytest.approx(0.25)
    assert t_gen.linear_structure[0] == pytest.approx(-0.25)


def test_closed_form_deterministic_claim(market, asset_regressor):
    xi = TerminalVariable.constant(2.0, asset_regressor.num_paths)
    solution = solve_linear_closed_form(market, xi, asset_regressor)
    times = asset_regressor.grid.times
    expected = (2.0 * torch.exp(-0.05 * (1.0 - times))).view(1, -1, 1).expand_as(solution.Y.values)
    assert torch.allclose(solution.Y.values, expected, atol=1e-12)
    assert torch.allclose(solution.Z.values, torch.zeros_like(solution.Z.values), atol=1e-12)


def test_closed_form_zero_claim(market, asset_regressor):
    xi = TerminalVariable.constant(0.0, asset_regressor.num_paths)
    solution = solve_linear_closed_form(market, xi, asset_regressor)
    assert torch.all(solution.Y.values == 0.0)
    assert torch.all(hedge_portfolio(market, solution).values == 0.0)


def test_closed_form_matches_picard():
    grid = TimeGrid.uniform(1.0, 20)
    market = MarketModel.create(r=0.05, sigma=0.2, s0=100.0, theta=[0.2])
    paths = simulate_brownian(grid, 20000, 1, seed=8)
    assets = simulate_assets(market, paths)
    regressor = Regressor(paths, BasisSpec(state="asset", degree=3), assets=assets)
    xi = CallClaim(100.0).terminal_value(assets)
    closed = solve_linear_closed_form(market, xi, regressor).Y.values[:, 0, 0].mean().item()
    picard, _ = solve_picard(market.generator(), xi, regressor)
    assert picard.Y.values[:, 0, 0].mean().item() == pytest.approx(closed, rel=0.03)


def test_forward_hedge(market):
    # a long first step keeps the t=0 slope estimate well conditioned
    grid = TimeGrid.from_points([0.0, 0.9, 1.0])
    paths = simulate_brownian(grid, 20000, 1, seed=4)
    assets = simulate_assets(market, paths)
    regressor = Regressor(paths, BasisSpec(state="asset", degree=1), assets=assets)
    xi = ForwardClaim(100.0).terminal_value(assets)
    solution = solve_linear_closed_form(market, xi, regressor)
    pi0 = hedge_portfolio(market, solution).values[:, 0, 0].mean().item()

    discounted = torch.exp(-discount_exponent(market, paths)[:, 1]) * solution.Y.values[:, 1, 0]
    per_path = (discounted - discounted.mean()) * paths.dW[:, 0, 0] / (grid.step(0) * 0.2)
    std_err = per_path.std().item() / math.sqrt(paths.num_paths)
    # holding one share replicates S_T - K
    assert abs(pi0 - 100.0) <= 4.0 * std_err + 0.5


def test_hedge_forms_agree(paths):
    market = MarketModel.create(r=0.03, sigma=0.25, s0=50.0, theta=[0.4])
    assets = simulate_assets(market, paths)
    regressor = Regressor(paths, BasisSpec(state="asset", degree=3), assets=assets)
    xi = CallClaim(50.0).terminal_value(assets)
    solution, U = closed_form_representation(market, xi, regressor)
    direct = hedge_portfolio(market, solution).values
    via_u = hedge_from_representation(market, solution.Y, U, regressor).values
    assert torch.allclose(direct, via_u, atol=1e-10)


def test_hedge_needs_invertible_volatility(paths):
    market = MarketModel.create(r=0.0, sigma=[[0.2], [0.3]], s0=[1.0, 1.0])
    xi = TerminalVariable.constant(1.0, paths.num_paths)
    regressor = Regressor(paths, BasisSpec(degree=2))
    with pytest.raises(SingularVolatilityError):
        solve_linear_closed_form(market, xi, regressor)
