import math
import pytest
import torch

from vbsde import (DimensionError, GridRangeError, InvalidPriceError, InvalidShapeError, MarketModel,
                   SingularVolatilityError, TimeGrid, discount_exponent, discount_factor, path_stream,
                   simulate_assets, simulate_brownian)


def test_brownian_is_reproducible(grid):
    a = simulate_brownian(grid, 300, 2, seed=5)
    b = simulate_brownian(grid, 300, 2, seed=5)
    assert torch.equal(a.W, b.W)
    c = simulate_brownian(grid, 300, 2, seed=6)
    assert not torch.equal(a.W, c.W)


def test_brownian_independent_of_workers(grid):
    serial = simulate_brownian(grid, 250, 1, seed=9, n_jobs=1, block_size=64)
    parallel = simulate_brownian(grid, 250, 1, seed=9, n_jobs=2, block_size=64)
    assert torch.equal(serial.dW, parallel.dW)


def test_brownian_draws_are_addressed_per_path(grid):
    paths = simulate_brownian(grid, 20, 2, seed=42)
    normals = torch.from_numpy(path_stream(42, 17).standard_normal((grid.num_steps, 2)))
    expected = normals * grid.dt.sqrt().view(-1, 1)
    assert torch.allclose(paths.dW[17], expected, atol=1e-15)
    # a larger ensemble extends a smaller one path by path
    bigger = simulate_brownian(grid, 40, 2, seed=42)
    assert torch.equal(bigger.dW[:20], paths.dW)


def test_brownian_moments():
    grid = TimeGrid.uniform(1.0, 4)
    paths = simulate_brownian(grid, 20000, 1, seed=1)
    assert torch.all(paths.W[:, 0] == 0)
    terminal = paths.W[:, -1, 0]
    assert abs(terminal.mean().item()) < 0.03
    assert terminal.var().item() == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("M, k", [(0, 1), (5, 0)])
def test_brownian_rejects_empty(grid, M, k):
    with pytest.raises(InvalidShapeError):
        simulate_brownian(grid, M, k, seed=0)


def test_market_derives_risk_premium():
    market = MarketModel.create(r=0.05, sigma=0.2, s0=100.0, b=[0.1])
    assert market.theta.tolist() == pytest.approx([0.25])
    market = MarketModel.create(r=0.05, sigma=[0.2, 0.4], s0=[100.0, 50.0], theta=[0.5, 0.25])
    assert market.b.tolist() == pytest.approx([0.15, 0.15])
    assert market.num_assets == 2 and market.noise_dim == 2
    assert market.generator().r == 0.05


def test_market_rejects_inconsistent_premium():
    with pytest.raises(ValueError):
        MarketModel.create(r=0.05, sigma=0.2, s0=100.0, b=[0.1], theta=[0.5])


def test_singular_volatility():
    market = MarketModel.create(r=0.0, sigma=[[0.2, 0.2], [0.2, 0.2]], s0=[1.0, 1.0])
    with pytest.raises(SingularVolatilityError):
        market.sigma_transpose_inverse()
    rectangular = MarketModel.create(r=0.0, sigma=[[0.2], [0.3]], s0=[1.0, 1.0])
    with pytest.raises(SingularVolatilityError):
        rectangular.sigma_transpose_inverse()


def test_assets_are_martingales_after_discounting(market):
    grid = TimeGrid.uniform(1.0, 5)
    paths = simulate_brownian(grid, 20000, 1, seed=3)
    assets = simulate_assets(market, paths)
    assert torch.all(assets.values[:, 0] == 100.0)
    discounted = math.exp(-0.05) * assets.values[:, -1, 0]
    se = discounted.std().item() / math.sqrt(20000)
    assert abs(discounted.mean().item() - 100.0) < 4 * se


def test_assets_validation(grid, paths):
    with pytest.raises(InvalidPriceError):
        simulate_assets(MarketModel.create(r=0.05, sigma=0.2, s0=-1.0), paths)
    two_factor = MarketModel.create(r=0.05, sigma=[0.2, 0.3], s0=[1.0, 1.0])
    with pytest.raises(DimensionError):
        simulate_assets(two_factor, paths)


def test_discount_factor_without_premium(market, paths):
    factor = discount_factor(market, paths, 0, paths.grid.num_steps)
    assert torch.allclose(factor, torch.full_like(factor, math.exp(-0.05)), atol=1e-12)
    assert torch.all(discount_factor(market, paths, 3, 3) == 1.0)
    with pytest.raises(GridRangeError):
        discount_factor(market, paths, 4, 2)


def test_discount_exponent_with_premium(paths):
    market = MarketModel.create(r=0.05, sigma=0.2, s0=100.0, theta=[0.5])
    exponent = discount_exponent(market, paths)
    expected = (0.05 + 0.125) * paths.grid.times.view(1, -1) + 0.5 * paths.W[..., 0]
    assert torch.allclose(exponent, expected, atol=1e-12)
