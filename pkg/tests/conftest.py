import pytest
import torch

from vbsde import (BasisSpec, ControlPair, MarketModel, Regressor, TimeGrid, random_candidates,
                   simulate_assets, simulate_brownian)


@pytest.fixture
def grid():
    return TimeGrid.uniform(1.0, 10)


@pytest.fixture
def paths(grid):
    return simulate_brownian(grid, 2000, 1, seed=11)


@pytest.fixture
def span_regressor(paths):
    # no ridge: pairs drawn from this basis make the discrete identities exact
    return Regressor(paths, BasisSpec(state="brownian", degree=3, ridge=0.0))


@pytest.fixture
def market():
    return MarketModel.create(r=0.05, sigma=0.2, s0=100.0)


@pytest.fixture
def asset_regressor(market, paths):
    return Regressor(paths, BasisSpec(state="asset", degree=3), assets=simulate_assets(market, paths))


@pytest.fixture
def random_pairs(span_regressor):
    def draw(count: int, seed: int = 0, radius: float = 1.0):
        return random_candidates(span_regressor, 1, count, radius, seed)
    return draw


def constant_pair(grid, num_paths, eta: float, f: float) -> ControlPair:
    from vbsde import AdaptedProcess, TerminalVariable

    return ControlPair(TerminalVariable.constant(eta, num_paths), AdaptedProcess.constant(f, grid, num_paths))


@pytest.fixture
def make_pair():
    return constant_pair


def black_scholes_call(s0: float, strike: float, r: float, sigma: float, T: float):
    normal = torch.distributions.Normal(torch.tensor(0.0, dtype=torch.float64), torch.tensor(1.0, dtype=torch.float64))
    d1 = (torch.log(torch.tensor(s0 / strike, dtype=torch.float64)) + (r + 0.5 * sigma ** 2) * T) / (sigma * T ** 0.5)
    d2 = d1 - sigma * T ** 0.5
    price = s0 * normal.cdf(d1) - strike * torch.exp(torch.tensor(-r * T, dtype=torch.float64)) * normal.cdf(d2)
    return float(price), float(normal.cdf(d1))
