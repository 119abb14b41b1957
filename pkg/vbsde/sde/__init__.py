from .brownian import simulate_brownian, path_stream
from .market import MarketModel, simulate_assets, discount_exponent, discount_factor
