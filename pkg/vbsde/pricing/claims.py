import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional, Type
import sympy
import torch
from sympy.parsing.sympy_parser import parse_expr

from ..core import AdaptedProcess, TerminalVariable
from ..errors import ConfigError, DimensionError

logger = logging.getLogger(__name__)


class Claim(ABC):
    """European claim paying a function of the terminal asset prices S_T."""

    def __init__(self, name: str):
        self.name = name

    @abstractmethod
    def payoff(self, terminal_prices: torch.Tensor) -> torch.Tensor:
        """Map S_T of shape (M, n) to payoffs of shape (M,)."""
        pass

    def terminal_value(self, assets: AdaptedProcess) -> TerminalVariable:
        xi = TerminalVariable.from_process(self.payoff, assets)
        if bool((xi.values < 0).any()):
            share = float((xi.values < 0).any(dim=-1).double().mean().item())
            logger.warning("Claim '%s' pays a negative amount on %.2f%% of the paths", self.name, 100 * share)
        return xi


class _SingleAssetClaim(Claim):
    def __init__(self, name: str, strike: float, asset: int = 0):
        super().__init__(name)
        self.strike = float(strike)
        self.asset = int(asset)

    def _price(self, terminal_prices: torch.Tensor) -> torch.Tensor:
        if not 0 <= self.asset < terminal_prices.shape[1]:
            raise DimensionError(f"Claim refers to asset {self.asset}, market has {terminal_prices.shape[1]}")
        return terminal_prices[:, self.asset]


class CallClaim(_SingleAssetClaim):
    def __init__(self, strike: float, asset: int = 0):
        super().__init__("call", strike, asset)

    def payoff(self, terminal_prices: torch.Tensor) -> torch.Tensor:
        return torch.clamp(self._price(terminal_prices) - self.strike, min=0.0)


class PutClaim(_SingleAssetClaim):
    def __init__(self, strike: float, asset: int = 0):
        super().__init__("put", strike, asset)

    def payoff(self, terminal_prices: torch.Tensor) -> torch.Tensor:
        return torch.clamp(self.strike - self._price(terminal_prices), min=0.0)


class ForwardClaim(_SingleAssetClaim):
    def __init__(self, strike: float, asset: int = 0):
        super().__init__("forward", strike, asset)

    def payoff(self, terminal_prices: torch.Tensor) -> torch.Tensor:
        return self._price(terminal_prices) - self.strike


def _fold(fn: Callable[[torch.Tensor, torch.Tensor], torch.Tensor], args: List[torch.Tensor]) -> torch.Tensor:
    out = args[0]
    for arg in args[1:]:
        out = fn(out, arg)
    return out


class CustomClaim(Claim):
    """
    Payoff given as an expression of S0..S{n-1} (S is an alias of S0).

    The expression is parsed with sympy and evaluated by walking its tree; only
    arithmetic, powers, Max, Min, Abs, exp, log and sqrt are accepted.
    """

    _functions = {
        sympy.exp: torch.exp,
        sympy.log: torch.log,
        sympy.Abs: torch.abs,
    }

    def __init__(self, expression: str, num_assets: int):
        super().__init__("custom")
        self.expression = expression
        self.symbols = {f"S{j}": sympy.Symbol(f"S{j}") for j in range(num_assets)}
        local = dict(self.symbols)
        local["S"] = self.symbols["S0"]
        allowed = {"Max": sympy.Max, "Min": sympy.Min, "Abs": sympy.Abs, "exp": sympy.exp, "log": sympy.log,
                   "sqrt": sympy.sqrt, "Integer": sympy.Integer, "Float": sympy.Float,
                   "Rational": sympy.Rational, "Symbol": sympy.Symbol, "__builtins__": {}}
        try:
            self.tree = parse_expr(expression, local_dict=local, global_dict=allowed, evaluate=True)
        except Exception as exc:
            raise ConfigError(f"Cannot parse claim expression '{expression}': {exc}") from exc
        unknown = self.tree.free_symbols - set(self.symbols.values())
        if unknown:
            raise ConfigError(f"Unknown symbols {sorted(str(s) for s in unknown)} in claim expression '{expression}'")
        # fail on unsupported functions now rather than at pricing time
        self._walk(self.tree, {s: torch.ones(1, dtype=torch.float64) for s in self.symbols.values()})

    def _walk(self, node: sympy.Basic, values: Dict[sympy.Symbol, torch.Tensor]) -> torch.Tensor:
        if isinstance(node, sympy.Symbol):
            return values[node]
        if node.is_Number:
            return torch.tensor(float(node), dtype=torch.float64)
        args = [self._walk(arg, values) for arg in node.args]
        if isinstance(node, sympy.Add):
            return _fold(torch.add, args)
        if isinstance(node, sympy.Mul):
            return _fold(torch.mul, args)
        if isinstance(node, sympy.Pow):
            return torch.pow(args[0], args[1])
        if isinstance(node, sympy.Max):
            return _fold(torch.maximum, args)
        if isinstance(node, sympy.Min):
            return _fold(torch.minimum, args)
        for fn, op in self._functions.items():
            if isinstance(node, fn):
                return op(args[0])
        raise ConfigError(f"Unsupported operation '{type(node).__name__}' in claim expression '{self.expression}'")

    def payoff(self, terminal_prices: torch.Tensor) -> torch.Tensor:
        if terminal_prices.shape[1] != len(self.symbols):
            raise DimensionError(f"Expression uses {len(self.symbols)} assets, got {terminal_prices.shape[1]}")
        values = {self.symbols[f"S{j}"]: terminal_prices[:, j] for j in range(len(self.symbols))}
        out = self._walk(self.tree, values)
        return out.expand(terminal_prices.shape[0]).clone() if out.dim() == 0 else out


# Add more claims as needed
claim_map: Dict[str, Type[Claim]] = {
    "call": CallClaim,
    "put": PutClaim,
    "forward": ForwardClaim,
    "custom": CustomClaim,
}


def create_claim(claim_type: str, num_assets: int, strike: Optional[float] = None, asset: int = 0,
                 expression: Optional[str] = None) -> Claim:
    """Create Claim instance based on claim configuration"""
    if claim_type not in claim_map:
        raise ConfigError(f"Unknown claim type: {claim_type}")
    if claim_type == "custom":
        if not expression:
            raise ConfigError("Custom claims need an expression")
        return CustomClaim(expression, num_assets)
    if strike is None:
        raise ConfigError(f"Claim type '{claim_type}' needs a strike")
    if not 0 <= asset < num_assets:
        raise ConfigError(f"Claim refers to asset {asset}, market has {num_assets}")
    return claim_map[claim_type](strike, asset)
