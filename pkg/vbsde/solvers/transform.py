import math
from typing import Optional, Tuple
import torch

from ..core import Generator, TerminalVariable


class TransformedGenerator(Generator):
    """
    Generator of the exponentially rescaled pair (Y~, Z~) = e^{-alpha t} (Y, Z):
    F~(t, y, z) = alpha y + e^{-alpha t} F(t, e^{alpha t} y, e^{alpha t} z).
    """

    def __init__(self, base: Generator, alpha: float, horizon: float):
        self.base = base
        self.alpha = float(alpha)
        self.horizon = float(horizon)
        linear = None
        if base.linear_structure is not None:
            r, theta = base.linear_structure
            linear = (r - self.alpha, theta)
        # e^{-alpha t} peaks at one of the endpoints of [0, T]
        eta_scale = max(1.0, math.exp(-self.alpha * self.horizon))
        super().__init__(f"exp({base.name})", mono_M=base.mono_M + self.alpha, lip_L=base.lip_L,
                         growth_gamma=base.growth_gamma + abs(self.alpha),
                         growth_eta=base.growth_eta * eta_scale, linear_structure=linear)

    def forward(self, step: int, t: float, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        if self.alpha == 0.0:
            return self.base(step, t, y, z)
        scale = math.exp(self.alpha * t)
        return self.alpha * y + self.base(step, t, scale * y, scale * z) / scale


def exp_transform(gen: Generator, xi: TerminalVariable, alpha: float,
                  horizon: float) -> Tuple[Generator, TerminalVariable]:
    """
    Rescale a BSDE so that its monotonicity constant becomes mono_M + alpha.

    Args:
        gen: Original generator F
        xi: Terminal value
        alpha: Transform exponent
        horizon: Terminal time T

    Returns:
        Tuple of (F~, xi~ = e^{-alpha T} xi); alpha = 0 returns the inputs unchanged
    """
    if alpha == 0.0:
        return gen, xi
    return TransformedGenerator(gen, alpha, horizon), xi * math.exp(-alpha * horizon)


def auto_transform_alpha(gen: Generator) -> Optional[float]:
    """alpha = -(M + L^2/2) when that constant is positive, otherwise None."""
    exponent = gen.transform_exponent
    return -exponent if exponent > 0 else None
