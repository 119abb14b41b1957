import math
import pytest
import torch

from vbsde import (AffineGenerator, BasisSpec, CubicGenerator, InconsistencyError, LinearGenerator, Regressor,
                   ResolventError, TerminalVariable, TimeGrid, YosidaGenerator, YosidaParams, simulate_brownian,
                   solve_picard, yosida_generator, yosida_resolvent, yosida_sequence)
import vbsde.solvers.yosida as yosida_module


def _batch(values, k: int = 1):
    y = torch.tensor(values, dtype=torch.float64).view(-1, 1)
    return y, torch.zeros(y.shape[0], 1, k, dtype=torch.float64)


def test_params_validation():
    with pytest.raises(ValueError):
        YosidaParams(eps=0.1, tol=0.0)
    with pytest.raises(ValueError):
        YosidaParams(eps=0.1, max_inner=0)
    gen = LinearGenerator(0.05)
    with pytest.raises(ValueError):
        YosidaParams(eps=1.5).validate(gen)
    with pytest.raises(ValueError):
        YosidaParams(eps=0.0).validate(gen)


def test_linear_resolvent_is_exact():
    gen = LinearGenerator(0.5)
    y, z = _batch([-2.0, -0.3, 0.0, 1.0, 4.0])
    J = yosida_resolvent(gen, 0, 0.0, y, z, YosidaParams(eps=0.2))
    assert torch.allclose(J, y / 1.1, atol=1e-12)


def test_linear_resolvent_with_premium():
    gen = LinearGenerator(0.05, 0.3)
    y = torch.tensor([[1.0], [-0.5]], dtype=torch.float64)
    z = torch.tensor([[[0.4]], [[-1.0]]], dtype=torch.float64)
    eps = 0.1
    J = yosida_resolvent(gen, 2, 0.2, y, z, YosidaParams(eps=eps))
    assert torch.allclose(J, (y - eps * 0.3 * z[..., 0]) / (1 + eps * 0.05), atol=1e-12)


def test_resolvent_shrinks_with_eps():
    gen = LinearGenerator(0.5)
    y, z = _batch([1.0, 2.0])
    gaps = [(yosida_resolvent(gen, 0, 0.0, y, z, YosidaParams(eps=eps)) - y).abs().max().item()
            for eps in (1e-1, 1e-2, 1e-3)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] / gaps[2] == pytest.approx(10.0, rel=0.01)


def test_cubic_resolvent():
    gen = CubicGenerator(c=1.0, growth_gamma=0.9)
    y, z = _batch([2.0])
    J = yosida_resolvent(gen, 0, 0.0, y, z, YosidaParams(eps=0.5))
    assert J.item() == pytest.approx(1.1795, abs=1e-4)
    assert J.item() + 0.5 * J.item() ** 3 == pytest.approx(2.0, abs=1e-9)


def test_resolvent_failure():
    gen = CubicGenerator(c=1.0, growth_gamma=0.9)
    y, z = _batch([2.0, 3.0])
    with pytest.raises(ResolventError) as info:
        yosida_resolvent(gen, 0, 0.0, y, z, YosidaParams(eps=0.5, tol=1e-300, max_inner=1))
    assert info.value.residual > 0


def test_regularized_linear_generator():
    gen = LinearGenerator(0.5)
    y, z = _batch([1.0, -2.0])
    value = yosida_generator(gen, 0, 0.0, y, z, YosidaParams(eps=0.2))
    assert torch.allclose(value, 0.5 * y / 1.1, atol=1e-12)


def test_regularization_converges_to_generator():
    gen = CubicGenerator(c=1.0)
    y, z = _batch([0.5, 1.0])
    errors = [(yosida_generator(gen, 0, 0.0, y, z, YosidaParams(eps=eps)) + gen(0, 0.0, y, z)).abs().max().item()
              for eps in (1e-2, 1e-3)]
    assert errors[1] < errors[0]
    assert errors[0] / errors[1] == pytest.approx(10.0, rel=0.1)


def test_zero_of_generator_is_fixed():
    gen = CubicGenerator(c=1.0)
    y, z = _batch([0.0])
    params = YosidaParams(eps=0.3)
    assert yosida_resolvent(gen, 0, 0.0, y, z, params).item() == 0.0
    assert yosida_generator(gen, 0, 0.0, y, z, params).item() == 0.0


def test_inconsistent_formulas(monkeypatch):
    gen = LinearGenerator(0.5)
    y, z = _batch([1.0])
    monkeypatch.setattr(yosida_module, "yosida_resolvent", lambda *args: torch.zeros_like(y))
    with pytest.raises(InconsistencyError):
        yosida_generator(gen, 0, 0.0, y, z, YosidaParams(eps=0.2))


def test_regularized_constants(grid):
    wrapped = YosidaGenerator(LinearGenerator(0.5, 0.2), YosidaParams(eps=0.1))
    r, theta = wrapped.linear_structure
    assert r == pytest.approx(0.5 / 1.05)
    assert theta.tolist() == pytest.approx([0.2 / 1.05])
    assert wrapped.mono_M == pytest.approx(-0.5 / 1.05)
    assert wrapped.probe_linear_structure(grid, num_probes=32, seed=1).passed


def test_sequence_matches_picard(span_regressor, paths):
    xi = TerminalVariable(torch.cos(paths.W[:, -1]))
    gen = CubicGenerator(c=0.2)
    direct, _ = solve_picard(gen, xi, span_regressor, tol=1e-12)
    result = yosida_sequence(gen, xi, span_regressor, YosidaParams(eps=1e-4), tol=1e-12, with_theta=False)
    assert result.theta_hat is None
    gap = (result.solution.Y.values[:, 0] - direct.Y.values[:, 0]).abs().max().item()
    assert gap < 1e-3


def test_theta_is_reported(span_regressor, paths):
    xi = TerminalVariable(torch.cos(paths.W[:, -1]))
    thetas = [yosida_sequence(CubicGenerator(c=0.2), xi, span_regressor, YosidaParams(eps=eps), tol=1e-10).theta_hat
              for eps in (0.2, 0.1, 0.05)]
    assert all(theta >= 0.0 for theta in thetas)
    assert all(later <= earlier + 1e-6 for earlier, later in zip(thetas, thetas[1:]))


@pytest.mark.parametrize("eps", [0.2, 0.05])
def test_regularized_affine_decay(eps):
    # F(y) = -c y: the regularized solution is e^{-c_eps (T - t)} xi with c_eps = c / (1 + eps c)
    grid = TimeGrid.uniform(1.0, 50)
    regressor = Regressor(simulate_brownian(grid, 200, 1, seed=5), BasisSpec(degree=1, ridge=0.0))
    xi = TerminalVariable.constant(1.0, 200)
    result = yosida_sequence(AffineGenerator(a=-1.0), xi, regressor, YosidaParams(eps=eps), tol=1e-12,
                             with_theta=False)
    y0 = result.solution.Y.values[:, 0, 0]
    assert torch.allclose(y0, torch.full_like(y0, math.exp(-1.0 / (1.0 + eps))), atol=1e-2)
