import pytest
import torch

from vbsde import (AdaptedProcess, CandidateFamily, ControlPair, InvalidFamilyError, InvalidRadiusError,
                   LinearGenerator, MinimizerConfig, StallError, TerminalVariable, ZeroGenerator, b_norm,
                   build_candidates, default_family, driver_match_residual, driver_of, energy_identity,
                   eval_E_pair, eval_E_sup, functional_rearranged, minimize_E, optimality_residual, solve_picard)


def test_energy_identity_of_equal_pairs(random_pairs, span_regressor):
    pair = random_pairs(1)[0]
    balance = energy_identity(pair, pair, span_regressor)
    assert balance.lhs == 0.0 and balance.rhs == 0.0
    assert balance.relative == 0.0


def test_energy_identity_deterministic(grid, span_regressor, make_pair):
    balance = energy_identity(make_pair(grid, 2000, 0.0, 1.0), make_pair(grid, 2000, 0.0, 0.0), span_regressor)
    assert balance.lhs == pytest.approx(1.0, abs=1e-12)
    assert balance.rhs == pytest.approx(1.0, abs=1e-12)
    assert balance.z_gap == pytest.approx(0.0, abs=1e-12)


def test_energy_identity_closes_for_span_pairs(random_pairs, span_regressor):
    pairs = random_pairs(10, seed=5)
    for a, b in zip(pairs[::2], pairs[1::2]):
        balance = energy_identity(a, b, span_regressor)
        assert balance.lhs > 0.0
        assert balance.relative <= 1e-8


def test_self_evaluation(random_pairs, span_regressor, paths):
    pair = random_pairs(1, seed=2)[0]
    xi = TerminalVariable(paths.W[:, -1])
    gap = (pair.eta.values - xi.values).pow(2).sum(-1).mean().item()
    gen = LinearGenerator(0.05, 0.3)
    assert eval_E_pair(pair, pair, xi, gen, span_regressor) == pytest.approx(gap, rel=1e-12)
    assert functional_rearranged(pair, pair, xi, gen, span_regressor) == pytest.approx(gap, rel=1e-12)
    assert eval_E_sup(pair, xi, gen, CandidateFamily([pair]), span_regressor) == pytest.approx(gap, rel=1e-12)


def test_hand_integration(grid, span_regressor, make_pair):
    xi = TerminalVariable.constant(0.0, 2000)
    pair = make_pair(grid, 2000, 0.0, 1.0)
    zero = make_pair(grid, 2000, 0.0, 0.0)
    assert eval_E_pair(zero, pair, xi, ZeroGenerator(), span_regressor) == pytest.approx(1.0, abs=1e-12)
    family = CandidateFamily([zero, pair])
    assert eval_E_sup(pair, xi, ZeroGenerator(), family, span_regressor) == pytest.approx(1.0, abs=1e-12)


def test_sup_always_scores_the_pair(grid, span_regressor, make_pair):
    xi = TerminalVariable.constant(1.0, 2000)
    zero = make_pair(grid, 2000, 0.0, 0.0)
    comp = make_pair(grid, 2000, 0.0, 1.0)
    # E_comp(zero) = 1 - sum dt^2 = 0.9 while E_zero(zero) = |0 - 1|^2 = 1
    assert eval_E_pair(comp, zero, xi, ZeroGenerator(), span_regressor) == pytest.approx(0.9, abs=1e-12)
    family = CandidateFamily([comp])
    assert eval_E_sup(zero, xi, ZeroGenerator(), family, span_regressor) == pytest.approx(1.0, abs=1e-12)
    assert len(family) == 1


def test_empty_family():
    with pytest.raises(InvalidFamilyError):
        CandidateFamily([])


def test_midpoint_convexity(random_pairs, span_regressor, paths):
    xi = TerminalVariable(torch.sin(paths.W[:, -1]))
    gen = LinearGenerator(0.05, 0.3)
    pairs = random_pairs(30, seed=7)
    for comp, a, b in zip(pairs[::3], pairs[1::3], pairs[2::3]):
        mid = 0.5 * a + 0.5 * b
        excess = eval_E_pair(comp, mid, xi, gen, span_regressor) - 0.5 * (
            eval_E_pair(comp, a, xi, gen, span_regressor) + eval_E_pair(comp, b, xi, gen, span_regressor))
        assert excess <= 1e-8


def test_build_candidates(random_pairs, span_regressor, paths):
    pair = random_pairs(1)[0]
    xi = TerminalVariable(paths.W[:, -1])
    gen = LinearGenerator(0.05)
    only_self = build_candidates(pair, xi, gen, 1.0, 0, 0, span_regressor)
    assert len(only_self) == 1 and only_self.contains(pair)

    first = build_candidates(pair, xi, gen, 0.5, 4, 3, span_regressor)
    second = build_candidates(pair, xi, gen, 0.5, 4, 3, span_regressor)
    assert len(first) == 5
    for a, b in zip(first.members, second.members):
        assert torch.equal(a.f.values, b.f.values) and torch.equal(a.eta.values, b.eta.values)
    assert all(b_norm(member) <= 0.5 + 1e-12 for member in first.members[1:])

    with pytest.raises(InvalidRadiusError):
        build_candidates(pair, xi, gen, 0.0, 4, 3, span_regressor)


def test_default_family_with_zero_data(grid, span_regressor, make_pair):
    zero = make_pair(grid, 2000, 0.0, 0.0)
    xi = TerminalVariable.constant(0.0, 2000)
    family = default_family(zero, xi, ZeroGenerator(), span_regressor)
    assert family.radius is None
    assert len(family) == 7
    assert eval_E_sup(zero, xi, ZeroGenerator(), family, span_regressor) == 0.0


def test_optimality_residual(grid, span_regressor, make_pair):
    pair = make_pair(grid, 2000, 0.0, 0.3)
    ones = AdaptedProcess.constant(1.0, grid, 2000)
    assert optimality_residual(pair, ones, ZeroGenerator(), span_regressor) == pytest.approx(0.3, abs=1e-12)
    assert optimality_residual(pair, ones * 0.0, ZeroGenerator(), span_regressor) == 0.0


def test_driver_match_residual(grid, span_regressor, make_pair):
    assert driver_match_residual(make_pair(grid, 2000, 0.0, 1.0), ZeroGenerator(), span_regressor) == \
        pytest.approx(1.0, abs=1e-12)


def test_equivalence_at_picard_solution(span_regressor, paths):
    xi = TerminalVariable(torch.cos(paths.W[:, -1]))
    gen = LinearGenerator(0.05, 0.3)
    tol = 1e-10
    solution, _ = solve_picard(gen, xi, span_regressor, tol=tol)
    pair = ControlPair(xi, driver_of(gen, solution))
    assert driver_match_residual(pair, gen, span_regressor) <= 10 * tol
    direction = AdaptedProcess(torch.sin(paths.W), paths.grid)
    assert abs(optimality_residual(pair, direction, gen, span_regressor)) <= 1e-4
    family = default_family(pair, xi, gen, span_regressor, seed=1)
    scores = family.evaluate(pair, xi, gen, span_regressor)
    assert 0.0 <= scores.value <= max(3 * scores.std_error, 1e-3)


def test_minimizer_config_validation():
    with pytest.raises(ValueError):
        MinimizerConfig(backtrack_factor=1.5)
    with pytest.raises(ValueError):
        MinimizerConfig(gradient_mode="newton")
    with pytest.raises(ValueError):
        MinimizerConfig(max_iter=-1)


def test_minimize_already_optimal(grid, span_regressor):
    xi = TerminalVariable.constant(1.5, 2000)
    result = minimize_E(xi, ZeroGenerator(), AdaptedProcess.zeros(grid, 2000, 1), span_regressor)
    assert result.converged and result.iterations == 0
    assert result.trace == [0.0]
    assert torch.allclose(result.solution.Y.values, torch.full_like(result.solution.Y.values, 1.5))


def test_minimize_matches_picard(grid, span_regressor, paths):
    xi = TerminalVariable(torch.cos(paths.W[:, -1]))
    gen = LinearGenerator(0.05)
    picard, _ = solve_picard(gen, xi, span_regressor)
    result = minimize_E(xi, gen, AdaptedProcess.zeros(grid, 2000, 1), span_regressor)
    assert result.converged
    assert all(later <= earlier for earlier, later in zip(result.trace, result.trace[1:]))
    y0, target = result.solution.Y.values[:, 0, 0].mean().item(), picard.Y.values[:, 0, 0].mean().item()
    assert y0 == pytest.approx(target, rel=0.02)


def test_minimize_stalls(grid, span_regressor):
    xi = TerminalVariable.constant(1.0, 2000)
    with pytest.raises(StallError) as info:
        minimize_E(xi, LinearGenerator(0.5), AdaptedProcess.zeros(grid, 2000, 1), span_regressor,
                   MinimizerConfig(max_iter=0))
    assert len(info.value.trace) == 1 and info.value.trace[0] > 1e-3
