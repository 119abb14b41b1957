import torch
import vbsde


######## Example 0 ########

# Black-Scholes call, closed form against Picard
config = vbsde.load_config('configs/call.json')
report = vbsde.price_claim(config)

print(f"\nCall prices: \n{[(res.solver, round(res.price, 4)) for res in report.results]}")
print("##############################################")


######## Example 1 ########

# Nonlinear generator solved by Picard iteration
grid = vbsde.TimeGrid.uniform(1.0, 20)
paths = vbsde.simulate_brownian(grid, 4000, 1, seed=1)
regressor = vbsde.Regressor(paths, vbsde.BasisSpec(state="brownian", degree=3))
xi = vbsde.TerminalVariable.from_paths(torch.sin, paths)
solution, picard = vbsde.solve_picard(vbsde.CubicGenerator(c=0.2), xi, regressor)

print(f"\nY0 of the cubic BSDE after {picard.iterations} iterations: \n{solution.Y.values[:, 0].mean().item():.6f}")
print("##############################################")


######## Example 2 ########

# Same equation through minimization of the functional
init = vbsde.AdaptedProcess.zeros(grid, 4000, 1)
result = vbsde.minimize_E(xi, vbsde.CubicGenerator(c=0.2), init, regressor)

print(f"\nE trace of the minimizer: \n{[f'{v:.2e}' for v in result.trace]}")
print("##############################################")


######## Example 3 ########

# Invariant checks on the verify configuration
table = vbsde.verify_suite(vbsde.load_config('configs/verify.json'))

print(f"\nVerify suite: \n{table.to_csv()}")
print("##############################################")
