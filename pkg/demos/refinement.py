"""How the piecewise-constant recursion and the DPP residual behave under refinement.

Run with ``python3 demos/refinement.py`` (about half a minute).
"""

import math

from jumpgame import SchemeConfig, SpatialGrid, build_problem, build_quadrature, solve_terminal_value
from jumpgame.analysis import Partition, dpp_residual, vpi_convergence

problem = build_problem({"preset": "separable-jump"})
quad = build_quadrature(problem.levy)
cfg = SchemeConfig()

grid = SpatialGrid.uniform(-math.pi, math.pi, 0.05)
parts = [Partition.uniform(1.0, n) for n in (4, 8, 16)]
for part, err in zip(parts, vpi_convergence(problem, quad, parts, grid, cfg)):
    print(f"|pi| = {part.norm:.4f}   max |V_pi - u| = {err:.3e}")

for dx in (0.1, 0.05, 0.025):
    grid = SpatialGrid.uniform(-math.pi, math.pi, dx)
    vg = solve_terminal_value(problem, grid, quad, cfg, checkpoints=[0.5])
    print(f"dx = {dx:<6} DPP residual at tau = 0.5: {dpp_residual(problem, quad, vg, 0.5, grid, cfg):.3e}")
