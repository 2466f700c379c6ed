"""Solve two linear problems with known answers and compare.

Run with ``python3 demos/heat_and_jumps.py``.
"""

import math

import numpy as np

from jumpgame import SchemeConfig, SpatialGrid, build_problem, build_quadrature, solve_terminal_value


def solve(preset, lower, upper, dx):
    problem = build_problem({"preset": preset})
    quad = build_quadrature(problem.levy)
    grid = SpatialGrid.uniform(lower, upper, dx)
    return grid, solve_terminal_value(problem, grid, quad, SchemeConfig())


# Brownian motion with σ = 0.5: u(0, x) = e^{-σ²/2} sin x.
grid, vg = solve("sine-diffusion", -2 * math.pi, 2 * math.pi, 0.02)
x = grid.points[:, 0]
err = np.abs(vg.values[0] - math.exp(-0.125) * np.sin(x))[grid.interior_mask(2.0)].max()
print(f"diffusion: {len(vg.times) - 1} steps, max interior error {err:.2e}")

# Unit jumps at rate 2, compensated: E sin(x + N - 2) with N ~ Poisson(2).
grid, vg = solve("pure-jump", -4 * math.pi, 4 * math.pi, 0.01)
k = np.arange(40)
pmf = np.exp(-2.0) * 2.0 ** k / np.array([math.factorial(int(i)) for i in k])
for x0 in (-1.0, 0.0, 1.0):
    exact = float(pmf @ np.sin(x0 + k - 2.0))
    print(f"jumps: x={x0:+.1f}  solver {vg.value_at(0.0, [x0])[0]:+.5f}  series {exact:+.5f}")
