"""A game where both players push the drift.

The drift is ``y + z``.  Neither player can gain, so the value stays at the
terminal payoff ``sin x``.  The script checks that, synthesizes feedback
policies from the grid and confirms the payoff by simulation.

Run with ``python3 demos/game_value.py``.
"""

import math

import numpy as np

from jumpgame import (SchemeConfig, SpatialGrid, build_problem, build_quadrature, feedback_from_grid,
                      solve_terminal_value, verify_pair, with_choice)
from jumpgame.analysis import refinement_error

problem = build_problem({"preset": "tug-of-war-drift"})
quad = build_quadrature(problem.levy)
grid = SpatialGrid.uniform(-math.pi, math.pi, 0.02)
cfg = SchemeConfig()

upper = solve_terminal_value(problem, grid, quad, cfg)
lower = solve_terminal_value(problem, grid, quad, with_choice(cfg, "minus"))
print("max |u+ - sin|:", np.abs(upper.values[0] - np.sin(grid.points[:, 0])).max())
print("max |u+ - u-| :", np.abs(upper.values - lower.values).max())

py = feedback_from_grid(upper, "minimizer", problem, quad)
pz = feedback_from_grid(upper, "maximizer", problem, quad)
for x in (-2.0, 0.5, 2.5):
    print(f"x={x:+.1f}: minimizer plays {py.at(0.0, [x]):+.1f}, maximizer plays {pz.at(0.0, [x]):+.1f}")

err = refinement_error(problem, quad, grid, cfg, x=[0.5])
report = verify_pair(problem, quad, upper, lower, py, pz, 0.0, [0.5], 500, 0.02, seed=1, scheme_error=err)
for key, value in report.to_dict().items():
    print(f"{key:>22} = {value}")
