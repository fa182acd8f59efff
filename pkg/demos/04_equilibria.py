"""Value, essential strategies and the maximal-support equilibrium of a few
zero-sum games, computed with the package's own simplex solver.
"""
import numpy as np

from forel import essential_strategies, max_support_equilibrium, zero_sum_solve

games = {
    "matching pennies": [[1, -1], [-1, 1]],
    "rock paper scissors": [[0, -1, 1], [1, 0, -1], [-1, 1, 0]],
    "column 3 never used": [[1, -1, 2], [-1, 1, 2]],
    "many equilibria": [[1, 1, 0], [1, 1, 0], [0, 0, 1]],
}

for name, A in games.items():
    A = np.array(A, dtype=float)
    sol = zero_sum_solve(A)
    rep = max_support_equilibrium(A)
    print(f"{name}")
    print(f"    value {sol.value:+.4f}; one equilibrium x={np.round(sol.x, 4)}, y={np.round(sol.y, 4)}")
    print(f"    essential actions {essential_strategies(A)}")
    print(f"    maximal support x*={np.round(rep.x_star[0], 4)}, y*={np.round(rep.x_star[1], 4)}")
    if any(rep.margins):
        print(f"    non-essential actions lose by {rep.margins}")
