"""Three players on a ring, each playing Matching Pennies against the next one.

Rescaling player i's payoffs to a_i u_i + b_i changes the trajectories but not
the equilibria.  The plain coupling is then no longer constant, while the
version that weights player i by 1/a_i still is.
"""
import numpy as np

from forel import (ForelSystem, coupling_series, coupling_weights, cycle_game, integrate,
                   interior_equilibrium, make_reference, max_deviation, recurrence_stats)

game = cycle_game(scale=[1, 2, 3], offset=[0, 1, -1])
x_star = interior_equilibrium(game)
print("interior equilibrium:", np.round(x_star, 12))

sys_ = ForelSystem(game, "entropic")
x0 = [[0.7, 0.3], [0.4, 0.6], [0.55, 0.45]]
tr = integrate(sys_, "entropic", sys_.preimage(x0), T=50.0, h=1e-3, sample_every=10)

plain = coupling_series(tr, make_reference(game, x_star))
weighted = coupling_series(tr, make_reference(game, x_star, coupling_weights(game)))
print(f"weights 1/a_i = {coupling_weights(game)}")
print(f"unweighted coupling drifts by   {max_deviation(plain):.3e}")
print(f"weighted coupling drifts by     {max_deviation(weighted):.3e}")

# %% Unscaled ring: the orbit returns near its start over and over
plain_game = cycle_game()
sys_ = ForelSystem(plain_game, "entropic")
tr = integrate(sys_, "entropic", sys_.preimage(x0), T=200.0, h=1e-3)
rep = recurrence_stats(tr, epsilon=3e-2, t_min=1.0)
print(f"\nunscaled ring: first return at t = {rep.first_return_time}, {rep.n_returns} returns")
