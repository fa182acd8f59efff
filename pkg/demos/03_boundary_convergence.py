"""When the equilibrium is not interior, play drifts to the face spanned by
the essential strategies and the coupling decreases along the way.
"""
import numpy as np

from forel import (ForelSystem, GameSpec, coupling_series, integrate, make_reference,
                   max_support_equilibrium, support_classification)
from forel.analysis import face_mass

cases = {
    # row 1 dominates row 2; column 1 is the best reply to it
    "dominant 2x2": (np.array([[1.0, 2.0], [0.0, 1.0]]), [[0.4, 0.6], [0.5, 0.5]], 200.0),
    # Matching Pennies plus a third action that is strictly worse for each player
    "embedded pennies 3x3": (np.array([[1.0, -1.0, 10.0], [-1.0, 1.0, 10.0], [-10.0, -10.0, 0.0]]),
                             [[0.2, 0.3, 0.5], [0.3, 0.3, 0.4]], 300.0),
}

for name, (A, x0, T) in cases.items():
    game = GameSpec.zero_sum(A)
    rep = max_support_equilibrium(A)
    sys_ = ForelSystem(game, "entropic")
    tr = integrate(sys_, "entropic", sys_.preimage(x0), T=T, h=1e-3, sample_every=100)
    G = coupling_series(tr, make_reference(game, rep))
    m = face_mass(game, tr.x, rep.essential)
    cls = support_classification(tr, rep)
    print(f"{name}: value {rep.value:g}, essential {rep.essential}, margins {rep.margins}")
    for t in (0.0, 1.0, 5.0, 20.0, T):
        k = int(np.argmin(np.abs(tr.times - t)))
        print(f"    t = {tr.times[k]:6.1f}   mass off support {m[k]:.3e}   G {G[k]: .6f}")
    print(f"    verdict: {cls.verdict}\n")
