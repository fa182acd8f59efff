"""Diagnostics along FoReL trajectories: the primal-dual coupling and its
drift, regret, numerical divergence of the reduced field, recurrence
statistics and boundary-convergence classification.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import ForelSystem, Trajectory, _system, embed, reduce, reduced_field
from .equilibrium import EquilibriumReport
from .game import GameSpec
from .regularizer import conjugate, max_h, omega

INTERIOR_RECURRENT = "interior_recurrent"
CONVERGING_TO_FACE = "converging_to_face"
CONVERGED_TO_PURE = "converged_to_pure"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class CouplingReference:
    """Equilibrium ``x_star`` (flat) and per-player weights of the coupling."""

    x_star: np.ndarray
    weights: np.ndarray

    @property
    def interior(self) -> bool:
        return bool(np.all(self.x_star > 0))


def coupling_weights(game: GameSpec) -> np.ndarray:
    """Weights that make the coupling a constant of motion under affine payoffs.

    Player ``i`` is driven by ``a_i v_i + b_i``; the ``b_i`` shift drops out
    against a difference of strategies and the ``a_i`` scale is undone by
    weighting that player's term with ``1 / a_i``.
    """
    return 1.0 / np.asarray(game.scale)


def make_reference(game: GameSpec, x_star, weights=None) -> CouplingReference:
    """Reference from an equilibrium profile; ``weights=None`` means all ones."""
    if isinstance(x_star, EquilibriumReport):
        x_star = x_star.flat()
    xs = game.flatten(x_star).copy()
    w = np.ones(game.n_players) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (game.n_players,) or np.any(w <= 0):
        raise ValueError("coupling weights must be positive, one per player")
    xs.setflags(write=False)
    return CouplingReference(xs, w)


def fenchel_coupling(game, regs, ref: CouplingReference, y) -> np.ndarray | float:
    """``sum_i w_i [h_i*(y_i) - <y_i, x*_i>]`` for scores ``y`` (batched on leading axes)."""
    sys_ = _system(game, regs)
    y = sys_.game.flatten(y)
    inner = np.add.reduceat(y * ref.x_star, sys_.starts, axis=-1)
    return np.sum(ref.weights * (sys_.conjugates(y) - inner), axis=-1)


def coupling_lower_bound(regs: Sequence, ref: CouplingReference) -> float:
    """``-sum_i w_i max h_i``: the coupling never goes below this."""
    return -float(np.dot(ref.weights, [max_h(r) for r in regs]))


def coupling_drift(game, regs, ref: CouplingReference, y) -> np.ndarray | float:
    """Instantaneous ``dG/dt = sum_i w_i <v_i(x), x_i - x*_i>`` at scores ``y``."""
    sys_ = _system(game, regs)
    y = sys_.game.flatten(y)
    x = sys_.choice(y)
    v = sys_.payoffs(x)
    per = np.add.reduceat(v * (x - ref.x_star), sys_.starts, axis=-1)
    return np.sum(ref.weights * per, axis=-1)


def coupling_series(traj: Trajectory, ref: CouplingReference) -> np.ndarray:
    return fenchel_coupling(traj.game, traj.regs, ref, traj.y)


def max_deviation(series: np.ndarray) -> float:
    return float(np.max(np.abs(series - series[0])))


# ------------------------------------------------------------------ regret
def regret(traj: Trajectory, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Sampled regret ``R_i(t_k)`` for ``t_k > 0``.

    The best fixed strategy in hindsight is a pure action because the
    integrand is linear in it, so ``t R_i(t) = max_a int v_ia - int u_i``.
    """
    if traj.cum_u is None:
        raise ValueError("trajectory carries no payoff integral; regret needs cum_u")
    keep = traj.times > 0
    t = traj.times[keep]
    cv = traj.player(traj.cum_v, i)[keep]
    return t, (cv.max(axis=-1) - traj.cum_u[keep, i]) / t


def regret_margin(traj: Trajectory, t_min: float = 0.0) -> np.ndarray:
    """Per player, ``min_k (Omega_i - t_k R_i(t_k))`` over samples with ``t_k >= t_min``."""
    out = []
    for i, r in enumerate(traj.regs):
        t, R = regret(traj, i)
        sel = t >= t_min
        out.append(float(np.min(omega(r) - t[sel] * R[sel])))
    return np.array(out)


def regret_bound(reg, y0) -> float:
    """Bound on ``t R_i(t)`` valid for every start ``y0``.

    From ``int u_i = h*(y(t)) - h*(y0)`` and the Fenchel-Young inequality
    against a pure strategy ``e_a``,
    ``t R_i(t) <= h*(y0) + max h - min_a y0_a``.  At ``y0 = 0`` this is
    ``Omega_i``; from other starts it can be larger.
    """
    y0 = np.asarray(y0, dtype=float)
    return float(conjugate(reg, y0) + max_h(reg) - y0.min())


# -------------------------------------------------------- incompressibility
def _active_set(sys_: ForelSystem, y):
    return sys_.choice(y) > 0


def divergence_check(game, regs, z, delta: float = 1e-4, benchmark=None) -> float | None:
    """Central-difference estimate of ``div V`` for the reduced field at ``z``.

    Returns ``None`` (skipped at a kink) when some choice map is not smooth
    and the support of ``Q`` changes within ``+-delta`` of ``z``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    sys_ = _system(game, regs)
    g = sys_.game
    z = np.asarray(z, dtype=float)
    E = np.eye(z.size) * delta
    zp = z + E
    zm = z - E
    if not all(r.impl.smooth for r in sys_.regs):
        base = _active_set(sys_, embed(g, z, benchmark))
        for w in (zp, zm):
            if np.any(_active_set(sys_, embed(g, w, benchmark)) != base):
                return None
    fp = reduced_field(sys_, None, zp, benchmark)
    fm = reduced_field(sys_, None, zm, benchmark)
    return float(np.sum(np.diagonal(fp - fm)) / (2 * delta))


def max_reduced_norm(traj: Trajectory) -> float:
    """``sup_k |z(t_k)|`` (Euclidean) of the score differences."""
    return float(np.max(np.linalg.norm(reduce(traj.game, traj.y), axis=-1)))


# --------------------------------------------------------------- recurrence
@dataclass
class RecurrenceReport:
    epsilon: float
    t_min: float
    first_return_time: float | None
    min_distance_after_burn_in: float
    n_returns: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def profile_distance(x, x0) -> np.ndarray:
    """Sup-norm distance over every player's coordinates."""
    return np.max(np.abs(np.asarray(x) - np.asarray(x0)), axis=-1)


def recurrence_stats(traj: Trajectory | tuple, epsilon: float, t_min: float) -> RecurrenceReport:
    """Returns of the sampled profiles to within ``epsilon`` of the start.

    Visits count as distinct when separated by an excursion beyond
    ``2 epsilon``.  ``traj`` may also be a ``(times, profiles)`` pair.
    """
    times, xs = (traj.times, traj.x) if isinstance(traj, Trajectory) else traj
    times = np.asarray(times)
    if times[-1] <= t_min:
        raise ValueError(f"trajectory ends at {times[-1]:g}, before the burn-in {t_min:g}")
    d = profile_distance(xs, xs[0])
    sel = times > t_min
    ts, ds = times[sel], d[sel]
    first = None
    visits = 0
    armed = True
    for t, dist in zip(ts, ds):
        if armed and dist < epsilon:
            visits += 1
            armed = False
            if first is None:
                first = float(t)
        elif not armed and dist > 2 * epsilon:
            armed = True
    return RecurrenceReport(epsilon, t_min, first, float(ds.min()), visits)


# ----------------------------------------------------------- classification
@dataclass
class SupportClassification:
    verdict: str
    support: list[list[int]]
    final_face_mass: float
    tail_monotone: bool


def face_mass(game: GameSpec, x, support: Sequence[Sequence[int]]) -> np.ndarray:
    """Total probability on actions outside ``support``, summed over players."""
    off = np.ones(game.dim, dtype=bool)
    for o, s in zip(game.offsets[:-1], support):
        off[o + np.asarray(list(s), dtype=int)] = False
    return np.sum(game.flatten(x)[..., off], axis=-1)


def support_classification(traj: Trajectory, eq_report: EquilibriumReport, tol: float = 1e-12,
                           converged_mass: float = 1e-2) -> SupportClassification:
    """Classify the tail (last 10% of samples) of a trajectory.

    ``interior_recurrent`` when the maximal-support equilibrium is interior;
    otherwise the mass off its support must be non-increasing on the tail
    (within ``tol``).  A pure equilibrium reached to within
    ``converged_mass`` gives ``converged_to_pure``, anything else
    ``converging_to_face``.  A non-monotone tail is ``undetermined``.
    """
    support = [list(s) for s in eq_report.essential]
    m = face_mass(traj.game, traj.x, support)
    if eq_report.interior:
        return SupportClassification(INTERIOR_RECURRENT, support, float(m[-1]), True)
    tail = m[-max(2, len(m) // 10):]
    monotone = bool(np.all(np.diff(tail) <= tol))
    if not monotone:
        verdict = UNDETERMINED
    elif eq_report.pure and tail[-1] <= converged_mass:
        verdict = CONVERGED_TO_PURE
    else:
        verdict = CONVERGING_TO_FACE
    return SupportClassification(verdict, support, float(m[-1]), monotone)
