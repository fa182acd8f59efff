"""Equilibria of zero-sum games via linear programming, plus Nash checks.

The row player maximizes ``x @ A @ y`` and the column player minimizes it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game import GameSpec, expected_payoffs, payoff_vectors
from .lp import LinearProgram, lp_solve

ESSENTIAL_TOL = 1e-9
# slacks tried in turn on the value constraint of the optimal-strategy polytope
VALUE_SLACKS = (0.0, 1e-12, 1e-11)


class EquilibriumError(RuntimeError):
    """No equilibrium of the requested kind could be computed."""


@dataclass
class ZeroSumSolution:
    value: float
    x: np.ndarray
    y: np.ndarray
    value_min: float  # value found by the minimizer's program

    @property
    def profile(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


@dataclass
class EquilibriumReport:
    """Maximal-support equilibrium of a two-player zero-sum game.

    ``witnesses[p][a]`` is an optimal strategy of the *opponent* of player
    ``p`` against which non-essential action ``a`` earns strictly less than the
    value; ``margins[p][a]`` is the gap it achieves against ``x_star``.
    """

    value: float
    x_star: list[np.ndarray]
    essential: list[list[int]]
    margins: list[dict[int, float]] = field(default_factory=list)
    witnesses: list[dict[int, np.ndarray]] = field(default_factory=list)

    @property
    def interior(self) -> bool:
        return all(len(e) == len(x) for e, x in zip(self.essential, self.x_star))

    @property
    def pure(self) -> bool:
        return all(len(e) == 1 for e in self.essential)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.x_star)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "x_star": [x.tolist() for x in self.x_star],
            "essential": self.essential,
            "margins": [{str(k): v for k, v in m.items()} for m in self.margins],
        }


def _matrix(A) -> np.ndarray:
    if isinstance(A, GameSpec):
        A = zero_sum_matrix(A)
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or not np.all(np.isfinite(A)):
        raise ValueError("payoff matrix must be a finite 2-D array")
    return A


def zero_sum_matrix(game: GameSpec) -> np.ndarray:
    """Row player's payoff matrix of a two-player zero-sum game (affine transform ignored)."""
    if not (game.is_polymatrix and game.n_players == 2 and len(game.edges) == 1):
        raise EquilibriumError("need a two-player game with a single constant-sum edge")
    e = game.edges[0]
    if not np.allclose(e.u_ij + e.u_ji.T, (e.u_ij + e.u_ji.T).flat[0], atol=1e-12, rtol=0):
        raise EquilibriumError("the game is not constant-sum")
    return e.u_ij if e.i == 0 else e.u_ji


def zero_sum_solve(A) -> ZeroSumSolution:
    """Value and one equilibrium of the zero-sum game ``A``.

    Both players' programs are solved on the positively shifted matrix
    ``B = A - min A + 1`` in the classical ``1 / sum`` form.
    """
    A = _matrix(A)
    m, n = A.shape
    shift = 1.0 - A.min()
    B = A + shift
    # row player: min sum p  s.t.  B^T p >= 1, p >= 0;  value_B = 1 / sum p
    r1 = lp_solve(LinearProgram(np.ones(m), B.T, [">="] * n, np.ones(n)))
    # column player: max sum q  s.t.  B q <= 1, q >= 0
    r2 = lp_solve(LinearProgram(np.ones(n), B, ["<="] * m, np.ones(m), maximize=True))
    if not (r1.ok and r2.ok):
        raise EquilibriumError(f"value LPs failed: {r1.status}, {r2.status}")
    v1 = 1.0 / r1.objective
    v2 = 1.0 / r2.objective
    x = np.clip(r1.x * v1, 0, None)
    y = np.clip(r2.x * v2, 0, None)
    return ZeroSumSolution(float(v1 - shift), x / x.sum(), y / y.sum(), float(v2 - shift))


def _optimal_polytope(A: np.ndarray, value: float, player: int, slack: float):
    """Constraints ``(M, senses, rhs)`` of a player's optimal strategies."""
    m, n = A.shape
    if player == 0:
        k = m
        M = np.vstack([A.T, np.ones((1, m))])
        senses = [">="] * n + ["="]
        rhs = np.concatenate([np.full(n, value - slack), [1.0]])
    else:
        k = n
        M = np.vstack([A, np.ones((1, n))])
        senses = ["<="] * m + ["="]
        rhs = np.concatenate([np.full(m, value + slack), [1.0]])
    return k, M, senses, rhs


def _maximize_over_optimal(A, value, player, c):
    for slack in VALUE_SLACKS:
        k, M, senses, rhs = _optimal_polytope(A, value, player, slack)
        res = lp_solve(LinearProgram(c, M, senses, rhs, maximize=True))
        if res.ok:
            break
    else:
        raise EquilibriumError(f"optimal-strategy LP for player {player} is {res.status.value}")
    x = np.clip(res.x, 0, None)
    return res.objective, x / x.sum()


def essential_strategies(A, value: float | None = None) -> list[list[int]]:
    """Actions each player uses in some equilibrium.

    Action ``a`` is essential when ``max x_a`` over the player's optimal
    strategies exceeds ``ESSENTIAL_TOL``.
    """
    A = _matrix(A)
    if value is None:
        value = zero_sum_solve(A).value
    out = []
    for p, k in enumerate(A.shape):
        ess = []
        for a in range(k):
            c = np.zeros(k)
            c[a] = 1.0
            opt, _ = _maximize_over_optimal(A, value, p, c)
            if opt > ESSENTIAL_TOL:
                ess.append(a)
        out.append(ess)
    return out


def max_support_equilibrium(A) -> EquilibriumReport:
    """Equilibrium supported on exactly the essential actions.

    Averages, for each player, the optimal strategies that put weight on
    each own essential action and those that push each of the opponent's
    non-essential actions strictly below the value.  Raises
    :class:`EquilibriumError` if the resulting support or margins disagree.
    """
    A = _matrix(A)
    value = zero_sum_solve(A).value
    m, n = A.shape
    sizes = (m, n)
    pieces: list[list[np.ndarray]] = [[], []]
    essential: list[list[int]] = [[], []]
    witnesses: list[dict[int, np.ndarray]] = [{}, {}]
    for p in (0, 1):
        for a in range(sizes[p]):
            c = np.zeros(sizes[p])
            c[a] = 1.0
            opt, x = _maximize_over_optimal(A, value, p, c)
            if opt > ESSENTIAL_TOL:
                essential[p].append(a)
                pieces[p].append(x)
    for p in (0, 1):
        q = 1 - p
        for a in range(sizes[p]):
            if a in essential[p]:
                continue
            # opponent q's optimal strategy that hurts action a of player p most
            if p == 0:
                # row action a pays A[a] @ y; column player wants it low
                opt, y = _maximize_over_optimal(A, value, 1, -A[a])
            else:
                # column action a costs x @ A[:, a]; row player wants it high
                opt, y = _maximize_over_optimal(A, value, 0, A[:, a])
            witnesses[p][a] = y
            pieces[q].append(y)
    x_star = [np.mean(pieces[p], axis=0) for p in (0, 1)]
    for p in (0, 1):
        x_star[p] = np.where(x_star[p] > ESSENTIAL_TOL, x_star[p], 0.0)
        x_star[p] /= x_star[p].sum()
    margins: list[dict[int, float]] = [{}, {}]
    for a in witnesses[0]:
        margins[0][a] = float(value - A[a] @ x_star[1])
    for a in witnesses[1]:
        margins[1][a] = float(x_star[0] @ A[:, a] - value)
    report = EquilibriumReport(value, x_star, essential, margins, witnesses)
    for p in (0, 1):
        support = [int(a) for a in np.flatnonzero(x_star[p] > ESSENTIAL_TOL)]
        if support != essential[p]:
            raise EquilibriumError(f"player {p}: support {support} differs from essential set {essential[p]}")
        if any(mg <= 0 for mg in margins[p].values()):
            raise EquilibriumError(f"player {p}: a non-essential action is not strictly worse")
    return report


def verify_nash(game: GameSpec, x, tol: float = 1e-8) -> tuple[np.ndarray, bool]:
    """Best-response gaps ``max_a v_ia(x) - u_i(x)`` and whether all are ``<= tol``."""
    flat = game.flatten(x)
    v = payoff_vectors(game, flat)
    u = expected_payoffs(game, flat)
    best = np.maximum.reduceat(v, game.offsets[:-1], axis=-1)
    gaps = best - u
    return gaps, bool(np.all(gaps <= tol))


def interior_equilibrium(game: GameSpec, tol: float = 1e-9) -> np.ndarray:
    """Fully mixed equilibrium of a polymatrix game from the equalization system.

    Solves ``v_i(x) = c_i 1`` and ``sum x_i = 1`` for all players jointly.
    Raises :class:`EquilibriumError` when the solution is not interior or
    does not satisfy the system.
    """
    if not game.is_polymatrix:
        raise EquilibriumError("interior equilibria are only computed for polymatrix games")
    D, N = game.dim, game.n_players
    M = game.payoff_matrix() * np.repeat(game.scale, game.n_actions)[:, None]
    b = np.repeat(game.offset, game.n_actions)
    owner = np.repeat(np.arange(N), game.n_actions)
    # unknowns (x, c): M x + b - c_owner = 0 ; per-player sums = 1
    K = np.zeros((D + N, D + N))
    K[:D, :D] = M
    K[np.arange(D), D + owner] = -1.0
    K[D + owner, np.arange(D)] = 1.0
    rhs = np.concatenate([-b, np.ones(N)])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    x = sol[:D]
    if np.linalg.norm(K @ sol - rhs) > 1e-8 or np.any(x <= tol):
        raise EquilibriumError("no interior equilibrium: the equalization system has no interior solution")
    gaps, ok = verify_nash(game, x, 1e-8)
    if not ok:
        raise EquilibriumError(f"equalizing profile fails the Nash check (gap {gaps.max():.3g})")
    return x
