"""FoReL dynamics in score space, the reduced score-difference system, the
replicator and projection fields on strategies, and the discrete MWU step.

States are flat arrays in the layout of :class:`forel.game.GameSpec`
(players concatenated along the last axis).  A leading batch axis is allowed
everywhere, which is how :func:`integrate_many` pushes several initial
conditions through the same fixed-step scheme at once.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .game import GameSpec, payoff_vectors
from .regularizer import KINDS, RegularizerError, RegularizerSpec, preimage

log = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e9


class IntegrationDiverged(RuntimeError):
    """A state left the finite range; ``t_last`` is the last valid time."""

    def __init__(self, message: str, t_last: float):
        super().__init__(message)
        self.t_last = t_last


def make_regularizers(game: GameSpec, kinds: str | Sequence) -> list[RegularizerSpec]:
    """Per-player regularizers from one name, a list of names, or specs."""
    if isinstance(kinds, str):
        kinds = [kinds] * game.n_players
    kinds = list(kinds)
    if len(kinds) != game.n_players:
        raise RegularizerError(f"need {game.n_players} regularizers, got {len(kinds)}")
    out = []
    for k, n in zip(kinds, game.n_actions):
        if isinstance(k, RegularizerSpec):
            if k.n != n:
                raise RegularizerError(f"regularizer for {k.n} actions assigned to a player with {n}")
            out.append(k)
        else:
            out.append(RegularizerSpec(k, n))
    return out


class ForelSystem:
    """A game paired with per-player regularizers.

    Precomputes everything the vector field needs so a field evaluation is a
    handful of numpy calls.
    """

    def __init__(self, game: GameSpec, regs: str | Sequence = "entropic"):
        self.game = game
        self.regs = make_regularizers(game, regs)
        self.offsets = game.offsets
        self.starts = self.offsets[:-1]
        self.slices = game.slices()
        self.n_players = game.n_players
        self.dim = game.dim
        if game.is_polymatrix:
            self._MT = np.ascontiguousarray(game.payoff_matrix().T)
            self._a = np.repeat(game.scale, game.n_actions)
            self._b = np.repeat(game.offset, game.n_actions)
        # players sharing (kind, n) are mapped together through an index grid
        groups: dict[tuple[str, int], list[int]] = {}
        for i, r in enumerate(self.regs):
            groups.setdefault((r.kind, r.n), []).append(i)
        self._groups = [
            (KINDS[kind], np.array([np.arange(self.offsets[i], self.offsets[i + 1]) for i in players]))
            for (kind, _), players in groups.items()
        ]
        self._single = len(self._groups) == 1 and len(set(game.n_actions)) == 1

    # ----------------------------------------------------------- primitives
    def choice(self, y: np.ndarray) -> np.ndarray:
        """Mixed profile ``Q(y)`` for flat scores ``y``."""
        if self._single:
            kind, _ = self._groups[0]
            n = self.game.n_actions[0]
            return kind.choice(y.reshape(y.shape[:-1] + (self.n_players, n))).reshape(y.shape)
        x = np.empty_like(y)
        for kind, idx in self._groups:
            x[..., idx] = kind.choice(y[..., idx])
        return x

    def payoffs(self, x: np.ndarray) -> np.ndarray:
        if self.game.is_polymatrix:
            return self._a * (x @ self._MT) + self._b
        return payoff_vectors(self.game, x)

    def utilities(self, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.add.reduceat(v * x, self.starts, axis=-1)

    def field(self, y: np.ndarray) -> np.ndarray:
        return self.payoffs(self.choice(y))

    def conjugates(self, y: np.ndarray) -> np.ndarray:
        """Per-player ``h_i*(y_i)``, shape ``(…, N)``."""
        return np.stack([r.impl.conjugate(y[..., s]) for r, s in zip(self.regs, self.slices)], axis=-1)

    def preimage(self, x) -> np.ndarray:
        x = self.game.flatten(x)
        return np.concatenate([preimage(r, x[..., s]) for r, s in zip(self.regs, self.slices)], axis=-1)


def _system(game, regs) -> ForelSystem:
    if isinstance(game, ForelSystem):
        return game
    return ForelSystem(game, regs)


def forel_field(game: GameSpec, regs, y) -> np.ndarray:
    """Score velocity ``v(Q(y))``."""
    sys_ = _system(game, regs)
    y = game.flatten(y)
    if not np.all(np.isfinite(y)):
        raise RegularizerError("scores must be finite")
    return sys_.field(y)


# ------------------------------------------------------------- reduction
def default_benchmark(game: GameSpec) -> np.ndarray:
    """Benchmark action per player: the last one."""
    return np.array(game.n_actions) - 1


def _keep_mask(game: GameSpec, benchmark) -> np.ndarray:
    bench = default_benchmark(game) if benchmark is None else np.asarray(benchmark, dtype=int)
    if bench.shape != (game.n_players,) or np.any(bench < 0) or np.any(bench >= game.n_actions):
        raise ValueError(f"invalid benchmark actions {benchmark!r}")
    mask = np.ones(game.dim, dtype=bool)
    mask[game.offsets[:-1] + bench] = False
    return mask


def _bench_index(game: GameSpec, benchmark) -> np.ndarray:
    bench = default_benchmark(game) if benchmark is None else np.asarray(benchmark, dtype=int)
    return game.offsets[:-1] + bench


def reduce(game: GameSpec, y, benchmark=None) -> np.ndarray:
    """Score differences ``z_ia = y_ia - y_i,bench`` with benchmarks dropped.

    Result has ``D - N`` entries on the last axis.
    """
    y = game.flatten(y)
    mask = _keep_mask(game, benchmark)
    ref = np.repeat(y[..., _bench_index(game, benchmark)], game.n_actions, axis=-1)
    return (y - ref)[..., mask]


def embed(game: GameSpec, z, benchmark=None) -> np.ndarray:
    """Scores with ``y_i,bench = 0`` whose differences are ``z``."""
    z = np.asarray(z, dtype=float)
    mask = _keep_mask(game, benchmark)
    if z.shape[-1] != mask.sum():
        raise ValueError(f"reduced state must have {mask.sum()} entries, got {z.shape[-1]}")
    y = np.zeros(z.shape[:-1] + (game.dim,))
    y[..., mask] = z
    return y


def reduced_choice(game: GameSpec, regs, z, benchmark=None) -> np.ndarray:
    return _system(game, regs).choice(embed(game, z, benchmark))


def reduced_field(game: GameSpec, regs, z, benchmark=None) -> np.ndarray:
    """``V_ia(z) = v_ia(Q(z)) - v_i,bench(Q(z))``."""
    sys_ = _system(game, regs)
    g = sys_.game
    y = embed(g, z, benchmark)
    return reduce(g, sys_.field(y), benchmark)


# ------------------------------------------------------ strategy-space fields
def _per_player_mean(game: GameSpec, vals, weights) -> np.ndarray:
    starts = game.offsets[:-1]
    num = np.add.reduceat(vals * weights, starts, axis=-1)
    den = np.add.reduceat(weights, starts, axis=-1)
    return np.repeat(num / den, game.n_actions, axis=-1)


def replicator_field(game: GameSpec, x) -> np.ndarray:
    """``x_ia (v_ia - <v_i, x_i>)``."""
    x = game.flatten(x)
    v = payoff_vectors(game, x)
    return x * (v - _per_player_mean(game, v, x))


def projection_field(game: GameSpec, x, support_tol: float = 0.0) -> np.ndarray:
    """Payoffs minus their mean over the support; zero off the support."""
    x = game.flatten(x)
    v = payoff_vectors(game, x)
    on = (x > support_tol).astype(float)
    return on * (v - _per_player_mean(game, v, on))


def mwu_step(game: GameSpec, x, eta) -> np.ndarray:
    """One multiplicative-weights update with per-player rates ``eta``."""
    x = game.flatten(x)
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (game.n_players,))
    if np.any(eta <= 0):
        raise ValueError("learning rates must be positive")
    v = payoff_vectors(game, x)
    s = np.repeat(eta, game.n_actions) * v
    starts = game.offsets[:-1]
    s = s - np.repeat(np.maximum.reduceat(s, starts, axis=-1), game.n_actions, axis=-1)
    w = x * np.exp(s)
    return w / np.repeat(np.add.reduceat(w, starts, axis=-1), game.n_actions, axis=-1)


# -------------------------------------------------------------- integration
@dataclass
class Trajectory:
    """Sampled solution of the score dynamics.

    ``y``, ``x`` and ``cum_v`` have shape ``(K, D)``; ``cum_u`` has shape
    ``(K, N)``.  ``cum_v`` and ``cum_u`` hold the running integrals of the
    payoff vectors and expected payoffs along the path.
    """

    game: GameSpec
    regs: list
    times: np.ndarray
    y: np.ndarray
    x: np.ndarray
    cum_v: np.ndarray
    cum_u: np.ndarray | None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def x0(self) -> np.ndarray:
        return self.x[0]

    def player(self, arr: np.ndarray, i: int) -> np.ndarray:
        return arr[..., self.game.slices()[i]]


def _n_steps(T: float, h: float) -> int:
    if not (T > 0 and h > 0):
        raise ValueError(f"need T > 0 and h > 0, got T={T}, h={h}")
    if h > T * (1 + 1e-12):
        raise ValueError(f"step h={h} exceeds the horizon T={T}")
    return max(1, int(round(T / h)))


def _sample_steps(n_steps: int, sample_every: int) -> np.ndarray:
    if sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    idx = np.arange(0, n_steps + 1, sample_every)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def integrate_many(game: GameSpec, regs, y0, T: float, h: float = 1e-3, method: str = "rk4",
                   sample_every: int = 1, backend: str = "auto") -> list[Trajectory]:
    """Integrate ``y' = v(Q(y))`` from each row of ``y0`` with a fixed step.

    The running payoff integrals use the same stage weights as the state
    (RK4) or the left rectangle rule (Euler).  ``backend="auto"`` uses the
    compiled kernel for polymatrix games with built-in regularizers and the
    numpy loop otherwise; ``"numpy"`` forces the latter.
    """
    sys_ = _system(game, regs)
    game = sys_.game
    Y = np.atleast_2d(game.flatten(y0)).astype(float)
    if not np.all(np.isfinite(Y)):
        raise RegularizerError("initial scores must be finite")
    method = method.lower()
    if method not in ("rk4", "euler"):
        raise ValueError(f"unknown method {method!r}; use 'rk4' or 'euler'")
    n_steps = _n_steps(T, h)
    steps = _sample_steps(n_steps, sample_every)
    B, D, N = Y.shape[0], game.dim, game.n_players
    K = len(steps)
    ys = np.empty((K, B, D))
    cvs = np.empty((K, B, D))
    cus = np.empty((K, B, N))
    cv = np.zeros((B, D))
    cu = np.zeros((B, N))
    ys[0], cvs[0], cus[0] = Y, cv, cu

    if backend not in ("auto", "numpy", "numba"):
        raise ValueError(f"unknown backend {backend!r}")
    compiled = game.is_polymatrix and all(r.kind in _kernels.KIND_CODES for r in sys_.regs)
    if backend == "numba" and not compiled:
        raise ValueError("the compiled backend needs a polymatrix game and built-in regularizers")
    if compiled and backend != "numpy":
        kinds = np.array([_kernels.KIND_CODES[r.kind] for r in sys_.regs], dtype=np.int64)
        ys, cvs, cus, fail = _kernels.integrate_polymatrix(
            np.ascontiguousarray(Y), sys_._MT, sys_._a, sys_._b, sys_.offsets.astype(np.int64),
            kinds, float(h), n_steps, steps.astype(np.int64), method == "rk4", DIVERGENCE_BOUND,
        )
        if fail >= 0:
            raise IntegrationDiverged(
                f"scores left the bound {DIVERGENCE_BOUND:g} at t={fail * h:g}", (fail - 1) * h
            )
        return _package(sys_, steps * h, ys, cvs, cus, h, method, sample_every)

    choice, payoffs, util = sys_.choice, sys_.payoffs, sys_.utilities

    def stage(y):
        x = choice(y)
        v = payoffs(x)
        return v, util(v, x)

    h2, h6 = 0.5 * h, h / 6.0
    k = 1
    for n in range(1, n_steps + 1):
        if method == "rk4":
            v1, u1 = stage(Y)
            v2, u2 = stage(Y + h2 * v1)
            v3, u3 = stage(Y + h2 * v2)
            v4, u4 = stage(Y + h * v3)
            dv = h6 * (v1 + 2.0 * (v2 + v3) + v4)
            du = h6 * (u1 + 2.0 * (u2 + u3) + u4)
        else:
            v1, u1 = stage(Y)
            dv, du = h * v1, h * u1
        Y = Y + dv
        cv = cv + dv
        cu = cu + du
        if not np.max(np.abs(Y)) <= DIVERGENCE_BOUND:
            raise IntegrationDiverged(
                f"scores left the bound {DIVERGENCE_BOUND:g} at t={n * h:g}", (n - 1) * h
            )
        if n == steps[k]:
            ys[k], cvs[k], cus[k] = Y, cv, cu
            k += 1

    log.debug("integrated %d trajectories, %d steps, %d samples", B, n_steps, K)
    return _package(sys_, steps * h, ys, cvs, cus, h, method, sample_every)


def _package(sys_, times, ys, cvs, cus, h, method, sample_every) -> list[Trajectory]:
    meta = {"h": h, "method": method, "game": sys_.game.digest(), "sample_every": sample_every,
            "regularizers": [r.kind for r in sys_.regs]}
    out = []
    for b in range(ys.shape[1]):
        y = np.ascontiguousarray(ys[:, b])
        out.append(Trajectory(sys_.game, sys_.regs, times.copy(), y, sys_.choice(y),
                              np.ascontiguousarray(cvs[:, b]), np.ascontiguousarray(cus[:, b]),
                              dict(meta)))
    return out


def integrate(game: GameSpec, regs, y0, T: float, h: float = 1e-3, method: str = "rk4",
              sample_every: int = 1, backend: str = "auto") -> Trajectory:
    """Single-trajectory front end to :func:`integrate_many`."""
    sys_ = _system(game, regs)
    y0 = sys_.game.flatten(y0)
    if y0.ndim != 1:
        raise ValueError("integrate takes one initial condition; use integrate_many for a batch")
    return integrate_many(sys_, regs, y0, T, h, method, sample_every, backend)[0]


def integrate_field(f: Callable[[np.ndarray], np.ndarray], s0, T: float, h: float = 1e-3,
                    method: str = "rk4", sample_every: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step integration of an arbitrary autonomous field ``s' = f(s)``.

    Returns ``(times, states)``.  Used for the strategy-space fields.
    """
    s = np.asarray(s0, dtype=float)
    n_steps = _n_steps(T, h)
    steps = _sample_steps(n_steps, sample_every)
    out = np.empty((len(steps),) + s.shape)
    out[0] = s
    k = 1
    for n in range(1, n_steps + 1):
        if method == "rk4":
            k1 = f(s)
            k2 = f(s + 0.5 * h * k1)
            k3 = f(s + 0.5 * h * k2)
            k4 = f(s + h * k3)
            s = s + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
        elif method == "euler":
            s = s + h * f(s)
        else:
            raise ValueError(f"unknown method {method!r}")
        if not np.all(np.isfinite(s)):
            raise IntegrationDiverged(f"state became non-finite at t={n * h:g}", (n - 1) * h)
        if n == steps[k]:
            out[k] = s
            k += 1
    return steps * h, out
