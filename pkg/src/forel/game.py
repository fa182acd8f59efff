"""Finite games: two-player zero-sum, N-player polymatrix, and positive-affine
transforms of either.

Mixed profiles are handled in two layouts.  The *ragged* layout is a list of
1-D arrays, one per player.  The *flat* layout concatenates those arrays into
one vector (or a batch of vectors along the last axis); ``GameSpec.offsets``
gives the slice boundaries.  Every payoff routine accepts both.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CONSTANT_SUM_TOL = 1e-12
SIMPLEX_TOL = 1e-9


class GameError(ValueError):
    """Malformed game description or profile of the wrong shape."""


@dataclass(frozen=True)
class Edge:
    """One pairwise game of a polymatrix game.

    ``u_ij[a, b]`` is the payoff to player ``i`` when ``i`` plays ``a`` and
    ``j`` plays ``b``; ``u_ji[b, a]`` is the payoff to ``j``.
    """

    i: int
    j: int
    u_ij: np.ndarray
    u_ji: np.ndarray


@dataclass(frozen=True)
class ConstantSumReport:
    """Outcome of :func:`validate_constant_sum` for one edge."""

    i: int
    j: int
    ok: bool
    gamma: float
    max_violation: float
    cell: tuple[int, int] | None = None


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Immutable game description.

    Build instances through :meth:`polymatrix`, :meth:`normal_form` or
    :meth:`zero_sum` rather than the raw constructor.
    """

    n_actions: tuple[int, ...]
    edges: tuple[Edge, ...] = ()
    tensors: tuple[np.ndarray, ...] | None = None
    scale: np.ndarray = field(default=None)  # type: ignore[assignment]
    offset: np.ndarray = field(default=None)  # type: ignore[assignment]
    constant_sum: bool = False
    labels: tuple[tuple[str, ...], ...] | None = None

    # ------------------------------------------------------------------ build
    def __post_init__(self):
        n = tuple(int(k) for k in self.n_actions)
        if len(n) < 1:
            raise GameError("a game needs at least one player")
        if any(k < 2 for k in n):
            raise GameError(f"every player needs at least two actions, got {n}")
        object.__setattr__(self, "n_actions", n)
        N = len(n)
        a = np.ones(N) if self.scale is None else np.asarray(self.scale, float).copy()
        b = np.zeros(N) if self.offset is None else np.asarray(self.offset, float).copy()
        if a.shape != (N,) or b.shape != (N,):
            raise GameError("affine scales/offsets need one entry per player")
        if np.any(a <= 0) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise GameError(f"affine scales must be positive and finite, got {a}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "scale", a)
        object.__setattr__(self, "offset", b)

        if self.tensors is not None:
            if self.edges:
                raise GameError("a game is either normal-form or polymatrix, not both")
            ts = []
            for i, t in enumerate(self.tensors):
                t = np.array(t, dtype=float)
                if t.shape != n:
                    raise GameError(f"payoff tensor of player {i} has shape {t.shape}, expected {n}")
                t.setflags(write=False)
                ts.append(t)
            if len(ts) != N:
                raise GameError(f"need {N} payoff tensors, got {len(ts)}")
            object.__setattr__(self, "tensors", tuple(ts))
        else:
            seen = set()
            edges = []
            for e in self.edges:
                i, j = int(e.i), int(e.j)
                if i == j:
                    raise GameError(f"edge endpoints must differ, got ({i}, {j})")
                if not (0 <= i < N and 0 <= j < N):
                    raise GameError(f"edge ({i}, {j}) references an unknown player")
                key = frozenset((i, j))
                if key in seen:
                    raise GameError(f"edge {{{i}, {j}}} appears twice")
                seen.add(key)
                u_ij = np.array(e.u_ij, dtype=float)
                u_ji = np.array(e.u_ji, dtype=float)
                if u_ij.shape != (n[i], n[j]) or u_ji.shape != (n[j], n[i]):
                    raise GameError(
                        f"edge ({i}, {j}): expected shapes {(n[i], n[j])} and {(n[j], n[i])}, "
                        f"got {u_ij.shape} and {u_ji.shape}"
                    )
                u_ij.setflags(write=False)
                u_ji.setflags(write=False)
                edges.append(Edge(i, j, u_ij, u_ji))
            object.__setattr__(self, "edges", tuple(edges))
            object.__setattr__(self, "_payoff_matrix", self._assemble())

        if self.constant_sum:
            bad = [r for r in validate_constant_sum(self) if not r.ok]
            if bad:
                r = bad[0]
                raise GameError(
                    f"edge ({r.i}, {r.j}) is not constant-sum: deviation {r.max_violation:.3g} "
                    f"at cell {r.cell}"
                )

    @classmethod
    def polymatrix(cls, n_actions, edges, scale=None, offset=None, constant_sum=False, labels=None):
        """Polymatrix game from ``(i, j, u_ij, u_ji)`` tuples or :class:`Edge` objects."""
        es = tuple(e if isinstance(e, Edge) else Edge(*e) for e in edges)
        return cls(tuple(n_actions), es, None, scale, offset, constant_sum, labels)

    @classmethod
    def normal_form(cls, tensors, scale=None, offset=None, constant_sum=False, labels=None):
        """Normal-form game from one payoff tensor per player.

        Two-player games whose payoffs sum to a constant are stored as a
        single-edge polymatrix game so downstream code sees one representation.
        """
        ts = [np.asarray(t, dtype=float) for t in tensors]
        n_actions = ts[0].shape
        if len(ts) == 2 and ts[0].ndim == 2 and ts[1].shape == ts[0].shape:
            s = ts[0] + ts[1]
            if np.max(np.abs(s - s.flat[0])) <= CONSTANT_SUM_TOL:
                return cls.polymatrix(
                    n_actions, [(0, 1, ts[0], ts[1].T)], scale, offset, constant_sum, labels
                )
        return cls(tuple(n_actions), (), tuple(ts), scale, offset, constant_sum, labels)

    @classmethod
    def zero_sum(cls, A, scale=None, offset=None, labels=None):
        """Two-player zero-sum game where ``A`` is the row player's payoff."""
        A = np.asarray(A, dtype=float)
        if A.ndim != 2:
            raise GameError("payoff matrix must be 2-D")
        return cls.polymatrix(A.shape, [(0, 1, A, -A.T)], scale, offset, True, labels)

    # ------------------------------------------------------------- structure
    @property
    def n_players(self) -> int:
        return len(self.n_actions)

    @property
    def is_polymatrix(self) -> bool:
        return self.tensors is None

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.n_actions)])

    @property
    def dim(self) -> int:
        return int(sum(self.n_actions))

    def slices(self) -> list[slice]:
        o = self.offsets
        return [slice(int(o[k]), int(o[k + 1])) for k in range(self.n_players)]

    def split(self, flat: np.ndarray) -> list[np.ndarray]:
        """Flat (…, D) array to a list of per-player views (…, n_i)."""
        flat = np.asarray(flat)
        if flat.shape[-1] != self.dim:
            raise GameError(f"expected last axis of length {self.dim}, got {flat.shape[-1]}")
        return [flat[..., s] for s in self.slices()]

    def flatten(self, profile) -> np.ndarray:
        """Ragged or flat profile to a flat float array, with shape checks."""
        if not isinstance(profile, np.ndarray):
            try:
                arr = np.asarray(profile, dtype=float)
            except ValueError:  # ragged
                arr = None
            # a ragged profile stacks to (N, n) with n < dim, so this is unambiguous
            if arr is not None and arr.ndim >= 1 and arr.shape[-1] == self.dim:
                profile = arr
        if isinstance(profile, np.ndarray) and profile.dtype != object:
            flat = np.asarray(profile, dtype=float)
            if flat.shape[-1] != self.dim:
                raise GameError(f"expected a profile of length {self.dim}, got {flat.shape[-1]}")
            return flat
        parts = [np.asarray(p, dtype=float) for p in profile]
        if len(parts) != self.n_players:
            raise GameError(f"expected {self.n_players} strategies, got {len(parts)}")
        for k, (p, n) in enumerate(zip(parts, self.n_actions)):
            if p.shape[-1:] != (n,):
                raise GameError(f"player {k} has {n} actions, strategy has shape {p.shape}")
        return np.concatenate(parts, axis=-1)

    def payoff_matrix(self) -> np.ndarray:
        """Block matrix ``M`` of the unscaled polymatrix game: ``v = a * (M x) + b``."""
        if not self.is_polymatrix:
            raise GameError("normal-form games with more than two players have no payoff matrix")
        return self._payoff_matrix  # type: ignore[attr-defined]

    def _assemble(self) -> np.ndarray:
        M = np.zeros((self.dim, self.dim))
        sl = self.slices()
        for e in self.edges:
            M[sl[e.i], sl[e.j]] += e.u_ij
            M[sl[e.j], sl[e.i]] += e.u_ji
        M.setflags(write=False)
        return M

    def neighbors(self, i: int) -> list[int]:
        out = []
        for e in self.edges:
            if e.i == i:
                out.append(e.j)
            elif e.j == i:
                out.append(e.i)
        return out

    def with_affine(self, scale, offset) -> "GameSpec":
        """Same underlying game with different per-player affine transform."""
        if self.is_polymatrix:
            return GameSpec.polymatrix(
                self.n_actions, self.edges, scale, offset, self.constant_sum, self.labels
            )
        return GameSpec(self.n_actions, (), self.tensors, scale, offset, self.constant_sum, self.labels)

    def digest(self) -> str:
        """Stable short hash of the game's content."""
        return hashlib.sha256(json.dumps(game_to_dict(self), sort_keys=True).encode()).hexdigest()[:16]

    def __repr__(self):
        kind = "polymatrix" if self.is_polymatrix else "normal"
        return f"GameSpec({kind}, n_actions={self.n_actions}, edges={len(self.edges)})"


# ----------------------------------------------------------------- payoffs
def _check_profile(game: GameSpec, x) -> np.ndarray:
    flat = game.flatten(x)
    if not np.all(np.isfinite(flat)):
        raise GameError("profile has non-finite entries")
    return flat


def payoff_vectors(game: GameSpec, x) -> np.ndarray:
    """All players' payoff vectors, flat layout ``(…, D)``.

    Entry ``(i, a)`` is the (affinely transformed) payoff to player ``i`` for
    pure action ``a`` against the others' mixed strategies in ``x``.
    """
    flat = _check_profile(game, x)
    a = np.repeat(game.scale, game.n_actions)
    b = np.repeat(game.offset, game.n_actions)
    if game.is_polymatrix:
        return a * (flat @ game.payoff_matrix().T) + b
    parts = game.split(flat)
    letters = "abcdefghijklmnopqrstuvwxyz"[: game.n_players]
    out = []
    for i, t in enumerate(game.tensors):
        others = [j for j in range(game.n_players) if j != i]
        if not others:  # single decision maker: payoffs do not depend on play
            out.append(np.broadcast_to(t, flat.shape[:-1] + t.shape))
            continue
        spec = letters + "," + ",".join("..." + letters[j] for j in others) + "->..." + letters[i]
        out.append(np.einsum(spec, t, *(parts[j] for j in others)))
    return a * np.concatenate(out, axis=-1) + b


def payoff_vector(game: GameSpec, x, i: int) -> np.ndarray:
    """Payoff vector of player ``i``: ``a_i * v_i(x) + b_i``."""
    _check_player(game, i)
    return game.split(payoff_vectors(game, x))[i]


def expected_payoff(game: GameSpec, x, i: int) -> float:
    """Expected payoff ``a_i * u_i(x) + b_i`` of player ``i``."""
    _check_player(game, i)
    flat = _check_profile(game, x)
    v = game.split(payoff_vectors(game, flat))[i]
    xi = game.split(flat)[i]
    # <v_i, x_i> carries b_i exactly once because x_i sums to one
    return np.sum(v * xi, axis=-1)


def expected_payoffs(game: GameSpec, x) -> np.ndarray:
    """All players' expected payoffs, shape ``(…, N)``."""
    flat = _check_profile(game, x)
    prod = payoff_vectors(game, flat) * flat
    return np.add.reduceat(prod, game.offsets[:-1], axis=-1)


def _check_player(game, i):
    if not 0 <= i < game.n_players:
        raise GameError(f"no player {i} in a {game.n_players}-player game")


def is_profile(game: GameSpec, x, tol: float = SIMPLEX_TOL) -> bool:
    """Whether ``x`` is a valid mixed profile up to ``tol``."""
    try:
        flat = game.flatten(x)
    except GameError:
        return False
    if np.any(flat < -tol):
        return False
    sums = np.add.reduceat(flat, game.offsets[:-1], axis=-1)
    return bool(np.all(np.abs(sums - 1) <= tol))


def uniform_profile(game: GameSpec) -> np.ndarray:
    return np.concatenate([np.full(n, 1.0 / n) for n in game.n_actions])


def validate_constant_sum(game: GameSpec, tol: float = CONSTANT_SUM_TOL) -> list[ConstantSumReport]:
    """Check each edge for ``u_ij(a, b) + u_ji(b, a) = gamma``.

    Affine transforms are ignored; they act on players, not edges.
    """
    if not game.is_polymatrix:
        raise GameError("constant-sum validation needs a polymatrix (or 2-player constant-sum) game")
    out = []
    for e in game.edges:
        s = e.u_ij + e.u_ji.T
        gamma = float(s.flat[0])
        dev = np.abs(s - gamma)
        k = int(np.argmax(dev))
        worst = float(dev.flat[k])
        if worst <= tol:
            out.append(ConstantSumReport(e.i, e.j, True, gamma, worst))
        else:
            # report the cell that disagrees with the majority value
            vals, counts = np.unique(s, return_counts=True)
            gamma = float(vals[np.argmax(counts)])
            dev = np.abs(s - gamma)
            k = int(np.argmax(dev))
            cell = tuple(int(c) for c in np.unravel_index(k, s.shape))
            out.append(ConstantSumReport(e.i, e.j, False, gamma, float(dev.flat[k]), cell))
    return out


# ------------------------------------------------------------ constructors
MATCHING_PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])


def matching_pennies(scale=None, offset=None) -> GameSpec:
    return GameSpec.zero_sum(MATCHING_PENNIES, scale, offset)


def cycle_game(A: Sequence[Sequence[float]] | None = None, n_players: int = 3,
               weights: Sequence[float] | None = None, scale=None, offset=None) -> GameSpec:
    """Players on a ring, each playing the zero-sum game ``A`` against the next.

    ``weights`` multiplies the payoffs of each edge (both sides), which keeps
    every edge zero-sum.
    """
    A = MATCHING_PENNIES if A is None else np.asarray(A, dtype=float)
    w = np.ones(n_players) if weights is None else np.asarray(weights, dtype=float)
    m, n = A.shape
    if m != n:
        raise GameError("cycle games need a square stage game")
    edges = [(k, (k + 1) % n_players, w[k] * A, -w[k] * A.T) for k in range(n_players)]
    return GameSpec.polymatrix([m] * n_players, edges, scale, offset, constant_sum=True)


# ------------------------------------------------------------ serialization
def game_to_dict(game: GameSpec) -> dict:
    d: dict = {"players": game.n_players, "actions": list(game.n_actions)}
    if game.is_polymatrix:
        d["form"] = "polymatrix"
        d["edges"] = [
            {"i": e.i, "j": e.j, "u_ij": e.u_ij.tolist(), "u_ji": e.u_ji.tolist()} for e in game.edges
        ]
    else:
        d["form"] = "normal"
        d["tensors"] = [t.tolist() for t in game.tensors]
    d["affine"] = [{"a": float(a), "b": float(b)} for a, b in zip(game.scale, game.offset)]
    d["constant_sum"] = bool(game.constant_sum)
    return d


def game_from_dict(d: dict) -> GameSpec:
    """Parse the JSON game schema (0-based player indices)."""
    try:
        n_actions = [int(k) for k in d["actions"]]
        N = int(d.get("players", len(n_actions)))
        if N != len(n_actions):
            raise GameError(f"'players' is {N} but 'actions' lists {len(n_actions)} players")
        affine = d.get("affine")
        scale = offset = None
        if affine is not None:
            if len(affine) != N:
                raise GameError("'affine' needs one entry per player")
            scale = [float(t.get("a", 1.0)) for t in affine]
            offset = [float(t.get("b", 0.0)) for t in affine]
        cs = bool(d.get("constant_sum", False))
        form = d.get("form", "polymatrix")
        if form == "polymatrix":
            edges = [(int(e["i"]), int(e["j"]), e["u_ij"], e["u_ji"]) for e in d["edges"]]
            return GameSpec.polymatrix(n_actions, edges, scale, offset, cs)
        if form == "normal":
            g = GameSpec.normal_form(d["tensors"], scale, offset, cs)
            if g.n_actions != tuple(n_actions):
                raise GameError(f"tensor shape {g.n_actions} disagrees with 'actions' {n_actions}")
            return g
        raise GameError(f"unknown game form {form!r}")
    except KeyError as exc:
        raise GameError(f"game description is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GameError):
            raise
        raise GameError(f"malformed game description: {exc}") from None
