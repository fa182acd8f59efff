"""Regularizers on the simplex, their convex conjugates and choice maps.

All functions act on the last axis, so a batch of score vectors of shape
``(B, n)`` is mapped in one call.

Two kinds ship: ``entropic`` (negative Gibbs entropy, logit choice) and
``euclidean`` (half squared norm, projection onto the simplex).  New kinds
are added by writing a subclass of :class:`_Kind` and registering it in
``KINDS``; nothing else dispatches on the kind name.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp, xlogy

SIMPLEX_TOL = 1e-9


class RegularizerError(ValueError):
    """Input outside the domain of a regularizer routine."""


class StrongConvexity(NamedTuple):
    K: float
    norm: str


class _Kind:
    name = ""
    smooth = False  # choice map is C^1 everywhere

    def h(self, x):
        raise NotImplementedError

    def choice(self, y):
        raise NotImplementedError

    def conjugate(self, y):
        x = self.choice(y)
        return np.sum(y * x, axis=-1) - self.h(x)

    def omega(self, n):
        raise NotImplementedError

    def max_h(self, n):
        """Largest value of ``h`` on the simplex (attained at the vertices)."""
        raise NotImplementedError

    def strong_convexity(self):
        raise NotImplementedError

    def preimage(self, x):
        raise NotImplementedError


class _Entropic(_Kind):
    name = "entropic"
    smooth = True

    def h(self, x):
        return np.sum(xlogy(x, x), axis=-1)

    def choice(self, y):
        w = np.exp(y - np.max(y, axis=-1, keepdims=True))
        return w / np.sum(w, axis=-1, keepdims=True)

    def conjugate(self, y):
        return logsumexp(y, axis=-1)

    def omega(self, n):
        return float(np.log(n))

    def max_h(self, n):
        return 0.0

    def strong_convexity(self):
        # Pinsker's inequality
        return StrongConvexity(1.0, "l1")

    def preimage(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise RegularizerError(
                "entropic scores need a strictly interior strategy (log of zero)"
            )
        return np.log(x)


class _Euclidean(_Kind):
    name = "euclidean"

    def h(self, x):
        return 0.5 * np.sum(x * x, axis=-1)

    def choice(self, y):
        return project_simplex(y)

    def omega(self, n):
        return 0.5 - 0.5 / n

    def max_h(self, n):
        return 0.5

    def strong_convexity(self):
        return StrongConvexity(1.0, "l2")

    def preimage(self, x):
        return np.array(x, dtype=float)


KINDS: dict[str, _Kind] = {k.name: k for k in (_Entropic(), _Euclidean())}


@dataclass(frozen=True)
class RegularizerSpec:
    """Penalty ``kind`` on the simplex with ``n`` vertices."""

    kind: str
    n: int

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in KINDS:
            raise RegularizerError(f"unknown regularizer {self.kind!r}; known: {sorted(KINDS)}")
        if int(self.n) < 2:
            raise RegularizerError(f"a simplex needs n >= 2 vertices, got {self.n}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "n", int(self.n))

    @property
    def impl(self) -> _Kind:
        return KINDS[self.kind]


def entropic(n: int) -> RegularizerSpec:
    return RegularizerSpec("entropic", n)


def euclidean(n: int) -> RegularizerSpec:
    return RegularizerSpec("euclidean", n)


def _last_axis(reg: RegularizerSpec, arr, what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.shape[-1:] != (reg.n,):
        raise RegularizerError(f"{what} must have last axis {reg.n}, got shape {arr.shape}")
    return arr


def h_value(reg: RegularizerSpec, x) -> np.ndarray | float:
    """Penalty value at a simplex point ``x``."""
    x = _last_axis(reg, x, "x")
    if np.any(x < -SIMPLEX_TOL) or np.any(np.abs(np.sum(x, axis=-1) - 1) > SIMPLEX_TOL):
        raise RegularizerError("h is only defined on the simplex")
    return reg.impl.h(np.clip(x, 0.0, None))


def choice_map(reg: RegularizerSpec, y) -> np.ndarray:
    """Maximizer of ``<y, x> - h(x)`` over the simplex."""
    y = _last_axis(reg, y, "y")
    if not np.all(np.isfinite(y)):
        raise RegularizerError("scores must be finite")
    return reg.impl.choice(y)


def conjugate(reg: RegularizerSpec, y) -> np.ndarray | float:
    """Convex conjugate ``h*(y) = max_x <y, x> - h(x)``."""
    y = _last_axis(reg, y, "y")
    if not np.all(np.isfinite(y)):
        raise RegularizerError("scores must be finite")
    return reg.impl.conjugate(y)


def omega(reg: RegularizerSpec) -> float:
    """Range ``max h - min h`` of the penalty over the simplex."""
    return reg.impl.omega(reg.n)


def max_h(reg: RegularizerSpec) -> float:
    """``max h`` over the simplex."""
    return float(reg.impl.max_h(reg.n))


def strong_convexity_constant(reg: RegularizerSpec) -> StrongConvexity:
    """Modulus of strong convexity and the norm it is measured in."""
    return reg.impl.strong_convexity()


def preimage(reg: RegularizerSpec, x) -> np.ndarray:
    """A score vector mapped to ``x`` by the choice map.

    Entropic: ``log x`` (requires ``x > 0``).  Euclidean: ``x`` itself.
    """
    return reg.impl.preimage(_last_axis(reg, x, "x"))


def project_simplex(y) -> np.ndarray:
    """Euclidean projection onto the probability simplex along the last axis.

    Sort-and-threshold: find the largest ``k`` with
    ``u_k > (sum_{j<=k} u_j - 1) / k`` for ``u`` sorted descending, then clip
    ``y - theta`` at zero.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    u = -np.sort(-y, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, n + 1)
    cond = u - css / k > 0
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    x = np.maximum(y - theta, 0.0)
    on = np.all(y >= 0, axis=-1, keepdims=True) & (np.sum(y, axis=-1, keepdims=True) == 1.0)
    return np.where(on, y, x)
