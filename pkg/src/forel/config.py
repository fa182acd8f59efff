"""Experiment configuration files (JSON)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .game import GameError, GameSpec, game_from_dict
from .regularizer import KINDS, RegularizerError, RegularizerSpec, preimage

KNOWN_ANALYSES = ("coupling", "regret", "divergence", "recurrence", "support")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    game: GameSpec
    regularizers: list[str]
    T: float
    h: float
    x0: list | None = None
    y0: list | None = None
    random: bool = False
    method: str = "rk4"
    sample_every: int = 10
    analyses: list = field(default_factory=lambda: list(KNOWN_ANALYSES))
    recurrence: dict = field(default_factory=lambda: {"epsilon": 1e-2, "t_min": 1.0})
    x_star: list | None = None
    seed: int = 0
    output: str = "out"
    raw: dict = field(default_factory=dict, repr=False)

    def initial_profile(self, seed: int | None = None):
        """``("x", profile)`` or ``("y", scores)`` for this run."""
        if self.y0 is not None:
            return "y", self.game.flatten(self.y0)
        if self.x0 is not None:
            return "x", self.game.flatten(self.x0)
        rng = np.random.default_rng(self.seed if seed is None else seed)
        return "x", np.concatenate([rng.dirichlet(np.ones(n)) for n in self.game.n_actions])


def _require(d: dict, key: str):
    if key not in d:
        raise ConfigError(f"missing required field {key!r}")
    return d[key]


def _positive(d: dict, key: str) -> float:
    val = _require(d, key)
    try:
        val = float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r} must be a number, got {val!r}") from None
    if not val > 0:
        raise ConfigError(f"field {key!r} must be positive, got {val}")
    return val


def load_config(src, base_dir: str | Path | None = None) -> ExperimentConfig:
    """Parse a config from a dict or a path to a JSON file."""
    if isinstance(src, (str, Path)):
        path = Path(src)
        try:
            d = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        base_dir = path.parent
    else:
        d = dict(src)
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")

    g = _require(d, "game")
    try:
        if isinstance(g, str):
            p = Path(g)
            if not p.is_absolute() and base_dir is not None:
                p = Path(base_dir) / p
            try:
                g = json.loads(p.read_text())
            except FileNotFoundError:
                raise ConfigError(f"game file {p} not found") from None
        game = game_from_dict(g)
    except GameError as exc:
        raise ConfigError(f"invalid game: {exc}") from None

    regs = d.get("regularizers", "entropic")
    if isinstance(regs, str):
        regs = [regs] * game.n_players
    regs = [str(r).lower() for r in regs]
    if len(regs) != game.n_players:
        raise ConfigError(f"field 'regularizers' needs {game.n_players} entries, got {len(regs)}")
    for r in regs:
        if r not in KINDS:
            raise ConfigError(f"unknown regularizer {r!r}; known: {sorted(KINDS)}")

    T = _positive(d, "T")
    h = _positive(d, "h")
    if h > T:
        raise ConfigError(f"step h={h} exceeds horizon T={T}")

    starts = [k for k in ("x0", "y0") if d.get(k) is not None] + (["random"] if d.get("random") else [])
    if len(starts) > 1:
        raise ConfigError(f"give exactly one of x0, y0, random; got {starts}")
    cfg = ExperimentConfig(
        game=game, regularizers=regs, T=T, h=h,
        x0=d.get("x0"), y0=d.get("y0"), random=bool(d.get("random", not starts)),
        method=str(d.get("method", "rk4")).lower(),
        sample_every=int(d.get("sample_every", 10)),
        seed=int(d.get("seed", 0)),
        output=str(d.get("output", "out")),
        x_star=d.get("x_star"),
        raw=d,
    )
    if cfg.method not in ("rk4", "euler"):
        raise ConfigError(f"field 'method' must be 'rk4' or 'euler', got {cfg.method!r}")
    if cfg.sample_every < 1:
        raise ConfigError("field 'sample_every' must be a positive integer")

    analyses = d.get("analyses")
    if analyses is not None:
        names = []
        for a in analyses:
            if isinstance(a, dict):
                ((name, opts),) = a.items()
                if name == "recurrence":
                    cfg.recurrence.update(opts)
            else:
                name = a
            if name not in KNOWN_ANALYSES:
                raise ConfigError(f"unknown analysis {name!r}; known: {list(KNOWN_ANALYSES)}")
            names.append(name)
        cfg.analyses = names
    if "recurrence" in d:
        cfg.recurrence.update(d["recurrence"])

    try:
        for k in ("x0", "y0", "x_star"):
            val = getattr(cfg, k)
            if val is not None:
                game.flatten(val)
        if cfg.x0 is not None:
            x = game.flatten(cfg.x0)
            sums = np.add.reduceat(x, game.offsets[:-1])
            if np.any(x < 0) or np.any(np.abs(sums - 1) > 1e-9):
                raise ConfigError("field 'x0' is not a mixed profile")
            for r, s in zip(regs, game.slices()):
                preimage(RegularizerSpec(r, s.stop - s.start), x[s])
    except (GameError, RegularizerError) as exc:
        raise ConfigError(f"field 'x0': {exc}" if isinstance(exc, RegularizerError) else str(exc)) from None
    return cfg
