"""Command-line front end: ``forel simulate|analyze|equilibrium|sweep``.

Exit codes: 0 on success, 2 for configuration or input-file errors, 3 when
an integration diverges.  ``FOREL_LOG=error|info|debug`` sets the log level.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import ForelSystem, IntegrationDiverged, Trajectory, integrate
from .equilibrium import (EquilibriumError, EquilibriumReport, interior_equilibrium,
                          max_support_equilibrium, zero_sum_matrix)
from .game import GameError, GameSpec, game_from_dict
from .io import CSVFormatError, read_table, trajectory_from_csv, write_diagnostics_csv, write_table, \
    write_trajectory_csv
from .regularizer import KINDS, omega

log = logging.getLogger("forel")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3

SUMMARY_HEADER = ["run", "config_hash", "seed", "regularizers", "G_max_dev", "G_weighted_max_dev",
                  "regret_margin", "classification", "first_return_time"]


# ---------------------------------------------------------------- helpers
def reference_equilibrium(game: GameSpec, x_star=None) -> EquilibriumReport | None:
    """Equilibrium used for the coupling and the face mass, or ``None``.

    An explicit ``x_star`` wins; two-player constant-sum games get the
    maximal-support equilibrium; other polymatrix games get their interior
    equilibrium when one exists.
    """
    if x_star is not None:
        xs = game.split(game.flatten(x_star))
        ess = [[int(a) for a in np.flatnonzero(x > 0)] for x in xs]
        return EquilibriumReport(math.nan, xs, ess)
    try:
        if game.is_polymatrix and game.n_players == 2 and len(game.edges) == 1:
            return max_support_equilibrium(zero_sum_matrix(game))
        xs = game.split(interior_equilibrium(game))
        return EquilibriumReport(math.nan, xs, [list(range(n)) for n in game.n_actions])
    except EquilibriumError as exc:
        log.info("no reference equilibrium: %s", exc)
        return None


def initial_scores(cfg: ExperimentConfig, seed: int | None = None) -> np.ndarray:
    kind, vec = cfg.initial_profile(seed)
    if kind == "y":
        return vec
    return ForelSystem(cfg.game, cfg.regularizers).preimage(vec)


def run(cfg: ExperimentConfig, seed: int | None = None) -> Trajectory:
    y0 = initial_scores(cfg, seed)
    return integrate(cfg.game, cfg.regularizers, y0, cfg.T, cfg.h, cfg.method, cfg.sample_every)


@dataclass
class Diagnostics:
    times: np.ndarray
    G: np.ndarray
    G_weighted: np.ndarray
    regrets: np.ndarray  # (K, N), nan at t = 0
    dist: np.ndarray
    mass: np.ndarray


def diagnostics(traj: Trajectory, eq: EquilibriumReport | None, regrets=None) -> Diagnostics:
    game = traj.game
    K, N = len(traj.times), game.n_players
    if eq is not None:
        G = an.coupling_series(traj, an.make_reference(game, eq))
        Gw = an.coupling_series(traj, an.make_reference(game, eq, an.coupling_weights(game)))
        mass = an.face_mass(game, traj.x, eq.essential)
    else:
        G = Gw = mass = np.full(K, math.nan)
    if regrets is None:
        regrets = np.full((K, N), math.nan)
        keep = traj.times > 0
        for i in range(N):
            regrets[keep, i] = an.regret(traj, i)[1]
    dist = an.profile_distance(traj.x, traj.x[0])
    return Diagnostics(traj.times, G, Gw, regrets, dist, mass)


def _max_dev(series) -> float | None:
    return None if np.all(np.isnan(series)) else an.max_deviation(series)


def summarize(traj: Trajectory, cfg: ExperimentConfig, eq: EquilibriumReport | None,
              diag: Diagnostics) -> dict:
    """Report dict shared by ``analyze`` and ``sweep``."""
    out: dict = {"game": traj.game.digest(), "regularizers": [r.kind for r in traj.regs]}
    out["G_max_dev"] = _max_dev(diag.G)
    out["G_weighted_max_dev"] = _max_dev(diag.G_weighted)
    keep = diag.times > 0
    t = diag.times[keep]
    margins = [float(np.min(omega(r) / t - diag.regrets[keep, i])) for i, r in enumerate(traj.regs)]
    out["regret_margin"] = margins
    rec = cfg.recurrence
    try:
        out["recurrence"] = an.recurrence_stats(traj, float(rec["epsilon"]), float(rec["t_min"])).to_dict()
    except ValueError as exc:
        log.info("recurrence skipped: %s", exc)
        out["recurrence"] = None
    if eq is not None:
        cls = an.support_classification(traj, eq)
        out.update(classification=cls.verdict, support=cls.support, final_face_mass=cls.final_face_mass)
    else:
        out.update(classification=an.UNDETERMINED, support=None, final_face_mass=None)
    return out


def _flatten_report(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    rows = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows += _flatten_report(v, key + ".")
        elif isinstance(v, list):
            rows.append((key, json.dumps(v)))
        else:
            rows.append((key, "" if v is None else v))
    return rows


def emit(report: dict, fmt: str, out_dir: str | None, stem: str) -> None:
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
        name = f"{stem}.json"
    else:
        lines = ["key,value"] + [f"{k},{format(v, '.17g') if isinstance(v, float) else v}"
                                 for k, v in _flatten_report(report)]
        text = "\n".join(lines) + "\n"
        name = f"{stem}.csv"
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / name).write_text(text)
    sys.stdout.write(text)


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


# --------------------------------------------------------------- commands
def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(args.out or cfg.output)
    traj = run(cfg)
    eq = reference_equilibrium(cfg.game, cfg.x_star)
    d = diagnostics(traj, eq)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(traj, out / "trajectory.csv")
    write_diagnostics_csv(out / "diagnostics.csv", d.times, d.G, d.G_weighted, d.regrets, d.dist, d.mass)
    log.info("wrote %d samples to %s", len(traj.times), out)
    return EXIT_OK


def _regrets_from_diagnostics(path: Path, times, n_players) -> np.ndarray | None:
    if not path.exists():
        return None
    header, data = read_table(path)
    cols = [f"regret_{i + 1}" for i in range(n_players)]
    if any(c not in header for c in cols) or data.shape[0] != len(times):
        raise CSVFormatError(f"{path} does not match the trajectory")
    if np.any(data[:, header.index("t")] != times):
        raise CSVFormatError(f"{path}: time column differs from the trajectory")
    return data[:, [header.index(c) for c in cols]]


def _regrets_from_samples(traj: Trajectory) -> np.ndarray:
    """Regret from sampled profiles only (trapezoid rule on the payoffs)."""
    sys_ = ForelSystem(traj.game, traj.regs)
    v = sys_.payoffs(traj.x)
    u = sys_.utilities(v, traj.x)
    dt = np.diff(traj.times)[:, None]
    cum_u = np.vstack([np.zeros((1, u.shape[1])), np.cumsum(0.5 * dt * (u[1:] + u[:-1]), axis=0)])
    traj = replace(traj, cum_u=cum_u)
    out = np.full(cum_u.shape, math.nan)
    keep = traj.times > 0
    for i in range(u.shape[1]):
        out[keep, i] = an.regret(traj, i)[1]
    return out


def cmd_analyze(args) -> int:
    cfg = _load(args)
    path = Path(args.trajectory) if args.trajectory else Path(cfg.output) / "trajectory.csv"
    traj = trajectory_from_csv(path, cfg.game, ForelSystem(cfg.game, cfg.regularizers).regs)
    regrets = _regrets_from_diagnostics(path.parent / "diagnostics.csv", traj.times, cfg.game.n_players)
    if regrets is None:
        log.info("no diagnostics.csv next to %s; regret from sampled payoffs", path)
        regrets = _regrets_from_samples(traj)
    eq = reference_equilibrium(cfg.game, cfg.x_star)
    report = summarize(traj, cfg, eq, diagnostics(traj, eq, regrets))
    emit(report, args.format, args.out, "report")
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    if not args.config:
        raise ConfigError("--config is required")
    try:
        d = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {args.config} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from None
    g = d.get("game", d) if isinstance(d, dict) else d
    if isinstance(g, str):
        p = Path(g)
        if not p.is_absolute():
            p = Path(args.config).parent / p
        g = json.loads(p.read_text())
    try:
        game = game_from_dict(g)
    except GameError as exc:
        raise ConfigError(f"invalid game: {exc}") from None
    try:
        if game.is_polymatrix and game.n_players == 2 and len(game.edges) == 1:
            report = max_support_equilibrium(zero_sum_matrix(game)).to_dict()
        else:
            xs = game.split(interior_equilibrium(game))
            report = {"value": None, "x_star": [x.tolist() for x in xs],
                      "essential": [list(range(n)) for n in game.n_actions], "margins": [{} for _ in xs]}
    except EquilibriumError as exc:
        raise ConfigError(f"no equilibrium computed: {exc}") from None
    emit(report, args.format, args.out, "equilibrium")
    return EXIT_OK


def _config_hash(cfg: ExperimentConfig, regs: list[str], seed: int) -> str:
    kind, vec = cfg.initial_profile(seed)
    blob = json.dumps({"game": cfg.game.digest(), "regularizers": regs, "start": [kind, vec.tolist()],
                       "T": cfg.T, "h": cfg.h, "method": cfg.method, "sample_every": cfg.sample_every},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _sweep_one(job) -> list:
    """Run one grid point; returns its summary row.  Top level so it pickles."""
    idx, cfg, regs, seed, run_dir = job
    cfg = replace(cfg, regularizers=regs)
    traj = run(cfg, seed)
    eq = reference_equilibrium(cfg.game, cfg.x_star)
    d = diagnostics(traj, eq)
    rep = summarize(traj, cfg, eq, d)
    if run_dir is not None:
        run_dir.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, run_dir / "trajectory.csv")
        write_diagnostics_csv(run_dir / "diagnostics.csv", d.times, d.G, d.G_weighted, d.regrets, d.dist, d.mass)
    first = rep["recurrence"]["first_return_time"] if rep["recurrence"] else None
    nan_if_none = (lambda v: math.nan if v is None else float(v))
    return [idx, _config_hash(cfg, regs, seed), seed, "|".join(regs), nan_if_none(rep["G_max_dev"]),
            nan_if_none(rep["G_weighted_max_dev"]), float(min(rep["regret_margin"])),
            rep["classification"], "" if first is None else float(first)]


def sweep_jobs(cfg: ExperimentConfig, out: Path) -> list:
    grid = cfg.raw.get("grid")
    if not isinstance(grid, dict):
        raise ConfigError("missing required field 'grid'")
    if "seeds" in grid:
        seeds = [int(s) for s in grid["seeds"]]
    elif "n_seeds" in grid:
        seeds = [cfg.seed + k for k in range(int(grid["n_seeds"]))]
    else:
        raise ConfigError("missing required field 'grid.seeds' (or 'grid.n_seeds')")
    assignments = grid.get("regularizers", [cfg.regularizers])
    regs_list = []
    for a in assignments:
        regs = [a] * cfg.game.n_players if isinstance(a, str) else list(a)
        regs = [str(r).lower() for r in regs]
        if len(regs) != cfg.game.n_players or any(r not in KINDS for r in regs):
            raise ConfigError(f"grid.regularizers: bad assignment {a!r} for {cfg.game.n_players} players")
        regs_list.append(regs)
    n_runs = len(seeds) * len(regs_list)
    if n_runs > 10_000:
        raise ConfigError(f"grid has {n_runs} runs; at most 10000 are allowed")
    write_runs = bool(grid.get("write_runs", False))
    jobs = []
    for regs in regs_list:
        for seed in seeds:
            idx = len(jobs)
            jobs.append((idx, cfg, regs, seed, out / f"run_{idx:05d}" if write_runs else None))
    return jobs


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = Path(args.out or cfg.output)
    jobs = sweep_jobs(cfg, out)
    workers = args.workers or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))  # map keeps submission order
    else:
        rows = [_sweep_one(j) for j in jobs]
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "summary.csv", SUMMARY_HEADER, rows)
    log.info("wrote %d summary rows to %s", len(rows), out / "summary.csv")
    return EXIT_OK


# ------------------------------------------------------------------- main
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--out", help="output directory (overrides the config's 'output')")
    common.add_argument("--seed", type=int, help="seed for random initial conditions")
    common.add_argument("--format", choices=("csv", "json"), default="json", help="report format")

    p = argparse.ArgumentParser(prog="forel", description="FoReL dynamics in constant-sum games.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate and write trajectory/diagnostics CSVs")
    a = sub.add_parser("analyze", parents=[common], help="report on a trajectory CSV")
    a.add_argument("trajectory", nargs="?", help="trajectory.csv (default: <output>/trajectory.csv)")
    sub.add_parser("equilibrium", parents=[common], help="maximal-support or interior equilibrium")
    s = sub.add_parser("sweep", parents=[common], help="grid of seeds x regularizer assignments")
    s.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    return p


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze, "equilibrium": cmd_equilibrium,
            "sweep": cmd_sweep}


def main(argv=None) -> int:
    level = os.environ.get("FOREL_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CSVFormatError) as exc:
        print(f"forel: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationDiverged as exc:
        print(f"forel: integration diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
