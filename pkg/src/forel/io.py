"""Long-format trajectory CSV and diagnostics CSV."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .game import GameSpec

TRAJECTORY_HEADER = ["t", "player", "action", "x", "y", "cum_v"]


class CSVFormatError(ValueError):
    """A trajectory or diagnostics file does not have the expected layout."""


def fmt(v: float) -> str:
    # 17 significant digits round-trip every double
    return format(float(v), ".17g")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    game = traj.game
    owner = np.repeat(np.arange(game.n_players), game.n_actions)
    action = np.concatenate([np.arange(n) for n in game.n_actions])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for k, t in enumerate(traj.times):
            ts = fmt(t)
            for d in range(game.dim):
                w.writerow([ts, int(owner[d]), int(action[d]),
                            fmt(traj.x[k, d]), fmt(traj.y[k, d]), fmt(traj.cum_v[k, d])])


def read_trajectory_csv(path, game: GameSpec) -> dict:
    """Arrays ``times``, ``x``, ``y``, ``cum_v`` from a long-format CSV."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise CSVFormatError(f"trajectory file {path} not found") from None
    if not rows or rows[0] != TRAJECTORY_HEADER:
        raise CSVFormatError(f"{path}: expected header {','.join(TRAJECTORY_HEADER)}")
    body = rows[1:]
    D = game.dim
    if len(body) == 0 or len(body) % D:
        raise CSVFormatError(f"{path}: {len(body)} rows is not a multiple of the profile size {D}")
    try:
        arr = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise CSVFormatError(f"{path}: non-numeric entry ({exc})") from None
    if arr.shape[1] != len(TRAJECTORY_HEADER):
        raise CSVFormatError(f"{path}: rows must have {len(TRAJECTORY_HEADER)} columns")
    K = len(body) // D
    arr = arr.reshape(K, D, -1)
    owner = np.repeat(np.arange(game.n_players), game.n_actions)
    action = np.concatenate([np.arange(n) for n in game.n_actions])
    if not (np.all(arr[:, :, 1] == owner) and np.all(arr[:, :, 2] == action)):
        raise CSVFormatError(f"{path}: player/action columns do not match the game")
    times = arr[:, 0, 0]
    if np.any(arr[:, :, 0] != times[:, None]) or np.any(np.diff(times) <= 0):
        raise CSVFormatError(f"{path}: time column is inconsistent")
    return {"times": times, "x": arr[:, :, 3], "y": arr[:, :, 4], "cum_v": arr[:, :, 5]}


def write_table(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def read_table(path) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise CSVFormatError(f"file {path} not found") from None
    if not rows:
        raise CSVFormatError(f"{path} is empty")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]])
    except ValueError as exc:
        raise CSVFormatError(f"{path}: non-numeric entry ({exc})") from None
    return rows[0], data


def write_diagnostics_csv(path, times, G, Gw, regrets, dist, mass) -> None:
    N = regrets.shape[1]
    header = ["t", "G", "G_weighted"] + [f"regret_{i + 1}" for i in range(N)] + ["dist_to_x0", "face_mass"]
    rows = []
    for k, t in enumerate(times):
        rows.append([float(t), float(G[k]), float(Gw[k])] + [float(r) for r in regrets[k]]
                    + [float(dist[k]), float(mass[k])])
    write_table(path, header, rows)


def trajectory_from_csv(path, game: GameSpec, regs) -> Trajectory:
    """Trajectory without payoff integral of the expected payoff (``cum_u=None``)."""
    d = read_trajectory_csv(path, game)
    return Trajectory(game, regs, d["times"], d["y"], d["x"], d["cum_v"], None, {"source": str(path)})
