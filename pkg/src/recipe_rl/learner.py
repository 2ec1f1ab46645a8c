"""Tabular Q-learning over the recipe lattice.

Random numbers come from one ``numpy.random.Generator`` per run, consumed in
a fixed order so a seed reproduces a run bit for bit:

    per episode: one ``integers(n_i)`` draw per dimension for the start state
    per step:    one ``random()`` coin flip, then ``integers(n_actions)``
                 only when the flip takes the random branch
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .env import RecipeEnv
from .grid import GridState, ParameterGrid, decode_state


class FingerprintMismatchError(ValueError):
    pass


class QTableFormatError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Hyperparameters:
    episodes: int = 100
    steps: int = 1000
    alpha: float = 0.05
    gamma: float = 0.8
    epsilon: float = 0.88
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError(f"episodes must be >= 1, got {self.episodes}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        for name in ("alpha", "gamma", "epsilon"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def to_dict(self) -> dict:
        return asdict(self)


class QTable:
    def __init__(self, grid: ParameterGrid, values: np.ndarray | None = None):
        self.grid = grid
        shape = (grid.state_count, grid.action_count)
        if values is None:
            values = np.zeros(shape)
        elif values.shape != shape:
            raise ValueError(f"Q-table shape {values.shape} does not match grid {shape}")
        self.values = values

    @property
    def fingerprint(self) -> dict:
        return self.grid.fingerprint()

    def __eq__(self, other) -> bool:
        return (isinstance(other, QTable) and self.grid == other.grid
                and np.array_equal(self.values, other.values))


@dataclass
class EpisodeRecord:
    episode: int
    best_f: float
    episode_reward: float
    blocked_steps: int


@dataclass
class TrainingReport:
    best_state: GridState
    best_objective: float
    hyperparameters: Hyperparameters
    curve: list[EpisodeRecord] = field(default_factory=list)
    greedy_state: GridState | None = None
    greedy_objective: float | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "best_state": self.best_state.as_dict(),
            "best_state_index": self.best_state.index,
            "best_objective": self.best_objective,
            "greedy_state": self.greedy_state.as_dict() if self.greedy_state else None,
            "greedy_objective": self.greedy_objective,
            "hyperparameters": self.hyperparameters.to_dict(),
            "episodes_run": len(self.curve),
        }


def select_action(qtable: QTable, state: int, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy: random action with probability epsilon, else the row argmax.

    Ties go to the lowest action index.
    """
    if rng.random() < epsilon:
        return int(rng.integers(qtable.grid.action_count))
    return int(qtable.values[state].argmax())


def update_q(qtable: QTable, s: int, a: int, r: float, s_next: int,
             alpha: float, gamma: float) -> None:
    """One Q-learning backup; the max runs over the full action row of ``s_next``."""
    q = qtable.values
    old = float(q[s, a])
    q[s, a] = old + alpha * (r + gamma * float(q[s_next].max()) - old)


def train(env: RecipeEnv, hp: Hyperparameters,
          qtable: QTable | None = None) -> tuple[QTable, TrainingReport]:
    started = time.perf_counter()
    grid = env.grid
    if qtable is None:
        qtable = QTable(grid)
    rng = np.random.default_rng(hp.seed)

    best_index, best_f = -1, math.inf
    curve = []
    for e in range(hp.episodes):
        s = env.random_initial_state(rng).index
        n = -1
        try:
            f_s = env.f(s)
            if f_s < best_f:
                best_index, best_f = s, f_s
            total, blocked = 0.0, 0
            for n in range(hp.steps):
                a = select_action(qtable, s, hp.epsilon, rng)
                s_next, r, was_blocked = env.step_index(s, a)
                update_q(qtable, s, a, r, s_next, hp.alpha, hp.gamma)
                total += r
                if was_blocked:
                    blocked += 1
                else:
                    f_next = env.f(s_next)
                    if f_next < best_f:
                        best_index, best_f = s_next, f_next
                s = s_next
        except (ValueError, KeyError) as exc:
            raise TrainingError(f"episode {e}, step {n + 1}: {exc}") from exc
        if not np.isfinite(qtable.values).all():
            raise TrainingError(f"non-finite Q-value after episode {e}")
        curve.append(EpisodeRecord(e + 1, best_f, total, blocked))

    report = TrainingReport(decode_state(grid, best_index), best_f, hp, curve)
    report.wall_time = time.perf_counter() - started
    return qtable, report


def greedy_rollout(qtable: QTable, env: RecipeEnv, start: GridState, max_steps: int) -> GridState:
    """Follow the greedy policy until a state repeats or ``max_steps`` elapse."""
    s = start.index
    seen = {s}
    for _ in range(max_steps):
        a = int(qtable.values[s].argmax())
        s, _, _ = env.step_index(s, a)
        if s in seen:
            break
        seen.add(s)
    return decode_state(env.grid, s)


def extract_recommendation(qtable: QTable, env: RecipeEnv, report: TrainingReport) -> GridState:
    """Best state visited during training; also records the greedy-rollout endpoint."""
    greedy = greedy_rollout(qtable, env, report.best_state, 2 * report.hyperparameters.steps)
    report.greedy_state = greedy
    report.greedy_objective = env.objective_of(greedy)
    return report.best_state


def save_qtable(qtable: QTable, path: str | Path, hp: Hyperparameters | None = None) -> None:
    """Two JSON header lines (grid fingerprint, hyperparameters), then CSV rows."""
    n_actions = qtable.grid.action_count
    with open(path, "w") as fh:
        fh.write(json.dumps({"grid": qtable.fingerprint}) + "\n")
        fh.write(json.dumps({"hyperparameters": hp.to_dict() if hp else None}) + "\n")
        fh.write(",".join(["stateIndex"] + [f"q{i}" for i in range(n_actions)]) + "\n")
        for idx, row in enumerate(qtable.values.tolist()):
            fh.write(f"{idx}," + ",".join(map(repr, row)) + "\n")


def load_qtable(path: str | Path, grid: ParameterGrid) -> QTable:
    with open(path) as fh:
        try:
            header = json.loads(fh.readline())
            stored = header["grid"]
            json.loads(fh.readline())
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise QTableFormatError(f"{path}: malformed header ({exc})") from None
        if stored != grid.fingerprint():
            raise FingerprintMismatchError(
                f"{path}: Q-table grid {json.dumps(stored)} does not match "
                f"configured grid {json.dumps(grid.fingerprint())}")
        fh.readline()
        values = np.zeros((grid.state_count, grid.action_count))
        seen = np.zeros(grid.state_count, dtype=bool)
        for lineno, line in enumerate(fh, start=4):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != grid.action_count + 1:
                raise QTableFormatError(f"{path}:{lineno}: expected {grid.action_count + 1} fields")
            try:
                idx = int(parts[0])
                if not 0 <= idx < grid.state_count:
                    raise ValueError(f"state index {idx} out of range")
                values[idx] = [float(x) for x in parts[1:]]
            except (ValueError, IndexError) as exc:
                raise QTableFormatError(f"{path}:{lineno}: {exc}") from None
            seen[idx] = True
    if not seen.all():
        raise QTableFormatError(f"{path}: {int((~seen).sum())} state rows missing")
    return QTable(grid, values)
