"""Exhaustive search and simple baselines over the same lattice as the learner."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .grid import GridState, ParameterGrid, decode_state
from .predictor import ObjectiveSpec, evaluate

REPORT_QUANTILES = (0.0, 0.001, 0.005, 0.01, 0.05, 0.25, 0.5, 1.0)


@dataclass
class OracleResult:
    optimum: GridState
    optimum_objective: float
    values: np.ndarray          # f per state index
    evaluation_count: int
    wall_time: float = 0.0

    @property
    def distribution(self) -> np.ndarray:
        return np.sort(self.values)

    def quantile(self, q: float) -> float:
        """Lower empirical quantile: the objective of the ceil(q*n)-th best state."""
        dist = self.distribution
        k = max(int(np.ceil(q * len(dist))) - 1, 0)
        return float(dist[k])

    def quantiles(self) -> dict[str, float]:
        return {str(q): self.quantile(q) for q in REPORT_QUANTILES}

    def to_dict(self) -> dict:
        return {
            "optimum": self.optimum.as_dict(),
            "optimum_index": self.optimum.index,
            "optimum_objective": self.optimum_objective,
            "quantiles": self.quantiles(),
            "evaluation_count": self.evaluation_count,
        }


def objective_values(grid: ParameterGrid, predictor, spec: ObjectiveSpec) -> np.ndarray:
    return np.array([evaluate(predictor, spec, decode_state(grid, i))
                     for i in range(grid.state_count)])


def brute_force(grid: ParameterGrid, predictor, spec: ObjectiveSpec) -> OracleResult:
    """Evaluate every state once; ties on the minimum go to the lowest index."""
    started = time.perf_counter()
    values = objective_values(grid, predictor, spec)
    best = int(values.argmin())
    return OracleResult(decode_state(grid, best), float(values[best]), values,
                        len(values), time.perf_counter() - started)


def random_search(grid: ParameterGrid, predictor, spec: ObjectiveSpec, budget: int,
                  seed: int = 0, replace: bool = True) -> tuple[GridState, float]:
    """Best of ``budget`` uniform samples of the state index.

    Samples are drawn in one batch, so a larger budget with the same seed
    extends the same sample stream when ``replace`` is true.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    rng = np.random.default_rng(seed)
    if replace:
        picks = rng.integers(grid.state_count, size=budget)
    else:
        if budget > grid.state_count:
            raise ValueError("budget exceeds state count when sampling without replacement")
        picks = rng.permutation(grid.state_count)[:budget]
    best_idx, best_f = -1, np.inf
    cache: dict[int, float] = {}
    for idx in picks.tolist():
        if idx not in cache:
            cache[idx] = evaluate(predictor, spec, decode_state(grid, idx))
        f = cache[idx]
        if f < best_f or (f == best_f and idx < best_idx):
            best_idx, best_f = idx, f
    return decode_state(grid, best_idx), best_f


def hill_climb(grid: ParameterGrid, predictor, spec: ObjectiveSpec,
               start: GridState) -> tuple[GridState, float, int]:
    """Steepest descent over the non-hold moves of the action space.

    Returns (local optimum, its objective, iterations). Among equally good
    neighbors the lowest action index wins.
    """
    f = lambda i: evaluate(predictor, spec, decode_state(grid, i))
    current = start.index
    f_cur = f(current)
    iterations = 0
    while True:
        best_next, best_f = current, f_cur
        for a in range(grid.action_count):
            if a == grid.hold_index:
                continue
            nxt, violations = grid.move_index(current, a)
            if violations:
                continue
            f_next = f(nxt)
            if f_next < best_f:
                best_next, best_f = nxt, f_next
        if best_next == current:
            return decode_state(grid, current), f_cur, iterations
        current, f_cur = best_next, best_f
        iterations += 1
