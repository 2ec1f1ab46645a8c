"""One-step MDP dynamics over the parameter lattice.

Transitions are deterministic. A move that stays on the lattice earns
``f(s) - f(s')`` (positive when the color gap shrinks); a move that leaves
the lattice in x dimensions is rejected and earns ``-x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridState, MoveAction, ParameterGrid, apply_action, decode_state
from .predictor import ObjectiveSpec, evaluate


@dataclass(frozen=True)
class StepOutcome:
    next_state: GridState
    reward: float
    blocked: bool
    objective_after: float


class RecipeEnv:
    """Lattice environment with memoized objective values.

    The predictor must be deterministic; f is computed at most once per state.
    """

    def __init__(self, grid: ParameterGrid, predictor, spec: ObjectiveSpec):
        self.grid = grid
        self.predictor = predictor
        self.spec = spec
        self._f: list[float | None] = [None] * grid.state_count
        self.evaluations = 0

    def f(self, index: int) -> float:
        value = self._f[index]
        if value is None:
            value = evaluate(self.predictor, self.spec, decode_state(self.grid, index))
            self._f[index] = value
            self.evaluations += 1
        return value

    def objective_of(self, state: GridState) -> float:
        return self.f(state.index)

    def step(self, state: GridState, action: MoveAction) -> StepOutcome:
        moved = apply_action(self.grid, state, action)
        if moved.blocked:
            return StepOutcome(state, -float(moved.violations), True, self.f(state.index))
        before = self.f(state.index)
        after = self.f(moved.next_state.index)
        return StepOutcome(moved.next_state, before - after, False, after)

    def step_index(self, index: int, action: int) -> tuple[int, float, bool]:
        """Index-level ``step`` returning (next_index, reward, blocked)."""
        nxt, violations = self.grid.move_index(index, action)
        if violations:
            return index, -float(violations), True
        return nxt, self.f(index) - self.f(nxt), False

    def random_initial_state(self, rng: np.random.Generator) -> GridState:
        """Draw each level uniformly and independently, in dimension order."""
        return GridState(self.grid, tuple(int(rng.integers(n)) for n in self.grid.shape))
