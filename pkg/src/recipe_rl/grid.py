"""Discretized process-parameter lattice: states, moves and bounds checks.

States are points on a rectangular lattice, one axis per process parameter.
Both states and moves have dense integer indices in mixed radix with
dimension 0 as the most significant digit:

    state index  = ((l0 * n1 + l1) * n2 + l2) * n3 + l3
    action index = base-3 digits (delta_i + 1)

so a Q-table row is a state index and a column is an action index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

HOLD, UP, DOWN = 0, 1, -1


class InvalidStateError(ValueError):
    pass


class InvalidIndexError(ValueError):
    pass


class InvalidActionError(ValueError):
    pass


@dataclass(frozen=True)
class ParameterDim:
    name: str
    min: float
    max: float
    step: float

    def __post_init__(self):
        for attr in ("min", "max", "step"):
            object.__setattr__(self, attr, float(getattr(self, attr)))
        if not all(math.isfinite(v) for v in (self.min, self.max, self.step)):
            raise ValueError(f"dimension {self.name!r}: bounds and step must be finite")
        if self.step <= 0:
            raise ValueError(f"dimension {self.name!r}: step must be positive, got {self.step}")
        if self.min > self.max:
            raise ValueError(f"dimension {self.name!r}: min {self.min} exceeds max {self.max}")
        span = (self.max - self.min) / self.step
        if abs(span - round(span)) > 1e-9:
            raise ValueError(
                f"dimension {self.name!r}: range {self.min}..{self.max} is not a "
                f"multiple of step {self.step}")

    @property
    def levels(self) -> int:
        return int(round((self.max - self.min) / self.step)) + 1

    def value(self, level: int) -> float:
        return self.min + level * self.step

    def level_of(self, value: float) -> int:
        """Lattice level of a raw value; raises if the value is off-lattice."""
        pos = (value - self.min) / self.step
        level = int(round(pos))
        if abs(pos - level) > 1e-6 or not 0 <= level < self.levels:
            raise InvalidStateError(f"{self.name}={value} is not a lattice value of "
                                    f"{self.min}..{self.max} step {self.step}")
        return level

    def to_dict(self) -> dict:
        return {"name": self.name, "min": self.min, "max": self.max, "step": self.step}


@dataclass(frozen=True)
class MoveAction:
    deltas: tuple[int, ...]

    def __post_init__(self):
        if any(d not in (DOWN, HOLD, UP) for d in self.deltas):
            raise InvalidActionError(f"deltas must be -1, 0 or +1, got {self.deltas}")


class Transition(NamedTuple):
    """Outcome of applying a move: the new state, or the number of violated ranges."""
    next_state: "GridState | None"
    violations: int

    @property
    def blocked(self) -> bool:
        return self.violations > 0


@dataclass(frozen=True)
class ParameterGrid:
    dims: tuple[ParameterDim, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        if not self.dims:
            raise ValueError("a grid needs at least one dimension")
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate dimension names: {names}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dims)

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(d.levels for d in self.dims)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out, acc = [], 1
        for n in reversed(self.shape):
            out.append(acc)
            acc *= n
        return tuple(reversed(out))

    @cached_property
    def state_count(self) -> int:
        return math.prod(self.shape)

    @property
    def action_count(self) -> int:
        return 3 ** self.ndim

    @cached_property
    def hold_index(self) -> int:
        return encode_action([HOLD] * self.ndim)

    @cached_property
    def action_deltas(self) -> tuple[tuple[int, ...], ...]:
        """Deltas of every action, indexed by action index."""
        return tuple(decode_action(i, self.ndim).deltas for i in range(self.action_count))

    def fingerprint(self) -> dict:
        return {"dims": [d.to_dict() for d in self.dims]}

    def state(self, levels: Sequence[int]) -> "GridState":
        return GridState(self, tuple(int(x) for x in levels))

    def state_at(self, values: Sequence[float]) -> "GridState":
        """State from raw parameter values, e.g. ``grid.state_at([100, 60, 8, 31])``."""
        if len(values) != self.ndim:
            raise InvalidStateError(f"expected {self.ndim} values, got {len(values)}")
        return GridState(self, tuple(d.level_of(v) for d, v in zip(self.dims, values)))

    def move_index(self, index: int, action: int) -> tuple[int, int]:
        """Index-level ``apply_action``: returns (next_index, violations).

        On a blocked move next_index is ``index``. Used by the training hot loop.
        """
        deltas = self.action_deltas[action]
        out = index
        violations = 0
        for n, stride, d in zip(self.shape, self.strides, deltas):
            if d:
                level = (index // stride) % n + d
                if level < 0 or level >= n:
                    violations += 1
                else:
                    out += d * stride
        if violations:
            return index, violations
        return out, 0


@dataclass(frozen=True)
class GridState:
    grid: ParameterGrid
    levels: tuple[int, ...]

    def __post_init__(self):
        if len(self.levels) != self.grid.ndim:
            raise InvalidStateError(
                f"expected {self.grid.ndim} levels, got {len(self.levels)}")
        for dim, level in zip(self.grid.dims, self.levels):
            if not 0 <= level < dim.levels:
                raise InvalidStateError(
                    f"level {level} out of range for {dim.name} (0..{dim.levels - 1})")

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(d.value(l) for d, l in zip(self.grid.dims, self.levels))

    @property
    def index(self) -> int:
        return encode_state(self.grid, self)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.grid.names, self.values))

    def __str__(self) -> str:
        return " ".join(f"{n}={v:g}" for n, v in zip(self.grid.names, self.values))


def encode_state(grid: ParameterGrid, state: GridState) -> int:
    if state.grid != grid:
        raise InvalidStateError("state belongs to a different grid")
    idx = 0
    for n, level in zip(grid.shape, state.levels):
        idx = idx * n + level
    return idx


def decode_state(grid: ParameterGrid, index: int) -> GridState:
    if not 0 <= index < grid.state_count:
        raise InvalidIndexError(f"state index {index} outside [0, {grid.state_count})")
    levels = []
    for n in reversed(grid.shape):
        index, level = divmod(index, n)
        levels.append(level)
    return GridState(grid, tuple(reversed(levels)))


def encode_action(deltas: Sequence[int]) -> int:
    idx = 0
    for d in deltas:
        if d not in (DOWN, HOLD, UP):
            raise InvalidActionError(f"delta {d!r} is not one of -1, 0, +1")
        idx = idx * 3 + (d + 1)
    return idx


def decode_action(index: int, ndim: int) -> MoveAction:
    if not 0 <= index < 3 ** ndim:
        raise InvalidActionError(f"action index {index} outside [0, {3 ** ndim})")
    digits = []
    for _ in range(ndim):
        index, digit = divmod(index, 3)
        digits.append(digit - 1)
    return MoveAction(tuple(reversed(digits)))


def apply_action(grid: ParameterGrid, state: GridState, action: MoveAction) -> Transition:
    """Move one lattice step per dimension, or report how many ranges it breaks.

    Any violation blocks the whole move; in-range dimensions are not moved.
    """
    if len(action.deltas) != grid.ndim:
        raise InvalidActionError(
            f"action has {len(action.deltas)} deltas, grid has {grid.ndim} dimensions")
    moved = [l + d for l, d in zip(state.levels, action.deltas)]
    violations = sum(not 0 <= m < n for m, n in zip(moved, grid.shape))
    if violations:
        return Transition(None, violations)
    return Transition(GridState(grid, tuple(moved)), 0)


def default_paper_grid() -> ParameterGrid:
    """Water content C, temperature T, pH and treatment time t of the ozonation case."""
    return ParameterGrid((
        ParameterDim("C", 0.0, 150.0, 50.0),
        ParameterDim("T", 0.0, 100.0, 10.0),
        ParameterDim("pH", 1.0, 14.0, 1.0),
        ParameterDim("t", 1.0, 60.0, 1.0),
    ))


def grid_from_config(entries: list[dict]) -> ParameterGrid:
    dims = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ValueError(f"grid entry {i}: expected an object, got {entry!r}")
        extra = set(entry) - {"name", "min", "max", "step"}
        missing = {"name", "min", "max", "step"} - set(entry)
        if extra or missing:
            raise ValueError(f"grid entry {i}: missing {sorted(missing)}, unknown {sorted(extra)}")
        dims.append(ParameterDim(str(entry["name"]), float(entry["min"]),
                                 float(entry["max"]), float(entry["step"])))
    return ParameterGrid(tuple(dims))


def load_grid(path: str | Path) -> ParameterGrid:
    """Read a JSON array of ``{name, min, max, step}`` objects."""
    with open(path) as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise ValueError(f"{path}: grid file must hold a JSON array")
    return grid_from_config(entries)
