"""Recipe -> color prediction and the color-gap objective.

A predictor maps a lattice state to a (k/s, L, a, b) quadruple. Two sources
exist: an analytic reference surrogate, and a lookup table loaded from CSV
(e.g. a trained regression model exported over the whole grid).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

from .grid import GridState, InvalidStateError, ParameterGrid, decode_state

log = logging.getLogger(__name__)

ORIGINAL_COLOR = (22.676, 64.97, 42.08, 88.04)
PAPER_TARGET = (0.8, 16.0, 21.0, 71.0)
COLOR_FIELDS = ("ks", "L", "a", "b")


class IncompleteTableError(ValueError):
    def __init__(self, missing: Sequence[int], grid: ParameterGrid):
        self.missing = list(missing)
        first = decode_state(grid, self.missing[0]) if self.missing else None
        super().__init__(f"prediction table is missing {len(self.missing)} state(s); "
                         f"first missing: {first}")


class TableParseError(ValueError):
    def __init__(self, path, line: int, msg: str):
        self.line = line
        super().__init__(f"{path}:{line}: {msg}")


class ColorQuad(NamedTuple):
    ks: float
    L: float
    a: float
    b: float


@dataclass(frozen=True)
class ObjectiveSpec:
    target: ColorQuad
    weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "target", ColorQuad(*map(float, self.target)))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not all(math.isfinite(x) for x in self.target):
            raise ValueError(f"target must be finite, got {tuple(self.target)}")
        if len(self.weights) != 4:
            raise ValueError(f"expected 4 weights, got {len(self.weights)}")
        if not all(math.isfinite(w) and w >= 0 for w in self.weights):
            raise ValueError(f"weights must be finite and non-negative, got {self.weights}")


def objective(spec: ObjectiveSpec, predicted: Sequence[float]) -> float:
    """Weighted Euclidean distance between a prediction and the target color."""
    total = 0.0
    for w, x, y in zip(spec.weights, predicted, spec.target):
        total += w * (x - y) ** 2
    return math.sqrt(total)


class ReferenceSurrogate:
    """Closed-form stand-in for a trained color model.

    A fading depth D in [0, 1) is built from the normalized parameters and the
    color moves linearly from the untreated fabric (D = 0) toward a deeply
    faded color as D grows. Normalization is fixed to the C/T/pH/t ranges of
    the default grid, so states must carry those four parameters in that order.
    """

    kind = "reference"

    @staticmethod
    def fading_depth(C: float, T: float, pH: float, t: float) -> float:
        c = C / 150.0
        tau = T / 100.0
        p = (pH - 1.0) / 13.0
        theta = t / 60.0
        return ((1.0 - math.exp(-2.5 * theta))
                * (0.2 + 0.8 * tau)
                * math.exp(-3.0 * (c - 0.65) ** 2)
                * (0.6 + 0.4 * math.exp(-5.0 * (p - 0.55) ** 2)))

    @staticmethod
    def color(depth: float) -> ColorQuad:
        ks0, L0, a0, b0 = ORIGINAL_COLOR
        return ColorQuad(ks0 * (1.0 - 0.95 * depth),
                         L0 - 48.0 * depth,
                         a0 - 21.0 * depth,
                         b0 - 17.0 * depth)

    def predict(self, state: GridState) -> ColorQuad:
        if state.grid.ndim != 4:
            raise InvalidStateError("the reference surrogate needs (C, T, pH, t) states")
        return self.color(self.fading_depth(*state.values))


@dataclass
class TablePredictor:
    """Predictions looked up by state index."""

    grid: ParameterGrid
    rows: dict[int, ColorQuad] = field(default_factory=dict)
    duplicates: int = 0
    kind = "table"

    def predict(self, state: GridState) -> ColorQuad:
        if state.grid != self.grid:
            raise InvalidStateError("state belongs to a different grid than the table")
        try:
            return self.rows[state.index]
        except KeyError:
            raise IncompleteTableError([state.index], self.grid) from None

    def missing(self) -> list[int]:
        return [i for i in range(self.grid.state_count) if i not in self.rows]

    def check_coverage(self) -> None:
        missing = self.missing()
        if missing:
            raise IncompleteTableError(missing, self.grid)


def predict(source, state: GridState) -> ColorQuad:
    return source.predict(state)


def evaluate(source, spec: ObjectiveSpec, state: GridState) -> float:
    """Objective value f(state): the gap between the predicted and target color."""
    return objective(spec, source.predict(state))


def _fmt(x: float) -> str:
    # shortest string that parses back to the same float
    return repr(float(x))


def save_table(source, grid: ParameterGrid, path: str | Path) -> None:
    """Write predictions for every grid state as ``<dims>,ks,L,a,b`` CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*grid.names, *COLOR_FIELDS])
        for idx in range(grid.state_count):
            state = decode_state(grid, idx)
            w.writerow([_fmt(v) for v in (*state.values, *source.predict(state))])


def load_table(path: str | Path, grid: ParameterGrid, require_complete: bool = True) -> TablePredictor:
    """Read a prediction table; raw parameter values are mapped to lattice states.

    Duplicate states keep the last row and are counted in ``duplicates``.
    """
    expected = [*grid.names, *COLOR_FIELDS]
    table = TablePredictor(grid)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TableParseError(path, 1, "empty file")
        if [h.strip() for h in header] != expected:
            raise TableParseError(path, 1, f"expected header {','.join(expected)}, "
                                           f"got {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise TableParseError(path, line, f"expected {len(expected)} fields, got {len(row)}")
            try:
                nums = [float(c) for c in row]
            except ValueError as exc:
                raise TableParseError(path, line, str(exc)) from None
            if not all(math.isfinite(x) for x in nums):
                raise TableParseError(path, line, "non-finite value")
            try:
                state = grid.state_at(nums[:grid.ndim])
            except InvalidStateError as exc:
                raise TableParseError(path, line, str(exc)) from None
            idx = state.index
            if idx in table.rows:
                table.duplicates += 1
            table.rows[idx] = ColorQuad(*nums[grid.ndim:])
    if table.duplicates:
        log.warning("%s: %d duplicate state row(s); last row wins", path, table.duplicates)
    if require_complete:
        table.check_coverage()
    return table
