"""
Hitori grids with exactly one or exactly zero valid shadings.

A shading is valid when no two shaded cells touch orthogonally, every shaded
cell removes a repeated value from its row or column and leaves no repeats
among unshaded cells, and the unshaded cells form one orthogonally connected
region.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .model import (
    Difficulty, Domain, ExhaustedAttempts, Label, PuzzleInstance, Tier,
    UnsolvableError, instance_id,
)
from .rng import SeededRng

logger = logging.getLogger(__name__)

MIN_SIZE, MAX_SIZE = 3, 6
ORTHO_DIRS = ((-1, 0), (1, 0), (0, -1), (0, 1))

Cell = Tuple[int, int]


class DimensionMismatch(UnsolvableError):
    pass


class Rule(Enum):
    UNIQUENESS = "uniqueness"
    ADJACENCY = "adjacency"
    CONNECTIVITY = "connectivity"


@dataclass(frozen=True)
class HitoriGrid:
    cells: Tuple[Tuple[int, ...], ...]

    @classmethod
    def of(cls, rows: Sequence[Sequence[int]]) -> "HitoriGrid":
        n = len(rows)
        if n == 0 or any(len(row) != n for row in rows):
            raise DimensionMismatch("hitori grids are square")
        for row in rows:
            for value in row:
                if not 1 <= value <= n:
                    raise ValueError(f"cell value {value} outside [1, {n}]")
        return cls(tuple(tuple(row) for row in rows))

    @property
    def n(self) -> int:
        return len(self.cells)

    def value(self, cell: Cell) -> int:
        return self.cells[cell[0]][cell[1]]

    def repeated(self, cell: Cell) -> bool:
        """True if the cell's value occurs more than once in its row or column."""
        r, c = cell
        value = self.cells[r][c]
        in_row = sum(1 for v in self.cells[r] if v == value)
        in_col = sum(1 for row in self.cells if row[c] == value)
        return in_row > 1 or in_col > 1


@dataclass(frozen=True)
class Shading:
    n: int
    shaded: FrozenSet[Cell]

    @classmethod
    def of(cls, n: int, cells: Iterable[Sequence[int]]) -> "Shading":
        shaded = frozenset((int(r), int(c)) for r, c in cells)
        for r, c in shaded:
            if not (0 <= r < n and 0 <= c < n):
                raise DimensionMismatch(f"shaded cell ({r}, {c}) outside a {n}x{n} grid")
        return cls(n, shaded)

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence[bool]]) -> "Shading":
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise DimensionMismatch("shading matrix must be square")
        return cls(n, frozenset((r, c) for r in range(n) for c in range(n) if rows[r][c]))

    def matrix(self) -> List[List[bool]]:
        return [[(r, c) in self.shaded for c in range(self.n)] for r in range(self.n)]

    def to_list(self) -> List[List[int]]:
        return [list(cell) for cell in sorted(self.shaded)]


@dataclass(frozen=True)
class ShadingCheck:
    valid: bool
    rule: Optional[Rule] = None


def _neighbors(n: int, cell: Cell):
    r, c = cell
    for dr, dc in ORTHO_DIRS:
        rr, cc = r + dr, c + dc
        if 0 <= rr < n and 0 <= cc < n:
            yield rr, cc


def _connected(n: int, open_cells: Set[Cell]) -> bool:
    if not open_cells:
        return False
    start = next(iter(open_cells))
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for nxt in _neighbors(n, cell):
            if nxt in open_cells and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen) == len(open_cells)


def check_shading(grid: HitoriGrid, shading: Shading) -> ShadingCheck:
    """Validity check; reports the first broken rule (adjacency, uniqueness, connectivity)."""
    n = grid.n
    if shading.n != n:
        raise DimensionMismatch(f"shading is {shading.n}x{shading.n}, grid is {n}x{n}")
    shaded = shading.shaded
    for cell in shaded:
        if any(nxt in shaded for nxt in _neighbors(n, cell)):
            return ShadingCheck(False, Rule.ADJACENCY)
    if any(not grid.repeated(cell) for cell in shaded):
        return ShadingCheck(False, Rule.UNIQUENESS)
    for line in _lines(n):
        values = [grid.value(cell) for cell in line if cell not in shaded]
        if len(values) != len(set(values)):
            return ShadingCheck(False, Rule.UNIQUENESS)
    whites = {(r, c) for r in range(n) for c in range(n)} - shaded
    if not _connected(n, whites):
        return ShadingCheck(False, Rule.CONNECTIVITY)
    return ShadingCheck(True)


def _lines(n: int) -> List[List[Cell]]:
    rows = [[(r, c) for c in range(n)] for r in range(n)]
    cols = [[(r, c) for r in range(n)] for c in range(n)]
    return rows + cols


class _Counter:
    """Backtracking over the cells that may be shaded."""

    def __init__(self, grid: HitoriGrid, limit: int, order: str):
        self.grid = grid
        self.n = grid.n
        self.limit = limit
        cells = [(r, c) for r in range(self.n) for c in range(self.n)]
        self.candidates = [cell for cell in cells if grid.repeated(cell)]
        if order == "duplicates-first":
            self.candidates.sort(key=lambda cell: -self._pressure(cell))
        elif order != "row-major":
            raise ValueError(f"unknown variable order {order!r}")
        self.all_cells = set(cells)
        self.shaded: Set[Cell] = set()
        self.white: Set[Cell] = set()
        self.found: List[Shading] = []

    def _pressure(self, cell: Cell) -> int:
        r, c = cell
        value = self.grid.value(cell)
        return (sum(1 for v in self.grid.cells[r] if v == value)
                + sum(1 for row in self.grid.cells if row[c] == value))

    def _may_shade(self, cell: Cell) -> bool:
        if any(nxt in self.shaded for nxt in _neighbors(self.n, cell)):
            return False
        return _connected(self.n, self.all_cells - self.shaded - {cell})

    def _may_whiten(self, cell: Cell) -> bool:
        r, c = cell
        value = self.grid.value(cell)
        for other in self.white:
            if (other[0] == r or other[1] == c) and self.grid.value(other) == value:
                return False
        return True

    def run(self) -> List[Shading]:
        self._search(0)
        return self.found

    def _search(self, index: int) -> None:
        if len(self.found) >= self.limit:
            return
        if index == len(self.candidates):
            if _connected(self.n, self.all_cells - self.shaded):
                self.found.append(Shading(self.n, frozenset(self.shaded)))
            return
        cell = self.candidates[index]
        if self._may_whiten(cell):
            self.white.add(cell)
            self._search(index + 1)
            self.white.discard(cell)
        if self._may_shade(cell):
            self.shaded.add(cell)
            self._search(index + 1)
            self.shaded.discard(cell)


def solutions(grid: HitoriGrid, limit: int, order: str = "row-major") -> List[Shading]:
    """Valid shadings, at most `limit` of them."""
    if grid.n > MAX_SIZE:
        raise ValueError(f"exact counting is limited to n <= {MAX_SIZE}")
    if limit < 1:
        raise ValueError("limit must be positive")
    return _Counter(grid, limit, order).run()


def count_solutions(grid: HitoriGrid, limit: int, order: str = "row-major") -> int:
    return len(solutions(grid, limit, order))


def random_grid(rng: SeededRng, n: int, biased: bool = False) -> HitoriGrid:
    """Uniform values in [1, n]; biased draws favour the low half to force repeats."""
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            if biased and rng.random() < 0.5:
                row.append(rng.randint(1, max(1, n // 2)))
            else:
                row.append(rng.randint(1, n))
        rows.append(row)
    return HitoriGrid.of(rows)


def difficulty_for(n: int) -> Difficulty:
    return Difficulty(Tier.EASY if n <= 4 else Tier.HARD, (n,))


def generate(n: int, target: Label, seed: int, max_attempts: int = 50000,
             biased: bool = False) -> PuzzleInstance:
    """Rejection-sample a grid with one (Solvable) or zero (Unsolvable) valid shadings."""
    if not MIN_SIZE <= n <= MAX_SIZE:
        raise ValueError(f"hitori size must be in [{MIN_SIZE}, {MAX_SIZE}], got {n}")
    wanted = 1 if target is Label.SOLVABLE else 0
    rng = SeededRng(seed)
    for attempt in range(1, max_attempts + 1):
        grid = random_grid(rng, n, biased)
        found = solutions(grid, limit=2)
        if len(found) != wanted:
            continue
        difficulty = difficulty_for(n)
        logger.debug("hitori %s after %d attempts", target.value, attempt)
        return PuzzleInstance(
            id=instance_id(Domain.HITORI, difficulty, target, seed),
            domain=Domain.HITORI,
            label=target,
            difficulty=difficulty,
            payload={"n": n, "cells": [list(row) for row in grid.cells]},
            witness=found[0].to_list() if found else None,
            seed=seed,
            provenance={"certified_by": "solver", "attempts": attempt, "biased": biased},
        )
    raise ExhaustedAttempts(f"hitori n={n} {target.value}", max_attempts)


def grid_from_payload(payload) -> HitoriGrid:
    return HitoriGrid.of(payload["cells"])
