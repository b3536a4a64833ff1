"""
Maze instances: carve by randomized DFS, certify by BFS, and make unsolvable
variants by walling off cells on the current shortest path until the goal
is cut off.

Rooms sit on even (row, col) coordinates; odd coordinates are the walls
between rooms, so knocking down a wall or placing an obstacle is a single
cell flip. With an even dimension the last row/column copies its
neighbour, which keeps the far corner open.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import (
    Difficulty, Domain, ExhaustedAttempts, Label, PuzzleInstance, Tier,
    UnsolvableError, instance_id,
)
from .rng import SeededRng

logger = logging.getLogger(__name__)

WALL, OPEN = "#", "."
DEFAULT_LOOP_RATIO = 0.10
EASY_MAX, HARD_MIN = 7, 11

Cell = Tuple[int, int]


class CannotBlock(UnsolvableError):
    pass


class InvalidMaze(UnsolvableError):
    pass


class Move(Enum):
    UP = "U"
    DOWN = "D"
    LEFT = "L"
    RIGHT = "R"


# Tie-break order for BFS.
STEPS: Dict[Move, Cell] = {
    Move.UP: (-1, 0),
    Move.DOWN: (1, 0),
    Move.LEFT: (0, -1),
    Move.RIGHT: (0, 1),
}


@dataclass(frozen=True)
class Maze:
    rows: Tuple[str, ...]
    start: Cell
    goal: Cell

    def __post_init__(self):
        if not self.rows or any(len(r) != len(self.rows[0]) for r in self.rows):
            raise InvalidMaze("maze rows must be non-empty and equally long")
        for name, cell in (("start", self.start), ("goal", self.goal)):
            if not self.in_bounds(cell) or not self.is_open(cell):
                raise InvalidMaze(f"{name} {cell} must be an open cell")
        if self.start == self.goal and (self.width, self.height) != (1, 1):
            raise InvalidMaze("start and goal coincide")

    @classmethod
    def from_rows(cls, rows: Sequence[str], start: Optional[Cell] = None,
                  goal: Optional[Cell] = None) -> "Maze":
        """Rows may mark start/goal with S and E; explicit cells win."""
        cleaned = []
        for r, row in enumerate(rows):
            for c, ch in enumerate(row):
                if ch == "S" and start is None:
                    start = (r, c)
                elif ch == "E" and goal is None:
                    goal = (r, c)
            cleaned.append(row.replace("S", OPEN).replace("E", OPEN))
        if start is None or goal is None:
            raise InvalidMaze("maze needs a start and a goal")
        return cls(tuple(cleaned), tuple(start), tuple(goal))

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def is_open(self, cell: Cell) -> bool:
        return self.rows[cell[0]][cell[1]] == OPEN

    def with_walls(self, cells) -> "Maze":
        grid = [list(row) for row in self.rows]
        for r, c in cells:
            grid[r][c] = WALL
        return Maze(tuple("".join(row) for row in grid), self.start, self.goal)

    def diff(self, other: "Maze") -> List[Tuple[Cell, str, str]]:
        """(cell, before, after) for every cell that changed."""
        return [((r, c), self.rows[r][c], other.rows[r][c])
                for r in range(self.height) for c in range(self.width)
                if self.rows[r][c] != other.rows[r][c]]

    def render(self) -> List[str]:
        grid = [list(row) for row in self.rows]
        grid[self.start[0]][self.start[1]] = "S"
        grid[self.goal[0]][self.goal[1]] = "E"
        return ["".join(row) for row in grid]


def carve(width: int, height: int, seed: int, loop_ratio: float = DEFAULT_LOOP_RATIO,
          start: Optional[Cell] = None, goal: Optional[Cell] = None) -> Maze:
    """Randomized DFS over the room lattice, then knock out a share of the remaining walls."""
    if width < 2 or height < 2:
        raise InvalidMaze("carve needs width and height of at least 2")
    rng = SeededRng(seed)
    room_rows, room_cols = (height + 1) // 2, (width + 1) // 2
    grid = np.full((height, width), WALL, dtype="U1")
    visited = np.zeros((room_rows, room_cols), dtype=bool)
    stack = [(0, 0)]
    visited[0, 0] = True
    grid[0, 0] = OPEN
    while stack:
        ry, rx = stack[-1]
        neighbors = []
        for dy, dx in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            ny, nx = ry + dy, rx + dx
            if 0 <= ny < room_rows and 0 <= nx < room_cols and not visited[ny, nx]:
                neighbors.append((ny, nx))
        if neighbors:
            ny, nx = rng.choice(neighbors)
            grid[ry + ny, rx + nx] = OPEN
            grid[2 * ny, 2 * nx] = OPEN
            visited[ny, nx] = True
            stack.append((ny, nx))
        else:
            stack.pop()

    removable = []
    for r in range(height):
        for c in range(width):
            if grid[r, c] != WALL or (r % 2 == 1 and c % 2 == 1):
                continue
            if r % 2 == 1 and r + 1 < height and grid[r - 1, c] == OPEN and grid[r + 1, c] == OPEN:
                removable.append((r, c))
            elif c % 2 == 1 and c + 1 < width and grid[r, c - 1] == OPEN and grid[r, c + 1] == OPEN:
                removable.append((r, c))
    for r, c in rng.sample(removable, int(round(loop_ratio * len(removable)))):
        grid[r, c] = OPEN

    if width % 2 == 0:
        grid[:, width - 1] = grid[:, width - 2]
    if height % 2 == 0:
        grid[height - 1, :] = grid[height - 2, :]

    rows = tuple("".join(row) for row in grid)
    return Maze(rows, start or (0, 0), goal or (height - 1, width - 1))


def _bfs(maze: Maze) -> Optional[List[Move]]:
    parents: Dict[Cell, Tuple[Cell, Move]] = {}
    seen = {maze.start}
    queue = deque([maze.start])
    while queue:
        cell = queue.popleft()
        if cell == maze.goal:
            moves: List[Move] = []
            while cell != maze.start:
                cell, move = parents[cell]
                moves.append(move)
            moves.reverse()
            return moves
        for move, (dr, dc) in STEPS.items():
            nxt = (cell[0] + dr, cell[1] + dc)
            if maze.in_bounds(nxt) and maze.is_open(nxt) and nxt not in seen:
                seen.add(nxt)
                parents[nxt] = (cell, move)
                queue.append(nxt)
    return None


@dataclass(frozen=True)
class Reachability:
    reachable: bool
    path: Optional[Tuple[Move, ...]] = None

    def path_text(self) -> Optional[str]:
        return moves_to_text(self.path) if self.path is not None else None


def solve_bfs(maze: Maze) -> Reachability:
    moves = _bfs(maze)
    if moves is None:
        return Reachability(False)
    return Reachability(True, tuple(moves))


def walk(maze: Maze, path: Sequence[Move]) -> List[Cell]:
    cells = [maze.start]
    for move in path:
        dr, dc = STEPS[move]
        cells.append((cells[-1][0] + dr, cells[-1][1] + dc))
    return cells


def check_moves(maze: Maze, path: Sequence[Move]) -> bool:
    cell = maze.start
    for move in path:
        dr, dc = STEPS[move]
        cell = (cell[0] + dr, cell[1] + dc)
        if not maze.in_bounds(cell) or not maze.is_open(cell):
            return False
    return cell == maze.goal


def parse_moves(text: str) -> Optional[List[Move]]:
    """Move letters, ignoring separators; None if anything else shows up."""
    moves = []
    for ch in text.upper():
        if ch in " ,->[]'\"\t\n":
            continue
        try:
            moves.append(Move(ch))
        except ValueError:
            return None
    return moves


def moves_to_text(path: Sequence[Move]) -> str:
    return "".join(move.value for move in path)


def block_critical(maze: Maze, seed: int) -> Maze:
    """
    Wall off interior cells of the current shortest path, picked with a bias
    toward its middle, until the goal is unreachable.
    """
    if not solve_bfs(maze).reachable:
        raise InvalidMaze("block_critical needs a reachable maze")
    rng = SeededRng(seed)
    current = maze
    for _ in range(maze.width * maze.height):
        result = solve_bfs(current)
        if not result.reachable:
            return current
        interior = walk(current, result.path)[1:-1]
        if not interior:
            raise CannotBlock("start and goal are adjacent; only they could be walled")
        m = len(interior)
        index = (rng.randbelow(m) + rng.randbelow(m) + 1) // 2
        current = current.with_walls([interior[min(index, m - 1)]])
    if solve_bfs(current).reachable:
        raise CannotBlock(f"still reachable after {maze.width * maze.height} flips")
    return current


def difficulty_for(width: int, height: int) -> Difficulty:
    """Easy fits in 7x7, hard needs both sides at least 11; sizes between have no tier."""
    if max(width, height) <= EASY_MAX:
        return Difficulty(Tier.EASY, (width, height))
    if min(width, height) >= HARD_MIN:
        return Difficulty(Tier.HARD, (width, height))
    raise InvalidMaze(
        f"{width}x{height} falls between the easy (<= {EASY_MAX}) and hard (>= {HARD_MIN}) sizes")


def size_for(tier: Tier) -> int:
    return EASY_MAX if tier is Tier.EASY else HARD_MIN


def generate(width: int, height: int, target: Label, seed: int, max_attempts: int = 20,
             loop_ratio: float = DEFAULT_LOOP_RATIO) -> PuzzleInstance:
    difficulty = difficulty_for(width, height)
    rng = SeededRng(seed)
    for attempt in range(1, max_attempts + 1):
        base = carve(width, height, rng.derive_seed(attempt, 0), loop_ratio)
        provenance = {"certified_by": "solver", "attempts": attempt}
        maze = base
        if target is Label.UNSOLVABLE:
            try:
                maze = block_critical(base, rng.derive_seed(attempt, 1))
            except CannotBlock as e:
                logger.debug("maze attempt %d: %s", attempt, e)
                continue
            provenance["flipped"] = [list(cell) for cell, _, _ in base.diff(maze)]
        result = solve_bfs(maze)
        if result.reachable != (target is Label.SOLVABLE):
            continue
        return PuzzleInstance(
            id=instance_id(Domain.MAZE, difficulty, target, seed),
            domain=Domain.MAZE,
            label=target,
            difficulty=difficulty,
            payload={"width": width, "height": height, "rows": maze.render()},
            witness=result.path_text(),
            seed=seed,
            provenance=provenance,
        )
    raise ExhaustedAttempts(f"maze {width}x{height} {target.value}", max_attempts)


def maze_from_payload(payload) -> Maze:
    return Maze.from_rows(payload["rows"])
