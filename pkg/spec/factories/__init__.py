"""
Factories for graphs, grids, mazes, instances and dataset records used
across the spec suites.
"""

import itertools

from unsolvable.hamiltonian import Graph
from unsolvable.hitori import HitoriGrid
from unsolvable.maze import Maze
from unsolvable.model import DatasetRecord, Difficulty, Domain, Label, PuzzleInstance, Split, Tier
from unsolvable.testing import Factory, factory_field, sequence, trait


class GraphFactory(Factory):
    model = Graph.of
    n = factory_field(default=3)
    edges = factory_field(default=lambda: [(0, 1), (1, 2), (0, 2)], lazy=True)

    @trait
    def path3(cls):
        return {"n": 3, "edges": [(0, 1), (1, 2)]}

    @trait
    def star(cls):
        return {"n": 4, "edges": [(0, 1), (0, 2), (0, 3)]}

    @trait
    def single_edge(cls):
        return {"n": 2, "edges": [(0, 1)]}

    @trait
    def bowtie(cls):
        return {"n": 5, "edges": [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]}

    @trait
    def petersen(cls):
        outer = [(i, (i + 1) % 5) for i in range(5)]
        spokes = [(i, i + 5) for i in range(5)]
        inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        return {"n": 10, "edges": outer + spokes + inner}

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls.build(n=n, edges=list(itertools.combinations(range(n), 2)))


class HitoriGridFactory(Factory):
    model = HitoriGrid.of
    rows = factory_field(default=lambda: [[1, 2], [2, 1]], lazy=True)

    @trait
    def all_ones(cls):
        return {"rows": [[1, 1], [1, 1]]}

    @trait
    def three_by_three(cls):
        return {"rows": [[1, 1, 2], [2, 3, 1], [3, 2, 3]]}


class MazeFactory(Factory):
    model = Maze.from_rows
    rows = factory_field(default=lambda: ["S.", ".E"], lazy=True)

    @trait
    def corridor(cls):
        return {"rows": ["S.E"]}

    @trait
    def severed_corridor(cls):
        return {"rows": ["S#E"]}

    @trait
    def open_3x3(cls):
        return {"rows": ["S..", "...", "..E"]}

    @trait
    def adjacent(cls):
        return {"rows": ["SE"]}


class InstanceFactory(Factory):
    model = PuzzleInstance
    id = sequence(lambda n: f"fixture-{n}")
    domain = factory_field(default=Domain.GAME24)
    label = factory_field(default=Label.SOLVABLE)
    difficulty = factory_field(default=Difficulty(Tier.EASY, (2,)))
    payload = factory_field(default=lambda: {"numbers": [4, 6], "k": 2}, lazy=True)
    prompt = factory_field(default="")
    witness = factory_field(default=None)
    seed = sequence(lambda n: n)

    @trait
    def unsolvable_hitori(cls):
        return {
            "domain": Domain.HITORI,
            "label": Label.UNSOLVABLE,
            "difficulty": Difficulty(Tier.EASY, (2,)),
            "payload": {"n": 2, "cells": [[1, 1], [1, 1]]},
        }

    @trait
    def open_maze(cls):
        return {
            "domain": Domain.MAZE,
            "label": Label.SOLVABLE,
            "difficulty": Difficulty(Tier.EASY, (2, 2)),
            "payload": {"width": 2, "height": 2, "rows": ["S.", ".E"]},
            "witness": "RD",
        }


class RecordFactory(Factory):
    model = DatasetRecord
    instance = factory_field(default=lambda: InstanceFactory(), lazy=True)
    split = factory_field(default=Split.TRAIN)
