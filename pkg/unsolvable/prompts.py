"""
Prompt templates per domain.

Train prompts use one template per domain. Test prompts rotate through
several phrasings, picked from the instance seed so a regenerated instance
gets the same wording. Templates are plain `str.format` strings; a JSON file
with the same shape as DEFAULT_TEMPLATES can replace any of them.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

from .model import Domain, PuzzleInstance, Split

logger = logging.getLogger(__name__)

_FOOTER = (
    "If the problem has no solution, answer with <unsolvable>. "
    "If you cannot solve it reliably, say it is beyond my capabilities."
)

DEFAULT_TEMPLATES: Dict[str, Dict[str, List[str]]] = {
    Domain.GAME24.value: {
        "train": [
            "Use each of the numbers {numbers} exactly once with +, -, *, / and parentheses "
            "to make 24. Put the final expression in \\boxed{{}}. " + _FOOTER,
        ],
        "test": [
            "Numbers: {numbers}. Combine all of them, each exactly once, with the four basic "
            "operations to reach 24. Give the expression in \\boxed{{}}. " + _FOOTER,
            "Can {numbers} make 24 using +, -, *, / (every number used once)? "
            "Write the expression in \\boxed{{}}. " + _FOOTER,
        ],
    },
    Domain.HAM_CYCLE.value: {
        "train": [
            "A graph has vertices 0..{last} and edges {edges}. Find a cycle that visits every "
            "vertex exactly once and returns to the start. List the vertices in order in "
            "\\boxed{{}}. " + _FOOTER,
        ],
        "test": [
            "Vertices: 0..{last}. Undirected edges: {edges}. Give a Hamiltonian cycle as a "
            "vertex sequence in \\boxed{{}}. " + _FOOTER,
            "Find a closed tour through all {n} vertices of the graph with edges {edges}, "
            "visiting each vertex once. Answer in \\boxed{{}}. " + _FOOTER,
        ],
    },
    Domain.HAM_PATH.value: {
        "train": [
            "A graph has vertices 0..{last} and edges {edges}. Find a path that visits every "
            "vertex exactly once. List the vertices in order in \\boxed{{}}. " + _FOOTER,
        ],
        "test": [
            "Vertices: 0..{last}. Undirected edges: {edges}. Give a Hamiltonian path as a "
            "vertex sequence in \\boxed{{}}. " + _FOOTER,
            "Find a route through all {n} vertices of the graph with edges {edges} that "
            "visits each vertex exactly once. Answer in \\boxed{{}}. " + _FOOTER,
        ],
    },
    Domain.HITORI.value: {
        "train": [
            "Solve this {n}x{n} Hitori puzzle:\n{grid}\nShade cells so that no number repeats "
            "in a row or column among unshaded cells, shaded cells never touch orthogonally, "
            "and unshaded cells stay connected. List shaded cells as (row,col) pairs in "
            "\\boxed{{}}. " + _FOOTER,
        ],
        "test": [
            "Hitori, {n}x{n}:\n{grid}\nGive the shaded cells as (row,col) pairs, 0-indexed, in "
            "\\boxed{{}}. " + _FOOTER,
            "Shade cells in the grid below so each row and column has no repeated unshaded "
            "number, no two shaded cells are adjacent, and the unshaded cells are connected.\n"
            "{grid}\nAnswer with (row,col) pairs in \\boxed{{}}. " + _FOOTER,
        ],
    },
    Domain.MAZE.value: {
        "train": [
            "Find a path from S to E in this maze ('#' is a wall, '.' is open):\n{grid}\n"
            "Answer with a string of moves U, D, L, R in \\boxed{{}}. " + _FOOTER,
        ],
        "test": [
            "Maze ({width}x{height}), '#' walls, '.' open:\n{grid}\nGive moves from S to E "
            "using U/D/L/R in \\boxed{{}}. " + _FOOTER,
            "Navigate from S to E:\n{grid}\nReply with the move letters (U, D, L, R) in "
            "\\boxed{{}}. " + _FOOTER,
        ],
    },
    Domain.MATH.value: {
        "train": ["{statement}\n\nPut the final answer in \\boxed{{}}. " + _FOOTER],
        "test": ["{statement}\n\nPut the final answer in \\boxed{{}}. " + _FOOTER],
    },
}


def _fields(instance: PuzzleInstance) -> Dict[str, object]:
    payload = instance.payload
    domain = instance.domain
    if domain is Domain.GAME24:
        return {"numbers": ", ".join(str(v) for v in payload["numbers"])}
    if domain in (Domain.HAM_CYCLE, Domain.HAM_PATH):
        edges = ", ".join(f"({u},{v})" for u, v in payload["edges"])
        return {"n": payload["n"], "last": payload["n"] - 1, "edges": edges}
    if domain is Domain.HITORI:
        grid = "\n".join(" ".join(str(v) for v in row) for row in payload["cells"])
        return {"n": payload["n"], "grid": grid}
    if domain is Domain.MAZE:
        return {"width": payload["width"], "height": payload["height"],
                "grid": "\n".join(payload["rows"])}
    return {"statement": payload.get("statement", "")}


class PromptBook:
    """Template lookup with optional overrides loaded from a JSON file."""

    def __init__(self, overrides: Optional[Dict[str, Dict[str, List[str]]]] = None):
        self.templates = {d: dict(sets) for d, sets in DEFAULT_TEMPLATES.items()}
        for domain, sets in (overrides or {}).items():
            self.templates.setdefault(domain, {}).update(sets)

    @classmethod
    def from_file(cls, path: Optional[Path]) -> "PromptBook":
        if path is None:
            return cls()
        try:
            with open(path, "r") as f:
                return cls(json.load(f))
        except (json.JSONDecodeError, IOError) as e:
            logger.warning("Could not load templates from %s: %s", path, e)
            return cls()

    def render(self, instance: PuzzleInstance, split: Split) -> str:
        options = self.templates[instance.domain.value][split.value]
        template = options[instance.seed % len(options)] if split is Split.TEST else options[0]
        return template.format(**_fields(instance))
