"""
Per-domain adapters: how to generate an instance, re-certify its label from
the payload, and check a textual answer against it.
"""

import re
from dataclasses import dataclass
from typing import Callable, Dict, Optional

from . import game24, hamiltonian, hitori, maze
from .model import Difficulty, Domain, Label, PuzzleInstance, Tier, UnknownDomain


@dataclass(frozen=True)
class GenerationRequest:
    label: Label
    tier: Tier
    seed: int
    size: Optional[int] = None
    strategy: Optional[str] = None
    max_attempts: Optional[int] = None


# Vertex and cell indices in answer text; longer digit runs are rejected.
MAX_INDEX_DIGITS = 6

Generator = Callable[[GenerationRequest], PuzzleInstance]
Certifier = Callable[[PuzzleInstance], Label]
TextChecker = Callable[[PuzzleInstance, str], bool]


@dataclass(frozen=True)
class DomainAdapter:
    domain: Domain
    certify: Certifier
    check_text: TextChecker
    generate: Optional[Generator] = None


# --- game24 ---------------------------------------------------------------

def _game24_generate(req: GenerationRequest) -> PuzzleInstance:
    k = req.size or (4 if req.tier is Tier.EASY else 5)
    return game24.sample(k, req.label, req.seed, max_attempts=req.max_attempts or 10000)


def _game24_certify(instance: PuzzleInstance) -> Label:
    return game24.classify(instance.payload["numbers"]).label


def _game24_check(instance: PuzzleInstance, text: str) -> bool:
    return game24.check_answer(instance.payload["numbers"], text).correct


# --- hamiltonian ------------------------------------------------------------

def _ham_generate(mode: hamiltonian.TraversalMode) -> Generator:
    def generate(req: GenerationRequest) -> PuzzleInstance:
        n = req.size or (7 if req.tier is Tier.EASY else 10)
        strategy = hamiltonian.Strategy(req.strategy) if req.strategy else None
        return hamiltonian.generate(mode, n, req.label, strategy, req.seed,
                                    max_attempts=req.max_attempts or 100)
    return generate


def _ham_mode(instance: PuzzleInstance) -> hamiltonian.TraversalMode:
    return hamiltonian.TraversalMode(instance.payload["mode"])


def _ham_certify(instance: PuzzleInstance) -> Label:
    graph = hamiltonian.graph_from_payload(instance.payload)
    return hamiltonian.decide(graph, _ham_mode(instance)).label


def _ham_check(instance: PuzzleInstance, text: str) -> bool:
    tokens = re.findall(r"\d+", text)
    if any(len(tok) > MAX_INDEX_DIGITS for tok in tokens):
        return False
    order = [int(tok) for tok in tokens]
    graph = hamiltonian.graph_from_payload(instance.payload)
    return hamiltonian.check_sequence(graph, order, _ham_mode(instance))


# --- hitori -----------------------------------------------------------------

def _hitori_generate(req: GenerationRequest) -> PuzzleInstance:
    n = req.size or (4 if req.tier is Tier.EASY else 5)
    return hitori.generate(n, req.label, req.seed, max_attempts=req.max_attempts or 50000)


def _hitori_certify(instance: PuzzleInstance) -> Label:
    count = hitori.count_solutions(hitori.grid_from_payload(instance.payload), limit=2)
    if count == 1:
        return Label.SOLVABLE
    if count == 0:
        return Label.UNSOLVABLE
    raise ValueError(f"hitori instance {instance.id} has several valid shadings")


def _hitori_check(instance: PuzzleInstance, text: str) -> bool:
    grid = hitori.grid_from_payload(instance.payload)
    pairs = re.findall(r"\(\s*(\d{1,6})\s*,\s*(\d{1,6})\s*\)|\[\s*(\d{1,6})\s*,\s*(\d{1,6})\s*\]", text)
    cells = [(int(a or c), int(b or d)) for a, b, c, d in pairs]
    try:
        shading = hitori.Shading.of(grid.n, cells)
    except hitori.DimensionMismatch:
        return False
    return hitori.check_shading(grid, shading).valid


# --- maze -------------------------------------------------------------------

def _maze_generate(req: GenerationRequest) -> PuzzleInstance:
    side = req.size or maze.size_for(req.tier)
    return maze.generate(side, side, req.label, req.seed, max_attempts=req.max_attempts or 20)


def _maze_certify(instance: PuzzleInstance) -> Label:
    reachable = maze.solve_bfs(maze.maze_from_payload(instance.payload)).reachable
    return Label.SOLVABLE if reachable else Label.UNSOLVABLE


def _maze_check(instance: PuzzleInstance, text: str) -> bool:
    moves = maze.parse_moves(text)
    if moves is None:
        return False
    return maze.check_moves(maze.maze_from_payload(instance.payload), moves)


# --- math -------------------------------------------------------------------

def _math_certify(instance: PuzzleInstance) -> Label:
    # Model-verified; nothing deterministic to re-run.
    return instance.label


def _normalize(answer: str) -> str:
    return re.sub(r"[\s$]", "", answer).lower()


def _math_check(instance: PuzzleInstance, text: str) -> bool:
    reference = instance.payload.get("reference_answer")
    if instance.label is Label.UNSOLVABLE or not reference:
        return False
    return _normalize(text) == _normalize(str(reference))


ADAPTERS: Dict[Domain, DomainAdapter] = {
    Domain.GAME24: DomainAdapter(Domain.GAME24, _game24_certify, _game24_check, _game24_generate),
    Domain.HAM_CYCLE: DomainAdapter(Domain.HAM_CYCLE, _ham_certify, _ham_check,
                                    _ham_generate(hamiltonian.TraversalMode.CYCLE)),
    Domain.HAM_PATH: DomainAdapter(Domain.HAM_PATH, _ham_certify, _ham_check,
                                   _ham_generate(hamiltonian.TraversalMode.PATH)),
    Domain.HITORI: DomainAdapter(Domain.HITORI, _hitori_certify, _hitori_check, _hitori_generate),
    Domain.MAZE: DomainAdapter(Domain.MAZE, _maze_certify, _maze_check, _maze_generate),
    Domain.MATH: DomainAdapter(Domain.MATH, _math_certify, _math_check),
}


def has_domain(domain: Domain) -> bool:
    return domain in ADAPTERS


def adapter(domain: Domain) -> DomainAdapter:
    try:
        return ADAPTERS[domain]
    except KeyError:
        raise UnknownDomain(domain.value)


def check_answer_text(instance: PuzzleInstance, text: str) -> bool:
    return adapter(instance.domain).check_text(instance, text)


def certify(instance: PuzzleInstance) -> Label:
    return adapter(instance.domain).certify(instance)


def witness_holds(instance: PuzzleInstance) -> bool:
    """A stored witness must pass the domain's own answer check."""
    if instance.witness is None:
        return instance.label is Label.UNSOLVABLE or instance.domain is Domain.MATH
    witness = instance.witness
    if isinstance(witness, list):
        if witness and isinstance(witness[0], list):
            text = " ".join(f"({r},{c})" for r, c in witness)
        else:
            text = " ".join(str(v) for v in witness)
    else:
        text = str(witness)
    return check_answer_text(instance, text)
