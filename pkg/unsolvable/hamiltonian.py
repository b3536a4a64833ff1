"""
Hamiltonian cycle/path instances.

Graphs are decided through a position encoding: variable x(v, i) says vertex
v sits at position i of the traversal. Unsolvable graphs are built
constructively from a structural obstruction (disconnection, a cut vertex, or
dead ends) and then padded with noise edges that keep the obstruction intact.
decide checks those obstructions first and only hands the remaining graphs to
the SAT solver, which fills positions in order.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from . import sat
from .model import (
    Difficulty, Domain, ExhaustedAttempts, Label, PuzzleInstance, Tier,
    UnsolvableError, instance_id,
)
from .rng import SeededRng

logger = logging.getLogger(__name__)

MIN_GENERATED, MAX_GENERATED = 4, 20
DEFAULT_NOISE_CAP = 0.5

Edge = Tuple[int, int]


class InvalidGraph(UnsolvableError):
    pass


class TraversalMode(Enum):
    CYCLE = "cycle"
    PATH = "path"

    @property
    def domain(self) -> Domain:
        return Domain.HAM_CYCLE if self is TraversalMode.CYCLE else Domain.HAM_PATH


class Strategy(Enum):
    DISCONNECT = "disconnect"
    BOTTLENECK = "bottleneck"
    DEAD_END = "dead_end"


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..n-1; edges stored as (u, v) with u < v."""

    n: int
    edges: FrozenSet[Edge]

    @classmethod
    def of(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        if n < 2:
            raise InvalidGraph(f"need at least 2 vertices, got {n}")
        normalized: Set[Edge] = set()
        for u, v in edges:
            if u == v:
                raise InvalidGraph(f"self-loop on {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidGraph(f"edge ({u}, {v}) outside 0..{n - 1}")
            normalized.add((min(u, v), max(u, v)))
        return cls(n, frozenset(normalized))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls.of(n, itertools.combinations(range(n), 2))

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def sorted_edges(self) -> List[List[int]]:
        return [list(e) for e in sorted(self.edges)]


def position_var(n: int, v: int, i: int) -> int:
    return v * n + i + 1


def encode(graph: Graph, mode: TraversalMode) -> sat.CnfFormula:
    n = graph.n
    formula = sat.CnfFormula(n * n)
    x = lambda v, i: position_var(n, v, i)
    for i in range(n):
        formula.add_clauses(sat.exactly_one([x(v, i) for v in range(n)]))
    for v in range(n):
        formula.add_clauses(sat.exactly_one([x(v, i) for i in range(n)]))
    non_edges = [(u, v) for u, v in itertools.permutations(range(n), 2)
                 if not graph.has_edge(u, v)]
    for i in range(n - 1):
        for u, v in non_edges:
            formula.add_clause((-x(u, i), -x(v, i + 1)))
    if mode is TraversalMode.CYCLE:
        for u, v in non_edges:
            formula.add_clause((-x(u, n - 1), -x(v, 0)))
    return formula


def canonical_order(order: Sequence[int], mode: TraversalMode) -> List[int]:
    order = list(order)
    if mode is TraversalMode.CYCLE:
        start = order.index(0)
        order = order[start:] + order[:start]
        if len(order) > 2 and order[1] > order[-1]:
            order = [order[0]] + order[:0:-1]
        return order
    if order and order[0] > order[-1]:
        order.reverse()
    return order


def _decode(model: sat.Assignment, n: int) -> List[int]:
    order = [-1] * n
    for v in range(n):
        for i in range(n):
            if model[position_var(n, v, i)]:
                order[i] = v
    return order


@dataclass(frozen=True)
class Decision:
    label: Label
    order: Optional[Tuple[int, ...]] = None
    # "solver", or the structural obstruction that rules out any traversal
    certificate: str = "solver"


def _cut_vertex_splitting(g: nx.Graph, parts: int) -> Optional[int]:
    """Lowest articulation point whose removal leaves at least `parts` components."""
    for cut in sorted(nx.articulation_points(g)):
        rest = g.copy()
        rest.remove_node(cut)
        if nx.number_connected_components(rest) >= parts:
            return cut
    return None


def obstruction(graph: Graph, mode: TraversalMode) -> Optional[str]:
    """
    A structural reason no traversal can exist, or None. Every check is a
    necessary condition: a Hamiltonian path needs a connected graph with at
    most two degree-1 vertices, and no vertex whose removal leaves three or
    more pieces; a Hamiltonian cycle on three or more vertices needs minimum
    degree 2 and no cut vertex at all.
    """
    g = graph.to_networkx()
    if not nx.is_connected(g):
        return "disconnected"
    degrees = dict(g.degree())
    if mode is TraversalMode.CYCLE:
        if graph.n < 3:
            return None
        low = [v for v in range(graph.n) if degrees[v] < 2]
        if low:
            return f"vertex {low[0]} has degree {degrees[low[0]]}"
        cut = _cut_vertex_splitting(g, 2)
        return f"cut vertex {cut}" if cut is not None else None
    leaves = [v for v in range(graph.n) if degrees[v] == 1]
    if len(leaves) > 2:
        return f"{len(leaves)} vertices of degree 1"
    cut = _cut_vertex_splitting(g, 3)
    return f"cut vertex {cut} leaves 3 or more components" if cut is not None else None


def position_major(graph: Graph) -> sat.Branching:
    """
    Fill positions in order: the first position without a vertex gets the
    candidate with the fewest unplaced neighbors (lowest index on ties), tried
    True first. Deterministic, so decoded orders are reproducible.
    """
    n = graph.n
    neighbors = [[u for u in range(n) if graph.has_edge(u, v)] for v in range(n)]

    def branch(assign: List[Optional[bool]]) -> Optional[int]:
        placed: Set[int] = set()
        open_position = None
        for i in range(n):
            here = [v for v in range(n) if assign[position_var(n, v, i)] is True]
            if here:
                placed.add(here[0])
            elif open_position is None:
                open_position = i
        if open_position is None:
            return sat.lowest_unassigned(assign)
        candidates = [v for v in range(n) if assign[position_var(n, v, open_position)] is None]
        if not candidates:
            return sat.lowest_unassigned(assign)
        best = min(candidates,
                   key=lambda v: (sum(1 for u in neighbors[v] if u not in placed), v))
        return position_var(n, best, open_position)

    return branch


def decide(graph: Graph, mode: TraversalMode,
           budget: int = sat.DEFAULT_PROPAGATION_BUDGET) -> Decision:
    """
    Certify the graph. Structural obstructions settle Unsolvable directly;
    everything else goes to the SAT solver. Raises sat.ResourceLimit.
    """
    reason = obstruction(graph, mode)
    if reason is not None:
        return Decision(Label.UNSOLVABLE, certificate=reason)
    result = sat.solve(encode(graph, mode), budget=budget, branching=position_major(graph))
    if not result.satisfiable:
        return Decision(Label.UNSOLVABLE)
    order = canonical_order(_decode(result.model, graph.n), mode)
    if not check_sequence(graph, order, mode):
        raise AssertionError(f"decoded order {order} is not a valid traversal")
    return Decision(Label.SOLVABLE, tuple(order))


def check_sequence(graph: Graph, order: Sequence[int], mode: TraversalMode) -> bool:
    order = list(order)
    if sorted(order) != list(range(graph.n)):
        return False
    for a, b in zip(order, order[1:]):
        if not graph.has_edge(a, b):
            return False
    if mode is TraversalMode.CYCLE and not graph.has_edge(order[-1], order[0]):
        return False
    return True


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def _path_edges(vertices: Sequence[int]) -> Set[Edge]:
    return {(min(a, b), max(a, b)) for a, b in zip(vertices, vertices[1:])}


def _add_noise(rng: SeededRng, n: int, edges: Set[Edge], noise_cap: float,
               allowed: Callable[[int, int], bool]) -> None:
    cap = int(noise_cap * n * (n - 1) / 2)
    room = cap - len(edges)
    if room <= 0:
        return
    candidates = [(u, v) for u, v in itertools.combinations(range(n), 2)
                  if (u, v) not in edges and allowed(u, v)]
    count = rng.randint(0, min(room, len(candidates)))
    edges.update(rng.sample(candidates, count))


def _partition(rng: SeededRng, items: List[int], parts: int, minimum: int) -> List[List[int]]:
    sizes = [minimum] * parts
    for _ in range(len(items) - minimum * parts):
        sizes[rng.randbelow(parts)] += 1
    groups, start = [], 0
    for size in sizes:
        groups.append(items[start:start + size])
        start += size
    return groups


def _solvable_graph(rng: SeededRng, n: int, mode: TraversalMode, noise_cap: float) -> Graph:
    perm = list(range(n))
    rng.shuffle(perm)
    edges = _path_edges(perm)
    if mode is TraversalMode.CYCLE:
        edges |= _path_edges([perm[-1], perm[0]])
    _add_noise(rng, n, edges, noise_cap, lambda u, v: True)
    return Graph(n, frozenset(edges))


def _disconnected_graph(rng: SeededRng, n: int, noise_cap: float) -> Graph:
    perm = list(range(n))
    rng.shuffle(perm)
    split = rng.randint(2, n - 2)
    side = {v: (0 if k < split else 1) for k, v in enumerate(perm)}
    edges = _path_edges(perm[:split]) | _path_edges(perm[split:])
    _add_noise(rng, n, edges, noise_cap, lambda u, v: side[u] == side[v])
    return Graph(n, frozenset(edges))


def _bottleneck_graph(rng: SeededRng, n: int, mode: TraversalMode, noise_cap: float) -> Graph:
    perm = list(range(n))
    rng.shuffle(perm)
    cut, others = perm[0], perm[1:]
    parts = 2 if mode is TraversalMode.CYCLE else 3
    minimum = 2 if len(others) >= 2 * parts else 1
    groups = _partition(rng, others, parts, minimum)
    group_of = {v: g for g, members in enumerate(groups) for v in members}
    edges: Set[Edge] = set()
    for members in groups:
        edges |= _path_edges(members)
        anchor = rng.choice(members)
        edges.add((min(cut, anchor), max(cut, anchor)))
    _add_noise(rng, n, edges, noise_cap,
               lambda u, v: cut in (u, v) or group_of[u] == group_of[v])
    return Graph(n, frozenset(edges))


def _dead_end_graph(rng: SeededRng, n: int, mode: TraversalMode, noise_cap: float) -> Graph:
    perm = list(range(n))
    rng.shuffle(perm)
    leaf_count = 1 if mode is TraversalMode.CYCLE else 3
    leaves, core = perm[:leaf_count], perm[leaf_count:]
    edges = _path_edges(core)
    for leaf in leaves:
        anchor = rng.choice(core)
        edges.add((min(leaf, anchor), max(leaf, anchor)))
    blocked = set(leaves)
    _add_noise(rng, n, edges, noise_cap,
               lambda u, v: u not in blocked and v not in blocked)
    return Graph(n, frozenset(edges))


def strategy_holds(graph: Graph, mode: TraversalMode, strategy: Strategy) -> bool:
    """Structural obstruction check for a generated graph."""
    g = graph.to_networkx()
    if strategy is Strategy.DISCONNECT:
        return nx.number_connected_components(g) >= 2
    if strategy is Strategy.BOTTLENECK:
        needed = 2 if mode is TraversalMode.CYCLE else 3
        return _cut_vertex_splitting(g, needed) is not None
    degrees = dict(g.degree())
    if mode is TraversalMode.CYCLE:
        return any(d < 2 for d in degrees.values())
    return sum(1 for d in degrees.values() if d == 1) > 2


def difficulty_for(n: int) -> Difficulty:
    return Difficulty(Tier.EASY if n <= 8 else Tier.HARD, (n,))


def generate(mode: TraversalMode, n: int, target: Label, strategy: Optional[Strategy] = None,
             seed: int = 0, max_attempts: int = 100,
             noise_cap: float = DEFAULT_NOISE_CAP) -> PuzzleInstance:
    """Build a graph with the target label; the label is re-certified by decide."""
    if not MIN_GENERATED <= n <= MAX_GENERATED:
        raise InvalidGraph(f"generated graphs need {MIN_GENERATED} <= n <= {MAX_GENERATED}")
    rng = SeededRng(seed)
    if target is Label.UNSOLVABLE and strategy is None:
        strategy = rng.choice(list(Strategy))
    for attempt in range(1, max_attempts + 1):
        if target is Label.SOLVABLE:
            graph = _solvable_graph(rng, n, mode, noise_cap)
        elif strategy is Strategy.DISCONNECT:
            graph = _disconnected_graph(rng, n, noise_cap)
        elif strategy is Strategy.BOTTLENECK:
            graph = _bottleneck_graph(rng, n, mode, noise_cap)
        else:
            graph = _dead_end_graph(rng, n, mode, noise_cap)
        if strategy is not None and not strategy_holds(graph, mode, strategy):
            logger.warning("%s graph lost its obstruction, retrying", strategy.value)
            continue
        decision = decide(graph, mode)
        if decision.label is not target:
            continue
        difficulty = difficulty_for(n)
        provenance = {"certified_by": decision.certificate, "attempts": attempt}
        if strategy is not None:
            provenance["strategy"] = strategy.value
        return PuzzleInstance(
            id=instance_id(mode.domain, difficulty, target, seed),
            domain=mode.domain,
            label=target,
            difficulty=difficulty,
            payload={"n": n, "mode": mode.value, "edges": graph.sorted_edges()},
            witness=list(decision.order) if decision.order else None,
            seed=seed,
            provenance=provenance,
        )
    raise ExhaustedAttempts(f"{mode.value} n={n} {target.value}", max_attempts)


def graph_from_payload(payload) -> Graph:
    return Graph.of(int(payload["n"]), payload["edges"])
