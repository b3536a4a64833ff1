"""
A small complete SAT solver and CNF helpers.

Literals are signed integers in DIMACS convention: variable v true is v,
false is -v. The solver is CDCL: two watched literals per clause, first-UIP
clause learning and non-chronological backjumping, no restarts. The default
branching takes the lowest unassigned variable and tries False first, so
models are reproducible.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .model import UnsolvableError

logger = logging.getLogger(__name__)

DEFAULT_PROPAGATION_BUDGET = 10_000_000

Clause = Tuple[int, ...]


class EmptyInput(UnsolvableError):
    pass


class ResourceLimit(UnsolvableError):
    """The propagation budget ran out before the search finished."""

    def __init__(self, budget: int):
        super().__init__(f"propagation budget of {budget} exhausted")
        self.budget = budget


class DimacsError(UnsolvableError):
    pass


def lit(variable: int, polarity: bool = True) -> int:
    if variable < 1:
        raise ValueError(f"variables start at 1, got {variable}")
    return variable if polarity else -variable


class CnfFormula:
    """Clause database. Duplicate literals are merged and tautologies dropped on insert."""

    def __init__(self, variable_count: int = 0):
        self.variable_count = variable_count
        self.clauses: List[Clause] = []

    def new_var(self) -> int:
        self.variable_count += 1
        return self.variable_count

    def add_clause(self, literals: Iterable[int]) -> None:
        clause = tuple(dict.fromkeys(literals))
        if not clause:
            raise EmptyInput("clauses must contain at least one literal")
        for l in clause:
            if l == 0 or abs(l) > self.variable_count:
                raise ValueError(f"literal {l} outside 1..{self.variable_count}")
        if any(-l in clause for l in clause):
            return
        self.clauses.append(clause)

    def add_clauses(self, clauses: Iterable[Iterable[int]]) -> None:
        for clause in clauses:
            self.add_clause(clause)

    def __len__(self) -> int:
        return len(self.clauses)

    def evaluate(self, assignment: "Assignment") -> bool:
        """Independent clause-by-clause check of a model."""
        return all(any(assignment.satisfies(l) for l in clause) for clause in self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.variable_count} {len(self.clauses)}"]
        lines.extend(" ".join(str(l) for l in clause) + " 0" for clause in self.clauses)
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    formula: Optional[CnfFormula] = None
    pending: List[int] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {line_no}: bad header {line!r}")
            formula = CnfFormula(int(parts[2]))
            continue
        if formula is None:
            raise DimacsError(f"line {line_no}: clause before 'p cnf' header")
        try:
            numbers = [int(tok) for tok in line.split()]
        except ValueError:
            raise DimacsError(f"line {line_no}: non-integer token")
        for value in numbers:
            if value == 0:
                formula.add_clause(pending)
                pending = []
            else:
                pending.append(value)
    if formula is None:
        raise DimacsError("missing 'p cnf' header")
    if pending:
        formula.add_clause(pending)
    return formula


def exactly_one(literals: Sequence[int]) -> List[Clause]:
    """At-least-one clause plus pairwise at-most-one clauses."""
    if not literals:
        raise EmptyInput("exactly_one needs at least one literal")
    clauses: List[Clause] = [tuple(literals)]
    for a, b in itertools.combinations(literals, 2):
        clauses.append((-a, -b))
    return clauses


@dataclass(frozen=True)
class Assignment:
    """Total assignment; values[i] is the value of variable i + 1."""

    values: Tuple[bool, ...]

    def __getitem__(self, variable: int) -> bool:
        return self.values[variable - 1]

    def satisfies(self, literal: int) -> bool:
        value = self.values[abs(literal) - 1]
        return value if literal > 0 else not value

    def true_variables(self) -> List[int]:
        return [i + 1 for i, v in enumerate(self.values) if v]


@dataclass(frozen=True)
class SolveResult:
    satisfiable: bool
    model: Optional[Assignment] = None


# Returns the literal to assert at the next decision, or None when every
# variable is assigned.
Branching = Callable[[List[Optional[bool]]], Optional[int]]


def lowest_unassigned(assign: List[Optional[bool]]) -> Optional[int]:
    for var in range(1, len(assign)):
        if assign[var] is None:
            return -var
    return None


class Solver:
    """Single-use CDCL solver over one formula."""

    def __init__(self, formula: CnfFormula, budget: int = DEFAULT_PROPAGATION_BUDGET,
                 branching: Branching = lowest_unassigned):
        self.formula = formula
        self.budget = budget
        self.branching = branching
        self.propagations = 0
        self.conflicts = 0
        n = formula.variable_count
        self.assign: List[Optional[bool]] = [None] * (n + 1)
        self.level: List[int] = [0] * (n + 1)
        # index into self.clauses of the clause that implied the variable
        self.reason: List[Optional[int]] = [None] * (n + 1)
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.qhead = 0
        self.clauses: List[List[int]] = []
        self.watches: Dict[int, List[int]] = {}
        self.units: List[int] = []
        for clause in formula.clauses:
            if len(clause) == 1:
                self.units.append(clause[0])
            else:
                self._attach(list(clause))

    def _attach(self, clause: List[int]) -> int:
        index = len(self.clauses)
        self.clauses.append(clause)
        self.watches.setdefault(clause[0], []).append(index)
        self.watches.setdefault(clause[1], []).append(index)
        return index

    def _value(self, literal: int) -> Optional[bool]:
        value = self.assign[abs(literal)]
        if value is None:
            return None
        return value if literal > 0 else not value

    def _enqueue(self, literal: int, reason: Optional[int]) -> bool:
        value = self._value(literal)
        if value is not None:
            return value
        var = abs(literal)
        self.assign[var] = literal > 0
        self.level[var] = len(self.trail_lim)
        self.reason[var] = reason
        self.trail.append(literal)
        return True

    def _propagate(self) -> Optional[int]:
        """Unit propagation; returns the index of a conflicting clause, if any."""
        while self.qhead < len(self.trail):
            false_lit = -self.trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            if self.propagations > self.budget:
                raise ResourceLimit(self.budget)
            watching = self.watches.get(false_lit, [])
            kept: List[int] = []
            for position, index in enumerate(watching):
                clause = self.clauses[index]
                if clause[0] == false_lit:
                    clause[0], clause[1] = clause[1], clause[0]
                if self._value(clause[0]) is True:
                    kept.append(index)
                    continue
                for k in range(2, len(clause)):
                    if self._value(clause[k]) is not False:
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watches.setdefault(clause[1], []).append(index)
                        break
                else:
                    kept.append(index)
                    if not self._enqueue(clause[0], index):
                        kept.extend(watching[position + 1:])
                        self.watches[false_lit] = kept
                        return index
            self.watches[false_lit] = kept
        return None

    def _analyze(self, conflict: int) -> Tuple[List[int], int]:
        """First-UIP learning; returns the learnt clause (asserting literal first) and the backjump level."""
        current = len(self.trail_lim)
        learnt: List[int] = [0]
        seen: Set[int] = set()
        pending = 0
        literal: Optional[int] = None
        index = len(self.trail) - 1
        clause = self.clauses[conflict]
        while True:
            for q in clause:
                var = abs(q)
                if q == literal or var in seen or self.level[var] == 0:
                    continue
                seen.add(var)
                if self.level[var] == current:
                    pending += 1
                else:
                    learnt.append(q)
            while abs(self.trail[index]) not in seen:
                index -= 1
            literal = self.trail[index]
            index -= 1
            pending -= 1
            if pending == 0:
                break
            clause = self.clauses[self.reason[abs(literal)]]
        learnt[0] = -literal
        if len(learnt) == 1:
            return learnt, 0
        deepest = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
        learnt[1], learnt[deepest] = learnt[deepest], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _backjump(self, level: int) -> None:
        if len(self.trail_lim) <= level:
            return
        position = self.trail_lim[level]
        for literal in self.trail[position:]:
            var = abs(literal)
            self.assign[var] = None
            self.reason[var] = None
        del self.trail[position:]
        del self.trail_lim[level:]
        self.qhead = position

    def solve(self) -> SolveResult:
        for unit in self.units:
            if not self._enqueue(unit, None):
                return SolveResult(False)
        while True:
            conflict = self._propagate()
            if conflict is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    logger.debug("unsat after %d propagations, %d conflicts",
                                 self.propagations, self.conflicts)
                    return SolveResult(False)
                learnt, level = self._analyze(conflict)
                self._backjump(level)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self._enqueue(learnt[0], self._attach(learnt))
                continue
            literal = self.branching(self.assign)
            if literal is None:
                break
            self.trail_lim.append(len(self.trail))
            self._enqueue(literal, None)

        model = Assignment(tuple(bool(v) for v in self.assign[1:]))
        if not self.formula.evaluate(model):
            raise AssertionError("solver produced a model that violates a clause")
        logger.debug("sat after %d propagations, %d conflicts", self.propagations, self.conflicts)
        return SolveResult(True, model)


def solve(formula: CnfFormula, budget: int = DEFAULT_PROPAGATION_BUDGET,
          branching: Branching = lowest_unassigned) -> SolveResult:
    return Solver(formula, budget=budget, branching=branching).solve()
