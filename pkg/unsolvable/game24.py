"""
Game24: classify number sets by exhaustive search over binary expression
trees in exact rational arithmetic, sample sets with a target label, and
grade answer expressions.
"""

import itertools
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .model import (
    Difficulty, DivisionByZero, Domain, ExhaustedAttempts, Label, Op,
    PuzzleInstance, Rational, Tier, UnsolvableError, instance_id, rational_apply,
)
from .rng import SeededRng

logger = logging.getLogger(__name__)

TARGET = Rational(24)
MIN_VALUE, MAX_VALUE = 1, 13
COUNTS = (4, 5, 6)


class InvalidNumberSet(UnsolvableError):
    pass


@dataclass(frozen=True)
class Leaf:
    value: int


@dataclass(frozen=True)
class Node:
    op: Op
    left: "Tree"
    right: "Tree"


Tree = Union[Leaf, Node]


def evaluate(tree: Tree) -> Rational:
    """Exact value of a tree; raises DivisionByZero."""
    if isinstance(tree, Leaf):
        return Rational(tree.value)
    return rational_apply(tree.op, evaluate(tree.left), evaluate(tree.right))


def leaves(tree: Tree) -> List[int]:
    if isinstance(tree, Leaf):
        return [tree.value]
    return leaves(tree.left) + leaves(tree.right)


def to_infix(tree: Tree) -> str:
    """Canonical infix form: every inner node below the root is parenthesized."""
    if isinstance(tree, Leaf):
        return str(tree.value)
    return f"{_operand(tree.left)}{tree.op.value}{_operand(tree.right)}"


def _operand(tree: Tree) -> str:
    if isinstance(tree, Leaf):
        return str(tree.value)
    return f"({to_infix(tree)})"


def validate_numbers(numbers: Sequence[int]) -> Tuple[int, ...]:
    if len(numbers) not in COUNTS:
        raise InvalidNumberSet(f"expected {COUNTS} numbers, got {len(numbers)}")
    for n in numbers:
        if not MIN_VALUE <= n <= MAX_VALUE:
            raise InvalidNumberSet(f"value {n} outside [{MIN_VALUE}, {MAX_VALUE}]")
    return tuple(numbers)


# ---------------------------------------------------------------------------
# Exhaustive enumeration
# ---------------------------------------------------------------------------

def _shapes(k: int) -> List[object]:
    """All full binary tree shapes with k leaves; a leaf slot is None."""
    if k == 1:
        return [None]
    shapes = []
    for left in range(1, k):
        for l_shape in _shapes(left):
            for r_shape in _shapes(k - left):
                shapes.append((l_shape, r_shape))
    return shapes


def _fill(shape, values: Iterator[int], ops: Iterator[Op]) -> Tree:
    if shape is None:
        return Leaf(next(values))
    op = next(ops)
    left = _fill(shape[0], values, ops)
    right = _fill(shape[1], values, ops)
    return Node(op, left, right)


class TreeEnumerator:
    """
    Walks every operator-labeled tree over a multiset: leaf orderings
    (by position, duplicates included) x shapes x operator assignments.
    For k leaves that is Catalan(k-1) * k! * 4^(k-1) trees.
    """

    def __init__(self, numbers: Sequence[int]):
        self.numbers = tuple(numbers)
        self.visited = 0

    def __iter__(self) -> Iterator[Tree]:
        k = len(self.numbers)
        shapes = _shapes(k)
        for order in itertools.permutations(range(k)):
            values = [self.numbers[i] for i in order]
            for shape in shapes:
                for ops in itertools.product(list(Op), repeat=k - 1):
                    self.visited += 1
                    yield _fill(shape, iter(values), iter(ops))


def _exhaustive(numbers: Sequence[int], target: Rational) -> Optional[Tree]:
    for tree in TreeEnumerator(numbers):
        try:
            if evaluate(tree) == target:
                return tree
        except DivisionByZero:
            continue
    return None


def _reduce(items: List[Tuple[Rational, Tree]], target: Rational,
            failed: set) -> Optional[Tree]:
    """Pairwise reduction; multisets already shown to fail are skipped."""
    if len(items) == 1:
        return items[0][1] if items[0][0] == target else None
    key = tuple(sorted(value for value, _ in items))
    if key in failed:
        return None
    for i, j in itertools.combinations(range(len(items)), 2):
        (a, ta), (b, tb) = items[i], items[j]
        rest = [items[m] for m in range(len(items)) if m != i and m != j]
        candidates = [
            (Op.ADD, a, b, ta, tb),
            (Op.MUL, a, b, ta, tb),
            (Op.SUB, a, b, ta, tb),
            (Op.SUB, b, a, tb, ta),
            (Op.DIV, a, b, ta, tb),
            (Op.DIV, b, a, tb, ta),
        ]
        for op, x, y, tx, ty in candidates:
            try:
                value = rational_apply(op, x, y)
            except DivisionByZero:
                continue
            found = _reduce(rest + [(value, Node(op, tx, ty))], target, failed)
            if found is not None:
                return found
    failed.add(key)
    return None


@dataclass(frozen=True)
class Classification:
    label: Label
    witness: Optional[Tree] = None


def classify(numbers: Sequence[int], prune: bool = True, strict: bool = True) -> Classification:
    """
    Solvable iff some binary tree over the multiset evaluates exactly to 24.

    prune=True searches by pairwise reduction with memoized failing multisets;
    prune=False walks every labeled tree. Both are exhaustive.
    strict=False lets unit fixtures use fewer than four numbers.
    """
    if strict:
        validate_numbers(numbers)
    if prune:
        witness = _reduce([(Rational(n), Leaf(n)) for n in numbers], TARGET, set())
    else:
        witness = _exhaustive(numbers, TARGET)
    if witness is None:
        return Classification(Label.UNSOLVABLE)
    return Classification(Label.SOLVABLE, witness)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def difficulty_for(k: int) -> Difficulty:
    return Difficulty(Tier.EASY if k == 4 else Tier.HARD, (k,))


def sample(k: int, target: Label, seed: int, max_attempts: int = 10000) -> PuzzleInstance:
    """Rejection-sample a number set whose classification equals target."""
    if k not in COUNTS:
        raise InvalidNumberSet(f"k must be one of {COUNTS}, got {k}")
    rng = SeededRng(seed)
    for attempt in range(1, max_attempts + 1):
        numbers = sorted(rng.randint(MIN_VALUE, MAX_VALUE) for _ in range(k))
        result = classify(numbers)
        if result.label is not target:
            continue
        difficulty = difficulty_for(k)
        logger.debug("game24 %s after %d attempts: %s", target.value, attempt, numbers)
        return PuzzleInstance(
            id=instance_id(Domain.GAME24, difficulty, target, seed),
            domain=Domain.GAME24,
            label=target,
            difficulty=difficulty,
            payload={"numbers": numbers, "k": k},
            witness=to_infix(result.witness) if result.witness is not None else None,
            seed=seed,
            provenance={"certified_by": "solver", "attempts": attempt},
        )
    raise ExhaustedAttempts(f"game24 k={k} {target.value}", max_attempts)


# ---------------------------------------------------------------------------
# Answer grading
# ---------------------------------------------------------------------------

class AnswerError(Enum):
    PARSE_ERROR = "parse_error"
    WRONG_NUMBERS = "wrong_numbers"
    WRONG_VALUE = "wrong_value"
    DIVISION_BY_ZERO = "division_by_zero"


@dataclass(frozen=True)
class AnswerCheck:
    correct: bool
    reason: Optional[AnswerError] = None
    detail: str = ""


class ExpressionSyntaxError(UnsolvableError):
    pass


_TOKEN = re.compile(r"\s*(?:([0-9]+)|(.))", re.DOTALL)
# Limits on answer text. A well-formed answer uses at most six numbers.
MAX_TOKENS = 256
MAX_DEPTH = 32
MAX_LITERAL_DIGITS = 6
_OPERATORS: Dict[str, Op] = {
    "+": Op.ADD, "-": Op.SUB, "−": Op.SUB,
    "*": Op.MUL, "x": Op.MUL, "X": Op.MUL, "×": Op.MUL,
    "/": Op.DIV, "÷": Op.DIV,
}


def _tokenize(text: str) -> List[str]:
    tokens = []
    for number, other in _TOKEN.findall(text.strip()):
        if number:
            if len(number) > MAX_LITERAL_DIGITS:
                raise ExpressionSyntaxError(f"number literal longer than {MAX_LITERAL_DIGITS} digits")
            tokens.append(number)
        elif other in _OPERATORS or other in "()":
            tokens.append(other)
        elif not other.isspace():
            raise ExpressionSyntaxError(f"unexpected character {other!r}")
        if len(tokens) > MAX_TOKENS:
            raise ExpressionSyntaxError(f"expression longer than {MAX_TOKENS} tokens")
    return tokens


class _Parser:
    """expr := term (('+'|'-') term)* ; term := atom (('*'|'/') atom)* ; atom := int | '(' expr ')'"""

    def __init__(self, tokens: List[str]):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        token = self.peek()
        if token is None:
            raise ExpressionSyntaxError("unexpected end of expression")
        self.pos += 1
        return token

    def parse(self) -> Tree:
        if not self.tokens:
            raise ExpressionSyntaxError("empty expression")
        tree = self.expr()
        if self.peek() is not None:
            raise ExpressionSyntaxError(f"trailing token {self.peek()!r}")
        return tree

    def expr(self) -> Tree:
        tree = self.term()
        while self.peek() is not None and _OPERATORS.get(self.peek()) in (Op.ADD, Op.SUB):
            op = _OPERATORS[self.take()]
            tree = Node(op, tree, self.term())
        return tree

    def term(self) -> Tree:
        tree = self.atom()
        while self.peek() is not None and _OPERATORS.get(self.peek()) in (Op.MUL, Op.DIV):
            op = _OPERATORS[self.take()]
            tree = Node(op, tree, self.atom())
        return tree

    def atom(self) -> Tree:
        token = self.take()
        if token.isdigit():
            return Leaf(int(token))
        if token == "(":
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise ExpressionSyntaxError(f"parentheses nested deeper than {MAX_DEPTH}")
            tree = self.expr()
            self.depth -= 1
            if self.take() != ")":
                raise ExpressionSyntaxError("missing closing parenthesis")
            return tree
        raise ExpressionSyntaxError(f"unexpected token {token!r}")


def parse_expression(text: str) -> Tree:
    return _Parser(_tokenize(text)).parse()


def check_answer(numbers: Sequence[int], expression_text: str) -> AnswerCheck:
    """Correct iff the text parses, uses exactly the given numbers, and equals 24."""
    try:
        tree = parse_expression(expression_text)
    except ExpressionSyntaxError as e:
        return AnswerCheck(False, AnswerError.PARSE_ERROR, str(e))
    used = sorted(leaves(tree))
    if used != sorted(numbers):
        return AnswerCheck(False, AnswerError.WRONG_NUMBERS, f"used {used}")
    try:
        value = evaluate(tree)
    except DivisionByZero as e:
        return AnswerCheck(False, AnswerError.DIVISION_BY_ZERO, str(e))
    if value != TARGET:
        return AnswerCheck(False, AnswerError.WRONG_VALUE, f"evaluates to {value}")
    return AnswerCheck(True)
