"""Sparse set query: find at most n marked elements of [k], n per query.

Large universes are first thinned by group queries (zero groups are
discarded, which leaves at most n^2 elements since at most n groups can be
nonzero); the survivors keep their group counts as hints and feed a bounded
splittable family whose instances track per-block overlap counts.  Between
2n and n^2 elements, per-block sparse coin weighing is already optimal, and
below 2n the problem is plain coin weighing on two halves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Iterator, Optional, Sequence

from .core import (ImpossibleState, InconsistentOracle, Prediction, Reduced,
                   ShapeError, Step, Strategy, StrategyGen, ZERO)
from . import engine_bounded
from .coins import CoinGame, solve_coins, solve_sparse
from .engine_bounded import BoundedSplittableFamily


@dataclass
class SetQueryGame:
    """Universe [k], hidden subset of at most n elements, n-element queries."""

    k: int
    n: int

    def zero_query(self):
        return frozenset()

    def merge(self, queries: Sequence[Any]) -> Any:
        parts = [q for q in queries if q is not ZERO]
        merged: frozenset = frozenset()
        total = 0
        for q in parts:
            total += len(q)
            merged |= q
        if len(merged) != total:
            raise ShapeError("merged set queries overlap")
        if len(merged) > self.n:
            raise ShapeError(f"query of {len(merged)} elements exceeds the scale ({self.n})")
        return merged

    def evaluate(self, codeword: frozenset, query: frozenset,
                 feedback: str = "value") -> int:
        if len(query) > self.n:
            raise ShapeError(f"query of {len(query)} elements exceeds the scale ({self.n})")
        return len(codeword & query)

    def codewords(self) -> Iterator[frozenset]:
        universe = range(1, self.k + 1)
        for size in range(self.n + 1):
            for subset in combinations(universe, size):
                yield frozenset(subset)

    def codeword_count(self) -> int:
        return sum(math.comb(self.k, i) for i in range(self.n + 1))

    def max_answer_range(self) -> int:
        return self.n + 1

    def codeword_mapping(self, codeword: frozenset) -> dict:
        return {e: int(e in codeword) for e in range(1, self.k + 1)}

    def random_codeword(self, rng) -> frozenset:
        size = rng.randrange(self.n + 1)
        return frozenset(rng.sample(range(1, self.k + 1), size))

    def render_query(self, query) -> dict:
        return {"elements": sorted(query)}


@dataclass
class SquareInstance:
    """Hinted instance: blocks of elements with known codeword overlaps.

    ``size`` is the capacity (maximum remaining marked elements and maximum
    query size); the block overlaps sum to at most the capacity.
    """

    game: SetQueryGame
    capacity: int
    blocks: tuple[tuple[tuple[int, ...], int], ...]

    @property
    def size(self) -> int:
        return self.capacity

    @property
    def support(self) -> frozenset:
        return frozenset(e for elems, _ in self.blocks for e in elems)

    def translate(self, q):
        return q

    def check(self) -> None:
        total = sum(d for _, d in self.blocks)
        if total > self.capacity:
            raise ShapeError(f"overlaps {total} exceed capacity {self.capacity}")
        for elems, d in self.blocks:
            if d > len(elems):
                raise ShapeError("block overlap exceeds block size")


def _three_parts(elems: Sequence[int], cap: int) -> list[tuple[int, ...]]:
    """Split into three parts of size at most cap (cap >= ceil(len/3))."""
    k = len(elems)
    sizes = [(k + 2) // 3, (k + 1) // 3, k // 3]
    if sizes[0] > cap:
        raise ShapeError("block too large for a three-way split")
    parts, at = [], 0
    for s in sizes:
        parts.append(tuple(elems[at:at + s]))
        at += s
    return parts


class SquareFamily(BoundedSplittableFamily):
    """Splits hinted set-query instances into two capacity halves.

    Every nonzero block is cut in three parts small enough for the children;
    two parts are queried (with the block's overlap as the bound) and the
    third is inferred.  The nonzero parts are dealt greedily, largest overlap
    first, into lists respecting the two capacity halves; the argument that at
    most one part fits neither list is load-bearing, so its failure raises.
    """

    alpha = 5

    def __init__(self, game: SetQueryGame):
        self.game = game

    def base(self, inst: SquareInstance) -> StrategyGen:
        inst.check()
        facts: dict[int, int] = {}
        for elems, d in inst.blocks:
            if d == 0:
                facts.update({e: 0 for e in elems})
            elif d == len(elems):
                facts.update({e: 1 for e in elems})
            else:  # capacity 1 blocks have at most one element
                raise ShapeError(f"unresolved base block of {len(elems)} elements")
        return facts
        yield  # pragma: no cover

    def split(self, inst: SquareInstance) -> StrategyGen:
        inst.check()
        m = inst.capacity
        cap_left = (m + 1) // 2
        cap_right = m // 2
        facts: dict[int, int] = {}
        candidates: list[tuple[tuple[int, ...], int]] = []
        for elems, d in inst.blocks:
            if d == 0:
                facts.update({e: 0 for e in elems})
                continue
            parts = _three_parts(elems, cap_right)
            if d == len(elems):
                counts = [len(part) for part in parts]  # fully marked: forced
            else:
                counts = []
                for part in parts[:2]:
                    if not part:
                        counts.append(0)
                        continue
                    answer = yield Step(frozenset(part), bound=min(d, len(part)))
                    counts.append(answer)
                third = d - counts[0] - counts[1]
                if third < 0 or third > len(parts[2]):
                    raise InconsistentOracle("inferred part count out of range")
                counts.append(third)
            for part, count in zip(parts, counts):
                if count == 0:
                    facts.update({e: 0 for e in part})
                elif count > 0:
                    candidates.append((part, count))
        candidates.sort(key=lambda bc: -bc[1])
        left: list[tuple[tuple[int, ...], int]] = []
        right: list[tuple[tuple[int, ...], int]] = []
        load_left = load_right = 0
        leftover: Optional[tuple[tuple[int, ...], int]] = None
        for part, count in candidates:
            if load_left + count <= cap_left:
                left.append((part, count))
                load_left += count
            elif load_right + count <= cap_right:
                right.append((part, count))
                load_right += count
            elif leftover is None:
                leftover = (part, count)
            else:
                raise ImpossibleState("two blocks fit in neither half")
        if leftover is not None:
            elems, count = leftover
            found = 0
            for e in elems:
                if found == count:
                    facts[e] = 0
                    continue
                value = yield Step(frozenset({e}), bound=1, simple=True)
                found += value
                if value == 0:
                    facts[e] = 0
                elif load_left + 1 <= cap_left:
                    left.append(((e,), 1))
                    load_left += 1
                elif load_right + 1 <= cap_right:
                    right.append(((e,), 1))
                    load_right += 1
                else:
                    raise ImpossibleState("marked element fits in neither half")
            if found != count:
                raise InconsistentOracle("leftover block count mismatch")
        left_inst = SquareInstance(self.game, cap_left, tuple(left))
        right_inst = SquareInstance(self.game, cap_right, tuple(right))
        return Reduced([left_inst, right_inst], facts)


def family_square(game: SetQueryGame) -> SquareFamily:
    return SquareFamily(game)


def reduce_to_square(k: int, n: int) -> StrategyGen:
    """Query [k] in groups of n, keeping only the groups that answered nonzero.

    At most n groups can intersect the hidden set, so at most n^2 elements
    survive, and the answers double as the surviving blocks' overlap hints.
    Finishes with the surviving blocks as a single hinted instance.
    """
    facts: dict[int, int] = {}
    blocks: list[tuple[tuple[int, ...], int]] = []
    total = 0
    for start in range(1, k + 1, n):
        group = tuple(range(start, min(start + n, k + 1)))
        answer = yield Step(frozenset(group), bound=min(n, len(group)))
        total += answer
        if total > n:
            raise InconsistentOracle(f"{total} marked elements exceed capacity {n}")
        if answer == 0:
            facts.update({e: 0 for e in group})
        else:
            blocks.append((group, answer))
    return Reduced([blocks], facts)


def square_ceiling(k: int, n: int) -> int:
    beta = 4 * SquareFamily.alpha
    return -(-k // n) + 16 * beta * n - 15 * beta


def solve_setquery(k: int, n: int, game: Optional[SetQueryGame] = None) -> Strategy:
    """Sparse set query over [k] with at most n marked, n per weighing."""
    if not 1 <= n <= k:
        raise ValueError("need k >= n >= 1")
    game = game or SetQueryGame(k, n)

    if k < 2 * n:
        halves = [tuple(range(1, (k + 1) // 2 + 1)),
                  tuple(range((k + 1) // 2 + 1, k + 1))]

        def run_halves() -> StrategyGen:
            facts: dict[int, int] = {}
            for half in halves:
                if not half:
                    continue
                inner = solve_coins(len(half), CoinGame(half))
                fragment = yield from inner.run()
                facts.update(fragment)
            return facts

        return Strategy(run_halves, game=game,
                        description=f"set query k={k} n={n} (two halves)")

    if k < n * n:
        def run_blocks() -> StrategyGen:
            facts: dict[int, int] = {}
            total = 0
            for start in range(1, k + 1, n):
                block = tuple(range(start, min(start + n, k + 1)))
                d = yield Step(frozenset(block), bound=min(n, len(block)))
                total += d
                if total > n:
                    raise InconsistentOracle("more marked elements than capacity")
                if d == 0:
                    facts.update({e: 0 for e in block})
                    continue
                inner = solve_sparse(len(block), d, CoinGame(block, ("sparse", d)))
                fragment = yield from inner.run()
                facts.update(fragment)
            return facts

        return Strategy(run_blocks, game=game,
                        description=f"set query k={k} n={n} (blocks)")

    def run_square() -> StrategyGen:
        reduced = yield from reduce_to_square(k, n)
        (blocks,) = reduced.children
        inst = SquareInstance(game, n, tuple(blocks))
        inner = engine_bounded.solve_bounded(family_square(game), inst)
        fragment = yield from inner.run()
        merged = dict(reduced.facts)
        merged.update(fragment)
        return merged

    return Strategy(run_square, ceiling=square_ceiling(k, n), game=game,
                    description=f"set query k={k} n={n} (square)")
