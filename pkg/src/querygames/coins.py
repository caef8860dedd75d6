"""Coin-weighing games: plain, fixed-count, known-total-weight, and n-fold sums.

Plain coin weighing with k_n = n*(1 + floor(log2 n)) coins splits simply by
weighing n coins one at a time, so the simple engine solves it in 16n - 15
queries.  The sparse and weighted variants binary-search a balanced split
point and run under the leaf-heavy composition, and any n-fold sum of games
with constant-weight solutions rides the same k_n construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence

from .core import (InconsistentOracle, Prediction, Reduced, ShapeError, Step,
                   Strategy, StrategyGen, WeightViolation, ZERO)
from . import engine_bounded, engine_simple
from .engine_bounded import BoundedSplittableFamily
from .engine_simple import SimpleSplittableFamily
from .schedules import weight_of_bound


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of ``parts`` non-negative ints summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass
class CoinGame:
    """Coins with hidden non-negative integer values; queries are subsets.

    The answer to a subset query is the sum of the values inside it.  The
    ``variant`` field selects the codeword set: every 0/1 assignment, the
    d-element subsets, or all weight vectors with a known total.
    """

    coins: tuple[int, ...]
    variant: tuple = ("plain",)

    @property
    def real_set(self) -> frozenset:
        cached = getattr(self, "_real_set", None)
        if cached is None:
            cached = frozenset(self.coins)
            object.__setattr__(self, "_real_set", cached)
        return cached

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
            raise ShapeError("merged coin queries overlap")
        return merged

    def evaluate(self, codeword: dict, query: frozenset, feedback: str = "value") -> int:
        return sum(codeword.get(c, 0) for c in query)

    def codewords(self) -> Iterator[dict]:
        n = len(self.coins)
        kind = self.variant[0]
        if kind == "plain":
            for mask in range(1 << n):
                yield {c: (mask >> i) & 1 for i, c in enumerate(self.coins)}
        elif kind == "sparse":
            d = self.variant[1]
            for fake in combinations(self.coins, d):
                chosen = set(fake)
                yield {c: int(c in chosen) for c in self.coins}
        elif kind == "weighted":
            total = self.variant[1]
            for values in compositions(total, n):
                yield dict(zip(self.coins, values))
        else:  # pragma: no cover
            raise ValueError(kind)

    def codeword_count(self) -> int:
        n = len(self.coins)
        kind = self.variant[0]
        if kind == "plain":
            return 1 << n
        if kind == "sparse":
            return math.comb(n, self.variant[1])
        return math.comb(self.variant[1] + n - 1, n - 1)

    def max_answer_range(self) -> int:
        n = len(self.coins)
        kind = self.variant[0]
        if kind == "plain":
            return n + 1
        if kind == "sparse":
            d = self.variant[1]
            return min(d, n - d) + 1
        return self.variant[1] + 1

    def codeword_mapping(self, codeword: dict) -> dict:
        return dict(codeword)

    def random_codeword(self, rng) -> dict:
        kind = self.variant[0]
        if kind == "plain":
            return {c: rng.randrange(2) for c in self.coins}
        if kind == "sparse":
            fake = set(rng.sample(list(self.coins), self.variant[1]))
            return {c: int(c in fake) for c in self.coins}
        total = self.variant[1]
        values = [0] * len(self.coins)
        for _ in range(total):
            values[rng.randrange(len(self.coins))] += 1
        return dict(zip(self.coins, values))

    def render_query(self, query) -> dict:
        return {"elements": sorted(query)}


_K_CACHE: dict[int, int] = {1: 1}


def k_n(n: int) -> int:
    """Coin count solvable at engine size n.

    Defined by k_1 = 1 and k_n = n + k_ceil(n/2) + k_floor(n/2), which is what
    the splitting construction needs to telescope; this equals the closed form
    n*(1 + floor(log2 n)) at powers of two (and is slightly larger between
    them, where the closed form does not satisfy the recurrence).
    """
    if n < 1:
        return 0
    if n not in _K_CACHE:
        _K_CACHE[n] = n + k_n((n + 1) // 2) + k_n(n // 2)
    return _K_CACHE[n]


def engine_size_for(coin_count: int) -> int:
    n = 1
    while k_n(n) < coin_count:
        n += 1
    return n


@dataclass
class CoinPile:
    """A pile of k_n coin ids forming one engine instance of size n.

    Dummy ids (not in the game's real coin set) pad piles up to exact k_n
    sizes; they are dropped when queries are translated to the oracle and
    never appear in decodes.
    """

    game: CoinGame
    ids: tuple[int, ...]
    size: int

    @property
    def support(self) -> frozenset:
        return frozenset(self.ids)

    def translate(self, local_query: frozenset) -> frozenset:
        return frozenset(local_query) & self.game.real_set

    def real(self, coin: int) -> bool:
        return coin in self.game.real_set


class CoinFamily(SimpleSplittableFamily):
    """Plain coin weighing as a simple splittable family with alpha = 1."""

    alpha = 1

    def __init__(self, game: CoinGame):
        self.game = game

    def base(self, inst: CoinPile) -> StrategyGen:
        (coin,) = inst.ids
        answer = yield Step(inst.translate(frozenset({coin})), bound=1, simple=True)
        return {coin: answer} if inst.real(coin) else {}

    def split(self, inst: CoinPile) -> StrategyGen:
        n = inst.size
        if len(inst.ids) != k_n(n):
            raise ShapeError(f"pile of {len(inst.ids)} coins is not k_{n}")
        facts = {}
        for coin in inst.ids[:n]:
            answer = yield Step(inst.translate(frozenset({coin})), bound=1, simple=True)
            if inst.real(coin):
                facts[coin] = answer
        rest = inst.ids[n:]
        left_count = k_n((n + 1) // 2)
        left = CoinPile(self.game, rest[:left_count], (n + 1) // 2)
        right = CoinPile(self.game, rest[left_count:], n // 2)
        return Reduced([left, right], facts)


def family_Cn(game: CoinGame) -> CoinFamily:
    return CoinFamily(game)


def solve_coins(coin_count: int, game: Optional[CoinGame] = None) -> Strategy:
    """Solve plain coin weighing in at most 16n - 15 queries, k_n >= N."""
    if coin_count < 1:
        raise ValueError("need at least one coin")
    game = game or CoinGame(tuple(range(1, coin_count + 1)))
    n = engine_size_for(coin_count)
    dummies = tuple(range(-1, -(k_n(n) - coin_count) - 1, -1))
    pile = CoinPile(game, tuple(game.coins) + dummies, n)
    strategy = engine_simple.solve(family_Cn(game), pile, f"coins N={coin_count}")
    return strategy


# ---------------------------------------------------------------------------
# n-fold sums of weighted-solvable terms


@dataclass
class SumTerm:
    """One term of an n-fold sum: a factory for its weighted solution."""

    factory: Callable[[], StrategyGen]
    weight: float = 1.0


@dataclass
class TermPile:
    game: Any
    terms: tuple
    size: int

    @property
    def support(self) -> frozenset:  # terms own disjoint root supports
        return frozenset()

    def translate(self, q):
        return q


def _trivial_term() -> StrategyGen:
    return {}
    yield  # pragma: no cover


class SumFamily(BoundedSplittableFamily):
    """k_n-pile construction over arbitrary weight-alpha-solvable terms."""

    def __init__(self, game, alpha: int):
        self.game = game
        self.alpha = alpha

    def base(self, inst: TermPile) -> StrategyGen:
        (term,) = inst.terms
        fragment = yield from term.factory()
        return dict(fragment)

    def split(self, inst: TermPile) -> StrategyGen:
        n = inst.size
        if len(inst.terms) != k_n(n):
            raise ShapeError(f"pile of {len(inst.terms)} terms is not k_{n}")
        facts = {}
        for term in inst.terms[:n]:
            fragment = yield from term.factory()
            facts.update(fragment)
        rest = inst.terms[n:]
        left_count = k_n((n + 1) // 2)
        left = TermPile(self.game, rest[:left_count], (n + 1) // 2)
        right = TermPile(self.game, rest[left_count:], n // 2)
        return Reduced([left, right], facts)


def solve_sum(terms: Sequence[SumTerm], game, alpha: Optional[int] = None) -> Strategy:
    """Solve an n-fold sum of weight-alpha-solvable terms in O(alpha*n/log n).

    The terms are arranged into a k_n-sized pile (padded with trivial terms)
    whose splitting reduction solves n terms one at a time, then handed to the
    bounded engine.
    """
    if not terms:
        return Strategy(lambda: _trivial_term(), ceiling=0, game=game)
    if alpha is None:
        alpha = max(1, math.ceil(max(t.weight for t in terms)))
    for t in terms:
        if t.weight > alpha + 1e-9:
            raise WeightViolation(f"term weight {t.weight} exceeds alpha {alpha}")
    n = engine_size_for(len(terms))
    padded = tuple(terms) + tuple(SumTerm(_trivial_term, 0.0)
                                  for _ in range(k_n(n) - len(terms)))
    pile = TermPile(game, padded, n)
    family = SumFamily(game, alpha)
    return engine_bounded.solve_bounded(family, pile, f"sum of {len(terms)} terms")


# ---------------------------------------------------------------------------
# Weighted and sparse coin weighing


@dataclass
class WeightedRange:
    """Contiguous coins with a known total weight, sized for the recursion.

    Membership invariant: weight + len(coins)/lam <= 2*size.
    """

    game: CoinGame
    coins: tuple[int, ...]
    weight: int
    size: int
    lam: int

    @property
    def support(self) -> frozenset:
        return frozenset(self.coins)

    def translate(self, q):
        return q


class WeightedCoinFamily(BoundedSplittableFamily):
    """Splits a known-total-weight range at a weight-balanced prefix.

    The split point is the largest i with i + f({1..i})/lam <= 2*ceil(m/2),
    found by binary search on prefix queries (the predicate is monotone in i,
    which is asserted as answers arrive); one more query resolves the boundary
    coin.
    """

    def __init__(self, game: CoinGame, lam: int, alpha: int):
        self.game = game
        self.lam = lam
        self.alpha = alpha

    def base(self, inst: WeightedRange) -> StrategyGen:
        facts = {c: 0 for c in inst.coins}
        if inst.weight == 0:
            return facts
        if inst.weight != 1:
            raise ShapeError(f"size-1 instance with weight {inst.weight}")
        if not inst.coins:
            raise InconsistentOracle("positive weight on an empty range")
        lo, hi = 0, len(inst.coins)  # unit coin inside coins[lo:hi]
        while hi - lo > 1:
            mid = (lo + hi) // 2
            ans = yield Step(frozenset(inst.coins[lo:mid]), bound=1, simple=True)
            if ans:
                hi = mid
            else:
                lo = mid
        facts[inst.coins[lo]] = 1
        return facts

    def split_weight_bound(self, size: int) -> float:
        length = 2 * self.lam * size
        queries = math.ceil(math.log2(max(2, length))) + 2
        return queries * weight_of_bound(2 * size)

    def base_weight_bound(self) -> float:
        return math.ceil(math.log2(max(2, 2 * self.lam))) + 1.0

    def split(self, inst: WeightedRange) -> StrategyGen:
        m, lam = inst.size, inst.lam
        target = 2 * ((m + 1) // 2)
        n_here = len(inst.coins)
        # The whole range's weight is part of the instance, so the endpoint
        # values of the search predicate cost no queries.
        prefix: dict[int, int] = {0: 0, n_here: inst.weight}

        def admissible(i: int, value: int) -> bool:
            return value + i / lam <= target

        lo, hi = 0, n_here
        if admissible(n_here, inst.weight):
            lo = n_here
        else:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                ans = yield Step(frozenset(inst.coins[:mid]), bound=inst.weight)
                for j, v in prefix.items():
                    if (j <= mid and v > ans) or (j >= mid and v < ans):
                        raise InconsistentOracle("prefix sums are not monotone")
                prefix[mid] = ans
                if admissible(mid, ans):
                    lo = mid
                else:
                    hi = mid
        w_left = prefix[lo]
        facts = {}
        w_boundary = 0
        if lo < n_here:
            boundary = inst.coins[lo]
            w_boundary = yield Step(frozenset({boundary}), bound=inst.weight - w_left)
            facts[boundary] = w_boundary
        left = WeightedRange(self.game, inst.coins[:lo], w_left, (m + 1) // 2, lam)
        right = WeightedRange(self.game, inst.coins[lo + 1:],
                              inst.weight - w_left - w_boundary, m // 2, lam)
        if right.weight < 0:
            raise InconsistentOracle("negative residual weight")
        return Reduced([left, right], facts)


def _binary_search_unit(game: CoinGame, coins: Sequence[int]) -> StrategyGen:
    facts = {c: 0 for c in coins}
    lo, hi = 0, len(coins)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        ans = yield Step(frozenset(coins[lo:mid]), bound=1, simple=True)
        if ans:
            hi = mid
        else:
            lo = mid
    facts[coins[lo]] = 1
    return facts


def _sequential_solve(family, inst) -> StrategyGen:
    """Split all the way down, one reduction after another (no parallelism)."""
    if inst.size == 1:
        fragment = yield from family.base(inst)
        return dict(fragment)
    red = yield from family.split(inst)
    facts = dict(red.facts)
    for child in red.children:
        fragment = yield from _sequential_solve(family, child)
        facts.update(fragment)
    return facts


def _sequential_weight(family, size: int) -> float:
    if size <= 1:
        return family.base_weight_bound()
    return (family.split_weight_bound(size)
            + _sequential_weight(family, (size + 1) // 2)
            + _sequential_weight(family, size // 2))


def solve_leaf_heavy(family: BoundedSplittableFamily, root, game=None,
                     description: str = "") -> Strategy:
    """Composition for families whose split weight is sublinear in n.

    Splits sequentially until about sqrt(n) terms remain, then solves the
    terms in parallel as an n-fold sum.  Total cost O(alpha * n / log n) when
    splits cost O(alpha * n^(1-c)).
    """
    game = game or family.game
    m = root.size
    if m <= 8:
        # Degenerate sizes: the parallel machinery's constants dwarf the
        # sequential cost, and the asymptotic bound is unaffected.
        return Strategy(lambda: _sequential_solve(family, root), game=game,
                        description=description or f"sequential n={m}")
    depth = max(0, math.ceil(math.log2(max(1.0, math.sqrt(m)))))

    def run() -> StrategyGen:
        frontier = [root]
        facts: dict = {}
        for _ in range(depth):
            nxt = []
            for inst in frontier:
                if inst.size == 1:
                    nxt.append(inst)
                    continue
                red = yield from family.split(inst)
                facts.update(red.facts)
                nxt.extend(red.children)
            frontier = nxt
        terms = [SumTerm((lambda i=inst: _sequential_solve(family, i)),
                         _sequential_weight(family, inst.size))
                 for inst in frontier]
        alpha = max(1, math.ceil(max(t.weight for t in terms)))
        inner = solve_sum(terms, game, alpha)
        fragment = yield from inner.run()
        facts.update(fragment)
        return facts

    return Strategy(run, game=game, description=description or f"leaf-heavy n={m}")


def solve_weighted(n: int, total_weight: int, game: Optional[CoinGame] = None,
                   ) -> Strategy:
    """Find all coin values when the total weight is known in advance."""
    if n < 1 or total_weight < 0:
        raise ValueError("need n >= 1 and total weight >= 0")
    game = game or CoinGame(tuple(range(1, n + 1)), ("weighted", total_weight))
    coins = tuple(game.coins)

    if total_weight == 0:
        return Strategy(lambda: _const_fragment({c: 0 for c in coins}),
                        ceiling=0, game=game, description="weight 0")
    if n == 1:
        return Strategy(lambda: _const_fragment({coins[0]: total_weight}),
                        ceiling=0, game=game, description="single coin")
    if total_weight == 1:
        return Strategy(lambda: _binary_search_unit(game, coins),
                        ceiling=math.ceil(math.log2(n)), game=game,
                        description="binary search")
    lam = max(2, math.ceil(n / total_weight))
    alpha = max(1, math.ceil(WeightedCoinFamily(game, lam, 1).split_weight_bound(1)))
    family = WeightedCoinFamily(game, lam, alpha)
    m = total_weight
    if 2 * m < m + n / lam:
        raise ShapeError("membership invariant violated")
    root = WeightedRange(game, coins, total_weight, m, lam)
    strategy = solve_leaf_heavy(family, root, game,
                                description=f"weighted n={n} W={total_weight}")

    def run_checked() -> StrategyGen:
        fragment = yield from strategy.run()
        if sum(fragment.values()) != total_weight:
            raise InconsistentOracle(
                f"decoded total {sum(fragment.values())} != {total_weight}")
        return fragment

    return Strategy(run_checked, game=game, description=strategy.description)


def _const_fragment(fragment: dict) -> StrategyGen:
    return dict(fragment)
    yield  # pragma: no cover


def solve_sparse(n: int, d: int, game: Optional[CoinGame] = None) -> Strategy:
    """Find the d counterfeit coins among n, at most n on the scale at once.

    For d <= n/2 this is known-total-weight weighing restricted to 0/1 values;
    for larger d the roles of genuine and counterfeit coins are swapped.
    """
    if not 1 <= d <= n:
        raise ValueError("need 1 <= d <= n")
    game = game or CoinGame(tuple(range(1, n + 1)), ("sparse", d))
    coins = tuple(game.coins)
    if d == n:
        return Strategy(lambda: _const_fragment({c: 1 for c in coins}),
                        ceiling=0, game=game, description="all counterfeit")
    if d <= n // 2:
        inner = solve_weighted(n, d, CoinGame(coins, ("weighted", d)))

        def run_direct() -> StrategyGen:
            fragment = yield from inner.run()
            if any(v not in (0, 1) for v in fragment.values()):
                raise InconsistentOracle("oracle is not 0/1-valued")
            return fragment

        return Strategy(run_direct, ceiling=inner.ceiling, game=game,
                        description=f"sparse n={n} d={d}")

    # Complement trick: solve for the n-d genuine coins instead.
    inner = solve_sparse(n, n - d, CoinGame(coins, ("sparse", n - d)))

    def run_complement() -> StrategyGen:
        gen = inner.run()
        try:
            step = next(gen)
            while True:
                size = 0 if step.is_zero() else len(step.query)
                pred = None
                if step.prediction is not None:
                    pred = Prediction.exactly(size).plus(step.prediction, -1)
                outer = Step(step.query, bound=None if step.is_zero() else min(size, d),
                             prediction=pred, feedback=step.feedback)
                raw = yield (outer if not step.is_zero() else step)
                translated = size - raw
                if translated < 0 or (step.bound is not None and translated > step.bound):
                    raise InconsistentOracle(
                        f"complemented answer {translated} outside [0, {step.bound}]")
                if step.simple and translated not in (0, 1):
                    raise InconsistentOracle("complemented answer is not simple")
                step = gen.send(translated)
        except StopIteration as stop:
            fragment = {c: 1 - v for c, v in stop.value.items()}
            if sum(fragment.values()) != d:
                raise InconsistentOracle(
                    f"decoded {sum(fragment.values())} counterfeits, expected {d}")
            return fragment

    return Strategy(run_complement, ceiling=inner.ceiling, game=game,
                    description=f"sparse n={n} d={d} (complement)")
