"""Mastermind solvers: permutation codewords, black-peg, and white-peg.

Queries are sparse patterns (position -> color mappings; missing positions
are blank).  The permutation game rides the simple engine.  General black-peg
play counts each color's occurrences first and runs the bounded engine over
count-hinted instances; below sqrt(n) colors, per-color sparse coin weighing
is cheaper.  White-peg play with many colors first identifies the set of
colors present by simulating sparse set query with total-peg feedback, then
falls back to black-peg solving over that palette.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Any, Iterator, Optional, Sequence

from .core import (InconsistentOracle, Prediction, Reduced, ShapeError, Step,
                   Strategy, StrategyGen, ZERO)
from . import engine_bounded, engine_simple, setquery
from .coins import CoinGame, SumTerm, solve_sparse, solve_sum
from .engine_bounded import BoundedSplittableFamily
from .engine_simple import SimpleSplittableFamily
from .schedules import weight_of_bound


def bp(x: Sequence[int], q: Sequence[int]) -> int:
    """Black pegs: positions where the guess matches the codeword exactly."""
    if len(x) != len(q):
        raise ShapeError("length mismatch")
    return sum(1 for a, b in zip(x, q) if a == b and b != 0)


def wp(x: Sequence[int], q: Sequence[int]) -> int:
    """White pegs: correct colors in wrong positions.

    Equals the maximum positional overlap over all permutations of the guess,
    minus the black pegs; blanks (0) never match.
    """
    if len(x) != len(q):
        raise ShapeError("length mismatch")
    cx = Counter(x)
    cq = Counter(c for c in q if c != 0)
    overlap = sum(min(cx[c], cq[c]) for c in cq)
    return overlap - bp(x, q)


@dataclass
class MastermindGame:
    """n positions, k colors; codewords are color tuples (1-based colors).

    ``mode`` selects the feedback the oracle can provide: "bp" for black pegs
    only, "wp" for black and white pegs (strategies then tag each step with
    the projection they consume).  ``codeword_set`` restricts the hidden
    codewords ("all" or "perm").
    """

    n: int
    k: int
    mode: str = "bp"
    codeword_set: str = "all"

    def zero_query(self):
        return {}

    def merge(self, queries: Sequence[Any]) -> Any:
        parts = [q for q in queries if q is not ZERO]
        merged: dict[int, int] = {}
        total = 0
        for q in parts:
            total += len(q)
            merged.update(q)
        if len(merged) != total:
            raise ShapeError("merged patterns overlap")
        return merged

    def _counts(self, codeword: tuple) -> Counter:
        cache = getattr(self, "_count_cache", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_count_cache", cache)
        counts = cache.get(codeword)
        if counts is None:
            counts = Counter(codeword)
            cache[codeword] = counts
        return counts

    def evaluate(self, codeword: tuple, query: dict, feedback: str = "value") -> int:
        black = sum(1 for p, c in query.items() if codeword[p] == c)
        if feedback in ("value", "bp"):
            return black
        if feedback == "total":
            cx = self._counts(codeword)
            cq = Counter(query.values())
            return sum(min(cx[c], cq[c]) for c in cq)
        raise ShapeError(f"unknown feedback {feedback}")

    def peg_pair(self, codeword: tuple, query: dict) -> tuple[int, int]:
        black = self.evaluate(codeword, query, "bp")
        total = self.evaluate(codeword, query, "total")
        return black, total - black

    def codewords(self) -> Iterator[tuple]:
        if self.codeword_set == "perm":
            yield from permutations(range(1, self.n + 1))
        else:
            yield from product(range(1, self.k + 1), repeat=self.n)

    def codeword_count(self) -> int:
        if self.codeword_set == "perm":
            return math.factorial(self.n)
        return self.k ** self.n

    def max_answer_range(self) -> int:
        if self.mode == "wp":
            return (self.n + 1) * (self.n + 2) // 2
        return self.n + 1

    def codeword_mapping(self, codeword: tuple) -> dict:
        return dict(enumerate(codeword))

    def random_codeword(self, rng) -> tuple:
        if self.codeword_set == "perm":
            perm = list(range(1, self.n + 1))
            rng.shuffle(perm)
            return tuple(perm)
        return tuple(rng.randrange(1, self.k + 1) for _ in range(self.n))

    def render_query(self, query) -> dict:
        full = [0] * self.n
        for p, c in query.items():
            full[p] = c
        return {"pattern": full}


def fill_blanks(gen: StrategyGen, substitute: Sequence[int], n: int) -> StrategyGen:
    """Replace blanks in every emitted pattern with a zero-match substitute.

    Valid whenever bp(codeword, substitute) = 0: filling the blank positions
    from ``substitute`` adds no matches, so every answer is unchanged and the
    wrapped strategy never notices.
    """
    try:
        step = next(gen)
        while True:
            if step.is_zero():
                answer = yield step
            else:
                filled = dict(step.query)
                for p in range(n):
                    if p not in filled:
                        filled[p] = substitute[p]
                answer = yield Step(filled, bound=step.bound, simple=step.simple,
                                    prediction=step.prediction,
                                    feedback=step.feedback, slot=step.slot)
            step = gen.send(answer)
    except StopIteration as stop:
        return stop.value


# ---------------------------------------------------------------------------
# Permutation Mastermind


@dataclass
class PermInstance:
    game: MastermindGame
    positions: tuple[int, ...]
    colors: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.positions)

    @property
    def support(self) -> frozenset:
        return frozenset(self.positions)

    def translate(self, q):
        return q


class PermFamily(SimpleSplittableFamily):
    """Splits by asking, for each live color, whether it sits in the left half."""

    alpha = 1

    def __init__(self, game: MastermindGame):
        self.game = game

    def base(self, inst: PermInstance) -> StrategyGen:
        (pos,), (color,) = inst.positions, inst.colors
        return {pos: color}
        yield  # pragma: no cover

    def split(self, inst: PermInstance) -> StrategyGen:
        m = inst.size
        left_pos = inst.positions[:(m + 1) // 2]
        right_pos = inst.positions[(m + 1) // 2:]
        left_colors, right_colors = [], []
        for color in inst.colors:
            answer = yield Step({p: color for p in left_pos}, bound=1, simple=True)
            (left_colors if answer else right_colors).append(color)
        if len(left_colors) != len(left_pos):
            raise InconsistentOracle(
                f"{len(left_colors)} colors in a {len(left_pos)}-position half")
        left = PermInstance(self.game, left_pos, tuple(left_colors))
        right = PermInstance(self.game, right_pos, tuple(right_colors))
        return Reduced([left, right], {})


def _find_nonmatching_perm(n: int) -> StrategyGen:
    """Find a full pattern with zero matches against a permutation codeword.

    For each bit of the position index, guess color 1 on the 0-side and color
    2 on the 1-side, then the reverse; the positions of colors 1 and 2 in the
    codeword differ in some bit, so one of these queries returns 0.
    """
    bits = max(1, math.ceil(math.log2(n)))
    for i in range(bits):
        for flip in (0, 1):
            pattern = {p: (1 if ((p >> i) & 1) == flip else 2) for p in range(n)}
            answer = yield Step(pattern, bound=n)
            if answer == 0:
                return tuple(pattern[p] for p in range(n))
    raise InconsistentOracle("no zero-match query among the bit patterns")


def solve_perm(n: int, allow_blanks: bool = True,
               game: Optional[MastermindGame] = None) -> Strategy:
    """Solve Mastermind with a permutation codeword (n positions, n colors)."""
    game = game or MastermindGame(n, n, "bp", "perm")
    if n == 1:
        return Strategy(lambda: _const({0: 1}), ceiling=0, game=game,
                        description="perm n=1")
    family = PermFamily(game)
    root = PermInstance(game, tuple(range(n)), tuple(range(1, n + 1)))
    inner = engine_simple.solve(family, root, f"perm n={n}")
    if allow_blanks:
        return inner
    extra = 2 * math.ceil(math.log2(n))

    def run() -> StrategyGen:
        substitute = yield from _find_nonmatching_perm(n)
        fragment = yield from fill_blanks(inner.run(), substitute, n)
        return fragment

    return Strategy(run, ceiling=inner.ceiling + extra, game=game,
                    description=f"perm n={n} blank-free")


def _const(fragment: dict) -> StrategyGen:
    return dict(fragment)
    yield  # pragma: no cover


# ---------------------------------------------------------------------------
# Blank simulation for general black-peg play (coin weighing with weights 0,1,2)


def classify_positions(n: int, game: MastermindGame) -> StrategyGen:
    """Classify every position as color 1, color 2, or neither.

    One all-ones query, then subset queries q in {1,2}^n: the translated
    answer f(q) - f(1) + |{i: q_i = 2}| is the sum over the 2-positions of a
    value that is 0 when f_i = 1, 2 when f_i = 2 and 1 otherwise, i.e. coin
    weighing with weights 0, 1 and 2, solved as an n-fold sum.
    """
    ones = yield Step({p: 1 for p in range(n)}, bound=n)

    def term_factory(p):
        def gen():
            value = yield Step(frozenset({p}), bound=2)
            return {p: value}
        return gen

    terms = [SumTerm(term_factory(p), weight_of_bound(2)) for p in range(n)]
    inner = solve_sum(terms, CoinGame(tuple(range(n))), alpha=3)

    gen = inner.run()
    try:
        step = next(gen)
        while True:
            if step.is_zero():
                answer = yield step
            else:
                two_set = step.query
                pattern = {p: (2 if p in two_set else 1) for p in range(n)}
                offset = len(two_set) - ones
                pred = None
                if step.prediction is not None:
                    pred = step.prediction.plus(Prediction.exactly(-offset))
                raw = yield Step(pattern, bound=n, prediction=pred,
                                 feedback=step.feedback)
                answer = raw + offset
                if answer < 0 or (step.bound is not None and answer > step.bound):
                    raise InconsistentOracle(
                        f"translated answer {answer} outside [0, {step.bound}]")
            step = gen.send(answer)
    except StopIteration as stop:
        return dict(stop.value)


def find_blank_substitute(n: int, k: int, game: MastermindGame) -> StrategyGen:
    """Find a full pattern b with bp(codeword, b) = 0, for k >= 3 colors."""
    if k < 3:
        raise ShapeError("three-way classification needs k >= 3")
    classes = yield from classify_positions(n, game)
    return tuple(2 if classes[p] == 0 else 1 for p in range(n))


# ---------------------------------------------------------------------------
# Hinted black-peg Mastermind (the dense regime)


@dataclass
class HintedInstance:
    """Positions plus how many of them carry each color (the hints)."""

    game: MastermindGame
    positions: tuple[int, ...]
    counts: dict[int, int]

    @property
    def size(self) -> int:
        return len(self.positions)

    @property
    def support(self) -> frozenset:
        return frozenset(self.positions)

    def translate(self, q):
        return q

    def check(self) -> None:
        if sum(self.counts.values()) != len(self.positions):
            raise InconsistentOracle("hints do not cover the positions")
        if any(v <= 0 for v in self.counts.values()):
            raise ShapeError("hints must be positive")


class HintedFamily(BoundedSplittableFamily):
    """Splits hinted instances color by color with the hint as the bound.

    The split queries each live color on the left half; the answer (bounded
    by the color's count) splits the hint between the halves.  Total weight is
    sum over live colors of log2(c+1)^2 <= 2n.
    """

    alpha = 2

    def __init__(self, game: MastermindGame):
        self.game = game

    def base(self, inst: HintedInstance) -> StrategyGen:
        inst.check()
        (pos,) = inst.positions
        (color,) = inst.counts.keys()
        return {pos: color}
        yield  # pragma: no cover

    def split(self, inst: HintedInstance) -> StrategyGen:
        inst.check()
        m = inst.size
        left_pos = inst.positions[:(m + 1) // 2]
        right_pos = inst.positions[(m + 1) // 2:]
        left_counts: dict[int, int] = {}
        right_counts: dict[int, int] = {}
        for color in sorted(inst.counts):
            count = inst.counts[color]
            forced = None
            if count == m:
                forced = len(left_pos)  # monochrome: the answer is determined
            prediction = Prediction.exactly(forced) if forced is not None else None
            answer = yield Step({p: color for p in left_pos}, bound=count,
                                prediction=prediction)
            if answer > len(left_pos):
                raise InconsistentOracle(f"{answer} matches in a {len(left_pos)} half")
            if answer:
                left_counts[color] = answer
            if count - answer:
                right_counts[color] = count - answer
        if sum(left_counts.values()) != len(left_pos):
            raise InconsistentOracle("left hints do not cover the left half")
        left = HintedInstance(self.game, left_pos, left_counts)
        right = HintedInstance(self.game, right_pos, right_counts)
        return Reduced([left, right], {})


def family_hinted(game: MastermindGame) -> HintedFamily:
    return HintedFamily(game)


def count_colors(n: int, colors: Sequence[int], game: MastermindGame,
                 feedback: str = "bp") -> StrategyGen:
    """Ask the all-'c' query for every color; the answers are the hints."""
    counts: dict[int, int] = {}
    for color in colors:
        answer = yield Step({p: color for p in range(n)}, bound=n, feedback=feedback)
        if answer:
            counts[color] = answer
    if sum(counts.values()) != n:
        raise InconsistentOracle(f"color counts sum to {sum(counts.values())}, not {n}")
    return counts


# ---------------------------------------------------------------------------
# Black-peg dispatch


def _bp_sparse_route(n: int, k: int, game: MastermindGame) -> StrategyGen:
    """Count each color, then locate its positions by sparse coin weighing.

    Positions already decoded are excluded from later colors' coin pools.
    """
    facts: dict[int, int] = {}
    pool = list(range(n))
    total = 0
    for color in range(1, k + 1):
        d = yield Step({p: color for p in range(n)}, bound=n)
        total += d
        if d == 0:
            continue
        if d > len(pool):
            raise InconsistentOracle(f"{d} occurrences among {len(pool)} positions")
        coin_game = CoinGame(tuple(pool), ("sparse", d))
        inner = solve_sparse(len(pool), d, coin_game)
        gen = inner.run()
        try:
            step = next(gen)
            while True:
                if step.is_zero():
                    answer = yield step
                else:
                    answer = yield Step({p: color for p in step.query},
                                        bound=step.bound, simple=step.simple,
                                        prediction=step.prediction)
                step = gen.send(answer)
        except StopIteration as stop:
            fragment = stop.value
        found = [p for p, v in fragment.items() if v == 1]
        if len(found) != d:
            raise InconsistentOracle(f"color {color}: found {len(found)}, counted {d}")
        for p in found:
            facts[p] = color
        pool = [p for p in pool if p not in set(found)]
    if total != n:
        raise InconsistentOracle(f"color counts sum to {total}, not {n}")
    return facts


def _bp_two_colors(n: int, game: MastermindGame) -> StrategyGen:
    """With two colors the classification weighing decodes everything."""
    classes = yield from classify_positions(n, game)
    if any(v not in (0, 2) for v in classes.values()):
        raise InconsistentOracle("two-color position weighing saw a third value")
    return {p: (1 if classes[p] == 0 else 2) for p in range(n)}


def bp_engine_ceiling(n: int, k: int) -> int:
    beta = 4 * HintedFamily.alpha
    return k + 16 * beta * n - 15 * beta


def solve_bp(n: int, k: int, allow_blanks: bool = True,
             game: Optional[MastermindGame] = None) -> Strategy:
    """Black-peg Mastermind with n positions and k colors.

    k <= floor(sqrt(n)) runs the per-color sparse route; otherwise the hints
    route: count every color, then solve the hinted game with the bounded
    engine.  Without blank guesses, a zero-match pattern found by the
    classification weighing substitutes for the blanks.
    """
    game = game or MastermindGame(n, k, "bp")
    if n < 1 or k < 1:
        raise ValueError("need n, k >= 1")
    sparse = k <= math.isqrt(n)
    ceiling = None if sparse else bp_engine_ceiling(n, k)

    def core_route() -> StrategyGen:
        if sparse:
            fragment = yield from _bp_sparse_route(n, k, game)
            return fragment
        counts = yield from count_colors(n, range(1, k + 1), game)
        inst = HintedInstance(game, tuple(range(n)), counts)
        fragment = yield from engine_bounded.solve_bounded(
            family_hinted(game), inst).run()
        return fragment

    if allow_blanks:
        return Strategy(core_route, ceiling=ceiling, game=game,
                        description=f"black-peg n={n} k={k}")

    if k == 1:
        return Strategy(lambda: _const({p: 1 for p in range(n)}), ceiling=0,
                        game=game, description="black-peg k=1")

    def run_blank_free() -> StrategyGen:
        if k == 2:
            fragment = yield from _bp_two_colors(n, game)
            return fragment
        substitute = yield from find_blank_substitute(n, k, game)
        fragment = yield from fill_blanks(core_route(), substitute, n)
        return fragment

    return Strategy(run_blank_free, ceiling=None, game=game,
                    description=f"black-peg n={n} k={k} blank-free")


# ---------------------------------------------------------------------------
# White-peg Mastermind


def solve_wp(n: int, k: int, game: Optional[MastermindGame] = None) -> Strategy:
    """White-peg Mastermind: find the palette via set query, then black-peg.

    For k <= 2n the white pegs are ignored outright.  Otherwise n+1 probe
    queries locate an unused color z; queries holding one occurrence of each
    color in a candidate set Y (padded with z) return |X intersect Y| total
    pegs, where X is the set of colors present, so sparse set query recovers
    X and the game reduces to black-peg play over at most n colors.
    """
    game = game or MastermindGame(n, k, "wp")
    if n < 1 or k < 1:
        raise ValueError("need n, k >= 1")

    if k <= 2 * n:
        inner = solve_bp(n, k, True, game)

        def run_small() -> StrategyGen:
            gen = inner.run()
            try:
                step = next(gen)
                while True:
                    if step.is_zero():
                        answer = yield step
                    else:
                        answer = yield Step(step.query, bound=step.bound,
                                            simple=step.simple,
                                            prediction=step.prediction,
                                            feedback="bp")
                    step = gen.send(answer)
            except StopIteration as stop:
                return stop.value

        return Strategy(run_small, ceiling=inner.ceiling, game=game,
                        description=f"white-peg n={n} k={k} (bp route)")

    def run_large() -> StrategyGen:
        z = None
        for color in range(1, n + 2):
            total = yield Step({p: color for p in range(n)}, bound=n,
                               feedback="total")
            if total == 0:
                z = color
                break
        if z is None:
            raise InconsistentOracle("every probe color appears in the codeword")

        def element_color(e: int) -> int:
            return e if e < z else e + 1

        inner = setquery.solve_setquery(k - 1, n)
        gen = inner.run()
        try:
            step = next(gen)
            while True:
                if step.is_zero():
                    answer = yield step
                else:
                    colors = [element_color(e) for e in sorted(step.query)]
                    if len(colors) > n:
                        raise ShapeError("set query exceeded the pattern width")
                    pattern = {p: colors[p] for p in range(len(colors))}
                    for p in range(len(colors), n):
                        pattern[p] = z
                    answer = yield Step(pattern, bound=step.bound,
                                        simple=step.simple,
                                        prediction=step.prediction,
                                        feedback="total")
                step = gen.send(answer)
        except StopIteration as stop:
            membership = stop.value
        palette = sorted(element_color(e) for e, v in membership.items() if v == 1)
        if not 1 <= len(palette) <= n:
            raise InconsistentOracle(f"{len(palette)} colors detected in {n} positions")

        relabel = {i + 1: c for i, c in enumerate(palette)}
        bp_game = MastermindGame(n, len(palette), "bp")
        final = solve_bp(n, len(palette), True, bp_game)
        gen = final.run()
        try:
            step = next(gen)
            while True:
                if step.is_zero():
                    answer = yield step
                else:
                    pattern = {p: relabel[c] for p, c in step.query.items()}
                    answer = yield Step(pattern, bound=step.bound, simple=step.simple,
                                        prediction=step.prediction, feedback="bp")
                step = gen.send(answer)
        except StopIteration as stop:
            return {p: relabel[c] for p, c in stop.value.items()}

    return Strategy(run_large, ceiling=None, game=game,
                    description=f"white-peg n={n} k={k}")
