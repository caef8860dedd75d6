"""Recursive solver for families with simple (0/1-answer) splitting reductions.

Any family that can solve its size-1 instances in alpha simple queries and
split size-n instances into halves with alpha*n simple queries gets a solver
of length exactly bounded by 16*alpha*n - 15*alpha.  The speedup comes from
running four reductions in parallel at the cost of three ("weigh four coins
in three weighings"), applied recursively over a partially pre-split game.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from .core import (InconsistentOracle, Reduced, ShapeError, SimplicityViolation,
                   Step, Strategy, StrategyGen, concat, pad_tail, zero_step)


class SimpleSplittableFamily:
    """Protocol for the engine's input families.

    ``base`` solves a size-1 instance in at most ``alpha`` simple queries;
    ``split`` reduces a size-n instance (n >= 2) to children of sizes
    ceil(n/2) and floor(n/2) in at most ``alpha*n`` simple queries.
    Instances expose ``.size``; all queries are root-level.
    """

    alpha: int = 1
    game: Any = None

    def base(self, instance) -> StrategyGen:  # pragma: no cover - interface
        raise NotImplementedError

    def split(self, instance) -> StrategyGen:  # pragma: no cover - interface
        raise NotImplementedError

    def split_weight_bound(self, size: int) -> float:
        return float(self.alpha * size)

    def base_weight_bound(self) -> float:
        return float(self.alpha)


@dataclass(frozen=True)
class Plan:
    """Recursion tree of the preprocessed game.

    Empty for n <= 3; otherwise three preprocessed subtrees whose indices are
    each ceil(n/4) or floor(n/4), plus one unsplit instance of size
    floor(n/4).  The four indices always sum to n.
    """

    n: int
    subs: tuple = ()
    a_size: int = 0

    @property
    def empty(self) -> bool:
        return self.n <= 3

    def leaf_sizes(self) -> list[int]:
        if self.empty:
            return []
        out: list[int] = []
        for sub in self.subs:
            out.extend(sub.leaf_sizes())
        out.append(self.a_size)
        return out


def build_plan(n: int) -> Plan:
    if n < 1:
        raise ValueError("plan size must be positive")
    if n <= 3:
        return Plan(n)
    left = (n + 1) // 2
    right = n // 2
    sizes = ((left + 1) // 2, left // 2, (right + 1) // 2)
    a_size = right // 2
    assert sum(sizes) + a_size == n
    return Plan(n, tuple(build_plan(s) for s in sizes), a_size)


def preprocess_len(n: int, alpha: int) -> int:
    return 8 * alpha * n - 7 * alpha


def speedup_T(n: int, alpha: int) -> int:
    """The uniform per-term length for the four-into-three step at size n."""
    quarter_up = (n + 3) // 4
    quarter_down = n // 4
    return max(8 * alpha * quarter_up - 8 * alpha, 8 * alpha * quarter_down - 7 * alpha)


def postprocess_len(n: int, alpha: int) -> int:
    if n <= 3:
        return 0
    return 3 * speedup_T(n, alpha) + postprocess_len(n // 4, alpha)


def solve_len(n: int, alpha: int) -> int:
    return preprocess_len(n, alpha) + postprocess_len(n, alpha)


class Peek:
    """Holds one live sub-strategy with its pending step visible."""

    def __init__(self, gen: StrategyGen):
        self.gen = gen
        self.finished = False
        self.outcome: Any = None
        self.pending: Optional[Step] = None
        self._advance(None)

    def _advance(self, answer: Optional[int]) -> None:
        try:
            self.pending = next(self.gen) if answer is None else self.gen.send(answer)
        except StopIteration as stop:
            self.outcome = stop.value
            self.finished = True
            self.pending = None

    def step(self) -> Step:
        return self.pending if not self.finished else zero_step()

    def feed(self, answer: int) -> None:
        if not self.finished:
            self._advance(answer)


def merged_step(game, steps: Sequence[Step]) -> Step:
    query = game.merge([s.query for s in steps])
    bound = None
    if all(s.bound is not None for s in steps):
        bound = sum(s.bound for s in steps)
    return Step(query, bound=bound)


def four_to_three(a: StrategyGen, b: StrategyGen, c: StrategyGen, d: StrategyGen,
                  T: int, game) -> StrategyGen:
    """Run three solutions and one simple reduction in 3T queries.

    Each round asks the three pairwise-omitting merged queries; the parity of
    S2 + S3 - S1 = 2*f_A + f_D pins the simple term's answer, after which the
    3x3 linear system recovers the other three subanswers exactly.  All four
    inputs must already be padded to exactly T steps.
    """
    drivers = [Peek(g) for g in (a, b, c, d)]
    da, db, dc, dd = drivers
    for _ in range(T):
        sa, sb, sc, sd = (drv.step() for drv in drivers)
        if not (sd.simple or sd.is_zero()):
            raise SimplicityViolation("fourth term emitted a non-simple step")
        s1 = yield merged_step(game, [sb, sc, sd])
        s2 = yield merged_step(game, [sa, sc, sd])
        s3 = yield merged_step(game, [sa, sb, sd])
        fd = (s2 + s3 - s1) % 2
        fa2 = s2 + s3 - s1 - fd
        if fa2 < 0 or fa2 % 2:
            raise InconsistentOracle(f"answers ({s1},{s2},{s3}) admit no reconstruction")
        fa = fa2 // 2
        fb = s3 - fd - fa
        fc = s2 - fd - fa
        if fb < 0 or fc < 0 or fb + fc + fd != s1:
            raise InconsistentOracle(f"answers ({s1},{s2},{s3}) are inconsistent")
        da.feed(fa)
        db.feed(fb)
        dc.feed(fc)
        dd.feed(fd)
    if not all(drv.finished for drv in drivers):
        raise ShapeError("a sub-strategy outlived its declared length")
    facts: dict = {}
    for drv in (da, db, dc):
        facts.update(drv.outcome)
    reduced = dd.outcome
    if not isinstance(reduced, Reduced):
        raise ShapeError("fourth term did not finish as a reduction")
    merged = dict(reduced.facts)
    merged.update(facts)
    return Reduced(reduced.children, merged)


def _empty_solution() -> StrategyGen:
    return {}
    yield  # pragma: no cover


def _preprocess_content(family: SimpleSplittableFamily, inst) -> StrategyGen:
    n = inst.size
    if n == 1:
        frag = yield from family.base(inst)
        return Reduced([], dict(frag))
    red = yield from family.split(inst)
    left, right = red.children
    facts = dict(red.facts)
    if n <= 3:
        for child in (left, right):
            sub = yield from _preprocess_content(family, child)
            facts.update(sub.facts)
        return Reduced([], facts)
    red_l = yield from family.split(left)
    red_r = yield from family.split(right)
    facts.update(red_l.facts)
    facts.update(red_r.facts)
    children: list = []
    for sub_inst in (red_l.children[0], red_l.children[1], red_r.children[0]):
        sub = yield from _preprocess_content(family, sub_inst)
        children.extend(sub.children)
        facts.update(sub.facts)
    children.append(red_r.children[1])
    return Reduced(children, facts)


def preprocess_reduce(family: SimpleSplittableFamily, inst) -> StrategyGen:
    """Simple reduction from A_n to the preprocessed game, padded to 8an-7a."""
    return pad_tail(_preprocess_content(family, inst), preprocess_len(inst.size, family.alpha))


def solve_preprocessed(plan: Plan, leaves: Sequence, family: SimpleSplittableFamily,
                       ) -> StrategyGen:
    """Solve the preprocessed sum in at most 8*alpha*(n-1) queries."""
    if plan.empty:
        if leaves:
            raise ShapeError(f"P_{plan.n} expects no live instances, got {len(leaves)}")
        return {}
    expected = plan.leaf_sizes()
    if [inst.size for inst in leaves] != expected:
        raise ShapeError(f"leaf sizes {[i.size for i in leaves]} != plan {expected}")
    alpha = family.alpha
    T = speedup_T(plan.n, alpha)
    gens = []
    offset = 0
    for sub in plan.subs:
        take = len(sub.leaf_sizes())
        sub_leaves = leaves[offset:offset + take]
        offset += take
        inner = solve_preprocessed(sub, sub_leaves, family) if not sub.empty \
            else _empty_solution()
        gens.append(pad_tail(inner, T))
    a_inst = leaves[-1]
    d_gen = pad_tail(preprocess_reduce(family, a_inst), T)
    reduced = yield from four_to_three(gens[0], gens[1], gens[2], d_gen, T, family.game)
    fragment = yield from solve_preprocessed(build_plan(plan.n // 4), reduced.children, family)
    merged = dict(reduced.facts)
    merged.update(fragment)
    return merged


def solve(family: SimpleSplittableFamily, inst, description: str = "") -> Strategy:
    """Full solver for A_n: reduce to the preprocessed game, then solve it."""
    n = inst.size
    plan = build_plan(n)
    run = concat(lambda: preprocess_reduce(family, inst),
                 lambda red: solve_preprocessed(plan, red.children, family))
    return Strategy(run, ceiling=16 * family.alpha * n - 15 * family.alpha,
                    game=family.game, description=description or f"simple-solve n={n}")


def stacked_solve(levels: Sequence[Sequence[Callable[[], StrategyGen]]], game) -> StrategyGen:
    """Solve B_n + 3*B_{n-1} + ... + 3^n*B_0 in at most 3^(n+1) queries.

    ``levels[j]`` holds the 3^j solution factories for the B_{n-j} terms; the
    level-j solutions must be simple and of length at most 3^(n-j).  Induction:
    the single B_n term plays the simple-reduction role against three stacks
    one level shallower.
    """
    n = len(levels) - 1
    for j, level in enumerate(levels):
        if len(level) != 3 ** j:
            raise ShapeError(f"level {j} has {len(level)} terms, expected {3 ** j}")
    if n == 0:
        fragment = yield from levels[0][0]()
        return dict(fragment)
    T = 3 ** n
    d_gen = pad_tail(_as_simple_reduction(levels[0][0]()), T)
    stacks = []
    for g in range(3):
        sub_levels = [levels[j][g * 3 ** (j - 1):(g + 1) * 3 ** (j - 1)]
                      for j in range(1, n + 1)]
        stacks.append(pad_tail(stacked_solve(sub_levels, game), T))
    reduced = yield from four_to_three(stacks[0], stacks[1], stacks[2], d_gen, T, game)
    if reduced.children:
        raise ShapeError("stacked terms must be solutions, not reductions")
    return reduced.facts


def _as_simple_reduction(gen: StrategyGen) -> StrategyGen:
    facts = yield from gen
    return Reduced([], dict(facts))
