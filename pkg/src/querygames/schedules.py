"""Congruence-class schedules controlling when large answers may occur.

A Q-schedule assigns to every time step t a pair (x(t), y(t)) with x a power
of two and 0 <= y <= x-1, such that the level set of each value pair (2^i, j)
is a single congruence class mod 4^i.  The derived R-schedule permits answers
up to 2^x - 1 exactly at the y = 0 slots and forces zero answers elsewhere;
padding a weight-W strategy onto those slots costs at most a factor 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Generator, Iterable, Optional

from .core import (EXACT, ZERO, Prediction, Step, StrategyGen, ShapeError,
                   zero_step)

MAX_LEVEL = 32  # guard against runaway lazy extension


class Schedule:
    """Interface shared by the base schedule and its derived views."""

    def q_at(self, t: int) -> tuple[int, int]:  # pragma: no cover - interface
        raise NotImplementedError

    def x(self, t: int) -> int:
        return self.q_at(t)[0]

    def y(self, t: int) -> int:
        return self.q_at(t)[1]

    def r_at(self, t: int) -> int:
        """Answer ceiling at slot t: 2^x - 1 at y = 0 slots, else 0."""
        x, y = self.q_at(t)
        return (1 << x) - 1 if y == 0 else 0

    def shifted(self, a: int) -> "Schedule":
        if a == 0:
            return self
        return Derived(self, offset=a)

    def compressed(self, factor: int, offset: int = 0) -> "Schedule":
        return Derived(self, scale=factor, offset=offset)

    def rotated(self, rot: int = 1) -> "Schedule":
        return Derived(self, rot=rot)

    def dump(self, horizon: int) -> str:
        lines = []
        for t in range(1, horizon + 1):
            x, y = self.q_at(t)
            lines.append(f"{t},{x},{y},{self.r_at(t)}")
        return "\n".join(lines)


class QSchedule(Schedule):
    """The greedy member of the Q family.

    Classes are assigned lazily in lexicographic (i, j) order: a_{ij} is the
    least a >= 1 not congruent to any earlier a_{i'j'} mod 4^{i'}.  The total
    density of all classes is sum 4^{-i} * 2^i < 1, so the greedy choice always
    exists, and the least uncovered integer is always the next pick, which
    makes lazy extension terminate.
    """

    def __init__(self) -> None:
        self.assignments: dict[tuple[int, int], int] = {}
        # per level i: residue mod 4^i -> j, for O(levels) lookups
        self._by_level: dict[int, dict[int, int]] = {}
        self._next: tuple[int, int] = (1, 0)
        # Least integer not covered by any assigned class; the greedy always
        # picks it, so it advances monotonically.
        self._cursor = 1

    def assigned(self) -> dict[tuple[int, int], int]:
        return dict(self.assignments)

    def _covered(self, a: int) -> bool:
        return any(a % (4 ** i) in table for i, table in self._by_level.items())

    def assign_next(self) -> tuple[tuple[int, int], int]:
        i, j = self._next
        if i > MAX_LEVEL:
            raise ShapeError(f"schedule extension beyond level {MAX_LEVEL}")
        while self._covered(self._cursor):
            self._cursor += 1
        a = self._cursor
        self.assignments[(i, j)] = a
        self._by_level.setdefault(i, {})[a % (4 ** i)] = j
        self._next = (i, j + 1) if j + 1 < (1 << i) else (i + 1, 0)
        return (i, j), a

    def assign_classes(self, up_to: tuple[int, int]) -> None:
        """Extend assignments through class ``up_to`` in lexicographic order."""
        while up_to not in self.assignments:
            self.assign_next()

    def _lookup(self, t: int) -> Optional[tuple[int, int]]:
        for i in sorted(self._by_level):
            j = self._by_level[i].get(t % (4 ** i))
            if j is not None:
                return (1 << i, j)
        return None

    def matches(self, t: int) -> list[tuple[int, int]]:
        """All classes containing t (testing hook; must have length <= 1)."""
        out = []
        for i in sorted(self._by_level):
            j = self._by_level[i].get(t % (4 ** i))
            if j is not None:
                out.append((1 << i, j))
        return out

    def q_at(self, t: int) -> tuple[int, int]:
        if t < 1:
            raise ValueError("schedule times start at 1")
        found = self._lookup(t)
        while found is None:
            self.assign_next()
            found = self._lookup(t)
        return found


@dataclass
class Derived(Schedule):
    """View of a base schedule: t -> base(scale*t + offset) with y rotated.

    Linear reindexings of a Q-family member stay in the family whenever the
    scale is odd (invertible mod every 4^i), and rotating y by a constant
    relabels the classes.  Both facts are exercised by the shape tests.
    """

    base: Schedule
    scale: int = 1
    offset: int = 0
    rot: int = 0

    def q_at(self, t: int) -> tuple[int, int]:
        x, y = self.base.q_at(self.scale * t + self.offset)
        return (x, (y - self.rot) % x)

    def shifted(self, a: int) -> "Schedule":
        if a == 0:
            return self
        return Derived(self.base, self.scale, self.offset + a * self.scale, self.rot)


def shift(schedule: Schedule, a: int) -> Schedule:
    """Accessor view t -> original(t + a); still a member of the Q family."""
    if a < 0:
        raise ValueError("shift must be non-negative")
    return schedule.shifted(a)


def interlace(schedule: Schedule) -> tuple[Schedule, Schedule, Schedule]:
    """The three derived schedules used by the bounded speedup lemma.

    schedA(t) samples the round's own slot, schedB/schedC the two following
    rounds' slots, each with y decremented cyclically, so that a y = 0 parent
    slot maps to y = x - 1.
    """
    sched_a = Derived(schedule, scale=3, offset=0, rot=1)
    sched_b = Derived(schedule, scale=3, offset=1, rot=1)
    sched_c = Derived(schedule, scale=3, offset=2, rot=1)
    return sched_a, sched_b, sched_c


def q_at(schedule: Schedule, t: int) -> tuple[int, int]:
    return schedule.q_at(t)


def assign_classes(schedule: QSchedule, up_to: tuple[int, int]) -> QSchedule:
    schedule.assign_classes(up_to)
    return schedule


def weight_of_bound(bound: int) -> float:
    """Weight contribution of one query with inclusive answer bound ``bound``."""
    if bound <= 0:
        return 0.0
    import math
    return math.log2(bound + 1) ** 2


def bits_for_bound(bound: int) -> int:
    """Least B with answers in [0, bound] distinct mod 2^B."""
    return max(0, int(bound).bit_length())


class RPaddedStream:
    """Places a weighted strategy's queries onto an R-schedule's open slots.

    The wrapped generator's next query (with declared bound b) is emitted at
    the first offered slot t with b <= r(t); every other slot gets a
    zero-query.  Total length is at most 4x the wrapped strategy's weight
    because a slot with 2^(2^i)-1 >= b recurs every 4^i <= 4*log2(b+1)^2
    steps.  A gate callback may veto emission at a slot, deferring the real
    query to the next fitting slot (used by the bounded engine to guarantee
    its reconstruction always has a usable predictor).
    """

    def __init__(self, gen: StrategyGen, schedule: Schedule,
                 gate: Optional[Callable[[int, Step], bool]] = None):
        self.gen = gen
        self.schedule = schedule
        self.gate = gate
        self.outcome = None
        self.finished = False
        self.pending: Optional[Step] = None
        self.waiting_answer = False
        self._advance(None)

    def _advance(self, answer: Optional[int]) -> None:
        try:
            if answer is None:
                self.pending = next(self.gen)
            else:
                self.pending = self.gen.send(answer)
            if self.pending.bound is None:
                raise ShapeError("r-padding requires declared bounds on every step")
        except StopIteration as stop:
            self.outcome = stop.value
            self.finished = True
            self.pending = None

    def offer(self, t: int) -> Step:
        """Produce the step for slot ``t``; caller must feed() the answer."""
        if self.waiting_answer:
            raise ShapeError("offer() called before feeding previous answer")
        if not self.finished:
            step = self.pending
            fits = step.bound <= self.schedule.r_at(t)
            allowed = fits and (self.gate is None or self.gate(t, step))
            if allowed:
                self.waiting_answer = True
                return Step(step.query, bound=step.bound, simple=step.simple,
                            prediction=step.prediction or Prediction.unknown(),
                            feedback=step.feedback, slot=self.schedule.q_at(t))
        return zero_step()

    def feed(self, answer: int) -> None:
        if self.waiting_answer:
            self.waiting_answer = False
            self._advance(answer)


def pad_to_r(gen_factory: Callable[[], StrategyGen], schedule: Schedule,
             start: int = 1) -> StrategyGen:
    """Rewrite a weighted strategy as an r(t)-bounded strategy by zero padding.

    Standalone form of :class:`RPaddedStream` used when the padded strategy is
    driven sequentially (slot index advances by one per step).
    """
    stream = RPaddedStream(gen_factory(), schedule)
    t = start
    while not stream.finished:
        step = stream.offer(t)
        answer = yield step
        stream.feed(answer)
        t += 1
    return stream.outcome
