"""Core algebra for adaptive query games with integer feedback.

A game is a set of queries plus a set of codewords (integer-valued functions
on queries).  Codebreaker strategies are resumable generators that yield
:class:`Step` objects and receive integer answers; they terminate with either
a decoded codeword fragment (a solution) or a :class:`Reduced` value naming
live child instances (a reduction).  Everything downstream (the recursive
engines, the game families, the harness) is built from these pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Iterable, Iterator, Mapping, Optional, Sequence


class QueryGameError(Exception):
    """Base class for all solver errors."""


class BoundViolation(QueryGameError):
    """An answer fell outside the declared bound for its query."""


class SimplicityViolation(QueryGameError):
    """A query declared simple returned an answer outside {0, 1}."""


class PredictabilityViolation(QueryGameError):
    """A declared answer prediction disagreed with the actual answer."""


class NonTermination(QueryGameError):
    """A strategy exceeded its step cap without finishing."""


class CompositionGap(QueryGameError):
    """A reduction produced an instance its continuation cannot handle."""


class SupportOverlap(QueryGameError):
    """Sibling instances in a sum game have intersecting supports."""


class BudgetExceeded(QueryGameError):
    """Exhaustive enumeration was requested above the configured cap."""


class ShapeError(QueryGameError):
    """A composed strategy or term list has the wrong shape or length."""


class WeightViolation(QueryGameError):
    """A weighted reduction exceeded its declared weight budget."""


class InconsistentOracle(QueryGameError):
    """The oracle's answers are consistent with no codeword of the game."""


class ImpossibleState(QueryGameError):
    """An internal invariant that the theory guarantees was violated."""


class _ZeroQuery:
    """The distinguished zero-query: answers 0 for every codeword.

    A single sentinel instance (``ZERO``) is shared by every game, which makes
    padding unambiguous and lets adapters pass it through untranslated.
    """

    __slots__ = ()

    def __repr__(self) -> str:
        return "ZeroQuery"


ZERO = _ZeroQuery()

# Modulus exponent used for predictions that pin the answer exactly.
EXACT = 10 ** 9


@dataclass(frozen=True, slots=True)
class Prediction:
    """A congruence-class promise about the next answer.

    The upcoming answer is congruent to ``residue`` modulo ``2**exp``.
    ``exp >= EXACT`` means the answer is known outright.
    """

    residue: int
    exp: int

    @staticmethod
    def exactly(value: int) -> "Prediction":
        if value == 0:
            return EXACT_ZERO
        return Prediction(value, EXACT)

    @staticmethod
    def unknown() -> "Prediction":
        return Prediction(0, 0)

    @property
    def is_exact(self) -> bool:
        return self.exp >= EXACT

    def residue_mod(self, exp: int) -> int:
        return self.residue % (1 << exp)

    def check(self, answer: int) -> bool:
        if self.is_exact:
            return answer == self.residue
        return answer % (1 << self.exp) == self.residue % (1 << self.exp)

    def plus(self, other: "Prediction", sign: int = 1) -> "Prediction":
        exp = min(self.exp, other.exp)
        if exp >= EXACT:
            return Prediction(self.residue + sign * other.residue, EXACT)
        return Prediction((self.residue + sign * other.residue) % (1 << exp), exp)

    def doubled(self) -> "Prediction":
        if self.is_exact:
            return Prediction(2 * self.residue, EXACT)
        return Prediction((2 * self.residue) % (1 << (self.exp + 1)), self.exp + 1)

    @staticmethod
    def best(candidates: Iterable["Prediction"]) -> "Prediction":
        return max(candidates, key=lambda p: p.exp)


EXACT_ZERO = Prediction(0, EXACT)


@dataclass(frozen=True, slots=True)
class Step:
    """One query request emitted by a strategy.

    ``bound`` is the declared inclusive upper bound on the answer (answers are
    non-negative throughout).  ``simple`` promises the answer is 0 or 1.
    ``prediction``, when present, is checked against the actual answer.
    ``feedback`` selects the oracle projection for games that report richer
    feedback than a single integer (white-peg Mastermind).
    """

    query: Any
    bound: Optional[int] = None
    simple: bool = False
    prediction: Optional[Prediction] = None
    feedback: str = "value"
    slot: Optional[tuple] = None

    def is_zero(self) -> bool:
        return self.query is ZERO


_ZERO_STEP = None


def zero_step() -> Step:
    global _ZERO_STEP
    if _ZERO_STEP is None:
        _ZERO_STEP = Step(ZERO, bound=0, simple=True, prediction=EXACT_ZERO)
    return _ZERO_STEP


@dataclass(frozen=True, slots=True)
class TranscriptEntry:
    t: int
    step: Step
    answer: int
    raw: Any = None


class Transcript:
    """Ordered (query, answer) log of one strategy run."""

    def __init__(self) -> None:
        self.entries: list[TranscriptEntry] = []

    def record(self, step: Step, answer: int, raw: Any = None) -> None:
        self.entries.append(TranscriptEntry(len(self.entries) + 1, step, answer, raw))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TranscriptEntry]:
        return iter(self.entries)

    def answers(self) -> list[int]:
        return [e.answer for e in self.entries]

    def queries(self) -> list[Any]:
        return [e.step.query for e in self.entries]


@dataclass
class Reduced:
    """Terminal value of a reduction: live child instances plus facts.

    ``facts`` holds codeword entries already pinned down by the transcript;
    the parent codeword is reassembled as ``facts`` merged with every child's
    decode (the paper's decode map realised as assembly instead of an explicit
    function on codeword sets).
    """

    children: list
    facts: dict = field(default_factory=dict)


StrategyGen = Generator[Step, int, Any]


class Strategy:
    """A replayable strategy: ``run()`` builds a fresh generator each time.

    Identical answer sequences always reproduce identical query sequences
    because every run starts from the same immutable construction arguments.
    """

    def __init__(self, factory: Callable[[], StrategyGen], ceiling: Optional[int] = None,
                 game: Any = None, description: str = ""):
        self.factory = factory
        self.ceiling = ceiling
        self.game = game
        self.description = description

    def run(self) -> StrategyGen:
        return self.factory()


class Oracle:
    """Answers root-level queries for a hidden codeword."""

    def answer(self, step: Step) -> int:  # pragma: no cover - interface
        raise NotImplementedError


class SyntheticOracle(Oracle):
    """Evaluates a known codeword; used by verification and benchmarks."""

    def __init__(self, game: Any, codeword: Any):
        self.game = game
        self.codeword = codeword
        self.calls = 0

    def answer(self, step: Step) -> int:
        self.calls += 1
        if step.is_zero():
            return 0
        return self.game.evaluate(self.codeword, step.query, feedback=step.feedback)


DEFAULT_STEP_CAP = 1 << 22


def step_cap_for(ceiling: Optional[int]) -> int:
    # 64*ceiling + 64: generous slack over every proved bound, still finite.
    if ceiling is None:
        return DEFAULT_STEP_CAP
    return 64 * ceiling + 64


def run_strategy(strategy: Strategy, oracle: Oracle, step_cap: Optional[int] = None,
                 monitors: Sequence[Callable[[int, Step, int], None]] = (),
                 ) -> tuple[Any, Transcript]:
    """Drive ``strategy`` against ``oracle`` until it finishes.

    Checks the declared per-step contracts as it goes: bounds, simplicity and
    predictions.  ``monitors`` receive every (t, step, answer) triple and may
    raise to flag schedule violations and the like.
    """
    cap = step_cap if step_cap is not None else step_cap_for(strategy.ceiling)
    gen = strategy.run()
    transcript = Transcript()
    answer: Optional[int] = None
    try:
        step = next(gen)
        while True:
            if len(transcript) >= cap:
                raise NonTermination(f"strategy exceeded step cap {cap}")
            if not isinstance(step, Step):
                raise ShapeError(f"strategy yielded {step!r}, expected Step")
            answer = oracle.answer(step)
            check_step(step, answer)
            transcript.record(step, answer)
            for mon in monitors:
                mon(len(transcript), step, answer)
            step = gen.send(answer)
    except StopIteration as stop:
        return stop.value, transcript


def check_step(step: Step, answer: int) -> None:
    if answer < 0:
        raise BoundViolation(f"negative answer {answer}")
    if step.is_zero() and answer != 0:
        raise BoundViolation(f"zero-query answered {answer}")
    if step.bound is not None and answer > step.bound:
        raise BoundViolation(f"answer {answer} exceeds declared bound {step.bound}")
    if step.simple and answer not in (0, 1):
        raise SimplicityViolation(f"simple step answered {answer}")
    if step.prediction is not None and not step.prediction.check(answer):
        raise PredictabilityViolation(
            f"answer {answer} != {step.prediction.residue} mod 2^{step.prediction.exp}")


def replay(strategy: Strategy, answers: Sequence[int]) -> list[Any]:
    """Feed recorded answers into a fresh run; returns the emitted queries."""
    gen = strategy.run()
    queries = []
    try:
        step = next(gen)
        for a in answers:
            queries.append(step.query)
            step = gen.send(a)
        queries.append(step.query)
    except StopIteration:
        pass
    return queries


def pad_tail(gen: StrategyGen, length: int) -> StrategyGen:
    """Extend a strategy to exactly ``length`` steps with zero-queries."""
    done = 0
    outcome = None
    finished = False
    try:
        step = next(gen)
        while True:
            if done >= length:
                raise ShapeError(f"strategy needs more than {length} steps")
            answer = yield step
            done += 1
            step = gen.send(answer)
    except StopIteration as stop:
        outcome = stop.value
        finished = True
    if not finished:  # pragma: no cover - unreachable
        raise ShapeError("padding reached without outcome")
    while done < length:
        yield zero_step()
        done += 1
    return outcome


def empty_solution() -> StrategyGen:
    return {}
    yield  # pragma: no cover


def solution_as_reduction(gen: StrategyGen) -> StrategyGen:
    """View a solution as a reduction to the trivial game."""
    facts = yield from gen
    return Reduced([], dict(facts))


def concat(first: Callable[[], StrategyGen],
           continuation: Callable[[Reduced], StrategyGen]) -> Callable[[], StrategyGen]:
    """Compose a reduction with a continuation built from its outcome.

    The combined length is the sum of the two lengths along every answer
    path, and the decode maps compose by merging fact fragments.
    """
    def run() -> StrategyGen:
        reduced = yield from first()
        if not isinstance(reduced, Reduced):
            raise CompositionGap(f"first stage finished with {reduced!r}, not Reduced")
        rest = continuation(reduced)
        if rest is None:
            raise CompositionGap("continuation undefined for produced instances")
        fragment = yield from rest
        merged = dict(reduced.facts)
        merged.update(fragment)
        return merged
    return run


def merge_queries(game: Any, parts: Sequence[tuple[Any, Any]]) -> Any:
    """Merge per-instance local queries into one root query.

    ``parts`` holds (instance, local_query) pairs over pairwise disjoint
    supports; omitted instances implicitly contribute the zero-query, and the
    merged answer is the sum of the local answers.
    """
    seen: set = set()
    for inst, _ in parts:
        sup = set(inst.support)
        if seen & sup:
            raise SupportOverlap(f"instances overlap on {sorted(seen & sup)[:4]}")
        seen |= sup
    root_queries = [inst.translate(q) for inst, q in parts]
    return game.merge(root_queries)


def info_lower_bound(codeword_count: int, answer_range: int) -> float:
    """log2 |F| / log2 (max answer range size): a floor on solution length."""
    if codeword_count < 1 or answer_range < 1:
        raise ValueError("counts must be >= 1")
    if codeword_count == 1:
        return 0.0
    if answer_range == 1:
        return math.inf
    return math.log2(codeword_count) / math.log2(answer_range)


@dataclass
class Report:
    """Aggregate verdict of a verification run over many codewords."""

    game_id: str
    parameters: dict
    codewords_tested: int = 0
    queries_max: int = 0
    queries_total: int = 0
    ceiling: Optional[int] = None
    weight_used: float = 0.0
    lower_bound: float = 0.0
    violations: list[str] = field(default_factory=list)

    @property
    def queries_mean(self) -> float:
        if not self.codewords_tested:
            return 0.0
        return self.queries_total / self.codewords_tested

    @property
    def ok(self) -> bool:
        return not self.violations

    def add_violation(self, message: str) -> None:
        if len(self.violations) < 200:
            self.violations.append(message)

    def summary(self) -> str:
        status = "ok" if self.ok else f"{len(self.violations)} violation(s)"
        ceiling = "-" if self.ceiling is None else str(self.ceiling)
        return (f"{self.game_id} {self.parameters}: {self.codewords_tested} codewords, "
                f"max {self.queries_max} / mean {self.queries_mean:.1f} queries, "
                f"ceiling {ceiling}, lower bound {self.lower_bound:.1f}: {status}")


def verify_exhaustive(game: Any, builder: Callable[[], Strategy],
                      budget: int = 1 << 20,
                      monitors: Sequence[Callable[[int, Step, int], None]] = (),
                      game_id: str = "", parameters: Optional[dict] = None) -> Report:
    """Run the solver against every codeword of an enumerable game.

    For each codeword a synthetic oracle is built, the strategy run, and the
    decode compared with ground truth; declared constraints are checked by
    ``run_strategy`` itself.  Raises :class:`BudgetExceeded` when the codeword
    space is larger than ``budget``.
    """
    count = game.codeword_count()
    if count > budget:
        raise BudgetExceeded(f"{count} codewords exceeds budget {budget}")
    report = Report(game_id or type(game).__name__, parameters or {})
    report.lower_bound = info_lower_bound(count, game.max_answer_range())
    for codeword in game.codewords():
        strategy = builder()
        report.ceiling = strategy.ceiling
        oracle = SyntheticOracle(game, codeword)
        try:
            fragment, transcript = run_strategy(strategy, oracle, monitors=monitors)
        except QueryGameError as exc:
            report.codewords_tested += 1
            report.add_violation(f"{codeword!r}: {type(exc).__name__}: {exc}")
            continue
        report.codewords_tested += 1
        used = len(transcript)
        report.queries_max = max(report.queries_max, used)
        report.queries_total += used
        truth = game.codeword_mapping(codeword)
        if dict(fragment) != truth:
            report.add_violation(f"{codeword!r}: decoded {fragment!r}")
        if strategy.ceiling is not None and used > strategy.ceiling:
            report.add_violation(f"{codeword!r}: {used} queries > ceiling {strategy.ceiling}")
    # The information bound constrains the worst case over codewords.
    if report.codewords_tested and report.queries_max < math.ceil(report.lower_bound - 1e-9):
        report.add_violation(
            f"worst case {report.queries_max} queries below information bound "
            f"{report.lower_bound:.2f}")
    return report
