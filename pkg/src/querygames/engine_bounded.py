"""Recursive solver for families with weighted (bounded-answer) reductions.

A family whose size-1 solutions have weight alpha and whose splitting
reductions have weight alpha*n (weight of a query with answer bound b is
log2(b+1)^2) gets a solver of length at most 16*beta*n - 15*beta with
beta = 4*alpha.  The structure mirrors the simple engine: queries are first
rewritten onto the open slots of a congruence-class schedule, then four
reductions run in parallel at the cost of three.  Because answers can exceed
one, the parity trick is replaced by congruence-class predictions: the
reconstruction pins the fourth term's answer modulo 2^B using a predicted
residue of one of the other three terms modulo 2^(B-1).

Schedule plumbing (locked by the exhaustive tests in this repo): a speedup
block over round schedule rho gives its fourth term the mask rho(3t) and
hands the other three terms the schedules rho(3(t+delta)) for delta = 0, 1, 2
with y decremented cyclically.  At every round where the fourth term may
answer nonzero (rho(3t).y = 0), all three candidate terms are therefore
barred from emitting fresh unknown-answer queries at the exact step the
reconstruction consults (their own masks require rho(3t).y = 1 there), so a
usable predictor always exists.  An emission gate re-checks this at runtime
and defers the fourth term's query if composition at deeper levels ever
leaves no usable predictor, trading slack in the length budget for an
unconditional reconstruction guarantee.
"""

from __future__ import annotations

from typing import Any, Callable, Optional, Sequence

from .core import (EXACT, InconsistentOracle, Prediction, Reduced, ShapeError,
                   Step, Strategy, StrategyGen, PredictabilityViolation,
                   WeightViolation, pad_tail, zero_step)
from .engine_simple import (Plan, Peek, build_plan, merged_step,
                            _empty_solution, _preprocess_content)
from .schedules import (Derived, RPaddedStream, Schedule, QSchedule,
                        bits_for_bound, weight_of_bound)


class BoundedSplittableFamily:
    """Protocol for the bounded engine's input families.

    Same shape as the simple protocol, but base/split steps declare answer
    bounds instead of simplicity: base weight <= alpha, split weight <=
    alpha*n with children of sizes ceil(n/2), floor(n/2).
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


def weight_checked(gen: StrategyGen, budget: float, label: str = "") -> StrategyGen:
    """Enforce a weight ceiling over a weighted strategy's declared bounds."""
    used = 0.0
    try:
        step = next(gen)
        while True:
            if step.bound is None and not step.is_zero():
                raise ShapeError(f"{label}: bounded engine requires declared bounds")
            used += weight_of_bound(step.bound or 0)
            if used > budget + 1e-9:
                raise WeightViolation(f"{label}: weight {used:.2f} exceeds {budget:.2f}")
            answer = yield step
            step = gen.send(answer)
    except StopIteration as stop:
        return stop.value


class _CheckedFamily:
    """Wraps a family so every split/base run is weight-audited."""

    def __init__(self, family: BoundedSplittableFamily):
        self.inner = family
        self.alpha = family.alpha
        self.game = family.game

    def base(self, instance) -> StrategyGen:
        return weight_checked(self.inner.base(instance), self.inner.base_weight_bound(),
                              "base")
    def split(self, instance) -> StrategyGen:
        return weight_checked(self.inner.split(instance),
                              self.inner.split_weight_bound(instance.size),
                              f"split n={instance.size}")


def beta_of(family: BoundedSplittableFamily) -> int:
    return 4 * family.alpha


def pre_len(n: int, beta: int) -> int:
    return 8 * beta * n - 7 * beta


def speedup_T(n: int, beta: int) -> int:
    quarter_up = (n + 3) // 4
    quarter_down = n // 4
    return max(8 * beta * quarter_up - 8 * beta, 8 * beta * quarter_down - 7 * beta)


def post_len(n: int, beta: int) -> int:
    if n <= 3:
        return 0
    return 3 * (speedup_T(n, beta) + 2) + post_len(n // 4, beta)


def solve_len(n: int, beta: int) -> int:
    return pre_len(n, beta) + post_len(n, beta)


def _pred_of(step: Step) -> Prediction:
    if step.prediction is not None:
        return step.prediction
    if step.is_zero():
        return Prediction.exactly(0)
    return Prediction.unknown()


def d_mask(rho: Schedule) -> Schedule:
    """Answer-ceiling mask for a speedup block's fourth term."""
    return Derived(rho, scale=3, offset=0, rot=0)


def handed_schedules(rho: Schedule) -> tuple[Schedule, Schedule, Schedule]:
    """Round schedules handed to the block's three solved terms."""
    return (Derived(rho, scale=3, offset=0, rot=1),
            Derived(rho, scale=3, offset=3, rot=1),
            Derived(rho, scale=3, offset=6, rot=1))


def _delay(gen: StrategyGen, rounds: int) -> StrategyGen:
    for _ in range(rounds):
        yield zero_step()
    outcome = yield from gen
    return outcome


def four_to_three_bounded(a: StrategyGen, b: StrategyGen, c: StrategyGen,
                          d: RPaddedStream, T: int, rho: Schedule, game,
                          ) -> StrategyGen:
    """Run three predictable solutions and one masked reduction in 3(T+2).

    Staggered rounds: round t asks the three pairwise-omitting merges of
    q_A(t), q_B(t-1), q_C(t-2), q_D(t).  After the three answers, the fourth
    term's answer is pinned modulo 2^B (B bits of its declared bound) through
    one of the combinations 2*f_X + f_D, using X's predicted residue modulo
    2^(B-1); the remaining subanswers follow by linear algebra.  Emitted steps
    carry predictions of their own answers so that blocks nest.
    """
    da = Peek(pad_tail(a, T + 2))
    db = Peek(pad_tail(_delay(b, 1), T + 2))
    dc = Peek(pad_tail(_delay(c, 2), T + 2))
    for t in range(1, T + 3):
        sa, sb, sc = da.step(), db.step(), dc.step()
        pa, pb, pc = _pred_of(sa), _pred_of(sb), _pred_of(sc)

        def support_gate(_slot: int, pending: Step,
                         preds=(pa, pb, pc)) -> bool:
            need = bits_for_bound(pending.bound or 0) - 1
            return any(p.exp >= need for p in preds)

        if t <= T and not d.finished:
            d.gate = support_gate
            sd = d.offer(t)
        else:
            if t == T + 1 and not d.finished:
                raise ShapeError("fourth term did not fit its slot budget")
            sd = zero_step()
        pd = _pred_of(sd)

        s1 = yield _with_pred(merged_step(game, [sb, sc, sd]), pb.plus(pc).plus(pd))
        p_s2 = Prediction.best([pa.plus(pc).plus(pd),
                                Prediction.exactly(s1).plus(pa).plus(pb, -1)])
        s2 = yield _with_pred(merged_step(game, [sa, sc, sd]), p_s2)
        p_s3 = Prediction.best([
            pa.plus(pb).plus(pd),
            Prediction.exactly(s2 - s1).plus(pb.doubled()).plus(pd),
            Prediction.exactly(s1 - s2).plus(pa.doubled()).plus(pd),
            Prediction.exactly(s1).plus(pa).plus(pc, -1),
            Prediction.exactly(s2).plus(pb).plus(pc, -1),
        ])
        s3 = yield _with_pred(merged_step(game, [sa, sb, sd]), p_s3)

        combo_a = -s1 + s2 + s3
        combo_b = s1 - s2 + s3
        combo_c = s1 + s2 - s3
        if sd.is_zero():
            fd = 0
        else:
            fd = _pin_fourth(sd.bound, (combo_a, pa), (combo_b, pb), (combo_c, pc))
        fa, rem_a = divmod(combo_a - fd, 2)
        fb, rem_b = divmod(combo_b - fd, 2)
        fc, rem_c = divmod(combo_c - fd, 2)
        if rem_a or rem_b or rem_c or min(fa, fb, fc) < 0 or fb + fc + fd != s1:
            raise InconsistentOracle(
                f"round {t}: answers ({s1},{s2},{s3}) with f_D={fd} are inconsistent")
        for pred, actual, who in ((pa, fa, "A"), (pb, fb, "B"), (pc, fc, "C"),
                                  (pd, fd, "D")):
            if not pred.check(actual):
                raise PredictabilityViolation(
                    f"round {t}: term {who} answered {actual}, predicted "
                    f"{pred.residue} mod 2^{pred.exp}")
        da.feed(fa)
        db.feed(fb)
        dc.feed(fc)
        d.feed(fd)
    if not (da.finished and db.finished and dc.finished and d.finished):
        raise ShapeError("a sub-strategy outlived the block")
    facts: dict = {}
    for drv in (da, db, dc):
        facts.update(drv.outcome)
    reduced = d.outcome
    if not isinstance(reduced, Reduced):
        raise ShapeError("fourth term did not finish as a reduction")
    merged = dict(reduced.facts)
    merged.update(facts)
    return Reduced(reduced.children, merged)


def _with_pred(step: Step, prediction: Prediction) -> Step:
    exp = min(prediction.exp, EXACT)
    residue = prediction.residue if exp >= EXACT else prediction.residue % (1 << exp)
    return Step(step.query, bound=step.bound, simple=step.simple,
                prediction=Prediction(residue, exp), feedback=step.feedback,
                slot=step.slot)


def _pin_fourth(bound: int, *candidates: tuple[int, Prediction]) -> int:
    """Recover f_D in [0, bound] from a combination 2*f_X + f_D."""
    need_bits = bits_for_bound(bound)
    combo, pred = max(candidates, key=lambda cp: cp[1].exp)
    if pred.exp < need_bits - 1:
        raise PredictabilityViolation(
            f"no predictor precise enough to pin a bound-{bound} answer")
    if pred.is_exact:
        fd = combo - 2 * pred.residue
    else:
        fd = (combo - 2 * pred.residue) % (1 << need_bits)
    if fd < 0 or fd > bound:
        raise InconsistentOracle(f"pinned answer {fd} outside [0, {bound}]")
    return fd


def preprocess_content(family, inst) -> StrategyGen:
    """Weighted reduction from A_n to the preprocessed game (unpadded)."""
    return _preprocess_content(family, inst)


def to_r_reduction(gen_factory: Callable[[], StrategyGen], schedule: Schedule,
                   ) -> StrategyGen:
    """Pad a weighted reduction onto a schedule's open slots, length <= 4W."""
    from .schedules import pad_to_r
    return pad_to_r(gen_factory, schedule)


def concat_predictable(first: Callable[[], StrategyGen], first_len: int,
                       continuation: Callable[[Reduced, Schedule], StrategyGen],
                       rho: Schedule) -> StrategyGen:
    """Concatenate predictable stages; the second runs under a round shift.

    The first stage is padded so its length is divisible by three, and the
    continuation sees the schedule shifted by that many rounds.
    """
    padded = -(-first_len // 3) * 3
    reduced = yield from pad_tail(first(), padded)
    fragment = yield from continuation(reduced, rho.shifted(padded // 3))
    merged = dict(reduced.facts)
    merged.update(fragment)
    return merged


def _drive_stream(stream: RPaddedStream, budget: int) -> StrategyGen:
    """Run a padded stream sequentially for exactly ``budget`` slots."""
    for t in range(1, budget + 1):
        if stream.finished:
            yield zero_step()
            continue
        step = stream.offer(t)
        answer = yield step
        stream.feed(answer)
    if not stream.finished:
        raise ShapeError(f"padded content did not fit in {budget} slots")
    return stream.outcome


def solve_preprocessed(plan: Plan, leaves: Sequence, family, rho: Schedule,
                       ) -> StrategyGen:
    """Predictable solution of the preprocessed sum, length post_len(n)."""
    if plan.empty:
        if leaves:
            raise ShapeError(f"P_{plan.n} expects no live instances")
        return {}
    expected = plan.leaf_sizes()
    if [inst.size for inst in leaves] != expected:
        raise ShapeError(f"leaf sizes {[i.size for i in leaves]} != plan {expected}")
    beta = beta_of(family)
    T = speedup_T(plan.n, beta)
    sub_schedules = handed_schedules(rho)
    gens = []
    offset = 0
    for sub, sched in zip(plan.subs, sub_schedules):
        take = len(sub.leaf_sizes())
        sub_leaves = leaves[offset:offset + take]
        offset += take
        inner = solve_preprocessed(sub, sub_leaves, family, sched) if not sub.empty \
            else _empty_solution()
        gens.append(inner)
    a_inst = leaves[-1]
    stream = RPaddedStream(preprocess_content(family, a_inst), d_mask(rho))
    reduced = yield from four_to_three_bounded(gens[0], gens[1], gens[2], stream,
                                               T, rho, family.game)
    fragment = yield from solve_preprocessed(build_plan(plan.n // 4), reduced.children,
                                             family, rho.shifted(T + 2))
    merged = dict(reduced.facts)
    merged.update(fragment)
    return merged


def solve_bounded(family: BoundedSplittableFamily, inst, description: str = "",
                  rho: Optional[Schedule] = None) -> Strategy:
    """Full bounded solver for A_n with ceiling 16*beta*n - 15*beta."""
    checked = _CheckedFamily(family)
    n = inst.size
    beta = beta_of(family)
    plan = build_plan(n)
    base_rho = rho if rho is not None else QSchedule()
    first_len = pre_len(n, beta)

    def run() -> StrategyGen:
        stream = RPaddedStream(preprocess_content(checked, inst), base_rho)
        reduced = yield from _drive_stream(stream, first_len)
        shift_rounds = -(-first_len // 3)
        fragment = yield from solve_preprocessed(plan, reduced.children, checked,
                                                 base_rho.shifted(shift_rounds))
        merged = dict(reduced.facts)
        merged.update(fragment)
        return merged

    ceiling = 16 * beta * n - 15 * beta
    assert first_len + post_len(n, beta) <= ceiling
    return Strategy(run, ceiling=ceiling, game=family.game,
                    description=description or f"bounded-solve n={n}")
