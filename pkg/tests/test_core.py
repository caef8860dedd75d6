from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from querygames.coins import CoinGame, CoinPile, family_Cn, solve_coins
from querygames.core import (BoundViolation, CompositionGap, NonTermination,
                             Prediction, Reduced, Report, SimplicityViolation,
                             Step, Strategy, SupportOverlap, SyntheticOracle,
                             ZERO, PredictabilityViolation, concat,
                             info_lower_bound, merge_queries, replay,
                             run_strategy, verify_exhaustive, zero_step)


def const_strategy(steps, outcome):
    def factory():
        def gen():
            for step in steps:
                yield step
            return outcome
        return gen()
    return Strategy(factory)


class FixedOracle:
    def __init__(self, answers):
        self.answers = list(answers)
        self.at = 0

    def answer(self, step):
        if step.is_zero():
            return 0
        value = self.answers[self.at]
        self.at += 1
        return value


def test_trivial_game_zero_asks():
    strategy = const_strategy([], {"done": True})
    outcome, transcript = run_strategy(strategy, FixedOracle([]))
    assert outcome == {"done": True}
    assert len(transcript) == 0


def test_single_coin_game():
    game = CoinGame((1,))
    strategy = solve_coins(1, game)
    outcome, transcript = run_strategy(strategy, SyntheticOracle(game, {1: 1}))
    assert outcome == {1: 1}
    assert len(transcript) == 1


def test_two_coin_one_by_one():
    game = CoinGame((1, 2))

    def factory():
        def gen():
            a = yield Step(frozenset({1}), bound=1, simple=True)
            b = yield Step(frozenset({2}), bound=1, simple=True)
            return {1: a, 2: b}
        return gen()

    outcome, transcript = run_strategy(Strategy(factory),
                                       SyntheticOracle(game, {1: 0, 2: 1}))
    assert outcome == {1: 0, 2: 1}
    assert [e.answer for e in transcript] == [0, 1]


def test_zero_query_law():
    game = CoinGame((1, 2, 3))
    oracle = SyntheticOracle(game, {1: 1, 2: 1, 3: 1})
    assert oracle.answer(zero_step()) == 0


def test_bound_violation_detected():
    strategy = const_strategy([Step(frozenset({1}), bound=1)], {})
    with pytest.raises(BoundViolation):
        run_strategy(strategy, FixedOracle([5]))


def test_simplicity_violation_detected():
    strategy = const_strategy([Step(frozenset({1}), simple=True)], {})
    with pytest.raises(SimplicityViolation):
        run_strategy(strategy, FixedOracle([2]))


def test_prediction_violation_detected():
    step = Step(frozenset({1}), bound=3, prediction=Prediction(1, 1))
    with pytest.raises(PredictabilityViolation):
        run_strategy(const_strategy([step], {}), FixedOracle([2]))


def test_nontermination_cap():
    def factory():
        def gen():
            while True:
                yield Step(frozenset({1}), bound=1)
        return gen()

    with pytest.raises(NonTermination):
        run_strategy(Strategy(factory, ceiling=1), FixedOracle([1] * 1000))


def test_replay_reproduces_queries():
    game = CoinGame(tuple(range(1, 13)))
    codeword = {c: c % 2 for c in game.coins}
    strategy = solve_coins(12, game)
    _, transcript = run_strategy(strategy, SyntheticOracle(game, codeword))
    answers = transcript.answers()
    replayed = replay(solve_coins(12, game), answers)
    assert replayed[:len(transcript)] == transcript.queries()


def test_concat_identity():
    def empty_reduction():
        return Reduced([], {"x": 1})
        yield

    def continuation(reduced):
        def gen():
            return {"y": 2}
            yield
        return gen()

    run = concat(lambda: empty_reduction(), continuation)
    outcome, transcript = run_strategy(Strategy(run), FixedOracle([]))
    assert outcome == {"x": 1, "y": 2}
    assert len(transcript) == 0


def test_concat_composition_gap():
    def red():
        return Reduced([object()], {})
        yield

    run = concat(lambda: red(), lambda reduced: None)
    with pytest.raises(CompositionGap):
        run_strategy(Strategy(run), FixedOracle([]))


def test_merge_queries_sum_law():
    game = CoinGame(tuple(range(1, 5)))
    left = CoinPile(game, (1, 2), 1)
    right = CoinPile(game, (3, 4), 1)
    merged = merge_queries(game, [(left, frozenset({1})), (right, frozenset({3}))])
    assert merged == frozenset({1, 3})
    codeword = {1: 1, 2: 0, 3: 1, 4: 1}
    assert game.evaluate(codeword, merged) == \
        game.evaluate(codeword, frozenset({1})) + game.evaluate(codeword, frozenset({3}))


def test_merge_queries_overlap_rejected():
    game = CoinGame(tuple(range(1, 5)))
    a = CoinPile(game, (1, 2), 1)
    b = CoinPile(game, (2, 3), 1)
    with pytest.raises(SupportOverlap):
        merge_queries(game, [(a, frozenset({1})), (b, frozenset({3}))])


def test_merge_all_zero_queries():
    game = CoinGame((1, 2))
    assert game.merge([ZERO, ZERO]) == frozenset()


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=6))
def test_sum_law_random_merges(pairs):
    # two disjoint piles; merged answers equal the sum of local answers
    n = 2 * len(pairs)
    game = CoinGame(tuple(range(1, n + 1)))
    codeword = {}
    for i, (a, b) in enumerate(pairs):
        codeword[2 * i + 1] = a
        codeword[2 * i + 2] = b
    left = frozenset(2 * i + 1 for i in range(len(pairs)))
    right = frozenset(2 * i + 2 for i in range(len(pairs)))
    merged = game.merge([left, right])
    assert game.evaluate(codeword, merged) == \
        game.evaluate(codeword, left) + game.evaluate(codeword, right)


def test_info_lower_bound_values():
    assert info_lower_bound(2, 2) == 1.0
    n = 12
    assert info_lower_bound(2 ** n, n + 1) == pytest.approx(n / math.log2(n + 1))
    # black-peg M_{n,k}: n log2 k / log2(n+1)
    n, k = 4, 4
    assert info_lower_bound(k ** n, n + 1) == pytest.approx(
        n * math.log2(k) / math.log2(n + 1))


def test_verify_exhaustive_counts():
    game = CoinGame((1, 2, 3))
    report = verify_exhaustive(game, lambda: solve_coins(3, game))
    assert report.codewords_tested == 8
    assert report.ok, report.violations


def test_verify_exhaustive_negative_control():
    # a deliberately broken solver: skips the last coin and guesses 0 for it
    game = CoinGame((1, 2, 3))

    def broken():
        def gen():
            a = yield Step(frozenset({1}), bound=1, simple=True)
            b = yield Step(frozenset({2}), bound=1, simple=True)
            return {1: a, 2: b, 3: 0}
        return Strategy(lambda: gen())

    report = verify_exhaustive(game, broken)
    assert not report.ok
    assert any("decoded" in v or "wrong" in v for v in report.violations)


def test_prediction_arithmetic():
    p = Prediction(3, 2)  # == 3 mod 4
    q = Prediction.exactly(5)
    assert p.plus(q).check(8)
    assert p.plus(q).check(12)
    assert not p.plus(q).check(9)
    assert p.doubled().exp == 3
    assert p.doubled().check(6)
    assert p.doubled().check(14)
    assert Prediction.best([p, q]) is q
