from __future__ import annotations

import random

import pytest

from querygames.coins import CoinFamily, CoinGame, CoinPile, k_n
from querygames.core import (Prediction, PredictabilityViolation, Reduced,
                             Step, SyntheticOracle, run_strategy)
from querygames.engine_bounded import (beta_of, four_to_three_bounded,
                                       post_len, pre_len, solve_bounded,
                                       solve_len, _pin_fourth)
from querygames.engine_simple import solve as solve_simple
from querygames.schedules import QSchedule, RPaddedStream, Derived, bits_for_bound


def predicted_cell(cell, value, exp):
    """A one-step strategy that truthfully predicts its answer mod 2^exp."""
    def gen():
        answer = yield Step(frozenset({cell}), bound=15,
                            prediction=Prediction(value % (1 << exp), exp))
        return {cell: answer}
    return gen()


def weighted_cell_reduction(cell, bound):
    def gen():
        answer = yield Step(frozenset({cell}), bound=bound)
        return Reduced([], {cell: answer})
    return gen()


def run_block(values, d_bound, exps=(3, 3, 3)):
    """Drive one bounded speedup block against a brute-force 4-cell oracle."""
    game = CoinGame((1, 2, 3, 4))
    codeword = dict(zip((1, 2, 3, 4), values))
    rho = QSchedule()
    d_stream = RPaddedStream(weighted_cell_reduction(4, d_bound),
                             Derived(rho, scale=3, offset=0, rot=0))
    gen = four_to_three_bounded(
        predicted_cell(1, values[0], exps[0]),
        predicted_cell(2, values[1], exps[1]),
        predicted_cell(3, values[2], exps[2]),
        d_stream, 1, rho, game)
    oracle = SyntheticOracle(game, codeword)
    count = 0
    try:
        step = next(gen)
        while True:
            count += 1
            step = gen.send(oracle.answer(step))
    except StopIteration as stop:
        return stop.value, count


def test_block_all_zero():
    reduced, count = run_block((0, 0, 0, 0), d_bound=1)
    assert reduced.facts == {1: 0, 2: 0, 3: 0, 4: 0}
    assert count == 9  # 3*(T+2) with T=1


def test_block_randomized_bounded_tuples():
    rng = random.Random(20240)
    for _ in range(2000):
        d_bound = rng.randrange(1, 16)
        values = (rng.randrange(16), rng.randrange(16), rng.randrange(16),
                  rng.randrange(d_bound + 1))
        reduced, _ = run_block(values, d_bound)
        assert reduced.facts == dict(zip((1, 2, 3, 4), values))


def test_block_weak_side_predictors():
    rng = random.Random(7)
    for _ in range(200):
        d_bound = rng.randrange(1, 16)
        values = (rng.randrange(16), rng.randrange(16), rng.randrange(16),
                  rng.randrange(d_bound + 1))
        # only the first term's predictor is strong enough for the pin
        reduced, _ = run_block(values, d_bound, exps=(3, 1, 0))
        assert reduced.facts == dict(zip((1, 2, 3, 4), values))


def test_pin_fourth_requires_precision():
    with pytest.raises(PredictabilityViolation):
        _pin_fourth(4, (7, Prediction(0, 0)), (7, Prediction(1, 1)))
    # exp 2 suffices for bound 4 (3 bits - 1)
    assert _pin_fourth(3, (2 * 5 + 3, Prediction(5 % 4, 2))) == 3


def test_bits_for_bound():
    assert bits_for_bound(0) == 0
    assert bits_for_bound(1) == 1
    assert bits_for_bound(3) == 2
    assert bits_for_bound(4) == 3
    assert bits_for_bound(15) == 4


def test_length_formulas():
    beta = 4
    assert pre_len(1, beta) == beta
    assert post_len(3, beta) == 0
    for n in range(1, 200):
        if n > 1:
            assert post_len(n, beta) <= 8 * beta * (n - 1)
        assert solve_len(n, beta) <= 16 * beta * n - 15 * beta


class BoundedCoins(CoinFamily):
    """The plain coin family viewed as a bounded family (b(t) = 1)."""


def make_pile(game, size):
    coins = tuple(game.coins)
    dummies = tuple(range(-1, -(k_n(size) - len(coins)) - 1, -1))
    return CoinPile(game, coins + dummies, size)


@pytest.mark.parametrize("size,coins", [(2, 4), (3, 8), (4, 12)])
def test_bounded_engine_on_simple_family(size, coins):
    game = CoinGame(tuple(range(1, coins + 1)))
    family = BoundedCoins(game)
    strategy = solve_bounded(family, make_pile(game, size))
    simple = solve_simple(CoinFamily(game), make_pile(game, size))
    for mask in range(1 << coins):
        codeword = {c: (mask >> (c - 1)) & 1 for c in game.coins}
        out_b, tr_b = run_strategy(strategy, SyntheticOracle(game, codeword))
        out_s, _ = run_strategy(simple, SyntheticOracle(game, codeword))
        assert dict(out_b) == codeword
        assert dict(out_b) == dict(out_s)  # same decode as the simple engine
        assert len(tr_b) <= strategy.ceiling


def test_bounded_engine_ceiling_formula():
    game = CoinGame(tuple(range(1, 13)))
    family = BoundedCoins(game)
    strategy = solve_bounded(family, make_pile(game, 4))
    beta = beta_of(family)
    assert beta == 4
    assert strategy.ceiling == 16 * beta * 4 - 15 * beta
    codeword = {c: c % 2 for c in game.coins}
    _, transcript = run_strategy(strategy, SyntheticOracle(game, codeword))
    assert len(transcript) == solve_len(4, beta)
