from __future__ import annotations

from itertools import product

import pytest

from querygames.coins import CoinGame, CoinPile, family_Cn, k_n, solve_coins
from querygames.core import (Reduced, ShapeError, Step, Strategy,
                             SyntheticOracle, run_strategy)
from querygames.engine_simple import (Plan, build_plan, four_to_three,
                                      postprocess_len, preprocess_len,
                                      solve_len, speedup_T, stacked_solve)


def test_build_plan_small():
    assert build_plan(3).empty
    assert build_plan(1).empty
    plan4 = build_plan(4)
    assert not plan4.empty
    assert plan4.leaf_sizes() == [1]  # P_4 = P_1+P_1+P_1+A_1 = A_1
    plan16 = build_plan(16)
    assert plan16.leaf_sizes() == [1, 1, 1, 4]  # after expanding the P_4 terms


def test_plan_indices_sum():
    for n in range(4, 200):
        plan = build_plan(n)
        quarter_up, quarter_down = (n + 3) // 4, n // 4
        sizes = [sub.n for sub in plan.subs] + [plan.a_size]
        assert sum(sizes) == n
        assert all(s in (quarter_up, quarter_down) for s in sizes)
        assert sizes[0] == quarter_up
        assert sizes[3] == quarter_down


def test_length_formulas():
    alpha = 1
    assert preprocess_len(1, alpha) == alpha
    assert postprocess_len(3, alpha) == 0
    # n=4: T = max(8a*1-8a, 8a*1-7a) = a, one block of 3a
    assert speedup_T(4, alpha) == alpha
    assert postprocess_len(4, alpha) == 3 * alpha
    assert postprocess_len(4, alpha) <= 8 * alpha * 3
    for n in range(1, 300):
        assert postprocess_len(n, alpha) <= 8 * alpha * (n - 1) if n > 1 else True
        assert solve_len(n, alpha) <= 16 * alpha * n - 15 * alpha


def cell_solution(cell, value_bound=1):
    def gen():
        answer = yield Step(frozenset({cell}), bound=value_bound, simple=value_bound == 1)
        return {cell: answer}
    return gen()


def cell_reduction(cell):
    def gen():
        answer = yield Step(frozenset({cell}), bound=1, simple=True)
        return Reduced([], {cell: answer})
    return gen()


def run_four_to_three(values):
    """Drive the combined reduction against a brute-force 4-cell oracle."""
    game = CoinGame((1, 2, 3, 4))
    codeword = dict(zip((1, 2, 3, 4), values))
    gen = four_to_three(cell_solution(1), cell_solution(2), cell_solution(3),
                        cell_reduction(4), 1, game)
    oracle = SyntheticOracle(game, codeword)
    answers = []
    try:
        step = next(gen)
        while True:
            answer = oracle.answer(step)
            answers.append(answer)
            step = gen.send(answer)
    except StopIteration as stop:
        return stop.value, answers


def test_four_to_three_hand_example():
    # subanswers (1,0,1,1) -> combined (2,3,2); parity pins d=1, then (1,0,1)
    reduced, combined = run_four_to_three((1, 0, 1, 1))
    assert combined == [2, 3, 2]
    assert reduced.facts == {1: 1, 2: 0, 3: 1, 4: 1}


def test_four_to_three_all_zero():
    reduced, combined = run_four_to_three((0, 0, 0, 0))
    assert combined == [0, 0, 0]
    assert reduced.facts == {1: 0, 2: 0, 3: 0, 4: 0}


def test_four_to_three_exhaustive_01():
    for values in product((0, 1), repeat=4):
        reduced, _ = run_four_to_three(values)
        assert reduced.facts == dict(zip((1, 2, 3, 4), values))


def test_four_to_three_requires_simple_fourth():
    game = CoinGame((1, 2, 3, 4))

    def nonsimple():
        answer = yield Step(frozenset({4}), bound=3)
        return Reduced([], {4: answer})

    gen = four_to_three(cell_solution(1), cell_solution(2), cell_solution(3),
                        nonsimple(), 1, game)
    from querygames.core import SimplicityViolation
    with pytest.raises(SimplicityViolation):
        next(gen)


def run_to_completion(gen, oracle):
    count = 0
    try:
        step = next(gen)
        while True:
            count += 1
            step = gen.send(oracle.answer(step))
    except StopIteration as stop:
        return stop.value, count


def test_stacked_solve_levels():
    # B_1 + 3*B_0 with tiny coin games solved in <= 9 queries
    game = CoinGame(tuple(range(1, 5)))
    codeword = {1: 1, 2: 0, 3: 1, 4: 1}

    def solution(cell):
        def factory():
            def gen():
                answer = yield Step(frozenset({cell}), bound=1, simple=True)
                return {cell: answer}
            return gen()
        return factory

    levels = [[solution(1)], [solution(2), solution(3), solution(4)]]
    fragment, count = run_to_completion(stacked_solve(levels, game),
                                        SyntheticOracle(game, codeword))
    assert fragment == codeword
    assert count <= 9


def test_stacked_solve_single_level():
    game = CoinGame((1,))

    def solution():
        def gen():
            answer = yield Step(frozenset({1}), bound=1, simple=True)
            return {1: answer}
        return gen()

    fragment, count = run_to_completion(stacked_solve([[solution]], game),
                                        SyntheticOracle(game, {1: 1}))
    assert fragment == {1: 1}
    assert count <= 3


def test_stacked_solve_shape_error():
    game = CoinGame((1,))
    with pytest.raises(ShapeError):
        next(stacked_solve([[lambda: None], [lambda: None]], game))


def test_padded_steps_are_zero_queries():
    game = CoinGame(tuple(range(1, 13)))
    codeword = {c: 1 for c in game.coins}
    strategy = solve_coins(12, game)
    _, transcript = run_strategy(strategy, SyntheticOracle(game, codeword))
    for entry in transcript:
        if entry.step.is_zero():
            assert entry.answer == 0
