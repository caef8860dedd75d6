from __future__ import annotations

import math
import random

import pytest

from querygames.core import Reduced, Step
from querygames.schedules import (Derived, QSchedule, RPaddedStream, interlace,
                                  pad_to_r, q_at, shift, weight_of_bound)


def test_greedy_assignment_values():
    sched = QSchedule()
    sched.assign_classes((2, 1))
    a = sched.assigned()
    assert a[(1, 0)] == 1
    assert a[(1, 1)] == 2
    assert a[(2, 0)] == 3
    assert a[(2, 1)] == 4


def test_q_at_examples():
    sched = QSchedule()
    assert q_at(sched, 1) == (2, 0)
    assert q_at(sched, 2) == (2, 1)
    assert q_at(sched, 5) == (2, 0)  # 5 = 1 mod 4
    assert q_at(sched, 3) == (4, 0)  # a_{2,0} = 3 mod 16
    assert q_at(sched, 4) == (4, 1)


HORIZON = 10 ** 4


def test_classes_disjoint_and_total():
    sched = QSchedule()
    for t in range(1, HORIZON + 1):
        sched.q_at(t)
        assert len(sched.matches(t)) == 1, f"t={t} covered more than once"


def test_x_power_of_two_and_y_range():
    sched = QSchedule()
    for t in range(1, 2000):
        x, y = sched.q_at(t)
        assert x & (x - 1) == 0 and x >= 2
        assert 0 <= y <= x - 1


def test_r_positive_iff_y_zero():
    sched = QSchedule()
    for t in range(1, 2000):
        x, y = sched.q_at(t)
        r = sched.r_at(t)
        if y == 0:
            assert r == (1 << x) - 1
        else:
            assert r == 0


def test_shift_identity_and_membership():
    sched = QSchedule()
    assert shift(sched, 0) is sched
    shifted = shift(sched, 4)
    # i=1 classes mod 4 are preserved under t+4
    for t in range(1, 200):
        if sched.q_at(t)[0] == 2:
            assert shifted.q_at(t) == sched.q_at(t)
    seen = {}
    for t in range(1, HORIZON + 1):
        x, y = shifted.q_at(t)
        key = (x, y)
        period = (x * x)  # 4^i where x = 2^i
        if key in seen:
            assert (t - seen[key]) % period == 0
        else:
            seen[key] = t


def test_interlace_shapes():
    sched = QSchedule()
    sa, sb, sc = interlace(sched)
    for t in range(1, 2000):
        for derived, offset in ((sa, 0), (sb, 1), (sc, 2)):
            x, y = derived.q_at(t)
            bx, by = sched.q_at(3 * t + offset)
            assert x == bx  # x unchanged under interlacing
            assert y == (by - 1) % bx  # y = 0 slots map to y = x-1
            if by == 0:
                assert y == x - 1


def test_interlace_classes_disjoint():
    sched = QSchedule()
    for derived in interlace(sched):
        residues = {}
        for t in range(1, HORIZON + 1):
            x, y = derived.q_at(t)
            period = x * x
            key = (x, y)
            if key in residues:
                assert t % period == residues[key]
            else:
                residues[key] = t % period
        # distinct classes never collide: every t got exactly one (x, y)


def test_dump_format():
    sched = QSchedule()
    lines = sched.dump(4).splitlines()
    assert lines[0] == "1,2,0,3"
    assert lines[1] == "2,2,1,0"
    assert all(len(line.split(",")) == 4 for line in lines)


def weighted_stub(bounds, answers):
    def gen():
        fragment = {}
        for i, (b, a) in enumerate(zip(bounds, answers)):
            got = yield Step(frozenset({i}), bound=b)
            fragment[i] = got
        return fragment
    return gen


class EchoOracle:
    def __init__(self, answers):
        self.answers = {frozenset({i}): a for i, a in enumerate(answers)}

    def answer(self, step):
        if step.is_zero():
            return 0
        return self.answers[step.query]


def test_pad_to_r_single_bound_one():
    # b(s) = 1 needs a slot with r >= 1: class i=1, within 4 steps
    sched = QSchedule()
    gen = pad_to_r(weighted_stub([1], [1]), sched)
    oracle = EchoOracle([1])
    steps = 0
    try:
        step = next(gen)
        while True:
            steps += 1
            step = gen.send(oracle.answer(step))
    except StopIteration as stop:
        assert stop.value == {0: 1}
    assert steps <= 4 * weight_of_bound(1)


@pytest.mark.parametrize("seed", range(10))
def test_pad_to_r_length_at_most_4_weight(seed):
    rng = random.Random(seed)
    count = rng.randrange(1, 30)
    bounds = [rng.randrange(1, 200) for _ in range(count)]
    answers = [rng.randrange(0, b + 1) for b in bounds]
    weight = sum(weight_of_bound(b) for b in bounds)
    sched = QSchedule()
    gen = pad_to_r(weighted_stub(bounds, answers), sched)
    oracle = EchoOracle(answers)
    steps = 0
    real = 0
    try:
        step = next(gen)
        while True:
            steps += 1
            if not step.is_zero():
                real += 1
                x, y = step.slot
                assert y == 0 and step.bound <= (1 << x) - 1
            step = gen.send(oracle.answer(step))
    except StopIteration as stop:
        assert stop.value == dict(enumerate(answers))
    assert real == count
    assert steps <= 4 * weight + 1e-9


def test_pad_to_r_empty_strategy():
    sched = QSchedule()
    gen = pad_to_r(weighted_stub([], []), sched)
    try:
        next(gen)
        assert False, "empty strategy should finish immediately"
    except StopIteration as stop:
        assert stop.value == {}


def test_rotated_membership():
    base = QSchedule()
    rotated = Derived(base, rot=1)
    for t in range(1, 500):
        x, y = rotated.q_at(t)
        bx, by = base.q_at(t)
        assert (x, (y + 1) % x) == (bx, by)
