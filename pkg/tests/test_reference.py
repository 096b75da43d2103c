import itertools
import random
from fractions import Fraction

import pytest

from verexp.errors import DegenerateDistributionError, InputShapeError, PreconditionError
from verexp.params import ProtocolParams, build_table
from verexp.reference import (
    MechanismTrace,
    exact_distribution,
    rank,
    rho,
    run_reference,
    select,
    submin,
    utilities,
    weights,
)

from conftest import TWO_LN2

DB5 = [3, 1, 4, 1, 5]


def p7(method="set0"):
    return ProtocolParams(range=range(7), m=5, epsilon=TWO_LN2, method=method, l=3)


def test_rank():
    assert rank(DB5, 4) == 3
    assert rank([], 0) == 0
    assert rank(DB5, 0) == 0


def test_utilities():
    assert utilities(DB5, range(7), 5) == [2, 2, 0, 0, 1, 2, 3]
    assert utilities([1, 1], [0, 1, 2], 2) == [0, 0, 2]
    assert utilities([0], [0], 1) == [0]
    with pytest.raises(InputShapeError):
        utilities([1], [0, 1], 2)


def test_submin():
    assert submin([3, 1, 2]) == [2, 0, 1]
    assert submin([0, 0, 2]) == [0, 0, 2]
    assert submin([5, 5, 5]) == [0, 0, 0]
    with pytest.raises(InputShapeError):
        submin([])


def test_weights():
    cal = [2, 2, 0, 0, 1, 2, 3]
    e, s = weights(cal, build_table(TWO_LN2, 3, "set0"))
    assert e == [1, 1, 4, 4, 2, 1, 0]
    assert s == [1, 2, 6, 10, 12, 13, 13]
    e, s = weights(cal, build_table(TWO_LN2, 3, "setk"))
    assert e == [1, 1, 4, 4, 2, 1, 1] and s[-1] == 14
    assert weights([0], build_table("1", 4, "setk")) == ([6], [6])
    with pytest.raises(DegenerateDistributionError):
        weights([5, 5], build_table(TWO_LN2, 3, "set0"))


def test_rho():
    assert rho([10, 20, 30], 97, 13) == 8
    assert rho([0, 0, 0], 97, 13) == 0
    assert rho([96, 2], 97, 13) == 1
    with pytest.raises(DegenerateDistributionError):
        rho([1], 97, 0)


def test_select():
    assert select([1, 2, 6, 10, 12, 13, 13], list(range(7)), 9) == (3, 3)
    assert select([2, 6, 7], [0, 1, 2], 0) == (0, 0)
    assert select([2, 6, 7], [0, 1, 2], 6) == (2, 2)
    with pytest.raises(PreconditionError):
        select([2, 6, 7], [0, 1, 2], 7)


def test_run_reference_composite():
    # these five values sum to 52, so rho = 52 mod 13 = 0
    t = run_reference(DB5, [10, 20, 15, 5, 2], p7())
    assert t.s == [1, 2, 6, 10, 12, 13, 13]
    assert (t.rho, t.med, t.med_index) == (0, 0, 0)


def test_run_reference_listed_rands_sum_to_72():
    t = run_reference(DB5, [10, 20, 30, 5, 7], p7())
    assert t.rho == 72 % 13 == 7
    assert t.med == 3


def test_run_reference_small():
    p = ProtocolParams(range=(0, 1, 2), m=2, epsilon=TWO_LN2, method="setk", l=3)
    t = run_reference([1, 1], [0, 0], p)
    assert (t.rho, t.s, t.med) == (0, [4, 8, 9], 0)
    p1 = ProtocolParams(range=(0, 1), m=1, epsilon=TWO_LN2, method="setk", l=3)
    t = run_reference([0], [0], p1)
    assert (t.utils, t.expvals, t.s, t.med) == ([0, 1], [4, 2], [4, 6], 0)


def test_trace_json_round_trip():
    t = run_reference(DB5, [1, 2, 3, 4, 5], p7())
    assert MechanismTrace.from_json(t.to_json()) == t


def test_exact_distribution():
    p = ProtocolParams(range=(0, 1, 2), m=2, epsilon=TWO_LN2, method="setk", l=3)
    assert exact_distribution([1, 1], p).masses == (Fraction(4, 9), Fraction(4, 9), Fraction(1, 9))
    assert exact_distribution([1, 2], p).masses == (Fraction(4, 10), Fraction(4, 10), Fraction(2, 10))
    d = exact_distribution(DB5, p7())
    assert d.masses == tuple(Fraction(v, 13) for v in (1, 1, 4, 4, 2, 1, 0))
    assert sum(d.masses) == 1


def test_inverse_cdf_enumeration_matches_exact():
    p = p7("setk")
    for db in ([0, 0, 0, 0, 0], DB5, [6, 6, 2, 1, 0]):
        e, s = weights(submin(utilities(db, p.range, p.m)), p.table)
        counts = [0] * p.n
        for r in range(s[-1]):
            counts[select(s, p.range, r)[1]] += 1
        assert [Fraction(c, s[-1]) for c in counts] == list(exact_distribution(db, p).masses)


def test_sensitivity_one():
    rng = range(5)
    for db in itertools.product(rng, repeat=3):
        u = utilities(list(db), rng, 3)
        for i in range(3):
            for v in rng:
                db2 = list(db)
                db2[i] = v
                u2 = utilities(db2, rng, 3)
                assert max(abs(a - b) for a, b in zip(u, u2)) <= 1


def test_rho_permutation_invariant():
    r = random.Random(3)
    rands = [r.randrange(10**9) for _ in range(7)]
    for _ in range(5):
        r.shuffle(rands)
        assert rho(rands, 1_000_003, 977) == sum(rands) % 1_000_003 % 977
