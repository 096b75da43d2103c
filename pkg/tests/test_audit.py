import random
from fractions import Fraction

import pytest

from verexp.audit import (
    adjacent_pair_bound,
    dp_ratio_audit,
    rho_brute_force,
    rho_closed_form,
    rho_distance,
    sampling_chisquare,
    table_error_audit,
    utility_bound_audit,
)
from verexp.errors import AuditScopeError, DomainError, ImpossibleEventError
from verexp.params import ProtocolParams, build_table
from verexp.reference import exact_distribution

from conftest import TWO_LN2

P3 = ProtocolParams(range=(0, 1, 2), m=2, epsilon=TWO_LN2, method="setk", l=3)
P5 = ProtocolParams(range=range(7), m=5, epsilon=TWO_LN2, method="set0", l=3)
DB5 = [3, 1, 4, 1, 5]


def test_dp_setk_example():
    r = dp_ratio_audit(P3)
    assert r.passed and r.pairs_checked == 18
    assert r.max_ratio == Fraction(9, 5)
    assert tuple(r.worst_pair) == ([1, 2], [1, 1], 2)
    assert r.ratio_bound == (4, 4)
    assert r.to_dict()["max_ratio"] == "9/5"


def test_dp_trivial_single_record():
    assert dp_ratio_audit(ProtocolParams(range=(0, 1), m=1, epsilon="1", method="setk", l=4)).passed


def test_dp_set0_boundary_gap():
    a = exact_distribution(DB5, P5).masses[6]
    b = exact_distribution([3, 1, 4, 1, 6], P5).masses[6]
    assert (a, b) == (0, Fraction(1, 14))
    r = dp_ratio_audit(P5)
    assert r.passed
    assert r.delta_bound == (Fraction(1, 2), Fraction(1, 2))
    assert Fraction(1, 14) <= r.additive_gap <= Fraction(1, 2)
    assert r.boundary_elements > 0


def test_dp_set0_set_divergence_reported():
    # mass lost at several boundary elements at once exceeds delta at set level
    r = dp_ratio_audit(P5)
    assert r.divergence == Fraction(5, 8)
    assert not r.divergence_ok


def test_dp_budget():
    big = ProtocolParams(range=range(50), m=10)
    assert adjacent_pair_bound(big) > 10**6
    with pytest.raises(AuditScopeError):
        dp_ratio_audit(big)


def test_dp_setk_never_infinite():
    for eps in ("0.5", "1"):
        r = dp_ratio_audit(ProtocolParams(range=range(4), m=3, epsilon=eps, method="setk"))
        assert r.passed and r.boundary_elements == 0


def test_utility_examples():
    r = utility_bound_audit(P3, [1, 1], [-1, 0])
    row = {x["c"]: x for x in r.rows}
    assert (r.n_range, r.n_opt, r.opt) == (3, 2, 0)
    assert row[-1]["probability"] == Fraction(1, 9)
    assert row[-1]["bound"] == (Fraction(3, 2), Fraction(3, 2))
    assert row[0]["probability"] == 1
    assert r.passed


def test_utility_set0_zero_case():
    r = utility_bound_audit(P5, DB5)
    row = {x["c"]: x for x in r.rows}
    assert row[-3]["probability"] == 0 and row[-3]["zero_case"]
    assert r.passed


def test_table_error_examples():
    r = table_error_audit(build_table("1", 4, "setk"), "1")
    assert r.passed and abs(float(r.max_error[1]) - 0.7927) < 1e-4
    assert abs(float(r.bound[0]) - 2.5415) < 1e-4
    r = table_error_audit(build_table(TWO_LN2, 3, "set0"), TWO_LN2)
    assert r.passed and r.max_error == (0, 0) and r.bound == (2, 2)
    assert table_error_audit(build_table("0.5", 2, "set0"), "0.5").passed


def test_table_error_flags_bad_table():
    t = build_table("1", 4, "setk")
    bad = t.__class__((9, 4, 3, 2), t.tail, t.k, t.method, t.epsilon)
    r = table_error_audit(bad, "1")
    assert not r.ratio_ok and not r.recurrence_ok and not r.passed


def test_rho_examples():
    assert rho_distance(97, 13).closed_form == Fraction(42, 1261)
    assert rho_distance(97, 13).bound == Fraction(13, 388)
    assert rho_distance(97, 7).closed_form == Fraction(6, 679)
    assert rho_distance(97, 1).closed_form == 0
    assert all(rho_distance(97, s).passed for s in range(1, 98))
    with pytest.raises(DomainError):
        rho_distance(97, 0)


def test_rho_brute_force_larger():
    rng = random.Random(4)
    for _ in range(20):
        p = rng.choice([9973, 7919, 5003])
        s = rng.randrange(1, 200)
        assert rho_brute_force(p, s) == rho_closed_form(p, s)


def test_sampling_pass():
    r = sampling_chisquare([1, 1], P3, 20_000, 1e-3, seed=1)
    assert r.passed and r.dof == 2 and sum(r.counts) == 20_000
    assert r.expected == [Fraction(4, 9), Fraction(4, 9), Fraction(1, 9)]
    assert sampling_chisquare(DB5, P5, 10_000, 1e-3, seed=2).passed


def test_sampling_impossible_event():
    def always_last(s, rng):
        return len(s) - 1

    with pytest.raises(ImpossibleEventError):
        sampling_chisquare(DB5, P5, 100, 1e-3, seed=0, sampler=always_last)


def test_sampling_detects_biased_sampler():
    def biased(s, rng):
        return 0 if rng.random() < 0.6 else rng.randrange(len(s))

    assert not sampling_chisquare([1, 1], P3, 20_000, 1e-3, seed=0, sampler=biased).passed
