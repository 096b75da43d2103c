import math
from fractions import Fraction

import pytest

from verexp.errors import ParameterError
from verexp.params import (
    ProtocolParams,
    LookupTable,
    build_table,
    k_of_epsilon,
    parse_range,
    require_valid,
    validate_params,
)

from conftest import TWO_LN2


@pytest.mark.parametrize("eps,k", [("0.5", 4), ("1.0", 2), (TWO_LN2, 1), ("2", 1), ("0.1", 20)])
def test_k_of_epsilon(eps, k):
    assert k_of_epsilon(eps) == k


def test_k_matches_float_away_from_integers():
    for eps in ("0.05", "0.3", "0.7", "1.5", "3"):
        assert k_of_epsilon(eps) == math.ceil(1 / (math.exp(float(eps) / 2) - 1))


@pytest.mark.parametrize("bad", ["0", "-1", "abc", "", "1*ln(1)", "ln(0.5)"])
def test_bad_epsilon(bad):
    with pytest.raises(ParameterError):
        k_of_epsilon(bad)


def test_k_non_increasing_in_epsilon():
    ks = [k_of_epsilon(str(Fraction(i, 10))) for i in range(1, 60)]
    assert all(a >= b for a, b in zip(ks, ks[1:]))


@pytest.mark.parametrize(
    "eps,l,method,entries,tail",
    [
        (TWO_LN2, 3, "set0", (4, 2, 1), 0),
        ("1", 4, "setk", (6, 4, 3, 2), 2),
        (TWO_LN2, 3, "setk", (4, 2, 1), 1),
    ],
)
def test_build_table_examples(eps, l, method, entries, tail):
    t = build_table(eps, l, method)
    assert t.entries == entries
    assert t.tail == tail
    assert t[l + 5] == tail


def test_table_recurrence_and_ratio():
    a = math.exp(0.25)
    t = build_table("0.5", 128, "set0")
    assert t.entries[-1] == 4
    for hi, lo in zip(t.entries, t.entries[1:]):
        assert hi == math.floor(a * lo)
        assert 1 <= hi / lo <= a


@pytest.mark.parametrize("l", [0, 1, -3])
def test_table_rejects_short(l):
    with pytest.raises(ParameterError):
        build_table("1", l, "setk")


def test_table_rejects_method():
    with pytest.raises(ParameterError):
        build_table("1", 4, "setx")


def test_table_json_round_trip_and_digest():
    t = build_table("1", 4, "setk")
    d = t.to_dict()
    assert LookupTable.from_dict(d) == t
    d["entries"][0] = "7"
    with pytest.raises(ParameterError):
        LookupTable.from_dict(d)
    assert build_table("1", 4, "set0").digest != t.digest


def test_default_params_valid():
    p = ProtocolParams(range=range(100), m=100)
    assert p.l == 128 and p.bit_width == 64
    assert validate_params(p) == []


def test_unsorted_range_reported():
    p = ProtocolParams(range=(3, 1, 2), m=3)
    assert "range not strictly increasing" in validate_params(p)


def test_separation_violation_reported():
    # p=97, n=7, T[0]=6 from eps=1, l=4
    p = ProtocolParams(range=range(7), m=1, epsilon="1", method="setk", l=4, p=97, bit_width=2)
    probs = validate_params(p)
    assert any("2^-40" in s for s in probs)


@pytest.mark.parametrize(
    "changes,needle",
    [
        ({"p": 91}, "not prime"),
        ({"bit_width": 200}, "2^(2B)"),
        ({"range": (0,)}, "n >= 2"),
        ({"m": 0}, "m must be"),
        ({"l": 1}, "l must be"),
        ({"range": (0, 1 << 20)}, "B bits"),
        ({"hash_id": "nope"}, "hash_id"),
        ({"epsilon": "-1"}, "epsilon"),
    ],
)
def test_validation_problems(changes, needle):
    p = ProtocolParams(range=range(4), m=3, bit_width=16).with_(**changes)
    assert any(needle in s for s in validate_params(p))
    with pytest.raises(ParameterError):
        require_valid(p)


def test_params_json_round_trip():
    p = ProtocolParams(range=(1, 5, 9), m=4, epsilon=TWO_LN2, method="setk", l=3, bit_width=16)
    q = ProtocolParams.from_json(p.to_json())
    assert q == p and q.digest == p.digest
    assert p.with_(m=5).digest != p.digest


def test_parse_range():
    assert parse_range("0:3") == [0, 1, 2, 3]
    assert parse_range("1,4,9") == [1, 4, 9]
    with pytest.raises(ParameterError):
        parse_range("5:2")


def test_center_and_weight_width():
    p = ProtocolParams(range=range(10), m=6, bit_width=16)
    assert p.center == 2
    assert p.weight_width >= (10 * p.table.entries[0]).bit_length()
