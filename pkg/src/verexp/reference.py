"""Plaintext exponential mechanism for the median: the oracle for the circuit.

Every probability here is an exact ``Fraction``.
"""

import json
from bisect import bisect_right
from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import DegenerateDistributionError, InputShapeError, PreconditionError


def rank(db, r):
    return sum(1 for x in db if x < r)


def utilities(db, rng, m):
    """``|rank(db, r) - c|`` for each range element, with center ``c = (m-1)//2``."""
    if len(db) != m:
        raise InputShapeError(f"database has {len(db)} records, expected m={m}")
    c = (m - 1) // 2
    return [abs(rank(db, r) - c) for r in rng]


def submin(utils):
    if not utils:
        raise InputShapeError("submin needs at least one utility")
    lo = min(utils)
    return [u - lo for u in utils]


def weights(utils_cal, table):
    expvals = [table[u] for u in utils_cal]
    s, acc = [], 0
    for e in expvals:
        acc += e
        s.append(acc)
    if not s or s[-1] == 0:
        raise DegenerateDistributionError("total weight is zero")
    return expvals, s


def rho(rands, p, s_last):
    if s_last < 1:
        raise DegenerateDistributionError("total weight must be positive")
    return (sum(rands) % p) % s_last


def select(s, rng, rho_value):
    """Inverse-CDF step: the first index whose cumulative weight exceeds rho."""
    if not 0 <= rho_value < s[-1]:
        raise PreconditionError(f"rho={rho_value} outside [0, {s[-1]})")
    j = bisect_right(s, rho_value)
    return rng[j], j


@dataclass(frozen=True)
class MechanismTrace:
    utils: list
    utils_cal: list
    expvals: list
    s: list
    rho: int
    med: int
    med_index: int

    def to_json(self):
        return json.dumps({k: [str(x) for x in v] if isinstance(v, list) else str(v) for k, v in asdict(self).items()}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(**{k: [int(x) for x in v] if isinstance(v, list) else int(v) for k, v in d.items()})


def run_reference(db, rands, params):
    if len(rands) != params.m:
        raise InputShapeError(f"got {len(rands)} randomness values, expected m={params.m}")
    utils = utilities(db, params.range, params.m)
    cal = submin(utils)
    expvals, s = weights(cal, params.table)
    r = rho(rands, params.p, s[-1])
    med, j = select(s, params.range, r)
    return MechanismTrace(utils, cal, expvals, s, r, med, j)


@dataclass(frozen=True)
class ExactDistribution:
    masses: tuple
    denominator: int

    def __getitem__(self, i):
        return self.masses[i]

    def __len__(self):
        return len(self.masses)


def exact_distribution(db, params):
    utils = utilities(db, params.range, params.m)
    expvals, s = weights(submin(utils), params.table)
    total = s[-1]
    return ExactDistribution(tuple(Fraction(e, total) for e in expvals), total)
