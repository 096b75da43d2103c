"""Exact audits of the mechanism's privacy, utility and approximation guarantees.

Probabilities are exact ``Fraction`` values.  Whenever a rational has to be
compared with a power of ``a = exp(eps/2)`` the comparison is certified with
interval bounds; precision is raised until the interval separates, and a
comparison that never separates raises ``AuditInconclusiveError``.

All audits of the mechanism itself treat rho as exactly uniform on
``[0, s_{n-1})``; the cost of deriving rho from a field sum is audited
separately by ``rho_distance``.
"""

import bisect
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb

import numpy as np
from mpmath import iv
from mpmath.libmp import to_rational
from scipy.stats import chisquare

from .errors import AuditScopeError, DomainError, ImpossibleEventError, InputShapeError
from .exactmath import DEFAULT_PREC, CertifiedReal, Epsilon, certified_le, fraction_str, interval_precision, refine
from .params import backward_entries, k_of_epsilon
from .reference import exact_distribution, submin, utilities, weights

DEFAULT_BUDGET = 2_000_000


def _fmt(q):
    return None if q is None else fraction_str(q)


def _bounds_str(b):
    return [fraction_str(b[0]), fraction_str(b[1])]


# -- DP ratio audit ----------------------------------------------------------


@dataclass
class DPReport:
    method: str
    epsilon: str
    pairs_checked: int
    max_ratio: Fraction
    worst_pair: tuple
    additive_gap: Fraction
    gap_pair: tuple
    delta_bound: tuple
    ratio_bound: tuple
    divergence: Fraction
    divergence_ok: bool
    boundary_elements: int
    passed: bool
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "additive_gap": _fmt(self.additive_gap),
            "boundary_elements": self.boundary_elements,
            "delta_bound": _bounds_str(self.delta_bound),
            "divergence": _fmt(self.divergence),
            "divergence_ok": self.divergence_ok,
            "epsilon": self.epsilon,
            "failures": self.failures,
            "gap_pair": _pair_json(self.gap_pair),
            "max_ratio": _fmt(self.max_ratio),
            "method": self.method,
            "pairs_checked": self.pairs_checked,
            "pass": self.passed,
            "ratio_bound": _bounds_str(self.ratio_bound),
            "worst_pair": _pair_json(self.worst_pair),
        }


def _pair_json(pair):
    if pair is None:
        return None
    db, db2, element = pair
    return {"db": list(db), "db_adjacent": list(db2), "element": element}


def _masses(db, params):
    expvals, s = weights(submin(utilities(list(db), params.range, params.m)), params.table)
    return [Fraction(e, s[-1]) for e in expvals]


def adjacent_pair_bound(params):
    """Upper bound on the (database, replacement) pairs ``dp_ratio_audit`` visits."""
    n, m = params.n, params.m
    return comb(n + m - 1, m) * min(m, n) * (n - 1)


def dp_ratio_audit(params, budget=DEFAULT_BUDGET):
    """Enumerate every database over ``range^m`` and every single-record replacement.

    setk: every element must satisfy ``Pr[D] <= e^eps Pr[D']``.
    set0: every element must satisfy the ratio bound or, where truncation
    makes it fail, the additive gap ``Pr[D] - Pr[D'] <= e^{eps/2} k / N``
    with ``N = T[0]``.  ``passed`` is this per-element verdict.

    The set-level divergence ``max_S Pr[D in S] - e^eps Pr[D' in S]`` (an
    upper bound, exact when ``e^eps`` is rational) is reported beside it with
    its own verdict ``divergence_ok``; it can exceed the per-element bound
    when many boundary elements lose their mass at once.
    """
    if adjacent_pair_bound(params) > budget:
        raise AuditScopeError(f"enumeration exceeds the budget of {budget} adjacent pairs")

    n, m = params.n, params.m
    eps = params.eps
    table = params.table
    N, k = table.entries[0], table.k
    e_eps = CertifiedReal(lambda prec: eps.base_power_bounds(2, prec))
    delta = CertifiedReal(lambda prec: tuple(b * k / N for b in eps.base_bounds(prec)))
    set0 = params.method == "set0"

    rng = params.range
    cache = {}

    def masses(db):
        got = cache.get(db)
        if got is None:
            got = cache[db] = _masses([rng[i] for i in db], params)
        return got

    max_ratio, worst = Fraction(0), None
    max_gap, gap_pair = Fraction(0), None
    max_div, boundary, pairs = Fraction(0), 0, 0
    failures = []
    lo_eps = e_eps.lo

    for db in combinations_with_replacement(range(n), m):
        P = masses(db)
        for pos, old in enumerate(db):
            if pos and db[pos - 1] == old:
                continue
            rest = db[:pos] + db[pos + 1 :]
            for new in range(n):
                if new == old:
                    continue
                db2 = tuple(sorted(rest + (new,)))
                Q = masses(db2)
                pairs += 1
                pair_dbs = ([rng[i] for i in db], [rng[i] for i in db2])
                div_lo_terms = []
                for i, (pm, qm) in enumerate(zip(P, Q)):
                    if pm == 0:
                        continue
                    if qm > 0:
                        r = pm / qm
                        if r > max_ratio:
                            max_ratio, worst = r, (*pair_dbs, rng[i])
                        if r <= lo_eps or e_eps.compare(r) <= 0:
                            continue
                        if not set0:
                            failures.append(f"ratio {fraction_str(r)} > e^eps at element {rng[i]}")
                            continue
                    elif not set0:
                        failures.append(f"zero mass at element {rng[i]} under setk")
                        continue
                    # zero-mass neighbour or a truncation-boundary element
                    boundary += 1
                    gap = pm - qm
                    if gap > max_gap:
                        max_gap, gap_pair = gap, (*pair_dbs, rng[i])
                    div_lo_terms.append((pm, qm))
                if set0 and div_lo_terms:
                    # the worst set collects the elements with pm > e^eps * qm, all of
                    # them boundary elements; the lower bound on e^eps keeps this an upper bound
                    div = sum(pm - lo_eps * qm for pm, qm in div_lo_terms if pm > lo_eps * qm)
                    if div > max_div:
                        max_div = div

    passed = not failures
    if max_gap and delta.compare(max_gap) > 0:
        passed = False
        failures.append(f"additive gap {fraction_str(max_gap)} exceeds e^(eps/2) k/N")
    divergence_ok = not max_div or delta.compare(max_div) <= 0
    return DPReport(
        method=params.method,
        epsilon=params.epsilon,
        pairs_checked=pairs,
        max_ratio=max_ratio,
        worst_pair=worst,
        additive_gap=max_gap,
        gap_pair=gap_pair,
        delta_bound=delta.bounds(),
        ratio_bound=e_eps.bounds(),
        divergence=max_div,
        divergence_ok=divergence_ok,
        boundary_elements=boundary,
        passed=passed,
        failures=failures[:20],
    )


# -- utility bound audit -----------------------------------------------------


@dataclass
class UtilityReport:
    opt: int
    n_range: int
    n_opt: int
    rows: list
    passed: bool

    def to_dict(self):
        return {
            "n_opt": self.n_opt,
            "n_range": self.n_range,
            "opt": self.opt,
            "pass": self.passed,
            "rows": [
                {
                    "bound": None if r["bound"] is None else _bounds_str(r["bound"]),
                    "c": r["c"],
                    "pass": r["pass"],
                    "probability": fraction_str(r["probability"]),
                    "zero_case": r["zero_case"],
                }
                for r in self.rows
            ],
        }


def utility_bound_audit(params, db, thresholds=None):
    """``Pr[u(DB, x) <= c]`` against the utility tail bound for each integer ``c``.

    Utility is the negated distance ``-|rank - center|`` so ``OPT <= 0``.
    Bound: ``(|R| / |R_OPT|) * (a^(c - OPT) + a / (N (a - 1)))`` with ``N = T[0]``.
    For set0 every ``c <= OPT - l`` must give probability exactly 0.
    """
    dist = exact_distribution(db, params)
    u = [-d for d in utilities(db, params.range, params.m)]
    opt = max(u)
    n_opt = u.count(opt)
    if thresholds is None:
        thresholds = range(min(u) - 1, 1)
        if params.method == "set0":
            thresholds = sorted(set(thresholds) | {opt - params.l})
    eps = params.eps
    N = params.table.entries[0]
    ratio = Fraction(len(u), n_opt)

    def tail_term(prec):
        lo, hi = eps.base_bounds(prec)
        # a/(a-1) is decreasing in a
        return hi / (N * (hi - 1)), lo / (N * (lo - 1))

    rows, passed = [], True
    for c in thresholds:
        prob = sum((m for m, ui in zip(dist.masses, u) if ui <= c), Fraction(0))
        zero_case = params.method == "set0" and c <= opt - params.l

        def bound(prec, c=c):
            p_lo, p_hi = eps.base_power_bounds(c - opt, prec)
            t_lo, t_hi = tail_term(prec)
            return ratio * (p_lo + t_lo), ratio * (p_hi + t_hi)

        ok = certified_le(lambda prec, q=prob: (q, q), bound)
        if zero_case:
            ok = ok and prob == 0
        passed &= ok
        rows.append(
            {
                "bound": bound(DEFAULT_PREC),
                "c": c,
                "pass": ok,
                "probability": prob,
                "zero_case": zero_case,
            }
        )
    return UtilityReport(opt, len(u), n_opt, rows, passed)


# -- table approximation error ------------------------------------------------


@dataclass
class TableErrorReport:
    epsilon: str
    l: int
    max_error: tuple
    max_error_index: int
    bound: tuple
    ratio_ok: bool
    recurrence_ok: bool
    passed: bool

    def to_dict(self):
        return {
            "bound": _bounds_str(self.bound),
            "epsilon": self.epsilon,
            "l": self.l,
            "max_error": _bounds_str(self.max_error),
            "max_error_approx": float(self.max_error[1]),
            "max_error_index": self.max_error_index,
            "pass": self.passed,
            "ratio_ok": self.ratio_ok,
            "recurrence_ok": self.recurrence_ok,
        }


@lru_cache(maxsize=64)
def _inverse_powers(eps, count, prec):
    """Integer bounds ``(L_i, H_i)`` with ``L_i <= a^-i * 2^E <= H_i`` for ``i < count``."""
    E = prec + 8
    out = []
    with interval_precision(prec):
        half = eps._interval() / 2
        for i in range(count):
            lo, hi = (Fraction(*map(int, to_rational(v))) for v in iv.exp(-half * i)._mpi_)
            out.append((math.floor(lo * (1 << E)), math.ceil(hi * (1 << E))))
    return E, tuple(out)


def table_error_audit(table, epsilon=None):
    """Largest ``|T[i] - T[0] a^-i|`` against ``a / (a - 1)``, plus the adjacent-ratio bound."""
    eps = Epsilon.parse(epsilon if epsilon is not None else table.epsilon)
    T = table.entries
    l = len(T)

    def errors(prec):
        if eps.exact_base is not None:
            # a = u/v exactly, so T[0] a^-i = T[0] v^i / u^i; use the common denominator u^(l-1)
            u, v = eps.exact_base.numerator, eps.exact_base.denominator
            D = u ** (l - 1)
            pw = [(v**i * u ** (l - 1 - i),) * 2 for i in range(l)]
        else:
            E, pw = _inverse_powers(eps, max(l, 256), prec)
            D = 1 << E
        best_hi, best_lo, idx = 0, 0, 0
        t0 = T[0]
        for i in range(l):
            lo, hi = pw[i]
            a_lo, a_hi, t = t0 * lo, t0 * hi, T[i] * D
            d_lo, d_hi = abs(t - a_lo), abs(t - a_hi)
            e_hi = max(d_lo, d_hi)
            if e_hi > best_hi:
                best_hi, idx = e_hi, i
            if not a_lo <= t <= a_hi:
                best_lo = max(best_lo, min(d_lo, d_hi))
        return (Fraction(best_lo, D), Fraction(best_hi, D)), idx

    def bound(prec):
        lo, hi = eps.base_bounds(prec)
        return hi / (hi - 1), lo / (lo - 1)

    def decide(b):
        (err, idx), bnd = b
        if err[1] - err[0] > Fraction(1, 10**9):
            return None  # keep the reported error tight as well
        if err[1] < bnd[0]:
            return True, err, idx
        return (False, err, idx) if err[0] >= bnd[1] else None

    passed, err, idx = refine(lambda prec: (errors(prec), bound(prec)), decide)

    base = CertifiedReal(eps.base_bounds)
    ratio_ok = all(T[i + 1] > 0 and base.compare(Fraction(T[i], T[i + 1])) <= 0 for i in range(l - 1))
    rebuilt = refine(lambda prec: backward_entries(eps.base_bounds(prec), T[-1], l), lambda e: e)
    recurrence_ok = T[-1] == k_of_epsilon(eps) and tuple(reversed(rebuilt)) == tuple(T)
    return TableErrorReport(
        epsilon=eps.text,
        l=l,
        max_error=err,
        max_error_index=idx,
        bound=bound(DEFAULT_PREC),
        ratio_ok=ratio_ok,
        recurrence_ok=recurrence_ok,
        passed=passed and ratio_ok and recurrence_ok,
    )


# -- rho statistical distance -------------------------------------------------


@dataclass
class RhoReport:
    p: int
    s: int
    closed_form: Fraction
    brute_force: Fraction
    bound: Fraction
    passed: bool

    def to_dict(self):
        return {
            "bound": fraction_str(self.bound),
            "brute_force": fraction_str(self.brute_force),
            "closed_form": fraction_str(self.closed_form),
            "p": self.p,
            "pass": self.passed,
            "s": self.s,
        }


def rho_closed_form(p, s):
    z = p % s
    return Fraction(z * (s - z), p * s)


def rho_brute_force(p, s):
    """Total-variation distance between ``U[0, p) mod s`` and ``U[0, s)`` by enumeration."""
    counts = np.bincount(np.arange(p, dtype=np.int64) % s, minlength=s)
    return Fraction(sum(abs(int(c) * s - p) for c in counts), 2 * p * s)


def rho_distance(p, s):
    if s < 1:
        raise DomainError("s must be at least 1")
    if p < 2:
        raise DomainError("p must be at least 2")
    closed = rho_closed_form(p, s)
    brute = rho_brute_force(p, s)
    bound = Fraction(s, 4 * p)
    return RhoReport(p, s, closed, brute, bound, closed == brute and closed <= bound)


# -- sampling goodness of fit -------------------------------------------------


@dataclass
class SamplingReport:
    trials: int
    counts: list
    expected: list
    statistic: float
    p_value: float
    dof: int
    significance: float
    passed: bool

    def to_dict(self):
        return {
            "counts": self.counts,
            "dof": self.dof,
            "expected": [fraction_str(e) for e in self.expected],
            "p_value": self.p_value,
            "pass": self.passed,
            "significance": self.significance,
            "statistic": self.statistic,
            "trials": self.trials,
        }


def field_sum_sampler(p):
    """Selection driven like the circuit: a uniform field element reduced mod ``s_{n-1}``."""

    def sample(s, rng):
        return bisect.bisect_right(s, rng.randrange(p) % s[-1])

    return sample


def sampling_chisquare(db, params, trials=100_000, significance=1e-3, seed=None, sampler=None):
    """Chi-square test of sampled selections against the exact output distribution.

    A sample on a zero-mass element raises ``ImpossibleEventError`` at once.
    """
    if trials < 1:
        raise InputShapeError("trials must be positive")
    dist = exact_distribution(db, params)
    expvals, s = weights(submin(utilities(db, params.range, params.m)), params.table)
    rng = random.Random(seed)
    sampler = sampler or field_sum_sampler(params.p)
    counts = Counter()
    for _ in range(trials):
        j = sampler(s, rng)
        if not 0 <= j < params.n or dist.masses[j] == 0:
            raise ImpossibleEventError(f"sampled element index {j}, which has probability zero")
        counts[j] += 1
    support = [i for i, mass in enumerate(dist.masses) if mass > 0]
    obs = [counts[i] for i in support]
    exp = [float(dist.masses[i] * trials) for i in support]
    if len(support) == 1:
        stat, pval = 0.0, 1.0
    else:
        res = chisquare(obs, exp)
        stat, pval = float(res.statistic), float(res.pvalue)
    return SamplingReport(
        trials=trials,
        counts=[counts[i] for i in range(params.n)],
        expected=list(dist.masses),
        statistic=stat,
        p_value=pval,
        dof=len(support) - 1,
        significance=significance,
        passed=pval > significance,
    )
