import math
from fractions import Fraction

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from sympy import prime

from verexp.audit import rho_brute_force, rho_closed_form
from verexp.constraints import check_satisfied, gen_witness, synthesize_main
from verexp.constraints import gadgets as g
from verexp.params import DEFAULT_P, ProtocolParams, build_table
from verexp.reference import exact_distribution, run_reference, select, submin, utilities, weights

from conftest import gadget

CONFIGS = [
    ProtocolParams(range=range(n), m=m, epsilon=eps, method=meth, l=l, bit_width=16)
    for m, n, eps, meth, l in [
        (1, 2, "1", "setk", 4),
        (4, 5, "0.5", "set0", 3),
        (7, 6, "2*ln(2)", "setk", 3),
        (9, 4, "0.25", "set0", 128),
    ]
]
FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def instances(draw):
    p = draw(st.sampled_from(CONFIGS))
    db = draw(st.lists(st.sampled_from(list(p.range)), min_size=p.m, max_size=p.m))
    rands = draw(st.lists(st.integers(0, DEFAULT_P - 1), min_size=p.m, max_size=p.m))
    return p, db, rands


@FAST
@given(instances())
def test_circuit_matches_reference(inst):
    p, db, rands = inst
    w, out = gen_witness(p, db, rands)
    assert out["med"] == run_reference(db, rands, p).med
    assert check_satisfied(synthesize_main(p), w)


@FAST
@given(instances())
def test_inverse_cdf_reproduces_masses(inst):
    p, db, _ = inst
    _, s = weights(submin(utilities(db, p.range, p.m)), p.table)
    if s[-1] > 5000:
        # large totals: check only the boundaries
        picks = {select(s, p.range, r)[1] for r in (0, s[-1] - 1)}
        assert picks <= set(range(p.n))
        return
    counts = [0] * p.n
    for r in range(s[-1]):
        counts[select(s, p.range, r)[1]] += 1
    assert [Fraction(c, s[-1]) for c in counts] == list(exact_distribution(db, p).masses)


@FAST
@given(st.integers(1, 400), st.integers(2, 64), st.sampled_from(["set0", "setk"]))
def test_table_invariants(eps_hundredths, l, method):
    eps = f"{eps_hundredths / 100:.2f}"
    t = build_table(eps, l, method)
    a = math.exp(float(eps) / 2)
    assert t.entries[-1] == t.k >= 1
    assert all(x >= y for x, y in zip(t.entries, t.entries[1:]))
    for x, y in zip(t.entries, t.entries[1:]):
        assert x <= a * y * (1 + 1e-12)
    assert t[l] == (0 if method == "set0" else t.k)


@FAST
@given(st.integers(2, 300), st.integers(1, 64))
def test_rho_closed_form(idx, s):
    p = prime(idx)
    if s > p:
        s = p
    assert rho_closed_form(p, s) == rho_brute_force(p, s) <= Fraction(s, 4 * p)


@FAST
@given(st.integers(0, DEFAULT_P - 1), st.integers(1, 2**40 - 1))
def test_mod_reduce_gadget(s, d):
    def fn(b, x, y):
        return g.mod_reduce(b, x, y, 40)[0]

    rho, cs, w = gadget(fn, s, d)
    assert rho.val == s % d and check_satisfied(cs, w)


@FAST
@given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
def test_lt_gadget(x, y):
    out, cs, w = gadget(lambda b, a, c: b.materialize(g.lt(b, a, c, 16)), x, y)
    assert out.val == int(x < y) and check_satisfied(cs, w)
