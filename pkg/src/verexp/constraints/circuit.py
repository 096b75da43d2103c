"""The main circuit: commitments, utilities, calibration, weights, reduction, selection.

Wire layout (all fixed by the parameters):

* wire 0 is the constant 1;
* public wires, in order: ``range_0..range_{n-1}``, ``med``, ``com_0..com_{m-1}``;
* private wires: provider inputs, provider randomness, then intermediates.
"""

from dataclasses import dataclass
from functools import lru_cache

from ..errors import InputShapeError
from ..hash_commit import hash_instance
from ..params import require_valid
from . import gadgets as g
from .r1cs import Builder


@dataclass(frozen=True)
class CircuitLayout:
    """Linear combinations locating named intermediates in the wire vector."""

    range_idx: tuple
    med_idx: int
    com_idx: tuple
    input_idx: tuple
    rand_idx: tuple
    probes: dict

    def values(self, name, witness, p):
        return [sum(c * witness[k] for k, c in lc.items()) % p for lc in self.probes[name]]


def _describe(b, params, inputs=None, rands=None):
    n, m = params.n, params.m
    B, W = params.bit_width, params.weight_width
    inst = hash_instance(params.hash_id, params.p)
    assign = b.assign

    range_vars = b.alloc_many(n, params.range if assign else None, public=True)
    med_idx, med_var = b.alloc_output()
    coms = [b.alloc_output() for _ in range(m)]
    xs = b.alloc_many(m, inputs if assign else None)
    rs = b.alloc_many(m, rands if assign else None)

    for v in range_vars:
        g.range_check(b, v, B)
    for x in xs:
        g.range_check(b, x, B)

    # Bind
    for (idx, com_var), x, r in zip(coms, xs, rs):
        h = g.sponge(b, [x, r], inst)
        b.set_value(idx, h.val if assign else 0)
        b.enforce_equal(com_var, h)

    # Util
    center = params.center
    utils = []
    for rv in range_vars:
        count = b.linear_sum((1, g.lt(b, x, rv, B)) for x in xs)
        utils.append(b.materialize(g.abs_center(b, count, center, B)))

    # SubMin
    cal = g.submin_chain(b, utils, B)

    # ExpLookup and running sums
    umax = max(center, m - center)
    expvals, sums = [], []
    acc = None
    for u in cal:
        e = g.exp_lookup(b, u, params.table, B, max_value=umax)
        expvals.append(e)
        acc = b.materialize(e if acc is None else acc + e)
        sums.append(acc)

    # Mod
    total = b.linear_sum((1, r) for r in rs)
    rho, _ = g.mod_reduce(b, total, sums[-1], W)

    # InverseCDF
    med, sig, sig_prime = g.inverse_cdf(b, sums, range_vars, rho, W)
    b.set_value(med_idx, med.val if assign else 0)
    b.enforce_equal(med_var, med)

    probes = {
        "util": utils,
        "util_cal": cal,
        "expval": expvals,
        "s": sums,
        "rho": [rho],
        "sig": sig,
        "sig_prime": sig_prime,
    }
    return range_vars, med_idx, coms, xs, rs, probes


def _index(var):
    (idx,) = var.lc
    return idx


@lru_cache(maxsize=16)
def _synthesize(params):
    require_valid(params)
    b = Builder(params.p, synthesize=True, assign=False)
    range_vars, med_idx, coms, xs, rs, probes = _describe(b, params)
    cs, _ = b.finish(params.digest, num_range=params.n)
    layout = CircuitLayout(
        range_idx=tuple(_index(v) for v in range_vars),
        med_idx=med_idx,
        com_idx=tuple(idx for idx, _ in coms),
        input_idx=tuple(_index(v) for v in xs),
        rand_idx=tuple(_index(v) for v in rs),
        probes={k: tuple(v.lc for v in vs) for k, vs in probes.items()},
    )
    return cs, layout


def synthesize_main(params):
    """The constraint system for ``params`` (cached; treat as read-only)."""
    return _synthesize(params)[0]


def circuit_layout(params):
    return _synthesize(params)[1]


def gen_witness(params, inputs, rands):
    """Full wire assignment plus the public outputs ``{"med", "coms"}``."""
    require_valid(params)
    inputs, rands = list(inputs), list(rands)
    if len(inputs) != params.m or len(rands) != params.m:
        raise InputShapeError(
            f"expected m={params.m} inputs and randomness values, got {len(inputs)} and {len(rands)}"
        )
    b = Builder(params.p, synthesize=False, assign=True)
    _, med_idx, coms, _, _, _ = _describe(b, params, [int(x) for x in inputs], [int(r) % params.p for r in rands])
    _, witness = b.finish()
    outputs = {"med": witness[med_idx], "coms": [witness[idx] for idx, _ in coms]}
    return witness, outputs


def public_inputs(params):
    return list(params.range)


def public_values(witness, params):
    """``(range values, med, commitments)`` read from the public wires."""
    cs = synthesize_main(params)
    vals = [witness[i] for i in cs.public_indices]
    n = params.n
    return vals[:n], vals[n], vals[n + 1 :]
