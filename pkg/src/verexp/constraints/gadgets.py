"""Gadget library: small constraint patterns composed by the main circuit.

Every gadget takes the ``Builder`` first and works in all builder modes.
Operands passed to comparators must already be known to fit in the stated
number of bits; the gadgets that introduce new values range-check them.
"""

from ..errors import WitnessError


def to_bits(b, x, nbits):
    """Little-endian bit wires of ``x``; fails if ``x`` does not fit in ``nbits``."""
    vals = None
    if b.assign:
        v = x.val
        if v >> nbits:
            raise WitnessError(f"value {v} does not fit in {nbits} bits")
        vals = [(v >> i) & 1 for i in range(nbits)]
    bits = b.alloc_many(nbits, vals)
    if b.synthesize:
        for bit in bits:
            b.enforce(bit, bit, bit)
        b.enforce_equal(b.linear_sum((1 << i, bit) for i, bit in enumerate(bits)), x)
    return bits


def range_check(b, x, nbits):
    to_bits(b, x, nbits)


def lt(b, x, y, nbits):
    """Bit ``[x < y]`` for operands below ``2^nbits``.

    Decomposes ``x - y + 2^nbits`` into ``nbits + 1`` bits; the top bit is set
    exactly when ``x >= y``.  Operand widths are the caller's to enforce in
    constraints; witness generation refuses oversized operands.
    """
    if b.assign and (x.val >> nbits or y.val >> nbits):
        raise WitnessError(f"comparator operand does not fit in {nbits} bits")
    bits =to_bits(b, x - y + (1 << nbits), nbits + 1)
    return b.one - bits[nbits]


def is_zero(b, x):
    inv = b.alloc(pow(x.val, -1, b.p) if b.assign and x.val else 0)
    out = b.alloc((1 if x.val == 0 else 0) if b.assign else None)
    b.enforce(x, inv, b.one - out)
    b.enforce(x, out, b.const(0))
    return out


def equals_const(b, x, c):
    return is_zero(b, x - c)


def mux(b, flag, when_true, when_false):
    """``flag ? when_true : when_false`` for a boolean ``flag``."""
    return when_false + b.mul(flag, when_true - when_false)


def abs_center(b, count, c, nbits):
    """``|count - c|`` for a constant center ``c``."""
    flag = lt(b, count, b.const(c), nbits)
    t = b.mul(flag, b.const(c) - count)
    return count - c + t * 2


def submin_chain(b, values, nbits):
    """Subtract the running minimum (sequential compare-and-select)."""
    if not values:
        raise ValueError("submin_chain needs at least one value")
    lo = values[0]
    for v in values[1:]:
        lo = b.materialize(mux(b, lt(b, v, lo, nbits), v, lo))
    return [v - lo for v in values]


def exp_lookup(b, u, table, nbits, max_value=None):
    """Table entry at ``u``, or the tail when ``u > l - 1``.

    ``max_value`` bounds ``u`` when the caller can guarantee it; selectors
    for unreachable indices are then omitted.
    """
    l = table.l
    top = l - 1 if max_value is None else min(l - 1, max_value)
    terms = [(table.entries[j], equals_const(b, u, j)) for j in range(top + 1)]
    if table.tail and (max_value is None or max_value > l - 1):
        terms.append((table.tail, lt(b, b.const(l - 1), u, nbits)))
    return b.linear_sum(terms)


def leq_const_bits(b, bits, k):
    """Enforce that little-endian ``bits`` encode an integer ``<= k``.

    Scans from the most significant bit keeping an is-prefix-equal flag: where
    ``k`` has a 0 the flag and the bit may not both be set.
    """
    if k >> len(bits):
        return
    eq = None  # None stands for the constant 1
    for i in reversed(range(len(bits))):
        x = bits[i]
        if (k >> i) & 1:
            eq = x if eq is None else b.mul(eq, x)
        else:
            b.enforce(b.one if eq is None else eq, x, b.const(0))


def canonical_bits(b, x):
    """Bits of the canonical representative of ``x`` in ``[0, p)``."""
    bits = to_bits(b, x, b.p.bit_length())
    leq_const_bits(b, bits, b.p - 1)
    return bits


def mod_reduce(b, s, d, width):
    """``(S mod p) mod d`` where ``S`` is a field value and ``d < 2^width``.

    The canonical bits of ``S`` are consumed most significant first in chunks
    by schoolbook long division.  Each step witnesses a quotient and a
    remainder and enforces ``q * d = r_prev * 2^len + chunk - r`` with
    ``q < 2^len`` and ``r < d``; chunk length is picked so neither side can
    reach ``p``, which makes each equation hold over the integers.
    Returns ``(rho, quotient)`` where the quotient is a linear combination of
    the chunk quotients.
    """
    bits = canonical_bits(b, s)
    kp = len(bits)
    step = kp - width - 2
    if step < 1:
        raise ValueError("no room for modular reduction at this width")
    dv = d.val if b.assign else None
    if b.assign and dv == 0:
        raise WitnessError("modulus must be positive")
    r = b.const(0)
    q_total = b.const(0)
    hi = kp
    while hi > 0:
        lo = max(0, hi - step)
        length = hi - lo
        chunk = b.linear_sum((1 << (i - lo), bits[i]) for i in range(lo, hi))
        num = r * (1 << length) + chunk
        if b.assign:
            qv, rv = divmod(num.val, dv)
        else:
            qv = rv = None
        q = b.alloc(qv)
        r_new = b.alloc(rv)
        range_check(b, q, length)
        range_check(b, r_new, width)
        b.enforce_equal(lt(b, r_new, d, width), b.one)
        b.enforce(q, d, num - r_new)
        q_total = q_total * (1 << length) + q
        r = r_new
        hi = lo
    return r, q_total


def inverse_cdf(b, s_values, range_vars, rho, width):
    """Select ``range_i`` for the first ``i`` with ``s_i > rho``.

    Returns ``(med, sig, sig_prime)``.
    """
    sig = [lt(b, rho, s, width) for s in s_values]
    sig_prime = []
    prev = None
    for cur in sig:
        if prev is None:
            sig_prime.append(cur)
        else:
            # parity of consecutive bits: a + b - 2ab
            sig_prime.append(prev + cur - b.mul(prev, cur) * 2)
        prev = cur
    picks = [b.mul(rv, sp) for rv, sp in zip(range_vars, sig_prime)]
    med = b.linear_sum((1, v) for v in picks)
    return med, sig, sig_prime


def _sbox(b, x, alpha):
    if alpha != 5:
        raise ValueError("only the x^5 s-box is supported in-circuit")
    x2 = b.mul(x, x)
    x4 = b.mul(x2, x2)
    return b.mul(x4, x)


def permutation(b, state, instance):
    """In-circuit permutation matching ``HashInstance.permute``."""
    alpha = instance.spec.alpha
    if not b.synthesize:
        return _permutation_values(b, state, instance)
    state = list(state)
    for rnd in range(instance.rounds):
        rc = instance.round_constants[rnd]
        state = [s + c for s, c in zip(state, rc)]
        if instance.is_full_round(rnd):
            state = [_sbox(b, s, alpha) for s in state]
        else:
            state = [_sbox(b, state[0], alpha)] + [b.materialize(s) for s in state[1:]]
        state = [b.linear_sum(zip(row, state)) for row in instance.mds]
    return state


def _permutation_values(b, state, instance):
    """Witness-only ``permutation``: same wires in the same order, plain integers."""
    if instance.spec.alpha != 5:
        raise ValueError("only the x^5 s-box is supported in-circuit")
    p = b.p
    vals = []
    st = [x.val for x in state]

    def sbox(x):
        x2 = x * x % p
        x4 = x2 * x2 % p
        x5 = x4 * x % p
        vals.extend((x2, x4, x5))
        return x5

    for rnd in range(instance.rounds):
        st = [(s + c) % p for s, c in zip(st, instance.round_constants[rnd])]
        if instance.is_full_round(rnd):
            st = [sbox(s) for s in st]
        else:
            st = [sbox(st[0])] + st[1:]
            vals.extend(st[1:])
        st = [sum(m * s for m, s in zip(row, st)) % p for row in instance.mds]
    b.alloc_many(len(vals), vals)
    return [b.const(v) for v in st]


def sponge(b, elems, instance):
    """In-circuit ``sponge_hash``."""
    rate = instance.spec.rate
    state = [b.const(len(elems))] + [b.const(0)] * rate
    for start in range(0, len(elems), rate):
        block = elems[start : start + rate]
        state = [state[0]] + [s + v for s, v in zip(state[1:], block)] + state[1 + len(block) :]
        state = permutation(b, state, instance)
    return state[1]
