"""Rank-1 constraint systems over a prime field.

A constraint is a triple of sparse linear combinations ``(A, B, C)`` over the
wire vector ``w`` meaning ``<A,w> * <B,w> = <C,w>  (mod p)``.  Wire 0 is the
constant 1.  Linear combinations are ``{wire_index: coeff}`` dicts with
coefficients reduced into ``[0, p)``.

``Builder`` runs a circuit description in one of three modes: recording
constraints only (synthesis), computing wire values only (witness
generation) or both.  Wire allocation is identical in every mode, so a
witness produced by the fast value-only pass lines up with the system
produced by synthesis.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputShapeError

CS_MAGIC = b"VXCS"
WITNESS_MAGIC = b"VXWT"
FORMAT_VERSION = 1


def _lc_add(a, b, p, scale=1):
    out = dict(a)
    for k, v in b.items():
        t = (out.get(k, 0) + scale * v) % p
        if t:
            out[k] = t
        else:
            out.pop(k, None)
    return out


class Var:
    """A field value together with its linear combination over wires.

    Either half may be ``None`` depending on the builder mode.
    """

    __slots__ = ("lc", "val", "p")

    def __init__(self, lc, val, p):
        self.lc = lc
        self.val = val
        self.p = p

    def _coerce(self, other):
        if isinstance(other, Var):
            return other
        c = other % self.p
        return Var({0: c} if c else {}, c, self.p)

    def __add__(self, other):
        o = self._coerce(other)
        lc = None if self.lc is None else _lc_add(self.lc, o.lc, self.p)
        val = None if self.val is None else (self.val + o.val) % self.p
        return Var(lc, val, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        lc = None if self.lc is None else _lc_add(self.lc, o.lc, self.p, -1)
        val = None if self.val is None else (self.val - o.val) % self.p
        return Var(lc, val, self.p)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return self * -1

    def __mul__(self, k):
        if isinstance(k, Var):
            raise TypeError("use Builder.mul for products of two variables")
        k %= self.p
        lc = None if self.lc is None else ({i: c * k % self.p for i, c in self.lc.items()} if k else {})
        val = None if self.val is None else self.val * k % self.p
        return Var(lc, val, self.p)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Var(val={self.val}, terms={None if self.lc is None else len(self.lc)})"


class Builder:
    def __init__(self, p, *, synthesize=True, assign=True):
        self.p = p
        self.synthesize = synthesize
        self.assign = assign
        self.num_vars = 1
        self.values = [1] if assign else None
        self.constraints = [] if synthesize else None
        self.public_indices = []

    # -- variables -------------------------------------------------------
    def _wire(self, idx, val):
        return Var({idx: 1} if self.synthesize else None, val if self.assign else None, self.p)

    @property
    def one(self):
        return Var({0: 1} if self.synthesize else None, 1 if self.assign else None, self.p)

    def const(self, c):
        c %= self.p
        lc = ({0: c} if c else {}) if self.synthesize else None
        return Var(lc, c if self.assign else None, self.p)

    def alloc(self, value=None, public=False):
        idx = self.num_vars
        self.num_vars += 1
        if self.assign:
            self.values.append(None if value is None else value % self.p)
        if public:
            self.public_indices.append(idx)
        return self._wire(idx, self.values[idx] if self.assign else None)

    def alloc_many(self, count, values=None, public=False):
        start = self.num_vars
        self.num_vars += count
        if public:
            self.public_indices.extend(range(start, start + count))
        if self.assign:
            self.values.extend(v % self.p for v in values)
            return [self._wire(start + i, self.values[start + i]) for i in range(count)]
        return [self._wire(start + i, None) for i in range(count)]

    def alloc_output(self, public=True):
        """Reserve a wire whose value is filled in later with ``set_value``."""
        idx = self.num_vars
        return idx, self.alloc(None, public=public)

    def set_value(self, idx, value):
        if self.assign:
            self.values[idx] = value % self.p

    # -- constraints -----------------------------------------------------
    def enforce(self, a, b, c):
        if self.synthesize:
            self.constraints.append((a.lc, b.lc, c.lc))

    def enforce_equal(self, lhs, rhs):
        if self.synthesize:
            self.constraints.append((lhs.lc, {0: 1}, rhs.lc))

    def mul(self, a, b):
        out = self.alloc(a.val * b.val if self.assign else None)
        self.enforce(a, b, out)
        return out

    def materialize(self, x):
        """Replace a (possibly long) linear combination by a fresh wire."""
        out = self.alloc(x.val if self.assign else None)
        self.enforce_equal(out, x)
        return out

    def linear_sum(self, terms):
        """Sum of ``(coeff, var)`` pairs built in one pass."""
        p = self.p
        lc = {} if self.synthesize else None
        val = 0 if self.assign else None
        for k, v in terms:
            if self.synthesize:
                for i, c in v.lc.items():
                    t = (lc.get(i, 0) + k * c) % p
                    if t:
                        lc[i] = t
                    else:
                        lc.pop(i, None)
            if self.assign:
                val = (val + k * v.val) % p
        return Var(lc, val, p)

    def finish(self, params_digest="", num_range=0):
        cs = None
        if self.synthesize:
            cs = ConstraintSystem(
                p=self.p,
                num_vars=self.num_vars,
                constraints=self.constraints,
                public_indices=tuple(self.public_indices),
                params_digest=params_digest,
                num_range=num_range,
            )
        w = Witness(tuple(self.values)) if self.assign else None
        return cs, w


@dataclass
class ConstraintSystem:
    p: int
    num_vars: int
    constraints: list
    public_indices: tuple
    params_digest: str = ""
    # leading public wires that are inputs; the remaining public wires are outputs
    num_range: int = 0
    _compiled: list = field(default=None, repr=False, compare=False)
    _digest: str = field(default=None, repr=False, compare=False)
    _well_formed: bool = field(default=False, repr=False, compare=False)

    def __len__(self):
        return len(self.constraints)

    def canonical_rows(self):
        for a, b, c in self.constraints:
            yield tuple(tuple(sorted(lc.items())) for lc in (a, b, c))

    def __eq__(self, other):
        if not isinstance(other, ConstraintSystem):
            return NotImplemented
        return (
            self.p == other.p
            and self.num_vars == other.num_vars
            and self.public_indices == other.public_indices
            and self.params_digest == other.params_digest
            and self.num_range == other.num_range
            and list(self.canonical_rows()) == list(other.canonical_rows())
        )

    def compiled(self):
        """Flattened (indices, centered coefficients, row starts) per matrix."""
        if self._compiled is None:
            p, half = self.p, self.p // 2
            mats = []
            for k in range(3):
                idx, co, starts = [], [], []
                for trip in self.constraints:
                    starts.append(len(idx))
                    lc = trip[k] or {0: 0}
                    idx.extend(lc)
                    co.extend(c - p if c > half else c for c in lc.values())
                mats.append((np.array(idx, dtype=np.int64), np.array(co, dtype=object), np.array(starts, dtype=np.int64)))
            self._compiled = mats
        return self._compiled

    def unsatisfied(self, witness, limit=None):
        w = witness.assignment if isinstance(witness, Witness) else witness
        if len(w) != self.num_vars:
            raise InputShapeError(f"witness has {len(w)} wires, system has {self.num_vars}")
        if not self.constraints:
            return []
        wv = np.array(w, dtype=object)
        # object arrays keep exact integer arithmetic; reduceat sums each row
        a, b, c = (np.add.reduceat(wv[idx] * co, starts) for idx, co, starts in self.compiled())
        bad = np.flatnonzero((a * b - c) % self.p).tolist()
        return bad if limit is None else bad[:limit]

    def check_well_formed(self):
        """Raise InputShapeError unless every index and coefficient is in bounds."""
        if self._well_formed:
            return
        if self.num_vars < 1 or not self.public_indices:
            raise InputShapeError("constraint system has no public wires")
        if any(not 0 < i < self.num_vars for i in self.public_indices):
            raise InputShapeError("public index out of bounds")
        n, p = self.num_vars, self.p
        for row in self.constraints:
            if len(row) != 3:
                raise InputShapeError("constraint rows must be (A, B, C) triples")
            for lc in row:
                if lc and (min(lc) < 0 or max(lc) >= n or not all(0 <= c < p for c in lc.values())):
                    raise InputShapeError("linear combination out of bounds")
        self._well_formed = True

    # -- serialization -----------------------------------------------------
    def to_bytes(self):
        header = json.dumps(
            {
                "format": "verexp-r1cs",
                "num_range": self.num_range,
                "params_digest": self.params_digest,
                "p": str(self.p),
            },
            sort_keys=True,
        ).encode()
        out = [CS_MAGIC, struct.pack("<HI", FORMAT_VERSION, len(header)), header]
        out.append(struct.pack("<III", self.num_vars, len(self.constraints), len(self.public_indices)))
        out.append(struct.pack(f"<{len(self.public_indices)}I", *self.public_indices))
        for row in self.canonical_rows():
            for lc in row:
                out.append(struct.pack("<I", len(lc)))
                for i, c in lc:
                    out.append(struct.pack("<I", i))
                    out.append(c.to_bytes(32, "little"))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data):
        view = memoryview(data)
        if bytes(view[:4]) != CS_MAGIC:
            raise InputShapeError("not a constraint-system container")
        version, hlen = struct.unpack_from("<HI", view, 4)
        if version != FORMAT_VERSION:
            raise InputShapeError(f"unsupported container version {version}")
        pos = 10
        header = json.loads(bytes(view[pos : pos + hlen]))
        pos += hlen
        num_vars, ncons, npub = struct.unpack_from("<III", view, pos)
        pos += 12
        public = struct.unpack_from(f"<{npub}I", view, pos)
        pos += 4 * npub
        constraints = []
        for _ in range(ncons):
            trip = []
            for _ in range(3):
                (k,) = struct.unpack_from("<I", view, pos)
                pos += 4
                lc = {}
                for _ in range(k):
                    (i,) = struct.unpack_from("<I", view, pos)
                    lc[i] = int.from_bytes(view[pos + 4 : pos + 36], "little")
                    pos += 36
                trip.append(lc)
            constraints.append(tuple(trip))
        if pos != len(view):
            raise InputShapeError("trailing bytes in constraint-system container")
        return cls(
            p=int(header["p"]),
            num_vars=num_vars,
            constraints=constraints,
            public_indices=tuple(public),
            params_digest=header["params_digest"],
            num_range=header.get("num_range", 0),
        )

    def digest(self):
        if self._digest is None:
            self._digest = hashlib.sha256(self.to_bytes()).hexdigest()
        return self._digest


@dataclass(frozen=True)
class Witness:
    assignment: tuple

    def __len__(self):
        return len(self.assignment)

    def __getitem__(self, i):
        return self.assignment[i]

    def replace(self, index, value):
        a = list(self.assignment)
        a[index] = value
        return Witness(tuple(a))

    def to_bytes(self, params_digest=""):
        header = json.dumps({"format": "verexp-witness", "params_digest": params_digest}, sort_keys=True).encode()
        body = b"".join(v.to_bytes(32, "little") for v in self.assignment)
        return WITNESS_MAGIC + struct.pack("<HII", FORMAT_VERSION, len(header), len(self.assignment)) + header + body

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != WITNESS_MAGIC:
            raise InputShapeError("not a witness container")
        version, hlen, count = struct.unpack_from("<HII", data, 4)
        if version != FORMAT_VERSION:
            raise InputShapeError(f"unsupported container version {version}")
        pos = 14 + hlen
        if len(data) != pos + 32 * count:
            raise InputShapeError("witness container length mismatch")
        vals = tuple(int.from_bytes(data[pos + 32 * i : pos + 32 * (i + 1)], "little") for i in range(count))
        return cls(vals)


def check_satisfied(cs, witness):
    """True iff every constraint of ``cs`` holds under ``witness``."""
    return not cs.unsatisfied(witness, limit=1)
