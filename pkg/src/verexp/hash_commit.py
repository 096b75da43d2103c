"""Poseidon-style algebraic sponge and the hash commitment ``Com(x, r) = H(x || r)``.

Instance layout (width 3, rate 2, capacity 1):

* state[0] is the capacity lane and is initialised with the input length,
  which separates inputs of different lengths without a padding rule;
* inputs are absorbed two at a time into state[1], state[2] (a short final
  block is zero-filled) and the permutation runs after every block;
* the digest is state[1] after the last permutation.

Round constants are expanded in counter mode:
``SHAKE256(b"verexp/poseidon-rc" || hash_id || ":" || decimal(p) || ":" || u64le(i))``
read as 64 little-endian bytes and reduced mod p.  The MDS matrix is the
Cauchy matrix ``M[i][j] = 1 / (i + width + j)``.  None of these choices is
normative; they are pinned by ``hash_id`` so all parties agree.
"""

import hashlib
from dataclasses import dataclass
from functools import lru_cache

from .errors import InputShapeError, ParameterError


@dataclass(frozen=True)
class HashSpec:
    width: int
    rate: int
    full_rounds: int
    partial_rounds: int
    alpha: int


DEFAULT_HASH_ID = "poseidon-x5-t3-f8-p57-v1"
HASH_SPECS = {
    DEFAULT_HASH_ID: HashSpec(width=3, rate=2, full_rounds=8, partial_rounds=57, alpha=5),
}


def _expand_constant(hash_id, p, i):
    seed = b"verexp/poseidon-rc" + hash_id.encode() + b":" + str(p).encode() + b":" + i.to_bytes(8, "little")
    return int.from_bytes(hashlib.shake_256(seed).digest(64), "little") % p


@dataclass(frozen=True)
class HashInstance:
    hash_id: str
    p: int
    spec: HashSpec
    round_constants: tuple  # one tuple of `width` constants per round
    mds: tuple

    @property
    def rounds(self):
        return self.spec.full_rounds + self.spec.partial_rounds

    def is_full_round(self, r):
        half = self.spec.full_rounds // 2
        return r < half or r >= half + self.spec.partial_rounds

    def descriptor(self):
        h = hashlib.sha256()
        for row in self.round_constants:
            for c in row:
                h.update(c.to_bytes(32, "little"))
        return {
            "alpha": self.spec.alpha,
            "constants_sha256": h.hexdigest(),
            "constant_seed": "verexp/poseidon-rc",
            "full_rounds": self.spec.full_rounds,
            "hash_id": self.hash_id,
            "partial_rounds": self.spec.partial_rounds,
            "rate": self.spec.rate,
            "width": self.spec.width,
        }

    def permute(self, state):
        p, alpha, t = self.p, self.spec.alpha, self.spec.width
        state = list(state)
        for r in range(self.rounds):
            rc = self.round_constants[r]
            state = [(s + c) % p for s, c in zip(state, rc)]
            if self.is_full_round(r):
                state = [pow(s, alpha, p) for s in state]
            else:
                state[0] = pow(state[0], alpha, p)
            state = [sum(m * s for m, s in zip(row, state)) % p for row in self.mds]
        assert len(state) == t
        return state

    def sponge(self, elems):
        if not elems:
            raise InputShapeError("sponge_hash needs at least one element")
        p, rate = self.p, self.spec.rate
        state = [len(elems) % p] + [0] * rate
        for start in range(0, len(elems), rate):
            block = list(elems[start : start + rate])
            block += [0] * (rate - len(block))
            for i, v in enumerate(block):
                state[1 + i] = (state[1 + i] + v % p) % p
            state = self.permute(state)
        return state[1]


@lru_cache(maxsize=None)
def hash_instance(hash_id=DEFAULT_HASH_ID, p=None):
    if p is None:
        from .params import DEFAULT_P

        p = DEFAULT_P
    spec = HASH_SPECS.get(hash_id)
    if spec is None:
        raise ParameterError(f"unknown hash_id {hash_id!r}")
    t = spec.width
    if p <= 2 * t:
        raise ParameterError("field too small for the MDS construction")
    rounds = spec.full_rounds + spec.partial_rounds
    rc = tuple(
        tuple(_expand_constant(hash_id, p, r * t + j) for j in range(t)) for r in range(rounds)
    )
    mds = tuple(tuple(pow(i + t + j, -1, p) for j in range(t)) for i in range(t))
    return HashInstance(hash_id=hash_id, p=p, spec=spec, round_constants=rc, mds=mds)


@dataclass(frozen=True)
class Commitment:
    value: int

    def __str__(self):
        return str(self.value)


def sponge_hash(elems, instance=None):
    instance = instance or hash_instance()
    for e in elems:
        if not 0 <= e < instance.p:
            raise InputShapeError(f"element {e} is not reduced mod p")
    return instance.sponge(list(elems))


def commit(x, r, instance=None):
    instance = instance or hash_instance()
    return Commitment(sponge_hash([x % instance.p, r % instance.p], instance))


def verify_commit(c, x, r, instance=None):
    value = c.value if isinstance(c, Commitment) else int(c)
    return commit(x, r, instance).value == value
