"""Protocol parameters and the integer lookup table of exponential weights."""

import hashlib
import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property, lru_cache

from sympy import isprime

from .errors import ParameterError
from .exactmath import Epsilon, certified_ceil, refine
from .hash_commit import DEFAULT_HASH_ID, HASH_SPECS

# BN254 scalar field order
DEFAULT_P = 21888242871839275222246405745257275088548364400416034343698204186575808495617
DEFAULT_L = 128
DEFAULT_BIT_WIDTH = 64
METHODS = ("set0", "setk")
# s_{n-1} / p must not exceed this for the field-sum randomness to be near uniform
SEPARATION_BOUND = Fraction(1, 2**40)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data):
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def k_of_epsilon(epsilon):
    """Smallest tail value ``ceil(1/(exp(eps/2)-1))`` keeping adjacent ratios bounded."""
    eps = Epsilon.parse(epsilon)

    def bounds(prec):
        lo, hi = eps.base_bounds(prec)
        if lo <= 1:
            # not yet separated from 1: force a refinement
            return Fraction(0), Fraction(10**9)
        return 1 / (hi - 1), 1 / (lo - 1)

    return max(1, certified_ceil(bounds))


@dataclass(frozen=True)
class LookupTable:
    entries: tuple
    tail: int
    k: int
    method: str
    epsilon: str

    @property
    def l(self):
        return len(self.entries)

    def __getitem__(self, i):
        if i < 0:
            raise IndexError(i)
        return self.entries[i] if i < len(self.entries) else self.tail

    def to_dict(self):
        return {
            "digest": self.digest,
            "entries": [str(e) for e in self.entries],
            "epsilon": self.epsilon,
            "k": str(self.k),
            "l": self.l,
            "method": self.method,
            "tail": str(self.tail),
        }

    @cached_property
    def digest(self):
        body = {
            "entries": [str(e) for e in self.entries],
            "epsilon": self.epsilon,
            "method": self.method,
            "tail": str(self.tail),
        }
        return sha256_hex(canonical_json(body))

    @classmethod
    def from_dict(cls, d):
        table = cls(
            entries=tuple(int(e) for e in d["entries"]),
            tail=int(d["tail"]),
            k=int(d["k"]),
            method=d["method"],
            epsilon=d["epsilon"],
        )
        if "digest" in d and d["digest"] != table.digest:
            raise ParameterError("table digest does not match its contents")
        return table


def build_table(epsilon, l, method):
    """Build ``T`` backward from ``T[l-1] = k`` with ``T[i] = floor(exp(eps/2) * T[i+1])``."""
    return _build_table(Epsilon.parse(epsilon), l, method)


@lru_cache(maxsize=256)
def _build_table(eps, l, method):
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}")
    if not isinstance(l, int) or l < 2:
        raise ParameterError(f"table length must be an integer >= 2, got {l!r}")
    k = k_of_epsilon(eps)
    exact = eps.exact_base
    if exact is not None:
        entries = [k]
        for _ in range(l - 1):
            entries.append(math.floor(exact * entries[-1]))
    else:
        entries = refine(lambda prec: backward_entries(eps.base_bounds(prec), k, l), lambda e: e)
    entries.reverse()
    return LookupTable(
        entries=tuple(entries),
        tail=0 if method == "set0" else k,
        k=k,
        method=method,
        epsilon=eps.text,
    )


def backward_entries(base, k, l):
    """Entries from bounds on the base, or None if some floor is not yet certain."""
    lo, hi = base
    entries = [k]
    for _ in range(l - 1):
        t = entries[-1]
        f = math.floor(lo * t)
        if f != math.floor(hi * t):
            return None
        entries.append(f)
    return entries


def parse_range(spec):
    """``"A:B"`` expands to the consecutive integers ``A..B`` inclusive."""
    if isinstance(spec, (list, tuple)):
        return [int(v) for v in spec]
    text = str(spec).strip()
    if ":" in text:
        a, b = text.split(":", 1)
        a, b = int(a), int(b)
        if b < a:
            raise ParameterError(f"empty range {spec!r}")
        return list(range(a, b + 1))
    return [int(v) for v in text.split(",") if v.strip()]


@dataclass(frozen=True)
class ProtocolParams:
    range: tuple
    m: int
    epsilon: str = "0.5"
    method: str = "set0"
    l: int = DEFAULT_L
    p: int = DEFAULT_P
    bit_width: int = DEFAULT_BIT_WIDTH
    hash_id: str = DEFAULT_HASH_ID

    def __post_init__(self):
        object.__setattr__(self, "range", tuple(int(v) for v in self.range))
        object.__setattr__(self, "epsilon", str(self.epsilon).strip())

    @property
    def n(self):
        return len(self.range)

    @property
    def center(self):
        # integral center for the median utility; see README "Utility center"
        return (self.m - 1) // 2

    @cached_property
    def eps(self):
        return Epsilon.parse(self.epsilon)

    @cached_property
    def table(self):
        return build_table(self.eps, self.l, self.method)

    @property
    def weight_width(self):
        """Bit width of comparators over cumulative weights (covers ``n * T[0]``)."""
        return max(self.bit_width, (self.n * self.table.entries[0]).bit_length())

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {
            "bit_width": self.bit_width,
            "epsilon": self.epsilon,
            "hash_id": self.hash_id,
            "l": self.l,
            "m": self.m,
            "method": self.method,
            "p": str(self.p),
            "range": [str(v) for v in self.range],
        }

    def to_json(self, indent=None):
        if indent is None:
            return canonical_json(self.to_dict())
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                range=tuple(int(v) for v in d["range"]),
                m=int(d["m"]),
                epsilon=str(d["epsilon"]),
                method=d["method"],
                l=int(d["l"]),
                p=int(d["p"]),
                bit_width=int(d.get("bit_width", DEFAULT_BIT_WIDTH)),
                hash_id=d.get("hash_id", DEFAULT_HASH_ID),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed params document: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @cached_property
    def digest(self):
        """Binds params, table, hash instance and the public-wire layout."""
        from .hash_commit import hash_instance

        doc = {
            "hash": hash_instance(self.hash_id, self.p).descriptor(),
            "params": self.to_dict(),
            "public_layout": "range|med|commitments",
            "table": self.table.digest,
        }
        return sha256_hex(canonical_json(doc))


def validate_params(params):
    """Return the list of violated invariants; an empty list means valid."""
    problems = []
    B = params.bit_width
    if not isinstance(B, int) or B < 1:
        problems.append("bit width must be a positive integer")
        B = 1
    p = params.p
    if p < 2 or not isprime(p):
        problems.append("p is not prime")
    if p <= 2 ** (2 * B):
        problems.append("p must exceed 2^(2B)")
    if p.bit_length() > 256:
        problems.append("p exceeds 256 bits (field elements serialize to 32 bytes)")
    spec = HASH_SPECS.get(params.hash_id)
    if spec is None:
        problems.append(f"unknown hash_id {params.hash_id!r}")
    elif p > 2 and (p - 1) % spec.alpha == 0:
        problems.append("hash s-box exponent is not coprime to p-1")

    rng = params.range
    if len(rng) < 2:
        problems.append("range must contain at least 2 elements (n >= 2)")
    if any(b <= a for a, b in zip(rng, rng[1:])):
        problems.append("range not strictly increasing")
    if any(v < 0 or v >= 2**B for v in rng):
        problems.append("range value does not fit in B bits")
    if not isinstance(params.m, int) or params.m < 1:
        problems.append("m must be >= 1")
    elif params.m >= 2**B:
        problems.append("m does not fit in B bits")
    if params.method not in METHODS:
        problems.append(f"unknown method {params.method!r}")
    if not isinstance(params.l, int) or params.l < 2:
        problems.append("l must be >= 2")
    elif params.l - 1 >= 2**B:
        problems.append("l - 1 does not fit in B bits")

    try:
        eps = Epsilon.parse(params.epsilon)
    except ParameterError as exc:
        problems.append(f"invalid epsilon: {exc}")
        return problems
    if params.method not in METHODS or not isinstance(params.l, int) or params.l < 2:
        return problems

    t0 = build_table(eps, params.l, params.method).entries[0]
    total = len(rng) * t0
    if total >= p:
        problems.append("n*T[0] >= p: cumulative sums would wrap the field")
    if Fraction(total, p) > SEPARATION_BOUND:
        problems.append("n*T[0]/p exceeds 2^-40: s_(n-1) << p separation violated")
    width = max(B, total.bit_length())
    if width + 3 > p.bit_length():
        problems.append("cumulative-weight width leaves no room for modular reduction")
    return problems


@lru_cache(maxsize=256)
def _cached_problems(params):
    return tuple(validate_params(params))


def require_valid(params):
    problems = _cached_problems(params)
    if problems:
        raise ParameterError("invalid protocol parameters: " + "; ".join(problems))
    return params
