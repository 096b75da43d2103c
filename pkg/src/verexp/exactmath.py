"""Exact privacy-budget values and certified real-number bounds.

The budget is carried as text and never converted to a float.  Two forms
are accepted:

* a decimal or rational literal (``"0.5"``, ``"1"``, ``"3/2"``);
* a logarithm ``"c*ln(q)"`` / ``"ln(q)"`` with rational ``c`` and ``q``,
  so budgets such as ``"2*ln(2)"`` can be expressed exactly.

Every real quantity used downstream is a power of the base
``a = exp(eps/2)``.  When ``a`` is rational (``"2*ln(2)"`` gives ``a = 2``)
it is returned exactly; otherwise bounds come from mpmath interval
arithmetic with outward rounding and are handed back as ``Fraction`` pairs.
"""

import math
import re
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from mpmath import iv
from mpmath.libmp import to_rational
from sympy import integer_nthroot

from .errors import AuditInconclusiveError, ParameterError

DEFAULT_PREC = 160
MAX_PREC = 1 << 15

_LOG_FORM = re.compile(
    r"^(?:(?P<coef>[0-9]+(?:\.[0-9]+)?(?:/[0-9]+)?)\s*\*\s*)?(?:ln|log)\(\s*(?P<arg>[0-9]+(?:\.[0-9]+)?(?:/[0-9]+)?)\s*\)$"
)


@contextmanager
def interval_precision(prec):
    old = iv.prec
    iv.prec = prec
    try:
        yield
    finally:
        iv.prec = old


def _bounds(x):
    lo, hi = x._mpi_
    return tuple(Fraction(*map(int, to_rational(v))) for v in (lo, hi))


def _iv_fraction(q):
    return iv.mpf(q.numerator) / iv.mpf(q.denominator)


@dataclass(frozen=True)
class Epsilon:
    text: str
    coef: Fraction
    log_arg: Fraction | None = None

    @classmethod
    def parse(cls, text):
        if isinstance(text, Epsilon):
            return text
        s = str(text).strip().replace(" ", "")
        m = _LOG_FORM.match(s)
        try:
            if m:
                coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
                arg = Fraction(m.group("arg"))
                if arg <= 1:
                    raise ParameterError(f"log argument must exceed 1: {text!r}")
                if abs(coef.numerator) > 4096:
                    raise ParameterError(f"log coefficient too large: {text!r}")
                eps = cls(s, coef, arg)
            else:
                eps = cls(s, Fraction(s))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"unparsable epsilon {text!r}") from exc
        if eps.coef <= 0:
            raise ParameterError(f"epsilon must be positive, got {text!r}")
        return eps

    def __str__(self):
        return self.text

    @cached_property
    def exact_base(self):
        """``exp(eps/2)`` as a Fraction when it is rational, else ``None``."""
        if self.log_arg is None:
            # exp of a nonzero rational is transcendental
            return None
        u, v = self.coef.numerator, self.coef.denominator
        x = self.log_arg ** u
        num, ok_n = integer_nthroot(x.numerator, 2 * v)
        den, ok_d = integer_nthroot(x.denominator, 2 * v)
        if ok_n and ok_d:
            return Fraction(int(num), int(den))
        return None

    def _interval(self):
        eps = _iv_fraction(self.coef)
        if self.log_arg is not None:
            eps = eps * iv.log(_iv_fraction(self.log_arg))
        return eps

    def base_power_bounds(self, j, prec=DEFAULT_PREC):
        """Bounds ``(lo, hi)`` on ``exp(j*eps/2)`` for integer ``j``."""
        if self.exact_base is not None:
            v = self.exact_base ** j
            return v, v
        with interval_precision(prec):
            return _bounds(iv.exp(self._interval() * j / 2))

    def base_bounds(self, prec=DEFAULT_PREC):
        return self.base_power_bounds(1, prec)

    def approx(self):
        lo, hi = self.value_bounds()
        return float((lo + hi) / 2)

    def value_bounds(self, prec=DEFAULT_PREC):
        if self.log_arg is None:
            return self.coef, self.coef
        with interval_precision(prec):
            return _bounds(self._interval())


def refine(fn, decide, start_prec=DEFAULT_PREC, max_prec=MAX_PREC):
    """Evaluate ``decide(fn(prec))`` at growing precision until it is not None."""
    prec = start_prec
    while prec <= max_prec:
        out = decide(fn(prec))
        if out is not None:
            return out
        prec *= 2
    raise AuditInconclusiveError("interval bounds did not separate at maximum precision")


def certified_floor(fn, start_prec=DEFAULT_PREC):
    """Floor of a real given by ``fn(prec) -> (lo, hi)``; exact integers are fine."""

    def decide(b):
        lo, hi = b
        f = math.floor(lo)
        return f if f == math.floor(hi) else None

    return refine(fn, decide, start_prec)


def certified_ceil(fn, start_prec=DEFAULT_PREC):
    def decide(b):
        lo, hi = b
        c = math.ceil(lo)
        return c if c == math.ceil(hi) else None

    return refine(fn, decide, start_prec)


def certify_le(x, bounds, what="comparison"):
    """Decide ``x <= y`` for rational ``x`` and real ``y`` known only by bounds.

    Raises AuditInconclusiveError when ``x`` falls inside the interval.
    """
    lo, hi = bounds
    if x <= lo:
        return True
    if x > hi:
        return False
    raise AuditInconclusiveError(f"{what}: {x} lies inside [{float(lo)}, {float(hi)}]")


def certify_lt(x, bounds, what="comparison"):
    lo, hi = bounds
    if x < lo:
        return True
    if x >= hi:
        return False
    raise AuditInconclusiveError(f"{what}: {x} lies inside [{float(lo)}, {float(hi)}]")


def fraction_str(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


class CertifiedReal:
    """A real number known through ``fn(prec) -> (lo, hi)``, refined on demand."""

    def __init__(self, fn, start_prec=DEFAULT_PREC):
        self.fn = fn
        self.prec = start_prec
        self.lo, self.hi = fn(start_prec)

    def _refine(self):
        self.prec *= 2
        if self.prec > MAX_PREC:
            raise AuditInconclusiveError("interval bounds did not separate at maximum precision")
        self.lo, self.hi = self.fn(self.prec)

    def compare(self, x):
        """Sign of ``x - value`` for a rational ``x``."""
        while True:
            if x < self.lo:
                return -1
            if x > self.hi:
                return 1
            if self.lo == self.hi == x:
                return 0
            self._refine()

    def bounds(self):
        return self.lo, self.hi


def certified_le(lhs, rhs, start_prec=DEFAULT_PREC):
    """Decide ``lhs <= rhs`` for two reals given as ``fn(prec) -> (lo, hi)``."""

    def decide(b):
        (a_lo, a_hi), (b_lo, b_hi) = b
        if a_hi <= b_lo:
            return True
        if a_lo > b_hi:
            return False
        return None

    return refine(lambda prec: (lhs(prec), rhs(prec)), decide, start_prec)
