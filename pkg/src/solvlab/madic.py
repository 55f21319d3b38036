"""Finite-precision m-adic numbers.

A value is stored as ``s * m**val`` with ``s`` an integer not divisible by
``m`` (or ``s == 0``) and an absolute precision ``end``: the digits at
positions ``>= end`` are unknown.  ``end is None`` marks an exact value whose
expansion is finite.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import PrecisionExhausted

DEFAULT_PRECISION = 64


def _valuation(x: int, m: int) -> int:
    v = 0
    while x % m == 0:
        x //= m
        v += 1
    return v


class MAdic:
    __slots__ = ("m", "s", "val", "end")

    def __init__(self, m, s=0, val=0, end=None):
        if m < 2:
            raise ValueError("base must be >= 2")
        if s < 0:
            if end is None:
                raise ValueError("negative integers have no finite m-adic expansion")
            s %= m ** (end - val)
        if end is not None:
            if end < val:
                raise ValueError("precision window ends before valuation")
            s %= m ** (end - val)
        if s == 0:
            val = end if end is not None else 0
        else:
            k = _valuation(s, m)
            s //= m ** k
            val += k
        self.m = m
        self.s = s
        self.val = val
        self.end = end

    # -- construction -----------------------------------------------------
    @classmethod
    def from_int(cls, m, n, precision=None):
        """Exact for n >= 0; negative n is truncated to ``precision`` digits."""
        if n < 0:
            return cls(m, n, 0, precision if precision is not None else DEFAULT_PRECISION)
        return cls(m, n, 0, None if precision is None else precision)

    @classmethod
    def from_digits(cls, m, digits, val=0, exact=True):
        """Digits least-significant first, occupying positions val, val+1, ..."""
        digits = list(digits)
        if any(not 0 <= d < m for d in digits):
            raise ValueError(f"digits must lie in [0, {m})")
        s = 0
        for d in reversed(digits):
            s = s * m + d
        return cls(m, s, val, None if exact else val + len(digits))

    @classmethod
    def from_fraction(cls, m, q, precision=DEFAULT_PRECISION):
        """Expansion of a rational whose denominator is a power of m times a unit mod m."""
        q = Fraction(q)
        if q == 0:
            return cls(m, 0, 0, None)
        num, den = q.numerator, q.denominator
        val = 0
        while den % m == 0:
            den //= m
            val -= 1
        if den == 1 and num >= 0:
            return cls(m, num, val, None)
        end = val + precision
        mod = m ** precision
        try:
            inv = pow(den, -1, mod)
        except ValueError:
            raise ValueError(f"denominator {q.denominator} is not invertible in Q_{m}") from None
        return cls(m, (num * inv) % mod, val, end)

    @classmethod
    def parse(cls, m, text):
        """Literal ``digits@val`` (least-significant digit first); a trailing
        ``...`` marks the digits as a truncated, non-exact expansion."""
        text = text.strip()
        exact = True
        for suffix in ("...", "…"):
            if text.endswith(suffix):
                text = text[: -len(suffix)]
                exact = False
        if "@" in text:
            body, v = text.split("@", 1)
            val = int(v)
        else:
            body, val = text, 0
        if body.startswith("0.") and "@" not in text:
            body = body[2:]
        digits = [int(c, 36) for c in body]
        return cls.from_digits(m, digits, val, exact=exact)

    # -- inspection -------------------------------------------------------
    @property
    def exact(self):
        return self.end is None

    @property
    def precision(self):
        return None if self.end is None else self.end - self.val

    def is_zero(self):
        return self.s == 0

    def digit(self, pos):
        if self.end is not None and pos >= self.end:
            raise PrecisionExhausted(f"digit {pos} lies beyond the precision window")
        if self.s == 0 or pos < self.val:
            return 0
        return (self.s // self.m ** (pos - self.val)) % self.m

    def digits(self, lo=None, hi=None):
        """Digits on positions [lo, hi), default the stored window."""
        lo = self.val if lo is None else lo
        if hi is None:
            hi = self.end if self.end is not None else self.val + len(self._raw_digits())
        return [self.digit(p) for p in range(lo, hi)]

    def _raw_digits(self):
        out, s = [], self.s
        while s:
            s, d = divmod(s, self.m)
            out.append(d)
        return out

    def truncate(self, end):
        """Forget all digits at positions >= end."""
        if self.end is not None and end > self.end:
            raise PrecisionExhausted("cannot extend precision by truncation")
        if end <= self.val:
            return MAdic(self.m, 0, end, end)
        return MAdic(self.m, self.s % self.m ** (end - self.val), self.val, end)

    def scale(self, k):
        """Multiply by m**k (exact shift)."""
        end = None if self.end is None else self.end + k
        return MAdic(self.m, self.s, self.val + k, end)

    # -- arithmetic -------------------------------------------------------
    def _aligned(self, other):
        if not isinstance(other, MAdic) or other.m != self.m:
            raise ValueError("m-adic operands must share the base")
        lo = min(self.val, other.val)
        ends = [e for e in (self.end, other.end) if e is not None]
        end = min(ends) if ends else None
        x = self.s * self.m ** (self.val - lo) if self.s else 0
        y = other.s * self.m ** (other.val - lo) if other.s else 0
        return lo, end, x, y

    def __add__(self, other):
        lo, end, x, y = self._aligned(other)
        return MAdic(self.m, x + y, lo, end)

    def __sub__(self, other):
        lo, end, x, y = self._aligned(other)
        if end is None and x < y:
            end = lo + DEFAULT_PRECISION
        return MAdic(self.m, x - y, lo, end)

    def __neg__(self):
        return MAdic(self.m, 0, 0, None) - self

    def diff_valuation(self, other):
        """Valuation of self - other; None when provably equal."""
        lo, end, x, y = self._aligned(other)
        if end is None:
            if x == y:
                return None
            return lo + _valuation(abs(x - y), self.m)
        diff = (x - y) % self.m ** (end - lo) if end > lo else 0
        if diff == 0:
            raise PrecisionExhausted("values agree on the whole precision window")
        return lo + _valuation(diff, self.m)

    def same_window_equal(self, other):
        """True when the two agree on every digit both know."""
        try:
            return self.diff_valuation(other) is None
        except PrecisionExhausted:
            return True

    def __eq__(self, other):
        if not isinstance(other, MAdic):
            return NotImplemented
        return (self.m, self.s, self.val, self.end) == (other.m, other.s, other.val, other.end)

    def __hash__(self):
        return hash((self.m, self.s, self.val, self.end))

    def __repr__(self):
        body = "".join("0123456789abcdefghijklmnopqrstuvwxyz"[d] for d in self.digits())
        tail = "" if self.exact else "..."
        return f"MAdic({self.m}, {body or '0'}@{self.val}{tail})"

    def to_literal(self):
        body = "".join("0123456789abcdefghijklmnopqrstuvwxyz"[d] for d in self.digits())
        return f"{body or '0'}@{self.val}" + ("" if self.exact else "...")
