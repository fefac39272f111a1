"""Discretely valued fields at a fixed working precision.

Two backends share one scalar type:

* ``Qp(p)``        -- the p-adic numbers, uniformizer p;
* ``LaurentField(q)`` -- formal Laurent series F_q((T)), uniformizer T,
  with F_q arithmetic tables for prime powers q <= 256.

A scalar is pi^v * u with v an exact integer and u a unit known to ``prec``
significant digits (at most the field's working precision N).  Additive
cancellation past the tracked digits yields a value flagged
precision-exhausted instead of a silent wrong valuation; exact zero is a
separate flag.  Scalars are immutable.

Literal grammar (used by the CLI and group files):

    INT                          plain integer, e.g. ``-7``
    [v; d0 d1 d2 ...]            digit vector: pi^v * sum d_i pi^i (exact)
    5adic:3*5^0+1*5^2            p-adic digit sum, digits in 0..p-1
    F3[[T]]:2+T^1+2*T^3          Laurent digit sum, coefficients 0..q-1
                                 (codes index the F_q table when q = p^n)

Exponents in Laurent sums may be negative.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction

from .errors import (
    DivisionByZero,
    InputError,
    NegativeValuation,
    NotASquare,
    PrecisionExhausted,
    ResidueChar2Unsupported,
)

DEFAULT_PRECISION = 32
INF = math.inf

_SLOT = 4  # bytes per packed coefficient for prime-q Laurent convolution


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _factor_prime_power(q):
    """q -> (p, n) with q = p^n, or raise."""
    for p in range(2, q + 1):
        if _is_prime(p) and q % p == 0:
            n = 0
            m = q
            while m % p == 0:
                m //= p
                n += 1
            if m != 1:
                raise InputError("residue order %d is not a prime power" % q)
            return p, n
    raise InputError("bad residue order %d" % q)


class GFTable:
    """Arithmetic tables for F_q, q = p^n with n >= 2.

    Elements are codes 0..q-1; the code's base-p digits are the coefficients
    of the class of a polynomial modulo a fixed primitive polynomial (the
    lexicographically first one).  Multiplication goes through exp/log tables
    relative to the class of X, which is a generator for that choice.
    """

    def __init__(self, p, n):
        self.p, self.n, self.q = p, n, p ** n
        self.modulus = self._find_primitive_poly()
        q = self.q
        self.exp = [0] * (2 * (q - 1))
        self.log = [0] * q
        x = 1
        for i in range(q - 1):
            self.exp[i] = x
            self.exp[i + q - 1] = x
            self.log[x] = i
            x = self._mul_by_x(x)
        if x != 1:
            raise AssertionError("primitive polynomial search failed")

    # polynomial codes: little-endian base-p digit packing
    def _mul_by_x(self, a):
        p, n = self.p, self.n
        shifted = a * p
        top, rest = divmod(shifted, p ** n)
        if top == 0:
            return rest
        out = rest
        for i in range(n):
            di = (out // p ** i) % p
            mi = (self.modulus // p ** i) % p
            out += ((di - top * mi) % p - di) * p ** i
        return out

    def _poly_order_ok(self, m):
        # is X a generator of (F_p[X]/m)^* of order exactly q-1?
        q = self.q
        x = 1
        seen = 0
        for _ in range(q - 1):
            x = self._mul_by_x_mod(x, m)
            seen += 1
            if x == 1:
                return seen == q - 1
        return False

    def _mul_by_x_mod(self, a, m):
        p, n = self.p, self.n
        shifted = a * p
        top, rest = divmod(shifted, p ** n)
        if top == 0:
            return rest
        out = rest
        for i in range(n):
            di = (out // p ** i) % p
            mi = (m // p ** i) % p
            out += ((di - top * mi) % p - di) * p ** i
        return out

    def _find_primitive_poly(self):
        # monic X^n + lower(m): encode lower part as code m
        for m in range(1, self.q):
            if m % self.p == 0:
                continue  # need nonzero constant term
            if self._poly_order_ok(m):
                return m
        raise AssertionError("no primitive polynomial found")

    def add(self, a, b):
        p = self.p
        out = 0
        pk = 1
        for _ in range(self.n):
            out += ((a + b) % p) * pk
            a //= p
            b //= p
            pk *= p
        return out

    def neg(self, a):
        p = self.p
        out = 0
        pk = 1
        for _ in range(self.n):
            out += ((-a) % p) * pk
            a //= p
            pk *= p
        return out

    def mul(self, a, b):
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a):
        if a == 0:
            raise DivisionByZero("inverse of 0 in F_q")
        return self.exp[(self.q - 1 - self.log[a]) % (self.q - 1)]

    def sqrt(self, a):
        """Canonical square root, or None if a is not a square."""
        if a == 0:
            return 0
        la = self.log[a]
        if self.p == 2:
            # squaring is bijective: root = a^(q/2)
            return self.exp[(la * (self.q // 2)) % (self.q - 1)]
        if la % 2:
            return None
        r = self.exp[la // 2]
        r2 = self.neg(r)
        return min(r, r2)


class FieldSpec:
    """A discretely valued field with a fixed working precision."""

    def __init__(self, kind, q, precision=DEFAULT_PRECISION):
        if kind not in ("p-adic", "laurent"):
            raise InputError("field kind must be 'p-adic' or 'laurent'")
        if precision < 4:
            raise InputError("working precision must be at least 4 digits")
        p, n = _factor_prime_power(q)
        if kind == "p-adic" and n != 1:
            raise InputError("p-adic backend needs a prime p, got %d" % q)
        if kind == "laurent" and q > 256:
            raise InputError("Laurent backend supports q <= 256")
        self.kind = kind
        self.p = p
        self.n = n
        self.q = q
        self.precision = precision
        self.gf = GFTable(p, n) if (kind == "laurent" and n > 1) else None

    # -- identity ----------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, FieldSpec) and self.kind == other.kind
                and self.q == other.q and self.precision == other.precision)

    def __hash__(self):
        return hash((self.kind, self.q, self.precision))

    def __repr__(self):
        if self.kind == "p-adic":
            return "Qp(%d, prec=%d)" % (self.p, self.precision)
        return "F%d((T), prec=%d)" % (self.q, self.precision)

    @property
    def residue_char(self):
        return self.p

    @property
    def uniformizer_symbol(self):
        return str(self.p) if self.kind == "p-adic" else "T"

    # -- residue field helpers (codes are ints 0..q-1) ---------------------

    def res_add(self, a, b):
        if self.gf:
            return self.gf.add(a, b)
        return (a + b) % self.p

    def res_neg(self, a):
        if self.gf:
            return self.gf.neg(a)
        return (-a) % self.p

    def res_mul(self, a, b):
        if self.gf:
            return self.gf.mul(a, b)
        return (a * b) % self.p

    def res_inv(self, a):
        if self.gf:
            return self.gf.inv(a)
        if a % self.p == 0:
            raise DivisionByZero("inverse of 0 in residue field")
        return pow(a, -1, self.p)

    def res_sqrt(self, a):
        if self.gf:
            return self.gf.sqrt(a)
        p = self.p
        a %= p
        if a == 0:
            return 0
        if p == 2:
            return 1
        if pow(a, (p - 1) // 2, p) != 1:
            return None
        if p % 4 == 3:
            r = pow(a, (p + 1) // 4, p)
        else:
            r = None
            for c in range(1, p):
                if c * c % p == a:
                    r = c
                    break
        return min(r, p - r)

    # -- constructors --------------------------------------------------------

    def zero(self):
        return ValuedScalar(self, None, None, self.precision, True)

    def one(self):
        return self.from_int(1)

    def uniformizer(self, k=1):
        if self.kind == "p-adic":
            return ValuedScalar(self, k, 1, self.precision, True)
        return ValuedScalar(self, k, (1,), self.precision, True)

    def from_int(self, m):
        if self.kind == "p-adic":
            if m == 0:
                return self.zero()
            v = 0
            while m % self.p == 0:
                m //= self.p
                v += 1
            N = self.precision
            # exact p-adic units are honest (possibly negative) integers
            exact = abs(m) < self.p ** N
            unit = m if exact else m % self.p ** N
            return ValuedScalar(self, v, unit, N, exact)
        code = m % self.p
        if code == 0:
            return self.zero()
        return ValuedScalar(self, 0, (code,), self.precision, True)

    def from_fraction(self, fr):
        fr = Fraction(fr)
        return self.from_int(fr.numerator) / self.from_int(fr.denominator)

    def from_digits(self, val, digits, exact=True):
        """pi^val * sum digits[i] pi^i; digits are residue codes."""
        digits = list(digits)
        if any(not (0 <= d < self.q) for d in digits):
            raise InputError("digit out of range for residue order %d" % self.q)
        k = len(digits)
        shift = 0
        while shift < k and digits[shift] == 0:
            shift += 1
        if shift == k:
            if exact:
                return self.zero()
            return ValuedScalar(self, val + k, None, 0, False)
        digits = digits[shift:]
        known = k - shift
        N = self.precision
        if known > N:
            digits = digits[:N]
            known = N
            exact = False
        while len(digits) > 1 and digits[-1] == 0:
            digits.pop()
        if self.kind == "p-adic":
            unit = sum(d * self.p ** i for i, d in enumerate(digits))
        else:
            unit = tuple(digits)
        return ValuedScalar(self, val + shift, unit, N if exact else known, exact)

    def from_residue(self, code):
        return self.from_digits(0, [code])

    # -- literals ------------------------------------------------------------

    def parse(self, text):
        """Parse the documented literal grammar into a scalar."""
        text = text.strip()
        if re.fullmatch(r"[+-]?\d+", text):
            return self.from_int(int(text))
        m = re.fullmatch(r"\[\s*(-?\d+)\s*;([\d\s]*)\]", text)
        if m:
            digits = [int(t) for t in m.group(2).split()]
            return self.from_digits(int(m.group(1)), digits)
        m = re.fullmatch(r"(\d+)adic:(.+)", text)
        if m:
            if self.kind != "p-adic" or int(m.group(1)) != self.p:
                raise InputError("literal %r does not match field %r" % (text, self))
            return self._parse_sum(m.group(2), str(self.p))
        m = re.fullmatch(r"F(\d+)\[\[T\]\]:(.+)", text)
        if m:
            if self.kind != "laurent" or int(m.group(1)) != self.q:
                raise InputError("literal %r does not match field %r" % (text, self))
            return self._parse_sum(m.group(2), "T")
        if self.kind == "laurent" and re.fullmatch(r"T(\^-?\d+)?", text):
            return self._parse_sum(text, "T")
        raise InputError("cannot parse scalar literal %r" % text)

    def _parse_sum(self, body, sym):
        terms = {}
        for part in body.replace(" ", "").split("+"):
            if not part:
                raise InputError("empty term in literal")
            m = re.fullmatch(r"(?:(\d+)\*?)?%s(?:\^(-?\d+))?" % re.escape(sym),
                             part)
            if m:
                c = int(m.group(1)) if m.group(1) else 1
                e = int(m.group(2)) if m.group(2) else 1
            elif re.fullmatch(r"\d+", part):
                c, e = int(part), 0
            else:
                raise InputError("cannot parse term %r" % part)
            if not (0 <= c < self.q):
                raise InputError("coefficient %d out of range" % c)
            terms[e] = self.res_add(terms.get(e, 0), c)
        if not terms:
            return self.zero()
        lo = min(terms)
        hi = max(terms)
        digits = [terms.get(i, 0) for i in range(lo, hi + 1)]
        return self.from_digits(lo, digits)

    # -- randomness (tests) ----------------------------------------------------

    def random_scalar(self, rng, vmin=-3, vmax=6, exact=False):
        v = rng.randint(vmin, vmax)
        k = self.precision if not exact else rng.randint(1, 6)
        digits = [rng.randrange(self.q) for _ in range(k)]
        digits[0] = rng.randrange(1, self.q)
        return self.from_digits(v, digits, exact=exact) if exact else \
            ValuedScalar(self, v,
                         self._pack_digits(digits),
                         self.precision, False)

    def _pack_digits(self, digits):
        if self.kind == "p-adic":
            return sum(d * self.p ** i for i, d in enumerate(digits))
        t = tuple(digits)
        while len(t) > 1 and t[-1] == 0:
            t = t[:-1]
        return t


def Qp(p, precision=DEFAULT_PRECISION):
    return FieldSpec("p-adic", p, precision)


def LaurentField(q, precision=DEFAULT_PRECISION):
    return FieldSpec("laurent", q, precision)


class ValuedScalar:
    """pi^val * unit with ``prec`` tracked significant digits.

    Three states:
      * ordinary: ``unit`` set, ``val`` is the exact valuation;
      * exact zero: ``unit is None and exact``;
      * precision-exhausted: ``unit is None and not exact``; ``val`` is then
        only a lower bound for the true valuation.
    """

    __slots__ = ("field", "val", "unit", "prec", "exact")

    def __init__(self, field, val, unit, prec, exact):
        self.field = field
        self.val = val
        self.unit = unit
        self.prec = prec
        self.exact = exact

    # -- state predicates ----------------------------------------------------

    def is_exact_zero(self):
        return self.unit is None and self.exact

    def is_exhausted(self):
        return self.unit is None and not self.exact

    def is_zero(self):
        """True exactly for the exact zero; exhausted values refuse."""
        if self.is_exhausted():
            raise PrecisionExhausted(
                "cannot decide zero: only known to be O(pi^%d)" % self.val)
        return self.is_exact_zero()

    def valuation(self):
        if self.is_exact_zero():
            return INF
        if self.is_exhausted():
            raise PrecisionExhausted(
                "valuation only bounded below by %d" % self.val)
        return self.val

    def lower_valuation(self):
        """A lower bound for the valuation, defined in every state."""
        if self.is_exact_zero():
            return INF
        return self.val

    # -- digits ----------------------------------------------------------------

    def digit(self, i):
        """i-th unit digit (a residue code); raises past the tracked window."""
        if self.unit is None:
            if self.exact:
                return 0
            raise PrecisionExhausted("no digits tracked")
        if i < 0:
            raise InputError("negative digit index")
        if i >= self.prec and not self.exact:
            raise PrecisionExhausted("digit %d beyond %d tracked" % (i, self.prec))
        f = self.field
        if f.kind == "p-adic":
            return (self.unit // f.p ** i) % f.p
        return self.unit[i] if i < len(self.unit) else 0

    def digits(self, count):
        return tuple(self.digit(i) for i in range(count))

    def residue(self):
        """Image in the residue field (a code 0..q-1)."""
        if self.is_exact_zero():
            return 0
        if self.is_exhausted():
            if self.val > 0:
                return 0
            raise PrecisionExhausted("residue of an exhausted value")
        if self.val < 0:
            raise NegativeValuation("residue needs valuation >= 0")
        if self.val > 0:
            return 0
        return self.digit(0)

    # -- structural equality / keys ---------------------------------------------

    def key(self):
        if self.unit is None:
            return (self.exact, self.val)
        return (self.val, self._digit_tuple())

    def _digit_tuple(self):
        if self.field.kind == "p-adic":
            return tuple((self.unit // self.field.p ** i) % self.field.p
                         for i in range(self.prec))
        t = self.unit[:self.prec]
        return tuple(t) + (0,) * (self.prec - len(t))

    def __eq__(self, other):
        return (isinstance(other, ValuedScalar) and self.field == other.field
                and self.val == other.val and self.unit == other.unit
                and self.prec == other.prec and self.exact == other.exact)

    def __hash__(self):
        return hash((self.val, self.unit, self.prec, self.exact))

    def agrees(self, other, digits=None):
        """Indistinguishable at the tracked (or given) precision."""
        d = self - other
        if d.is_exact_zero():
            return True
        if digits is None:
            return d.is_exhausted()
        ref = min(self.lower_valuation(), other.lower_valuation())
        return d.lower_valuation() >= (ref if ref != INF else 0) + digits

    def agreement_valuation(self, other):
        """Valuation of the difference (INF when exactly equal)."""
        d = self - other
        return d.lower_valuation()

    # -- arithmetic -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, ValuedScalar):
            if other.field != self.field:
                raise InputError("mixed fields")
            return other
        if isinstance(other, int):
            return self.field.from_int(other)
        if isinstance(other, Fraction):
            return self.field.from_fraction(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self, other
        if a.is_exact_zero():
            return b
        if b.is_exact_zero():
            return a
        # exhausted operands: interval-style lower bound
        if a.unit is None or b.unit is None:
            bound = min(a._known_below(), b._known_below())
            return ValuedScalar(self.field, bound, None, 0, False)
        if a.val > b.val:
            a, b = b, a
        s = b.val - a.val
        known = min(a._known_below(), b._known_below()) - a.val  # relative
        f = self.field
        if f.kind == "p-adic":
            w = a.unit + b.unit * f.p ** s
            if not (a.exact and b.exact):
                w %= f.p ** known
            if w == 0:
                if a.exact and b.exact:
                    return f.zero()
                return ValuedScalar(f, a.val + known, None, 0, False)
            t = 0
            while w % f.p == 0:
                w //= f.p
                t += 1
            if t >= known and not (a.exact and b.exact):
                return ValuedScalar(f, a.val + known, None, 0, False)
            N = f.precision
            exact = a.exact and b.exact and abs(w) < f.p ** N
            prec = N if exact else min(known - t, N)
            return ValuedScalar(f, a.val + t, w if exact else w % f.p ** N,
                                prec, exact)
        la = len(a.unit)
        lb = len(b.unit) + s
        width = max(la, lb)
        if not (a.exact and b.exact):
            width = min(width, known)
        out = []
        for i in range(width):
            da = a.unit[i] if i < la else 0
            db = b.unit[i - s] if s <= i < lb else 0
            out.append(f.res_add(da, db))
        while out and out[-1] == 0:
            out.pop()
        if not out:
            if a.exact and b.exact:
                return f.zero()
            return ValuedScalar(f, a.val + known, None, 0, False)
        t = 0
        while out[t] == 0:
            t += 1
        if t >= known and not (a.exact and b.exact):
            return ValuedScalar(f, a.val + known, None, 0, False)
        out = out[t:]
        N = f.precision
        exact = a.exact and b.exact and len(out) <= N
        if len(out) > N:
            out = out[:N]
        prec = N if exact else min(known - t, N)
        return ValuedScalar(f, a.val + t, tuple(out), prec, exact)

    def _known_below(self):
        """Absolute exponent below which digits are unknown."""
        if self.unit is None:
            return INF if self.exact else self.val
        if self.exact:
            return INF  # finite support: every digit is known
        return self.val + self.prec

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        f = self.field
        if self.is_exact_zero():
            return self
        if self.unit is None:
            return self
        if f.kind == "p-adic":
            if self.exact:
                return ValuedScalar(f, self.val, -self.unit, self.prec, True)
            # a truncated window negates to an infinite tail of digits p-1
            u = (-self.unit) % f.p ** max(self.prec, 1)
            return ValuedScalar(f, self.val, u, self.prec, False)
        u = tuple(f.res_neg(d) for d in self.unit)
        return ValuedScalar(f, self.val, u, self.prec, self.exact)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self is other:
            return self.field.zero()
        f = self.field
        # exact p-adic values are honest integers times a power of p:
        # subtract them as such, else negation would lose exactness
        if (f.kind == "p-adic" and self.exact and other.exact
                and self.unit is not None and other.unit is not None):
            m = min(self.val, other.val)
            diff = (self.unit * f.p ** (self.val - m)
                    - other.unit * f.p ** (other.val - m))
            return f.from_int(diff).shift(m)
        return self.__add__(-other)

    def __rsub__(self, other):
        out = self._coerce(other)
        if out is NotImplemented:
            return NotImplemented
        return out.__sub__(self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self, other
        f = self.field
        if a.is_exact_zero() or b.is_exact_zero():
            return f.zero()
        if a.unit is None or b.unit is None:
            return ValuedScalar(f, a.val + b.val, None, 0, False)
        prec = min(a.prec, b.prec)
        N = f.precision
        if f.kind == "p-adic":
            w = a.unit * b.unit
            exact = a.exact and b.exact and abs(w) < f.p ** N
            return ValuedScalar(f, a.val + b.val, w if exact else w % f.p ** N,
                                N if exact else min(prec, N), exact)
        w = _laurent_mul(f, a.unit, b.unit, min(prec, N))
        exact = (a.exact and b.exact
                 and len(a.unit) + len(b.unit) - 1 <= N)
        if exact:
            w = _laurent_mul(f, a.unit, b.unit, N)
        return ValuedScalar(f, a.val + b.val, w,
                            N if exact else min(prec, N), exact)

    def __rmul__(self, other):
        return self.__mul__(other)

    def inverse(self):
        f = self.field
        if self.is_exact_zero():
            raise DivisionByZero("inverse of exact zero")
        if self.unit is None:
            raise DivisionByZero(
                "inverse of a precision-exhausted value (O(pi^%d))" % self.val)
        if f.kind == "p-adic":
            if abs(self.unit) == 1:
                return ValuedScalar(f, -self.val, self.unit, self.prec,
                                    self.exact)
            u = pow(self.unit, -1, f.p ** self.prec)
            return ValuedScalar(f, -self.val, u, self.prec, False)
        if len(self.unit) == 1:
            return ValuedScalar(f, -self.val, (f.res_inv(self.unit[0]),),
                                self.prec, self.exact)
        u = _laurent_inv(f, self.unit, self.prec)
        return ValuedScalar(f, -self.val, u, self.prec, False)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if (self.exact and other.exact and self.unit is not None
                and other.unit is not None):
            q = self._exact_divide(other)
            if q is not None:
                return q
        return self * other.inverse()

    def _exact_divide(self, other):
        f = self.field
        if f.kind == "p-adic":
            if self.unit % other.unit == 0:
                w = self.unit // other.unit
                if abs(w) < f.p ** f.precision:
                    return ValuedScalar(f, self.val - other.val, w,
                                        f.precision, True)
            return None
        q, r = _laurent_divmod(f, self.unit, other.unit)
        if q is not None and not r:
            return ValuedScalar(f, self.val - other.val, q, f.precision, True)
        return None

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = self.field.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift(self, k):
        """Multiply by pi^k (exact)."""
        if self.unit is None:
            if self.is_exact_zero():
                return self
            return ValuedScalar(self.field, self.val + k, None, 0, False)
        return ValuedScalar(self.field, self.val + k, self.unit,
                            self.prec, self.exact)

    def unit_part(self):
        return self.shift(-self.val) if self.unit is not None else self

    def reduce_precision(self, r):
        """Forget digits past r (keeps exactness only if nothing is lost)."""
        if self.unit is None or r >= self.prec:
            return self
        f = self.field
        if f.kind == "p-adic":
            u = self.unit % f.p ** r
            exact = self.exact and u == self.unit
        else:
            u = self.unit[:r]
            while len(u) > 1 and u[-1] == 0:
                u = u[:-1]
            exact = self.exact and len(self.unit) <= r
        if (f.kind == "p-adic" and u == 0) or (f.kind == "laurent" and not any(u)):
            return ValuedScalar(f, self.val + r, None, 0, False)
        t = 0
        if f.kind == "p-adic":
            while u % f.p == 0:
                u //= f.p
                t += 1
        else:
            while u[t] == 0:
                t += 1
            u = u[t:]
        return ValuedScalar(f, self.val + t, u, r - t, exact)

    # -- square root ------------------------------------------------------------

    def hensel_sqrt(self):
        """Canonical square root; NotASquare / ResidueChar2Unsupported else.

        The sign is pinned by forcing the leading digit into the lower half
        of the residue-code range (no choice in residue characteristic 2).
        """
        f = self.field
        if self.is_exact_zero():
            return self
        if self.unit is None:
            raise PrecisionExhausted("square root of an exhausted value")
        if self.val % 2:
            raise NotASquare("odd valuation %d" % self.val)
        if f.p == 2:
            if f.kind == "p-adic":
                raise ResidueChar2Unsupported(
                    "Hensel square root over Q_2 is not provided")
            return self._laurent_sqrt_char2()
        d0 = self.digit(0)
        r0 = f.res_sqrt(d0)
        if r0 is None:
            raise NotASquare("leading digit %d is not a square in F_%d"
                             % (d0, f.q))
        half = self.val // 2
        if f.kind == "p-adic":
            x = r0
            k = 1
            inv2 = pow(2, -1, f.p ** self.prec)
            while k < self.prec:
                k = min(2 * k, self.prec)
                mod = f.p ** k
                x = (x + self.unit % mod * pow(x, -1, mod)) * inv2 % mod
            if x % f.p > (f.p - 1) // 2:
                x = (-x) % f.p ** self.prec
            return ValuedScalar(f, half, x, self.prec, False)
        x = ValuedScalar(f, 0, (r0,), self.prec, False)
        u = ValuedScalar(f, 0, self.unit, self.prec, False)
        inv2 = f.from_int(2).inverse()
        for _ in range(self.prec.bit_length() + 2):
            x = (x + u * x.inverse()) * inv2
        lead = x.digit(0)
        if min(lead, f.res_neg(lead)) != lead:
            x = -x
        return ValuedScalar(f, half, x.unit, self.prec, False)

    def _laurent_sqrt_char2(self):
        f = self.field
        u = self.unit
        upto = len(u) if self.exact else self.prec
        for i in range(1, min(len(u), upto), 2):
            if u[i] != 0:
                raise NotASquare("odd-index coefficient at T^%d" % i)
        root = []
        for i in range(0, len(u), 2):
            root.append(f.gf.sqrt(u[i]) if f.gf else u[i])
        while len(root) > 1 and root[-1] == 0:
            root.pop()
        prec = self.prec if self.exact else (self.prec + 1) // 2
        return ValuedScalar(f, self.val // 2, tuple(root), prec, self.exact)

    # -- display -----------------------------------------------------------------

    def __str__(self):
        if self.is_exact_zero():
            return "0"
        if self.unit is None:
            return "O(%s^%d)" % (self.field.uniformizer_symbol, self.val)
        k = min(self.prec, self.field.precision)
        ds = " ".join(str(d) for d in self.digits(k))
        tail = "" if self.exact else " ..."
        return "[%d; %s%s]" % (self.val, ds, tail)

    def __repr__(self):
        return "<%s %s>" % (self.field, self)


# -- Laurent unit helpers ------------------------------------------------------


def _laurent_mul(f, a, b, out_len):
    """Truncated product of digit tuples (units of F_q((T)))."""
    if f.n == 1:
        p = f.p
        ia = int.from_bytes(b"".join(d.to_bytes(_SLOT, "little") for d in a),
                            "little")
        ib = int.from_bytes(b"".join(d.to_bytes(_SLOT, "little") for d in b),
                            "little")
        w = ia * ib
        full = len(a) + len(b) - 1
        raw = w.to_bytes(_SLOT * (full + 1), "little")
        out = [int.from_bytes(raw[_SLOT * i:_SLOT * (i + 1)], "little") % p
               for i in range(min(full, out_len))]
    else:
        out = [0] * min(len(a) + len(b) - 1, out_len)
        for i, da in enumerate(a):
            if da == 0 or i >= out_len:
                continue
            for j, db in enumerate(b):
                if i + j >= out_len:
                    break
                if db:
                    out[i + j] = f.res_add(out[i + j], f.res_mul(da, db))
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _laurent_inv(f, a, out_len):
    """Series inverse of a unit digit tuple mod T^out_len."""
    inv0 = f.res_inv(a[0])
    out = [inv0]
    for i in range(1, out_len):
        s = 0
        for j in range(1, min(i, len(a) - 1) + 1):
            if a[j]:
                s = f.res_add(s, f.res_mul(a[j], out[i - j]))
        out.append(f.res_mul(f.res_neg(s), inv0))
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _laurent_divmod(f, a, b):
    """Exact polynomial division of digit tuples, or (None, None)."""
    a = list(a)
    db = len(b) - 1
    if len(a) - 1 < db:
        return None, None
    out = [0] * (len(a) - db)
    invlead = f.res_inv(b[-1])
    for i in range(len(out) - 1, -1, -1):
        c = f.res_mul(a[i + db], invlead)
        out[i] = c
        if c:
            for j, bj in enumerate(b):
                a[i + j] = f.res_add(a[i + j], f.res_neg(f.res_mul(c, bj)))
    rem = [d for d in a[:db] if d]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out), rem
