"""Moebius transformations of P^1 over a valued field.

Maps are 2x2 matrices up to scalar; the inverse is always taken as the
adjugate so no division ever enters group words.  Hyperbolicity of g is the
strict inequality 2 v(tr g) < v(det g); its translation length on the tree
("amplitude") is v(det) - 2 v(tr).

Fixed points of hyperbolic maps are computed without square roots: the
dominant eigenvalue is the limit of lam <- tr - det/lam started at tr, which
gains one amplitude's worth of digits per step.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .errors import (
    CoincidentEnds,
    InputError,
    NotHyperbolic,
    PrecisionExhausted,
)
from .field import ValuedScalar


class ProjectivePoint:
    """A point of P^1(k): an affine value or the point at infinity."""

    __slots__ = ("field", "z")

    def __init__(self, field, z):
        self.field = field
        self.z = z  # ValuedScalar, or None for infinity

    @classmethod
    def affine(cls, z):
        return cls(z.field, z)

    @classmethod
    def infinity(cls, field):
        return cls(field, None)

    @classmethod
    def from_pair(cls, x, y):
        """[x : y]; refuses pairs whose chart is precision-ambiguous."""
        if y.is_exact_zero():
            if x.is_exact_zero():
                raise InputError("[0 : 0] is not a projective point")
            return cls.infinity(x.field)
        if y.is_exhausted():
            raise PrecisionExhausted(
                "projective pair with exhausted denominator")
        return cls.affine(x / y)

    def is_infinity(self):
        return self.z is None

    def value(self):
        if self.z is None:
            raise InputError("point at infinity has no affine value")
        return self.z

    def same_point(self, other, digits=None):
        if self.is_infinity() or other.is_infinity():
            return self.is_infinity() and other.is_infinity()
        return self.z.agrees(other.z, digits=digits)

    def __repr__(self):
        return "oo" if self.z is None else "P(%s)" % self.z

    def key(self, digits=8):
        if self.z is None:
            return ("oo",)
        if self.z.is_exact_zero():
            return ("zero",)
        v = self.z.lower_valuation()
        if self.z.is_exhausted():
            return ("small", v)
        k = min(digits, self.z.prec)
        return (v, self.z.digits(k))


def as_point(field, obj):
    """Coerce ints, fractions, scalars and infinity tokens to a point."""
    if isinstance(obj, ProjectivePoint):
        return obj
    if obj is None or (isinstance(obj, float) and math.isinf(obj)):
        return ProjectivePoint.infinity(field)
    if isinstance(obj, str) and obj.strip().lower() in ("inf", "infinity", "oo"):
        return ProjectivePoint.infinity(field)
    if isinstance(obj, ValuedScalar):
        return ProjectivePoint.affine(obj)
    if isinstance(obj, int):
        return ProjectivePoint.affine(field.from_int(obj))
    if isinstance(obj, Fraction):
        return ProjectivePoint.affine(field.from_fraction(obj))
    if isinstance(obj, str):
        return ProjectivePoint.affine(field.parse(obj))
    raise InputError("cannot interpret %r as a point of P^1" % (obj,))


class MoebiusMap:
    """z -> (a z + b) / (c z + d), kept as the matrix [[a, b], [c, d]]."""

    __slots__ = ("field", "a", "b", "c", "d", "_det")

    def __init__(self, a, b, c, d):
        self.field = a.field
        self.a, self.b, self.c, self.d = a, b, c, d
        self._det = None

    @classmethod
    def from_ints(cls, field, a, b, c, d):
        return cls(field.from_int(a), field.from_int(b),
                   field.from_int(c), field.from_int(d))

    @classmethod
    def identity(cls, field):
        return cls.from_ints(field, 1, 0, 0, 1)

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    # -- ring structure -----------------------------------------------------

    def __mul__(self, other):
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        a, b, c, d = self.entries()
        e, f, g, h = other.entries()
        return MoebiusMap(a * e + b * g, a * f + b * h,
                          c * e + d * g, c * f + d * h)

    def inverse(self):
        """Adjugate: the inverse in PGL_2, division-free."""
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = MoebiusMap.identity(self.field)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def determinant(self):
        if self._det is None:
            self._det = self.a * self.d - self.b * self.c
        return self._det

    def trace(self):
        return self.a + self.d

    # -- canonical form ----------------------------------------------------------

    def canonical(self):
        """Scale so the first minimal-valuation entry is exactly 1."""
        vals = []
        for e in self.entries():
            if e.is_exact_zero():
                vals.append(math.inf)
            elif e.is_exhausted():
                vals.append(None)
            else:
                vals.append(e.val)
        known = [v for v in vals if v is not None]
        m = min(known)
        if any(v is None and e.val < m
               for v, e in zip(vals, self.entries())):
            raise PrecisionExhausted("cannot locate the minimal entry")
        i = vals.index(m)
        pivot = self.entries()[i]
        out = [e / pivot for e in self.entries()]
        out[i] = self.field.one()
        return MoebiusMap(*out)

    def key(self, digits=8):
        c = self.canonical()
        parts = []
        for e in c.entries():
            if e.is_exact_zero():
                parts.append(("zero",))
            elif e.is_exhausted():
                parts.append(("small", e.val))
            else:
                parts.append((e.val, e.digits(min(digits, e.prec))))
        return tuple(parts)

    def same_map(self, other, digits=6):
        """Equal in PGL_2 up to the tracked digits (cross products agree)."""
        pairs = list(zip(self.entries(), other.entries()))
        ref = None
        for x, y in pairs:
            if not (x.is_exact_zero() or x.is_exhausted()):
                if ref is None or x.val < ref[0].val:
                    ref = (x, y)
        if ref is None:
            raise PrecisionExhausted("no usable entry to scale by")
        x0, y0 = ref
        if y0.is_exact_zero() or y0.is_exhausted():
            return False
        scale = x0.val + y0.val
        for x, y in pairs:
            diff = x0 * y - y0 * x
            if diff.is_exact_zero():
                continue
            if diff.lower_valuation() < scale + digits:
                return False
        return True

    def is_identity(self, digits=6):
        return self.same_map(MoebiusMap.identity(self.field), digits=digits)

    # -- action on P^1 -------------------------------------------------------------

    def apply(self, point):
        if point.is_infinity():
            return ProjectivePoint.from_pair(self.a, self.c)
        z = point.value()
        return ProjectivePoint.from_pair(self.a * z + self.b,
                                         self.c * z + self.d)

    def __call__(self, point):
        return self.apply(point)

    # -- hyperbolic structure --------------------------------------------------------

    def is_hyperbolic(self):
        vd = self.determinant().valuation()
        tr = self.trace()
        lo = tr.lower_valuation()
        if 2 * lo >= vd:
            return False
        if tr.is_exhausted():
            raise PrecisionExhausted(
                "trace known only to O(pi^%d); cannot settle hyperbolicity"
                % tr.val)
        return True

    def amplitude(self):
        """Translation length on the tree; requires hyperbolicity."""
        if not self.is_hyperbolic():
            raise NotHyperbolic("map is not hyperbolic")
        return self.determinant().valuation() - 2 * self.trace().valuation()

    def eigenvalues(self):
        """(dominant, other): valuations v(tr) and v(det) - v(tr)."""
        if not self.is_hyperbolic():
            raise NotHyperbolic("map is not hyperbolic")
        tr = self.trace()
        det = self.determinant()
        lam = tr
        for _ in range(self.field.precision + 2):
            nxt = tr - det / lam
            if nxt == lam:
                break
            lam = nxt
        return lam, det / lam

    def fixed_points(self):
        """(attracting, repelling) on P^1; requires hyperbolicity."""
        lam1, lam2 = self.eigenvalues()
        return self._eigenpoint(lam1), self._eigenpoint(lam2)

    def _eigenpoint(self, lam):
        b, c = self.b, self.c
        c_ok = not (c.is_exact_zero() or c.is_exhausted())
        b_ok = not (b.is_exact_zero() or b.is_exhausted())
        if c_ok:
            return ProjectivePoint.from_pair(lam - self.d, c)
        if b_ok:
            return ProjectivePoint.from_pair(b, lam - self.a)
        if c.is_exact_zero() and b.is_exact_zero():
            # diagonal: fixed points are 0 and infinity
            if (lam - self.a).lower_valuation() > (lam - self.d).lower_valuation():
                return ProjectivePoint.infinity(self.field)
            return ProjectivePoint.affine(self.field.zero())
        raise PrecisionExhausted("off-diagonal entries are exhausted")

    def conjugate_by(self, h):
        """h g h^-1."""
        return h * self * h.inverse()

    def __repr__(self):
        return "[[%s, %s], [%s, %s]]" % (self.a, self.b, self.c, self.d)


def hyperbolic_with_fixed_points(field, attract, repel, amplitude):
    """The hyperbolic map fixing the two given points with the given
    translation length, attracting at the first."""
    if amplitude < 1:
        raise InputError("amplitude must be a positive integer")
    P = as_point(field, attract)
    Q = as_point(field, repel)
    if P.same_point(Q):
        raise CoincidentEnds("attracting and repelling points coincide")
    one, zero = field.one(), field.zero()
    x1, y1 = (one, zero) if P.is_infinity() else (P.value(), one)
    x2, y2 = (one, zero) if Q.is_infinity() else (Q.value(), one)
    M = MoebiusMap(x1, x2, y1, y2)
    dM = M.determinant()
    if dM.is_exhausted() or dM.is_exact_zero():
        raise CoincidentEnds("fixed points are too close to separate")
    pi = field.uniformizer(amplitude)
    D = MoebiusMap(one, zero, zero, pi)
    return M * D * M.inverse()
