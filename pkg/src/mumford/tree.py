"""The Bruhat-Tits tree of PGL_2 over a discretely valued field.

A vertex is the lattice class [[pi^n, u], [0, 1]] encoded as (n, u) where u
is a finite digit expansion supported in exponents below n, stored as a
sorted tuple of (exponent, nonzero residue code) pairs.  The root x0 = (0, ())
is the class of the standard lattice.  Vertices are totally ordered by
(level, pairs), which is the tie-break used everywhere a canonical
representative is needed.

Ends of the tree are points of P^1(k).  The ray from (m, a) toward an affine
end z ascends to level min(m, v(a - z)) and then descends along the digits
of z; toward infinity it ascends forever.
"""
from __future__ import annotations

import math

from .errors import (
    CoincidentEnds,
    InputError,
    NotPairwiseDistinct,
    PrecisionExhausted,
    SingularMatrix,
)
from .moebius import ProjectivePoint

INF = math.inf


class TreeVertex:
    __slots__ = ("level", "pairs")

    def __init__(self, level, pairs=()):
        cleaned = tuple(sorted((e, d) for e, d in pairs if d))
        for e, _ in cleaned:
            if e >= level:
                raise InputError("digit at exponent %d >= level %d" % (e, level))
        self.level = level
        self.pairs = cleaned

    def key(self):
        return (self.level, self.pairs)

    def __eq__(self, other):
        return (isinstance(other, TreeVertex) and self.level == other.level
                and self.pairs == other.pairs)

    def __hash__(self):
        return hash((self.level, self.pairs))

    def __lt__(self, other):
        return self.key() < other.key()

    def __repr__(self):
        return "V(%d; %s)" % (self.level,
                              " ".join("%d:%d" % p for p in self.pairs) or "0")

    def as_scalar(self, field):
        return pairs_to_scalar(field, self.pairs)

    def parent(self):
        return TreeVertex(self.level - 1, trunc(self.pairs, self.level - 1))

    def children(self, field):
        out = []
        for d in range(field.q):
            extra = ((self.level, d),) if d else ()
            out.append(TreeVertex(self.level + 1, self.pairs + extra))
        return out

    def neighbors(self, field):
        return [self.parent()] + self.children(field)


ROOT = TreeVertex(0, ())


def trunc(pairs, level):
    return tuple(p for p in pairs if p[0] < level)


def pair_diff_val(p1, p2):
    """Valuation of the difference of two digit expansions (INF if equal)."""
    d1, d2 = dict(p1), dict(p2)
    exps = sorted(set(d1) | set(d2))
    for e in exps:
        if d1.get(e, 0) != d2.get(e, 0):
            return e
    return INF


def pairs_to_scalar(field, pairs):
    if not pairs:
        return field.zero()
    lo = pairs[0][0]
    hi = pairs[-1][0]
    digits = [0] * (hi - lo + 1)
    for e, d in pairs:
        digits[e - lo] = d
    return field.from_digits(lo, digits)


def scalar_val(s):
    """Valuation with exact zero as INF; exhausted values refuse."""
    if s.is_exact_zero():
        return INF
    return s.valuation()


def val_capped(s, cap):
    """min(cap, v(s)); an exhausted value is fine once its bound hits cap."""
    if s.is_exact_zero():
        return cap
    if s.is_exhausted():
        if s.val >= cap:
            return cap
        raise PrecisionExhausted(
            "valuation only bounded below by %d, need comparison with %d"
            % (s.val, cap))
    return min(cap, s.valuation())


def vertex_at(z, level):
    """The vertex (level, z mod pi^level)."""
    if z.is_exact_zero():
        return TreeVertex(level, ())
    if z.is_exhausted():
        if z.val >= level:
            return TreeVertex(level, ())
        raise PrecisionExhausted(
            "center known to O(pi^%d), need digits below %d" % (z.val, level))
    v0 = z.val
    if v0 >= level:
        return TreeVertex(level, ())
    pairs = []
    for e in range(v0, level):
        d = z.digit(e - v0)
        if d:
            pairs.append((e, d))
    return TreeVertex(level, tuple(pairs))


# -- metric ---------------------------------------------------------------


def join_level(x, y):
    return min(x.level, y.level, pair_diff_val(x.pairs, y.pairs))


def distance(x, y):
    return x.level + y.level - 2 * join_level(x, y)


def join(x, y):
    """Top vertex of the geodesic [x, y] (closest to level -infinity)."""
    c = join_level(x, y)
    return TreeVertex(c, trunc(x.pairs, c))


def geodesic(x, y):
    """All vertices from x to y inclusive."""
    c = join_level(x, y)
    up = [TreeVertex(k, trunc(x.pairs, k)) for k in range(x.level, c - 1, -1)]
    down = [TreeVertex(k, trunc(y.pairs, k)) for k in range(c + 1, y.level + 1)]
    return up + down


def median(x, y, z):
    """The unique vertex lying on all three pairwise geodesics."""
    tops = [join(x, y), join(y, z), join(x, z)]
    return max(tops, key=lambda v: v.level)


# -- rays and lines ----------------------------------------------------------


def ray(vertex, end):
    """Yields the vertices from `vertex` toward the end, lazily."""
    yield vertex
    if end.is_infinity():
        v = vertex
        while True:
            v = v.parent()
            yield v
    z = end.value()
    a = pairs_to_scalar(z.field, vertex.pairs)
    c = val_capped(a - z, vertex.level)
    k = vertex.level
    pairs = vertex.pairs
    while k > c:
        k -= 1
        pairs = trunc(pairs, k)
        yield TreeVertex(k, pairs)
    while True:
        k += 1
        yield vertex_at(z, k)


def project_to_line(v, xi, eta, field):
    """Closest vertex to v on the geodesic line between two distinct ends."""
    if xi.is_infinity() and eta.is_infinity():
        raise CoincidentEnds("line needs two distinct ends")
    if xi.is_infinity():
        xi, eta = eta, xi
    z1 = xi.value()
    a = pairs_to_scalar(field, v.pairs)
    t1 = val_capped(a - z1, v.level)
    if eta.is_infinity():
        return vertex_at(z1, t1)
    z2 = eta.value()
    c = scalar_val(z1 - z2)
    if c == INF:
        raise CoincidentEnds("ends coincide")
    t2 = val_capped(a - z2, v.level)
    t = max(t1, t2)
    if t >= c:
        side = z1 if t1 >= t2 else z2
        return vertex_at(side, t)
    return vertex_at(z1, c)


def median_of_ends(field, e1, e2, e3):
    """Center vertex of the ideal tripod spanned by three distinct ends."""
    ends = [e1, e2, e3]
    for i in range(3):
        for j in range(i + 1, 3):
            if ends[i].same_point(ends[j]):
                raise NotPairwiseDistinct("tripod ends must be distinct")
    best = None
    for i, j in ((0, 1), (0, 2), (1, 2)):
        a, b = ends[i], ends[j]
        if a.is_infinity() or b.is_infinity():
            continue
        c = scalar_val(a.value() - b.value())
        if best is None or c > best[0]:
            best = (c, a.value())
    if best is None:
        raise InputError("at most one end may be infinity")
    return vertex_at(best[1], int(best[0]))


def boundary_distance(field, e1, e2):
    """Distance from the root to the line (e1, e2)."""
    return distance(ROOT, project_to_line(ROOT, e1, e2, field))


# -- group action ---------------------------------------------------------------


def act_vertex(g, v):
    """Image of a vertex under a Moebius map (lattice class action)."""
    f = g.field
    pin = f.uniformizer(v.level)
    u = pairs_to_scalar(f, v.pairs)
    A, C = g.a * pin, g.c * pin
    B, D = g.a * u + g.b, g.c * u + g.d
    vC = scalar_val(C) if not C.is_exhausted() else None
    vD = scalar_val(D) if not D.is_exhausted() else None
    if vC is None or vD is None:
        raise PrecisionExhausted("lattice column valuations undecidable")
    if vC < vD:
        B, D = A, C
        vD = vC
    if vD == INF:
        raise SingularMatrix("matrix kills the lattice")
    det = g.determinant() * pin
    if det.is_exact_zero():
        raise SingularMatrix("zero determinant")
    n2 = det.valuation() - 2 * int(vD)
    if not (B.is_exhausted() or B.is_exact_zero()):
        # the quotient only matters below exponent n2
        need = n2 - (B.valuation() - int(vD)) + 1
        if need < 1:
            need = 1
        B = B.reduce_precision(need)
        D = D.reduce_precision(need)
    return vertex_at(B / D, n2)


def translation_axis_vertex(g):
    """A vertex on the axis of a hyperbolic map: the projection of the root."""
    att, rep = g.fixed_points()
    return project_to_line(ROOT, att, rep, g.field)


def dilation_exponent(g, end, base=ROOT):
    """Valuation scaling exponent of g at the given end of the tree.

    Equals 2k - d(base, g^-1 base) with k the overlap of [base, g^-1 base]
    and the ray from the base toward the end; the exponent of a conformal
    measure's scaling factor under g on small opens around the end.
    """
    back = act_vertex(g.inverse(), base)
    return _busemann_exponent(base, back, ray(base, end))


def _busemann_exponent(base, back, toward):
    """2k - d(base, back), k the overlap of [base, back] with the ray."""
    path = geodesic(base, back)
    k = 0
    for i, (pv, rv) in enumerate(zip(path, toward)):
        if pv == rv:
            k = i
        else:
            break
    return 2 * k - (len(path) - 1)


# -- boundary opens ---------------------------------------------------------------


class BoundaryOpen:
    """The set of ends through a directed edge: a ball v(z - c) >= r, or the
    complement of one (which contains infinity)."""

    __slots__ = ("kind", "center", "radius")

    def __init__(self, kind, center, radius):
        if kind not in ("ball", "coball"):
            raise InputError("kind must be ball or coball")
        self.kind = kind
        self.center = trunc(tuple(center), radius)
        self.radius = radius

    @classmethod
    def from_edge(cls, x, y):
        """Ends through the directed edge x -> y."""
        if y.level == x.level + 1 and trunc(y.pairs, x.level) == x.pairs:
            return cls("ball", y.pairs, y.level)
        if x.level == y.level + 1 and trunc(x.pairs, y.level) == y.pairs:
            return cls("coball", x.pairs, x.level)
        raise InputError("vertices are not adjacent")

    def contains(self, end):
        if end.is_infinity():
            return self.kind == "coball"
        z = end.value()
        c = pairs_to_scalar(z.field, self.center)
        # membership only reads the valuation up to the radius
        inside = val_capped(z - c, self.radius) >= self.radius
        return inside if self.kind == "ball" else not inside

    def disjoint(self, other):
        if self.kind == "coball" and other.kind == "coball":
            return False
        if self.kind == "ball" and other.kind == "ball":
            return pair_diff_val(self.center, other.center) < \
                min(self.radius, other.radius)
        ball, co = (self, other) if self.kind == "ball" else (other, self)
        return (ball.radius >= co.radius
                and pair_diff_val(ball.center, co.center) >= co.radius)

    def key(self):
        return (self.kind, self.center, self.radius)

    def __eq__(self, other):
        return isinstance(other, BoundaryOpen) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        c = " ".join("%d:%d" % p for p in self.center) or "0"
        return "%s(%s; %d)" % (self.kind, c, self.radius)


# -- cross ratio -------------------------------------------------------------------


def cross_ratio_exponent(x1, x2, x3, x4):
    """Valuation of (x1-x3)(x2-x4) / ((x1-x4)(x2-x3)); terms with an
    infinite entry drop out."""
    pts = [x1, x2, x3, x4]
    for i in range(4):
        for j in range(i + 1, 4):
            if pts[i].same_point(pts[j]):
                raise NotPairwiseDistinct(
                    "cross ratio needs four distinct points")

    def term(a, b):
        if a.is_infinity() or b.is_infinity():
            return 0
        return (a.value() - b.value()).valuation()

    return term(x1, x3) + term(x2, x4) - term(x1, x4) - term(x2, x3)
