"""Harmonic cocycles on the quotient graph and the rational differentials
they encode.

A weight-w cocycle assigns to every germ of the quotient a vector of w - 1
field elements, thought of as the coefficients of a polynomial of degree
w - 2 in a direction variable X.  Changing the edge by a group element acts
on that polynomial through `weight_action_matrix`; reversing the edge
negates it.  Harmonicity is the statement that the germ values at each
vertex class sum to zero.

Differentials are carried as finite pole lists (`RationalForm`): truncated
theta quotients and their products.  `res_map` turns a form into a cocycle
by taking residues of z^i f dz over the boundary opens of the germ edges;
`poisson` and `poisson_form` go the other way for weight 2, pairing the
cocycle's boundary distribution with the kernel 1/(z - x).  `product_map`
multiplies weight-2 cocycles through theta representatives, and `kernel`
collects the polynomial relations that the degree-d product map kills.
"""
from __future__ import annotations

import itertools
import math
import random

from .errors import (
    InputError,
    NotConverged,
    PoleOnBoundary,
    PrecisionExhausted,
    RankAmbiguous,
    TruncationNotConverged,
)
from .field import INF
from .graph import cycle_space_basis
from .moebius import as_point
from .schottky import quotient_graph, word_inverse, word_mul
from .tree import BoundaryOpen


def _check_weight(weight):
    if not isinstance(weight, int) or weight < 2 or weight % 2:
        raise InputError("weight must be an even integer >= 2")


def _ensure_qg(group, cert, qg):
    return qg if qg is not None else quotient_graph(group, cert)


def _germ_order(qg):
    return [g for i in sorted(qg.germs) for g in qg.germs[i]]


def _poly_mul_linear(poly, c0, c1):
    """Coefficient list (ascending) times (c0 + c1 X)."""
    out = [c0 * poly[0]]
    for k in range(1, len(poly)):
        out.append(c0 * poly[k] + c1 * poly[k - 1])
    out.append(c1 * poly[-1])
    return out


def _matvec(M, vec):
    out = []
    for row in M:
        s = row[0] * vec[0]
        for k in range(1, len(vec)):
            s = s + row[k] * vec[k]
        out.append(s)
    return tuple(out)


def weight_action_matrix(g, weight):
    """Matrix of g on value vectors of the given weight.

    Column j holds the coefficients of det(g)^(1 - weight/2) *
    (a X + c)^j (b X + d)^(weight - 2 - j) for g = [[a, b], [c, d]]: the
    image of the monomial X^j under the substitution a residue vector
    undergoes when its edge is moved by g.  Weight 2 acts trivially and
    M(gh) = M(g) M(h) in every weight.
    """
    _check_weight(weight)
    f = g.field
    m = weight - 2
    if m == 0:
        return [[f.one()]]
    a, b, c, d = g.entries()
    scale = g.determinant() ** (1 - weight // 2)
    cols = []
    for j in range(m + 1):
        poly = [f.one()]
        for _ in range(j):
            poly = _poly_mul_linear(poly, c, a)
        for _ in range(m - j):
            poly = _poly_mul_linear(poly, d, b)
        cols.append([e * scale for e in poly])
    return [[cols[j][r] for j in range(m + 1)] for r in range(m + 1)]


class HarmonicCocycle:
    """Values on the germs of a quotient graph, one vector of length
    weight - 1 per germ.

    Both germs of every edge are stored even though the pairing ties them
    (the reverse germ carries minus the weight action of the edge word);
    `pairing_defect` measures how well the stored values respect that tie,
    `vertex_defect` how well they respect harmonicity.
    """

    def __init__(self, group, qg, weight, values, floor=INF):
        _check_weight(weight)
        self.group = group
        self.qg = qg
        self.weight = weight
        if set(values) != set(qg.pairing):
            raise InputError("values must cover every germ exactly once")
        n = weight - 1
        self.values = {}
        for g, vec in values.items():
            vec = tuple(vec)
            if len(vec) != n:
                raise InputError("value vectors must have length weight - 1")
            self.values[g] = vec
        self.floor = floor
        self._acts = {}

    def value(self, germ):
        vec = self.values.get(germ)
        if vec is None:
            raise InputError("not a germ of the quotient")
        return vec

    def _action(self, word):
        M = self._acts.get(word)
        if M is None:
            M = weight_action_matrix(self.group.element(word), self.weight)
            self._acts[word] = M
        return M

    def edge_value(self, x, y):
        """Value on an arbitrary tree dart in the orbit of the window."""
        rep, w = self.qg.cert.reduce_vertex(x)
        i = self.qg.rep_pos.get(rep)
        if i is None:
            raise InputError("vertex does not reduce into the quotient")
        n = self.group.act(word_inverse(w), y)
        vec = self.values.get((i, n))
        if vec is None:
            raise InputError("not a dart of the window's orbit")
        if self.weight == 2:
            return vec
        return _matvec(self._action(w), vec)

    # -- diagnostics ---------------------------------------------------------

    def vertex_defect(self):
        """Worst valuation of a vertex-class sum (INF when conservation is
        exact)."""
        worst = INF
        for i in sorted(self.qg.germs):
            for r in range(self.weight - 1):
                s = self.group.field.zero()
                for g in self.qg.germs[i]:
                    s = s + self.values[g][r]
                worst = min(worst, s.lower_valuation())
        return worst

    def pairing_defect(self):
        """Worst valuation of value(g2) + M(w^-1) value(g1) over the edges."""
        worst = INF
        for (g1, g2, w) in self.qg.edges:
            pushed = _matvec(self._action(word_inverse(w)), self.values[g1])
            for r in range(self.weight - 1):
                d = self.values[g2][r] + pushed[r]
                worst = min(worst, d.lower_valuation())
        return worst

    def equivariance_check(self, samples=100, seed=0, max_len=2):
        """Antisymmetry of the equivariant extension on randomly translated
        darts: the value on w(e) reversed must cancel the value on w(e).
        Returns the number of samples and the worst cancellation valuation.
        """
        rng = random.Random(seed)
        germs = _germ_order(self.qg)
        words = [()] + list(self.group.reduced_words(max_len))
        worst = INF
        for _ in range(samples):
            i, n = rng.choice(germs)
            w = rng.choice(words)
            x = self.group.act(w, self.qg.reps[i])
            y = self.group.act(w, n)
            fwd = self.edge_value(x, y)
            bwd = self.edge_value(y, x)
            for a, b in zip(fwd, bwd):
                worst = min(worst, (a + b).lower_valuation())
        return samples, worst

    def coordinates(self):
        out = []
        for g in _germ_order(self.qg):
            out.extend(self.values[g])
        return tuple(out)

    # -- linear structure ------------------------------------------------------

    def _combine(self, other, op):
        if not isinstance(other, HarmonicCocycle):
            return NotImplemented
        if other.qg is not self.qg or other.weight != self.weight:
            raise InputError("cocycles live on different spaces")
        vals = {g: tuple(op(a, b)
                         for a, b in zip(self.values[g], other.values[g]))
                for g in self.values}
        return HarmonicCocycle(self.group, self.qg, self.weight, vals,
                               floor=min(self.floor, other.floor))

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __neg__(self):
        vals = {g: tuple(-a for a in vec) for g, vec in self.values.items()}
        return HarmonicCocycle(self.group, self.qg, self.weight, vals,
                               floor=self.floor)

    def scale(self, a):
        vals = {g: tuple(a * x for x in vec)
                for g, vec in self.values.items()}
        floor = self.floor
        if floor != INF:
            floor = floor + a.lower_valuation()
        return HarmonicCocycle(self.group, self.qg, self.weight, vals,
                               floor=floor)


def cocycle_basis_w2(group, cert=None, qg=None):
    """Integer flows on the quotient as weight-2 cocycles, one per
    independent cycle; these are exactly harmonic and antisymmetric."""
    qg = _ensure_qg(group, cert, qg)
    f = group.field
    out = []
    for flow in cycle_space_basis(qg.multigraph()):
        vals = {}
        for t, (g1, g2, _) in enumerate(qg.edges):
            vals[g1] = (f.from_int(flow[t]),)
            vals[g2] = (f.from_int(-flow[t]),)
        out.append(HarmonicCocycle(group, qg, 2, vals))
    return out


def cocycle_space(group, weight, cert=None, qg=None):
    """Basis of the space of weight-w cocycles.

    Unknowns are the value vectors on one chosen germ per edge; the paired
    germ is eliminated through the weight action, and each vertex class
    contributes weight - 1 conservation rows.
    """
    _check_weight(weight)
    qg = _ensure_qg(group, cert, qg)
    f = group.field
    n = weight - 1
    zero, one = f.zero(), f.one()
    side = {}
    for t, (g1, g2, w) in enumerate(qg.edges):
        side[g1] = (t, None)
        M = weight_action_matrix(group.element(word_inverse(w)), weight)
        side[g2] = (t, M)
    ncols = len(qg.edges) * n
    rows = []
    for i in sorted(qg.germs):
        for r in range(n):
            row = [zero] * ncols
            for g in qg.germs[i]:
                t, M = side[g]
                if M is None:
                    row[t * n + r] = row[t * n + r] + one
                else:
                    for j in range(n):
                        row[t * n + j] = row[t * n + j] - M[r][j]
            rows.append(row)
    vecs, _ = nullspace(rows, floor=f.precision - 6)
    out = []
    for v in vecs:
        vals = {}
        for t, (g1, g2, w) in enumerate(qg.edges):
            vec1 = tuple(v[t * n + j] for j in range(n))
            vals[g1] = vec1
            _, M = side[g2]
            vals[g2] = tuple(-x for x in _matvec(M, vec1))
        out.append(HarmonicCocycle(group, qg, weight, vals))
    return out


def nullspace(rows, floor=INF, margin=4):
    """Kernel vectors and pivots of a matrix of field scalars, by Gaussian
    elimination with full smallest-valuation pivoting.

    Entries whose valuation reaches `floor` count as zero.  Pivoting on
    the globally largest remaining entry keeps every elimination factor
    integral, so the noise left in eliminated positions never outgrows the
    working precision.  The rank decision is refused (RankAmbiguous) when a
    pivot comes within `margin` digits of the floor, or when a
    precision-exhausted entry could hide a further pivot.  Returns
    (vectors, [(column, valuation)]) with the pivots sorted by column.
    """
    if not rows:
        return [], []
    ncols = len(rows[0])
    f = rows[0][0].field
    work = [list(r) for r in rows]
    used = set()
    pivot_row = {}
    pivots = []
    while True:
        best = None
        hidden = None
        for ri in range(len(work)):
            if ri in used:
                continue
            row = work[ri]
            for col in range(ncols):
                if col in pivot_row:
                    continue
                e = row[col]
                lv = e.lower_valuation()
                if lv >= floor:
                    continue
                if e.is_exhausted():
                    if hidden is None or lv < hidden:
                        hidden = lv
                    continue
                v = e.valuation()
                if best is None or (v, ri, col) < best:
                    best = (v, ri, col)
        if best is None:
            if hidden is not None:
                raise RankAmbiguous(
                    "entries known only to O(pi^%d) remain below the floor "
                    "%s; the rank is not determined at this precision"
                    % (hidden, floor))
            break
        v, pr, col = best
        if hidden is not None and hidden < v:
            raise RankAmbiguous(
                "an entry known only to O(pi^%d) could outweigh the pivot "
                "of valuation %d" % (hidden, v))
        if floor != INF and v > floor - margin:
            raise RankAmbiguous(
                "pivot valuation %d is within %d digits of the floor %s; "
                "increase L, D or the precision" % (v, margin, floor))
        used.add(pr)
        pivot_row[col] = pr
        pivots.append((col, v))
        pivot = work[pr][col]
        ref = work[pr]
        for ri in range(len(work)):
            if ri in used:
                continue
            e = work[ri][col]
            if e.is_exact_zero() or e.lower_valuation() >= floor:
                continue
            factor = e / pivot
            row = work[ri]
            for k in range(ncols):
                row[k] = row[k] - factor * ref[k]
    # the system is triangular in the order the pivots were chosen; solve
    # each kernel vector by back-substitution, ignoring the noise left in
    # already-eliminated positions
    vectors = []
    zero, one = f.zero(), f.one()
    for fc in range(ncols):
        if fc in pivot_row:
            continue
        vec = [zero] * ncols
        vec[fc] = one
        for i in reversed(range(len(pivots))):
            col, _ = pivots[i]
            pr = pivot_row[col]
            s = work[pr][fc]
            for j in range(i + 1, len(pivots)):
                c2, _ = pivots[j]
                e = work[pr][c2]
                if not (e.is_exact_zero() or e.lower_valuation() >= floor):
                    s = s + e * vec[c2]
            vec[col] = -(s / work[pr][col])
        vectors.append(vec)
    pivots.sort()
    return vectors, pivots


# -- rational differentials -----------------------------------------------------


class RationalForm:
    """A differential p(z) dz carried as a finite list of poles
    (point, order, coefficient), regular at infinity.

    `floor` bounds the valuation of the error against the infinite object
    the form truncates; `shell_vals` records the orbit-shell diagnostics of
    a theta quotient.  Poles at infinity are dropped on construction: their
    effect is recovered by the total-residue rule in `residue`.
    """

    def __init__(self, field, weight, poles, L=None, shell_vals=None,
                 floor=INF, group=None, qg=None):
        self.field = field
        self.weight = weight
        self.poles = []
        for (pt, order, coeff) in poles:
            pt = as_point(field, pt)
            if pt.is_infinity():
                continue
            if order < 1:
                raise InputError("pole order must be a positive integer")
            if coeff.is_exact_zero():
                continue
            self.poles.append((pt, order, coeff))
        self.L = L
        self.shell_vals = shell_vals
        self.floor = floor
        self.group = group
        self.qg = qg

    def evaluate(self, z):
        out = self.field.zero()
        for pt, order, coeff in self.poles:
            out = out + coeff / (z - pt.value()) ** order
        return out

    def scale(self, a):
        poles = [(pt, order, coeff * a) for pt, order, coeff in self.poles]
        floor = self.floor
        if floor != INF and not a.is_exact_zero():
            floor = floor + a.lower_valuation()
        return RationalForm(self.field, self.weight, poles, L=self.L,
                            floor=floor, group=self.group, qg=self.qg)

    def __add__(self, other):
        if not isinstance(other, RationalForm):
            return NotImplemented
        if other.weight != self.weight or other.field != self.field:
            raise InputError("forms must share weight and field")
        K = self.field.precision - 6
        acc = {}
        order_seen = []
        for (pt, order, coeff) in self.poles + other.poles:
            k = (pt.key(K), order)
            if k in acc:
                p0, o0, c0 = acc[k]
                acc[k] = (p0, o0, c0 + coeff)
            else:
                acc[k] = (pt, order, coeff)
                order_seen.append(k)
        return RationalForm(self.field, self.weight,
                            [acc[k] for k in order_seen],
                            floor=min(self.floor, other.floor),
                            group=self.group or other.group,
                            qg=self.qg if self.qg is not None else other.qg)

    def __mul__(self, other):
        """Product against a simple-pole form, by partial fractions of
        1/((z - p)^m (z - q))."""
        if not isinstance(other, RationalForm):
            return NotImplemented
        if other.field != self.field:
            raise InputError("mixed fields")
        left, right = self, other
        if any(o > 1 for _, o, _ in right.poles):
            left, right = right, left
        if any(o > 1 for _, o, _ in right.poles):
            raise InputError("one factor must have only simple poles")
        K = self.field.precision - 6
        acc = {}
        order_seen = []

        def bump(pk, pt, order, coeff):
            k = (pk, order)
            if k in acc:
                p0, o0, c0 = acc[k]
                acc[k] = (p0, o0, c0 + coeff)
            else:
                acc[k] = (pt, order, coeff)
                order_seen.append(k)

        rlist = [(q.key(K), q, q.value(), rq) for (q, _, rq) in right.poles]
        for (p, m, rp) in left.poles:
            pk = p.key(K)
            pv = p.value()
            for (qk, q, qv, rq) in rlist:
                c = rp * rq
                if qk == pk:
                    bump(pk, p, m + 1, c)
                    continue
                dinv = (qv - pv).inverse()
                run = c * dinv
                if m == 1:
                    bump(qk, q, 1, run)
                    bump(pk, p, 1, -run)
                    continue
                for t in range(m, 0, -1):
                    # run = c * d^(t - m - 1)
                    run = run * dinv
                    bump(pk, p, t, -run)
                bump(qk, q, 1, c * dinv ** m)
        floor = min(left.floor + _gauge(right), right.floor + _gauge(left))
        return RationalForm(self.field, left.weight + right.weight,
                            [acc[k] for k in order_seen], floor=floor,
                            group=self.group or other.group,
                            qg=self.qg if self.qg is not None else other.qg)


def _gauge(form):
    """First-order magnitude bound: the lowest valuation the form can reach
    at unit distance from its poles (0 for a bounded form)."""
    worst = 0
    for pt, order, coeff in form.poles:
        v = min(0, coeff.lower_valuation())
        pv = pt.value().lower_valuation()
        if pv < 0:
            v += order * pv
        worst = min(worst, v)
    return worst


def _projective_gap(x, y):
    """Valuation of the chordal distance between two boundary points; the
    affine difference alone misreads orbits that run off to infinity."""
    if x.is_infinity() and y.is_infinity():
        return INF
    if x.is_infinity() or y.is_infinity():
        fin = y if x.is_infinity() else x
        return -min(0, fin.value().lower_valuation())
    vx = x.value().lower_valuation()
    vy = y.value().lower_valuation()
    return ((x.value() - y.value()).lower_valuation()
            - min(0, vx) - min(0, vy))


def theta_form(group, a, b, L, coset=None):
    """Truncated logarithmic theta derivative: simple poles of weight +1
    along the orbit of a and -1 along the orbit of b, over words of length
    at most L.

    With `coset` set (a generator index), words ending in that generator or
    its inverse are dropped, which sums one representative per coset of the
    generator's cyclic subgroup.  That is the right notion when (a, b) is
    the generator's fixed pair, where the full orbit would repeat every
    pole; the shell diagnostic catches such misuse: `shell_vals[ell]` is
    the smallest chordal gap between paired poles at word length `ell`, and
    the truncation is rejected unless the gaps never drop after the first
    shell and the last has grown past the zeroth.  Stalled steps are
    tolerated (an orbit pair passing near the pole of the next letter), a
    sum that never coalesces at all is not.
    """
    f = group.field
    a = as_point(f, a)
    b = as_point(f, b)
    if a.same_point(b):
        raise InputError("theta needs two distinct points")
    if L < 0:
        raise InputError("negative truncation length")
    words = [()]
    if L:
        words += list(group.reduced_words(L))
    if coset is not None:
        t = coset + 1
        words = [w for w in words if not w or abs(w[-1]) != t]
    one = f.one()
    shells = {}
    poles = []
    for w in words:
        ga = group.act_end(w, a)
        gb = group.act_end(w, b)
        if not ga.is_infinity():
            poles.append((ga, 1, one))
        if not gb.is_infinity():
            poles.append((gb, 1, -one))
        gap = _projective_gap(ga, gb)
        shells[len(w)] = min(shells.get(len(w), INF), gap)
    vals = [shells.get(ell, INF) for ell in range(L + 1)]
    if L >= 2:
        stale = any(vals[ell] > vals[ell + 1] for ell in range(1, L))
        if stale or not vals[L] > vals[0]:
            raise TruncationNotConverged(
                "shell gaps %s do not grow with the word length; the orbit "
                "sum repeats poles or converges too slowly" % (vals,))
    finite = [v for v in vals if v != INF]
    if len(finite) >= 2 and finite[-1] > finite[-2]:
        slope = finite[-1] - finite[-2]
    else:
        slope = max(1, min(group.amps))
    floor = (finite[-1] if finite else 0) + slope
    return RationalForm(f, 2, poles, L=L, shell_vals=vals, floor=floor,
                        group=group)


def theta_basis(group, L):
    """One coset theta per generator, on its fixed pair."""
    return [theta_form(group, att, rep, L, coset=i)
            for i, (att, rep) in enumerate(group.fixed)]


def _pole_residue(pt, order, coeff, i):
    """Residue at p of z^i coeff (z - p)^(-order) dz."""
    if i < order - 1:
        return coeff.field.zero()
    out = coeff * math.comb(i, order - 1)
    k = i - order + 1
    if k:
        out = out * pt.value() ** k
    return out


def residue(form, edge, i):
    """Residue of z^i f dz over the ends through the directed edge (x, y).

    Over a ball this is the sum of classical residues at the enclosed
    poles; over a coball the total-residue theorem turns it into minus the
    sum over the excluded ones, which accounts for the point at infinity
    without ever representing it."""
    x, y = edge
    U = BoundaryOpen.from_edge(x, y)
    total = form.field.zero()
    want = U.kind == "ball"
    for (pt, order, coeff) in form.poles:
        try:
            inside = U.contains(pt)
        except PrecisionExhausted as exc:
            raise PoleOnBoundary(
                "pole %r cannot be separated from the edge at radius %d "
                "(%s); raise the precision or move the edge"
                % (pt, U.radius, exc)) from exc
        if inside == want:
            total = total + _pole_residue(pt, order, coeff, i)
    return total if want else -total


def _min_pole_val(form):
    out = 0
    for pt, _, _ in form.poles:
        out = min(out, pt.value().lower_valuation())
    return out


def _residue_row(form, x, y, n):
    """All components Res(z^r f dz) * C(n - 2, r) for one edge, with a
    single membership decision per pole."""
    f = form.field
    U = BoundaryOpen.from_edge(x, y)
    want = U.kind == "ball"
    totals = [f.zero()] * (n - 1)
    for (pt, order, coeff) in form.poles:
        try:
            inside = U.contains(pt)
        except PrecisionExhausted as exc:
            raise PoleOnBoundary(
                "pole %r cannot be separated from the edge at radius %d "
                "(%s); raise the precision or move the edge"
                % (pt, U.radius, exc)) from exc
        if inside != want:
            continue
        pv = pt.value()
        power = f.one()
        for r in range(order - 1, n - 1):
            term = coeff * (math.comb(r, order - 1) * math.comb(n - 2, r))
            if r - order + 1:
                term = term * power
            totals[r] = totals[r] + term
            power = power * pv if r - order + 1 else pv
    if not want:
        totals = [-t for t in totals]
    return tuple(totals)


def res_map(form, n=None, qg=None):
    """Cocycle of residue vectors: component i of the value on a germ is
    Res(z^i f dz) over the germ's boundary open, scaled by C(n - 2, i) so
    that moving the edge acts through `weight_action_matrix`."""
    if n is None:
        n = form.weight
    _check_weight(n)
    qg = qg if qg is not None else form.qg
    group = form.group
    if qg is None or group is None:
        raise InputError("res_map needs a quotient graph (pass qg=)")
    vals = {}
    for i in sorted(qg.germs):
        x = qg.reps[i]
        for g in qg.germs[i]:
            vals[g] = _residue_row(form, x, g[1], n)
    floor = form.floor
    if floor != INF:
        floor = floor + min(0, (n - 2) * _min_pole_val(form))
    return HarmonicCocycle(group, qg, n, vals, floor=floor)


# -- poisson -------------------------------------------------------------------


def _dart_levels(qg, depth):
    """Darts of the window tree pointing away from the base vertex, per
    level, each as (germ, word): the tree dart is word(rep) -> word(n)."""
    base = qg.rep_pos[qg.base_rep()]
    level = [(g, ()) for g in qg.germs[base]]
    out = [level]
    for _ in range(depth):
        nxt = []
        for (g, w) in level:
            g2, delta = qg.pairing[g]
            w2 = word_mul(w, delta)
            for h in qg.germs[g2[0]]:
                if h != g2:
                    nxt.append((h, w2))
        level = nxt
        out.append(level)
    return out


def _apply_end(group, word, end):
    # composed matrices are only safe while the determinant valuation stays
    # well inside the precision window; otherwise apply letter by letter
    budget = group.field.precision // 2
    if sum(group.amps[abs(s) - 1] for s in word) <= budget:
        return group.act_end(word, end)
    for s in reversed(word):
        end = group.element((s,)).apply(end)
    return end


class _EndSampler:
    """One finite limit point per dart open.

    Follow the quotient walk onward from the dart until a germ repeats; the
    loop word is a hyperbolic element whose attracting end, pushed back
    through the walk prefix and the dart word, lies in the open.  `pick`
    deviates at the first branching vertex, so retries avoid the one walk
    whose end comes out infinite."""

    def __init__(self, group, qg):
        self.group = group
        self.qg = qg
        self.memo = {}

    def _local_end(self, germ, pick):
        key = (germ, pick)
        if key in self.memo:
            return self.memo[key]
        qg = self.qg
        seen = {}
        w = ()
        g = germ
        deviate = pick
        for _ in range(4 * len(qg.pairing) + 8):
            if g in seen:
                loop = word_mul(word_inverse(seen[g]), w)
                end = self.group.element(loop).fixed_points()[0]
                out = _apply_end(self.group, seen[g], end)
                self.memo[key] = out
                return out
            seen[g] = w
            g2, delta = qg.pairing[g]
            w = word_mul(w, delta)
            options = [h for h in qg.germs[g2[0]] if h != g2]
            k = 0
            if deviate and len(options) > 1:
                k = min(deviate, len(options) - 1)
                deviate = 0
            g = options[k]
        raise InputError("quotient walk failed to close on itself")

    def end_in(self, germ, word):
        for pick in range(6):
            out = _apply_end(self.group, word, self._local_end(germ, pick))
            if not out.is_infinity():
                return out
        raise InputError("no finite limit point found in the dart open")


def poisson(c, z, depth):
    """Value at z of the weight-2 differential with residue cocycle c.

    The boundary distribution mu(U(e)) = c(e) is paired with the kernel
    1/(z - x), sampling one limit point per dart at each level up to
    `depth`.  The point must stay outside every depth-level open, and the
    partial sums must gain digits from the first level to the last.
    """
    if c.weight != 2:
        raise InputError("poisson needs a weight-2 cocycle")
    if depth < 2:
        raise InputError("depth must be at least 2")
    G = c.group
    f = G.field
    z = as_point(f, z)
    if z.is_infinity():
        raise InputError("evaluate at a finite point")
    zv = z.value()
    qg = c.qg
    levels = _dart_levels(qg, depth)
    for (g, w) in levels[-1]:
        x = G.act(w, qg.reps[g[0]])
        y = G.act(w, g[1])
        if BoundaryOpen.from_edge(x, y).contains(z):
            raise InputError(
                "the point lies inside a depth-%d boundary open and is not "
                "separated from the limit set" % depth)
    sampler = _EndSampler(G, qg)
    sums = []
    for level in levels:
        s = f.zero()
        for (g, w) in level:
            xe = sampler.end_in(g, w)
            s = s + c.values[g][0] / (zv - xe.value())
        sums.append(s)
    diffs = [(b - a).lower_valuation() for a, b in zip(sums, sums[1:])]
    # the first refinements only reshuffle mass, so the gain is certified
    # from three levels on
    if len(diffs) >= 3 and diffs[-1] != INF and not diffs[-1] > diffs[0]:
        raise NotConverged(
            "truncated boundary sums gained no digits (level-to-level "
            "valuations %s); the cocycle may not be harmonic" % (diffs,))
    return sums[-1]


def poisson_form(c, depth):
    """The differential behind `poisson` as a pole list: one simple pole
    per depth-`depth` dart, at a sampled limit point of its open, weighted
    by the dart's value."""
    if c.weight != 2:
        raise InputError("poisson_form needs a weight-2 cocycle")
    G = c.group
    qg = c.qg
    sampler = _EndSampler(G, qg)
    poles = []
    for (g, w) in _dart_levels(qg, depth)[-1]:
        coeff = c.values[g][0]
        if coeff.is_exact_zero():
            continue
        poles.append((sampler.end_in(g, w), 1, coeff))
    return RationalForm(G.field, 2, poles, L=depth, floor=max(0, depth - 2),
                        group=G, qg=qg)


# -- products and kernels -----------------------------------------------------


def _span_coefficients(target, basis_coords, field, what):
    """Coefficients writing the target coordinate vector in the basis."""
    cols = list(basis_coords) + [target]
    rows = [[col[k] for col in cols] for k in range(len(target))]
    vecs, _ = nullspace(rows, floor=field.precision - 8)
    if len(vecs) != 1:
        raise RankAmbiguous(
            "%s is not uniquely a combination of the basis (kernel "
            "dimension %d)" % (what, len(vecs)))
    lam = vecs[0]
    g = len(basis_coords)
    if lam[g].is_exact_zero():
        raise RankAmbiguous("the %s basis itself is dependent" % what)
    return [-(lam[i] / lam[g]) for i in range(g)]


def _represent(c, thetas, rs):
    """Theta-combination form with the same weight-2 residues as c."""
    f = c.group.field
    a = _span_coefficients(c.coordinates(), [r.coordinates() for r in rs],
                           f, "the cocycle")
    out = None
    for coeff, t in zip(a, thetas):
        term = t.scale(coeff)
        out = term if out is None else out + term
    return out


def product_map(cs, L=None, qg=None):
    """Pointwise product of weight-2 cocycles, through differentials.

    Each factor is solved in the residue coordinates of the coset theta
    basis, the representing forms are multiplied, and the product's
    residue cocycle of weight 2 * len(cs) is returned (with the form on its
    `form` attribute)."""
    if not cs:
        raise InputError("empty product")
    G = cs[0].group
    qg = qg if qg is not None else cs[0].qg
    for c in cs:
        if c.weight != 2:
            raise InputError("product factors must have weight 2")
        if c.group is not G:
            raise InputError("factors live on different groups")
    if L is None:
        L = 3
    thetas, rs, _ = _theta_setup(G, L, qg)
    forms = [_represent(c, thetas, rs) for c in cs]
    F = forms[0]
    for other in forms[1:]:
        F = F * other
    out = res_map(F, 2 * len(cs), qg=qg)
    out.form = F
    return out


def sym_monomials(g, d):
    """Degree-d monomials in g letters, as sorted index tuples."""
    return list(itertools.combinations_with_replacement(range(g), d))


def sym_lift(vec, g, d, j):
    """Coefficient vector of the j-th letter times a degree-d polynomial."""
    src = sym_monomials(g, d)
    pos = {m: k for k, m in enumerate(sym_monomials(g, d + 1))}
    zero = vec[0].field.zero()
    out = [zero] * len(pos)
    for k, mono in enumerate(src):
        t = pos[tuple(sorted(mono + (j,)))]
        out[t] = out[t] + vec[k]
    return out


class KernelBasis:
    """Polynomials in the weight-2 flow basis killed by the product map."""

    def __init__(self, degree, monomials, vectors, pivot_vals, floor, L,
                 target_dim, margin=None):
        self.degree = degree
        self.monomials = monomials
        self.vectors = vectors
        self.pivot_vals = pivot_vals
        self.floor = floor
        self.L = L
        self.target_dim = target_dim
        self.rank = len(pivot_vals)
        self.map_corank = target_dim - self.rank
        if margin is not None:
            self.margin = margin
        elif pivot_vals and floor != INF:
            self.margin = floor - max(pivot_vals)
        else:
            self.margin = INF

    def __repr__(self):
        return ("KernelBasis(degree=%d, dim=%d, rank=%d/%d, margin=%s, "
                "L=%s)" % (self.degree, len(self.vectors), self.rank,
                           self.target_dim, self.margin, self.L))


def _group_cache(group):
    cache = getattr(group, "_product_cache", None)
    if cache is None:
        cache = {}
        group._product_cache = cache
    return cache


def _theta_setup(group, L, qg):
    """Theta basis at truncation L, its residue coordinates, and the flow
    basis written in those coordinates (cached on the group)."""
    cache = _group_cache(group)
    key = ("setup", L)
    out = cache.get(key)
    if out is None:
        f = group.field
        thetas = theta_basis(group, L)
        rs = [res_map(t, 2, qg=qg) for t in thetas]
        basis_coords = [r.coordinates() for r in rs]
        coeffs = [_span_coefficients(c.coordinates(), basis_coords, f,
                                     "a flow")
                  for c in cocycle_basis_w2(group, qg=qg)]
        out = (thetas, rs, coeffs)
        cache[key] = out
    return out


def _theta_product(group, L, qg, mono):
    cache = _group_cache(group)
    key = ("prod", L, mono)
    out = cache.get(key)
    if out is None:
        thetas = _theta_setup(group, L, qg)[0]
        if len(mono) == 1:
            out = thetas[mono[0]]
        else:
            out = _theta_product(group, L, qg, mono[:-1]) * thetas[mono[-1]]
        cache[key] = out
    return out


def _kernel_attempt(group, degree, L, qg):
    f = group.field
    g = group.genus
    coeffs = _theta_setup(group, L, qg)[2]
    monos = sym_monomials(g, degree)
    cache = _group_cache(group)
    rescoords = {}
    resfloor = {}
    for mono in monos:
        key = ("res", L, 2 * degree, mono)
        hit = cache.get(key)
        if hit is None:
            cm = res_map(_theta_product(group, L, qg, mono), 2 * degree,
                         qg=qg)
            hit = (cm.coordinates(), cm.floor)
            cache[key] = hit
        rescoords[mono], resfloor[mono] = hit
    dim = len(rescoords[monos[0]])
    # a pole orbit running off to infinity makes both the residues and the
    # truncation noise of a monomial large; every column is rescaled by an
    # exact power of pi onto the common noise floor so that the pivoting
    # and the margins compare like with like
    cols = []
    col_floors = []
    for mono in monos:
        acc = [f.zero()] * dim
        cf = INF
        for combo in itertools.product(range(g), repeat=degree):
            coef = coeffs[mono[0]][combo[0]]
            for pos in range(1, degree):
                coef = coef * coeffs[mono[pos]][combo[pos]]
            skey = tuple(sorted(combo))
            cf = min(cf, coef.lower_valuation() + resfloor[skey])
            vec = rescoords[skey]
            for k in range(dim):
                acc[k] = acc[k] + coef * vec[k]
        cols.append(acc)
        col_floors.append(cf)
    nm = len(monos)
    if INF in col_floors:
        shifts = [0] * nm
        floor = INF
    else:
        floor = min(col_floors)
        shifts = [floor - cf for cf in col_floors]
    rows = [[cols[m][k].shift(shifts[m]) for m in range(nm)]
            for k in range(dim)]
    vecs, pivots = nullspace(rows, floor=floor, margin=4)
    if not pivots and any(not e.is_exact_zero() and e.lower_valuation() != INF
                          for col in cols for e in col):
        raise RankAmbiguous(
            "every product residue sits below the truncation floor at L=%d"
            % L)
    vectors = [[x.shift(shifts[m]) for m, x in enumerate(v)] for v in vecs]
    margin = INF
    if pivots and floor != INF:
        margin = floor - max(v for _, v in pivots)
    pivot_vals = [v - shifts[col] for col, v in pivots]
    target = (2 * degree - 1) * (group.genus - 1)
    return KernelBasis(degree, monos, vectors, pivot_vals, floor, L,
                       target, margin=margin)


def _kernel_stable(a, b):
    if a.rank != b.rank or len(a.vectors) != len(b.vectors):
        return False
    if not a.pivot_vals:
        return True
    return max(a.pivot_vals) == max(b.pivot_vals)


def kernel(group, degree, L=None, qg=None):
    """Kernel of the degree-d product map on the flow basis.

    Without an explicit L the truncation length is raised until the rank
    decision agrees for two consecutive rounds (dimension and the worst
    pivot valuation both stable); every round re-checks that the pivots
    clear the truncation floor by the standard margin."""
    if degree not in (2, 3, 4):
        raise InputError("degree must be 2, 3 or 4")
    qg = qg if qg is not None else quotient_graph(group)
    if L is not None:
        return _kernel_attempt(group, degree, L, qg)
    prev = None
    for Lk in (1, 2, 3, 4):
        try:
            cur = _kernel_attempt(group, degree, Lk, qg)
        except RankAmbiguous:
            prev = None
            continue
        if prev is not None and _kernel_stable(prev, cur):
            return cur
        prev = cur
    raise RankAmbiguous(
        "kernel rank did not stabilize over consecutive truncation lengths "
        "up to L=4; raise the precision")
