"""Schottky groups acting on the tree: certificates, quotients, growth.

A certificate is, per generator, a directed tree edge pointing at the
repelling end plus the reversal of its image edge.  The two boundary opens
cut out by these edges satisfy the ping-pong identities by construction, so
the certificate is valid as soon as the 2g opens are pairwise disjoint;
disjointness of the opens is equivalent to disjointness of the half-trees
behind the edges.

Orbit identification uses the resulting fundamental region: a vertex
strictly behind the edge toward a repelling end has a reduced word starting
with that generator's inverse, so applying the generator strips one letter.
Words of length two and more move the closed region off itself, hence after
stripping, at most single-generator images can still glue, and the orbit
representative is the lexicographic minimum over that one-step closure.
"""
from __future__ import annotations

import math

from .errors import (
    InputError,
    NoCertificateFound,
    NotHyperbolic,
    NotPairwiseDistinct,
    WindowTooSmall,
)
from .graph import MultiGraph, perron_root
from .moebius import MoebiusMap
from .tree import (
    ROOT,
    BoundaryOpen,
    act_vertex,
    distance,
    median_of_ends,
    project_to_line,
    ray,
)


# -- free group words ----------------------------------------------------------

def reduce_word(letters):
    out = []
    for s in letters:
        if out and out[-1] == -s:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def word_inverse(w):
    return tuple(-s for s in reversed(w))


def word_mul(*ws):
    out = []
    for w in ws:
        for s in w:
            if out and out[-1] == -s:
                out.pop()
            else:
                out.append(s)
    return tuple(out)


class SchottkyGroup:
    """A finitely generated group of hyperbolic Moebius maps, presented by
    its generators (assumed free once a certificate is found)."""

    def __init__(self, field, generators):
        if not generators:
            raise InputError("need at least one generator")
        self.field = field
        self.gens = list(generators)
        self.fixed = []
        self.amps = []
        for i, g in enumerate(self.gens):
            if not g.is_hyperbolic():
                raise NotHyperbolic("generator %d is not hyperbolic" % (i + 1),
                                    index=i)
            self.fixed.append(g.fixed_points())
            self.amps.append(g.amplitude())
        self._letter = {}
        for i, g in enumerate(self.gens):
            self._letter[i + 1] = g
            self._letter[-(i + 1)] = g.inverse()
        self._elem = {}
        self._acts = {}
        self._v0 = None

    @property
    def genus(self):
        return len(self.gens)

    def letters(self):
        out = []
        for i in range(1, self.genus + 1):
            out.append(i)
            out.append(-i)
        return out

    def element(self, word):
        word = tuple(word)
        if word in self._elem:
            return self._elem[word]
        if not word:
            g = MoebiusMap.identity(self.field)
        elif len(word) == 1:
            g = self._letter[word[0]]
        else:
            g = self.element(word[:-1]) * self._letter[word[-1]]
        self._elem[word] = g
        return g

    def act_letter(self, t, vertex):
        key = (t, vertex)
        out = self._acts.get(key)
        if out is None:
            out = act_vertex(self._letter[t], vertex)
            self._acts[key] = out
            self._acts[(-t, out)] = vertex
        return out

    def act(self, word, vertex):
        """Apply a word; composed matrices are only safe while their
        determinant valuation stays well inside the precision window."""
        word = tuple(word)
        budget = self.field.precision // 2
        if 1 < len(word) and sum(self.amps[abs(s) - 1] for s in word) <= budget:
            return act_vertex(self.element(word), vertex)
        for s in reversed(word):
            vertex = self.act_letter(s, vertex)
        return vertex

    def act_end(self, word, end):
        return self.element(word).apply(end)

    def reduced_words(self, max_len):
        """All nonempty reduced words of length <= max_len."""
        frontier = [(s,) for s in self.letters()]
        for w in frontier:
            yield w
        for _ in range(max_len - 1):
            nxt = []
            for w in frontier:
                for s in self.letters():
                    if s != -w[-1]:
                        nxt.append(w + (s,))
                        yield w + (s,)
            frontier = nxt

    def base_vertex(self):
        """Median of a triple of generator fixed ends (a canonical anchor)."""
        if self._v0 is not None:
            return self._v0
        ends = []
        for att, rep in self.fixed:
            ends.extend([att, rep])
        if self.genus == 1:
            self._v0 = project_to_line(ROOT, ends[0], ends[1], self.field)
            return self._v0
        for k in range(2, len(ends)):
            try:
                self._v0 = median_of_ends(self.field, ends[0], ends[1],
                                          ends[k])
                return self._v0
            except NotPairwiseDistinct:
                continue
        raise NotPairwiseDistinct("generators share their fixed points")

    def axis_anchor(self, i):
        att, rep = self.fixed[i]
        return project_to_line(self.base_vertex(), att, rep, self.field)


# -- certificates ------------------------------------------------------------------


def _in_halftree(v, edge):
    x, y = edge
    return distance(v, y) < distance(v, x)


class Certificate:
    """Ping-pong data: for generator i, `edges_minus[i]` points at the
    repelling end and `edges_plus[i]` is the reversed image edge."""

    def __init__(self, group, edges_minus, edges_plus):
        self.group = group
        self.edges_minus = list(edges_minus)
        self.edges_plus = list(edges_plus)
        self.opens_minus = [BoundaryOpen.from_edge(*e) for e in self.edges_minus]
        self.opens_plus = [BoundaryOpen.from_edge(*e) for e in self.edges_plus]

    def all_opens(self):
        return list(self.opens_minus) + list(self.opens_plus)

    def is_valid(self):
        opens = self.all_opens()
        for i in range(len(opens)):
            for j in range(i + 1, len(opens)):
                if not opens[i].disjoint(opens[j]):
                    return False
        return True

    def diameter(self):
        pts = [v for e in self.edges_minus + self.edges_plus for v in e]
        return max(distance(a, b) for a in pts for b in pts)

    def margin(self):
        """Smallest edge-to-edge distance between distinct half-trees."""
        pts = [e[1] for e in self.edges_minus + self.edges_plus]
        best = None
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                d = distance(pts[i], pts[j])
                if best is None or d < best:
                    best = d
        return best

    # -- orbit identification -------------------------------------------------

    def strip_letter(self, v):
        """The letter to apply to move v one word-length closer to the
        fundamental region, or None if v is already in it."""
        for i in range(self.group.genus):
            if _in_halftree(v, self.edges_minus[i]):
                return i + 1
            if _in_halftree(v, self.edges_plus[i]):
                return -(i + 1)
        return None

    def in_domain(self, v):
        return self.strip_letter(v) is None

    def reduce_vertex(self, v, memo=None):
        """(representative, word w) with v = w(representative)."""
        if memo is not None and v in memo:
            return memo[v]
        path = []
        u = v
        while True:
            if memo is not None and u in memo:
                rep, w = memo[u]
                break
            t = self.strip_letter(u)
            if t is None:
                rep, w = self._glue(u, memo)
                break
            path.append((u, t))
            u = self.group.act_letter(t, u)
            if len(path) > 100000:
                raise AssertionError("reduction did not terminate")
        for x, t in reversed(path):
            w = word_mul((-t,), w)
            if memo is not None:
                memo[x] = (rep, w)
        return rep, w

    def _glue(self, u, memo=None):
        """Identify single-letter images inside the fundamental region and
        pick the least; longer words cannot glue two interior vertices."""
        cands = {u: ()}
        frontier = [u]
        while frontier:
            x = frontier.pop()
            wx = cands[x]
            for t in self.group.letters():
                y = self.group.act_letter(t, x)
                if y not in cands and self.strip_letter(y) is None:
                    cands[y] = word_mul(wx, (-t,))
                    frontier.append(y)
        rep = min(cands)
        wr = cands[rep]
        out = {}
        for x, wx in cands.items():
            out[x] = (rep, word_mul(word_inverse(wx), wr))
        if memo is not None:
            memo.update(out)
        return out[u]


def _axis_chain(group, i, radius):
    """Axis vertices indexed by signed position; positive toward the
    repelling end."""
    anchor = group.axis_anchor(i)
    att, rep = group.fixed[i]
    chain = {0: anchor}
    fwd = ray(anchor, rep)
    next(fwd)
    for k in range(1, radius + 2):
        chain[k] = next(fwd)
    bwd = ray(anchor, att)
    next(bwd)
    for k in range(1, radius + 1):
        chain[-k] = next(bwd)
    return chain


def find_certificate(group, search_radius=None):
    """Place one edge on each axis so the 2g half-trees are disjoint.

    The edge toward the repelling end and the reversal of its image bracket
    an axis segment of length equal to the amplitude; only the bracket's
    position is free, so the search slides each bracket independently and
    backtracks across generators, centered positions first.
    """
    if search_radius is None:
        search_radius = max(8, max(group.amps) + 4)
    g = group.genus
    cands = []
    for i in range(g):
        chain = _axis_chain(group, i, search_radius)
        gi = group.gens[i]
        lst = []
        for k in sorted(range(-search_radius, search_radius + 1),
                        key=lambda x: (abs(x), x)):
            x, y = chain[k], chain[k + 1]
            gx, gy = act_vertex(gi, x), act_vertex(gi, y)
            A = BoundaryOpen.from_edge(x, y)
            B = BoundaryOpen.from_edge(gy, gx)
            if not A.disjoint(B):
                continue
            lst.append(((x, y), (gy, gx), A, B))
        cands.append(lst)
    chosen = []

    def fits(c):
        for prev in chosen:
            for o1 in (c[2], c[3]):
                for o2 in (prev[2], prev[3]):
                    if not o1.disjoint(o2):
                        return False
        return True

    def dfs(i):
        if i == g:
            return True
        for c in cands[i]:
            if fits(c):
                chosen.append(c)
                if dfs(i + 1):
                    return True
                chosen.pop()
        return False

    if dfs(0):
        return Certificate(group, [c[0] for c in chosen],
                           [c[1] for c in chosen])
    raise NoCertificateFound(
        "no disjoint edge system within radius %d of the axes"
        % search_radius)


# -- quotient graph -----------------------------------------------------------------


class QuotientGraph:
    """The quotient of the invariant subtree, with germ-level gluing data.

    A directed germ is (rep index, neighbor tree vertex).  `pairing` sends a
    germ to (partner germ, word) where crossing the quotient edge from the
    germ's side arrives at the partner's vertex and the word w satisfies
    neighbor = w(partner rep).
    """

    def __init__(self, group, cert, reps, edges):
        self.group = group
        self.cert = cert
        self.reps = reps
        self.rep_pos = {r: i for i, r in enumerate(reps)}
        self.edges = edges  # ((i1, n1), (i2, n2), word)
        self.pairing = {}
        germs = {}
        for (g1, g2, w) in edges:
            self.pairing[g1] = (g2, w)
            self.pairing[g2] = (g1, word_inverse(w))
            germs.setdefault(g1[0], set()).add(g1)
            germs.setdefault(g2[0], set()).add(g2)
        self.germs = {i: sorted(gs, key=lambda g: g[1].key())
                      for i, gs in germs.items()}

    def degree(self, i):
        return len(self.germs.get(i, ()))

    def multigraph(self):
        g = MultiGraph()
        for r in self.reps:
            g.add_vertex(r)
        for (g1, g2, w) in self.edges:
            g.add_edge(g1[0], g2[0], 1, (g1, g2, w))
        return g

    def metric_graph(self):
        return self.multigraph().smoothed()

    def betti(self):
        return self.multigraph().betti()

    def base_rep(self):
        """Representative of the group's base vertex orbit."""
        rep, _ = self.cert.reduce_vertex(self.group.base_vertex())
        return rep


def _window(group, cert, v0, radius):
    ends = {}
    for w in group.reduced_words(2):
        if w > word_inverse(w):
            continue
        g = group.element(w)
        att, rep = g.fixed_points()
        for e in (att, rep):
            ends[e.key()] = e
    ends = [ends[k] for k in sorted(ends, key=repr)]
    W = set()
    for i in range(len(ends)):
        for j in range(i + 1, len(ends)):
            xi, eta = ends[i], ends[j]
            if xi.same_point(eta):
                continue
            proj = project_to_line(v0, xi, eta, group.field)
            if distance(v0, proj) > radius:
                continue
            for end in (xi, eta):
                for v in ray(proj, end):
                    if distance(v0, v) > radius:
                        break
                    W.add(v)
    frontier = list(W)
    while frontier:
        v = frontier.pop()
        for t in group.letters():
            u = group.act_letter(t, v)
            if u not in W and distance(v0, u) <= radius:
                W.add(u)
                frontier.append(u)
    return W


def _build_quotient(group, cert, v0, radius, memo=None):
    W = _window(group, cert, v0, radius)
    if memo is None:
        memo = {}

    def red(v):
        return cert.reduce_vertex(v, memo)

    edge_records = {}
    reps = set()
    for v in W:
        for u in v.neighbors(group.field):
            if not (v < u) or u not in W:
                continue
            r1, w1 = red(v)
            r2, w2 = red(u)
            n1 = group.act(word_inverse(w1), u)
            n2 = group.act(word_inverse(w2), v)
            delta = word_mul(word_inverse(w1), w2)
            reps.add(r1)
            reps.add(r2)
            k1 = (r1.key(), n1.key())
            k2 = (r2.key(), n2.key())
            key = tuple(sorted((k1, k2)))
            if key not in edge_records:
                edge_records[key] = (r1, n1, r2, n2, delta)
    reps = sorted(reps)
    pos = {r: i for i, r in enumerate(reps)}
    edges = []
    for key in sorted(edge_records):
        r1, n1, r2, n2, delta = edge_records[key]
        edges.append(((pos[r1], n1), (pos[r2], n2), delta))
    return QuotientGraph(group, cert, reps, edges)


def quotient_graph(group, cert=None, radius=None, stability=True):
    """Quotient of the invariant subtree by the group.

    With the default radius the window grows until two consecutive builds
    agree; an explicit radius is honored as given and the build fails with
    WindowTooSmall when it cannot reach the expected first Betti number.
    """
    if cert is None:
        cert = find_certificate(group)
    v0 = group.base_vertex()
    if radius is not None:
        qg = _build_quotient(group, cert, v0, radius)
        if qg.betti() != group.genus:
            raise WindowTooSmall(
                "quotient has first Betti number %d, expected %d (radius %d)"
                % (qg.betti(), group.genus, radius))
        return qg
    R = cert.diameter() + 2
    attempts = 4
    prev = None
    memo = {}
    for _ in range(attempts):
        qg = _build_quotient(group, cert, v0, R, memo)
        if not stability:
            return qg
        key = qg.multigraph().canonical_key()[0]
        if prev is not None and key == prev[1] and \
                qg.betti() == group.genus:
            return prev[0]
        prev = (qg, key)
        R += 2
    if prev[0].betti() == group.genus:
        raise WindowTooSmall(
            "quotient did not stabilize at window radius %d" % R)
    raise WindowTooSmall(
        "quotient has first Betti number %d, expected %d (radius %d)"
        % (prev[0].betti(), group.genus, R))


# -- growth ----------------------------------------------------------------------


def growth_data(group, cert):
    """Per-letter and per-letter-pair geodesic contributions.

    The geodesic from the base vertex to w(v0) crosses the nested images of
    the certificate edges, one per letter, so its length decomposes as
    a(first) + len(w) + sum of gap(t_{j-1}, t_j) + b(last).
    """
    v0 = group.base_vertex()
    letters = group.letters()
    eps = {}
    for i in range(group.genus):
        eps[-(i + 1)] = cert.edges_minus[i]
        eps[i + 1] = cert.edges_plus[i]
    a = {t: distance(v0, eps[t][0]) for t in letters}
    b = {t: distance(eps[t][1], group.act_letter(t, v0)) for t in letters}
    gap = {}
    for s in letters:
        for t in letters:
            if t != -s:
                gap[(s, t)] = distance(eps[s][1],
                                       group.act_letter(s, eps[t][0]))
    return a, b, gap


def orbit_histogram(group, cert, R):
    """{d: number of reduced words w with d(v0, w v0) = d} for d <= R,
    identity included; dynamic programming over (last letter, partial)."""
    a, b, gap = growth_data(group, cert)
    letters = group.letters()
    min_b = min(b.values())
    hist = {0: 1}
    cur = {}
    for t in letters:
        if a[t] + 1 + min_b <= R:
            cur[t] = {a[t] + 1: 1}
    while cur:
        for t, byp in cur.items():
            for p, c in byp.items():
                d = p + b[t]
                if d <= R:
                    hist[d] = hist.get(d, 0) + c
        nxt = {}
        for t, byp in cur.items():
            for s in letters:
                if s == -t:
                    continue
                step = gap[(t, s)] + 1
                for p, c in byp.items():
                    p2 = p + step
                    if p2 + min_b <= R:
                        d2 = nxt.setdefault(s, {})
                        d2[p2] = d2.get(p2, 0) + c
        cur = nxt
    return hist


def orbit_count(group, cert, R):
    """Number of orbit points of the base vertex within distance R."""
    hist = orbit_histogram(group, cert, R)
    return sum(c for d, c in hist.items() if d <= R)


def critical_exponent_exact(qg):
    """log of the Perron root of the non-backtracking matrix of the
    quotient graph; 0 below rank two, where orbit growth is polynomial."""
    if qg.betti() <= 1:
        return 0.0
    M, _ = qg.multigraph().nb_matrix()
    return math.log(perron_root(M))


def critical_exponent_estimate(group, cert, R_max):
    """Orbit-growth estimate max over R in [R_max/2, R_max] of
    log(n(R)) / R."""
    hist = orbit_histogram(group, cert, R_max)
    best = 0.0
    n = 0
    for r in range(R_max + 1):
        n += hist.get(r, 0)
        if r >= max(1, R_max // 2) and n > 1:
            best = max(best, math.log(n) / r)
    return best
