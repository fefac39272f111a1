"""Patterson-Sullivan measure on the limit set and conformality diagnostics.

The measure lives on the ends of the spanned subtree and is stored through
the quotient: a positive weight per directed quotient edge (the Perron
eigenvector of the non-backtracking transition matrix), extended to tree
edges by equivariance and scaled by lambda^-depth.  Additivity across
refinement then holds by the eigenvector equation, and the group scales the
measure of a small open by an integer power of lambda (the Busemann exponent
of the element at the open, taken at the measure's own base vertex).

Floats only; nothing here feeds an exact decision.
"""
from __future__ import annotations

import math

import numpy

from .errors import DegenerateSpectrum, InputError
from .schottky import (
    critical_exponent_estimate,
    critical_exponent_exact,
    find_certificate,
    orbit_histogram,
    quotient_graph,
    word_inverse,
)
from .tree import distance, geodesic


class ConformalMeasure:
    """Weights for boundary opens U(e) over tree edges of the window."""

    def __init__(self, group, cert, qg, lam, dart_weight, base_class):
        self.group = group
        self.cert = cert
        self.qg = qg
        self.lam = lam
        self.dimension = math.log(lam)
        self.dart_weight = dart_weight  # germ -> depth-0 weight, normalized
        self.base_class = base_class
        self.base = qg.reps[base_class]
        self._memo = {}

    def germ_of(self, x, y):
        """Quotient germ of the directed tree edge x -> y."""
        rep, w = self.cert.reduce_vertex(x, self._memo)
        n = self.group.act(word_inverse(w), y)
        return (self.qg.rep_pos[rep], n)

    def open_weight(self, x, y):
        """Measure of the ends through the directed edge x -> y."""
        if distance(x, y) != 1:
            raise InputError("not a tree edge")
        if distance(self.base, y) == distance(self.base, x) + 1:
            depth = distance(self.base, x)
            return self.dart_weight[self.germ_of(x, y)] * self.lam ** (-depth)
        return 1.0 - self.open_weight(y, x)

    def neighbors_in_window(self, x):
        """Tree neighbors of a window vertex inside the spanned subtree."""
        rep, w = self.cert.reduce_vertex(x, self._memo)
        i = self.qg.rep_pos[rep]
        return [self.group.act(w, n) for (_, n) in self.qg.germs[i]]

    def sample_edges(self, depth):
        """All directed window edges pointing away from the base at the
        given depth."""
        frontier = [(self.base, None)]
        for _ in range(depth):
            nxt = []
            for x, parent in frontier:
                for y in self.neighbors_in_window(x):
                    if y != parent:
                        nxt.append((y, x))
            frontier = nxt
        out = []
        for x, parent in frontier:
            for y in self.neighbors_in_window(x):
                if y != parent:
                    out.append((x, y))
        return out

    def extend_away(self, x, y, target_depth):
        """Deterministically extend the edge x -> y away from the base until
        its endpoint reaches the target depth."""
        while distance(self.base, y) < target_depth:
            nxt = [z for z in self.neighbors_in_window(y) if z != x]
            x, y = y, min(nxt, key=lambda v: v.key())
        return y


def patterson_sullivan(group, cert=None, qg=None, base_class=None):
    """Conformal measure of dimension e(Gamma) from the Perron eigenvector
    of the non-backtracking transition matrix of the quotient."""
    if cert is None:
        cert = find_certificate(group)
    if qg is None:
        qg = quotient_graph(group, cert)
    mg = qg.multigraph()
    M, darts = mg.nb_matrix()
    evals, evecs = numpy.linalg.eig(M)
    reals = evals.real
    reals[abs(evals.imag) > 1e-9 * (1 + abs(evals))] = -numpy.inf
    top = int(numpy.argmax(reals))
    lam = float(reals[top])
    if lam <= 1.0 + 1e-12:
        raise DegenerateSpectrum("Perron root %.6f not above 1" % lam)
    close = numpy.sum(numpy.abs(evals - lam) < 1e-8 * lam)
    if close != 1:
        raise DegenerateSpectrum(
            "Perron root multiplicity %d" % int(close))
    r = evecs[:, top].real
    if r[int(numpy.argmax(numpy.abs(r)))] < 0:
        r = -r
    if numpy.min(r) <= 1e-12 * numpy.max(r):
        raise DegenerateSpectrum("Perron eigenvector not strictly positive")

    pos = {d: i for i, d in enumerate(darts)}
    germ_w = {}
    for ei, (g1, g2, _) in enumerate(qg.edges):
        germ_w[g1] = r[pos[(ei, 0)]]
        germ_w[g2] = r[pos[(ei, 1)]]
    if base_class is None:
        base_class = qg.rep_pos[qg.base_rep()]
    mass = sum(germ_w[g] for g in qg.germs[base_class])
    germ_w = {g: w / mass for g, w in germ_w.items()}
    return ConformalMeasure(group, cert, qg, lam, germ_w, base_class)


def conformality_defect(mu, word, depth=4):
    """Max over sampled opens of the relative error in
    mu(gamma U) = lambda^j mu(U), j the Busemann exponent at the open.

    An open is split into its children whenever the geodesic from the base
    to gamma^-1(base) runs through it, since j is only constant on opens
    past that geodesic.
    """
    word = tuple(word)
    if not word:
        return 0.0
    G = mu.group
    x0 = mu.base
    back = G.act(word_inverse(word), x0)
    path_back = geodesic(x0, back)
    L = len(path_back) - 1
    worst = 0.0
    stack = list(mu.sample_edges(depth))
    while stack:
        x, y = stack.pop()
        toward = geodesic(x0, y)
        k = 0
        for i, (pv, rv) in enumerate(zip(path_back, toward)):
            if pv == rv:
                k = i
            else:
                break
        if k == len(toward) - 1 and L > k:
            # the open still contains the tail of the geodesic: refine
            stack.extend((y, z) for z in mu.neighbors_in_window(y) if z != x)
            continue
        j = 2 * k - L
        m_u = mu.open_weight(x, y)
        m_gu = mu.open_weight(G.act(word, x), G.act(word, y))
        worst = max(worst, abs(m_gu - mu.lam ** j * m_u) / m_u)
    return worst


def refinement_defect(mu, depth=4):
    """Max relative additivity error mu(U(e)) = sum over children, scanned
    down to the given depth."""
    worst = 0.0
    for d in range(depth):
        for (x, y) in mu.sample_edges(d):
            w = mu.open_weight(x, y)
            parts = sum(mu.open_weight(y, z)
                        for z in mu.neighbors_in_window(y) if z != x)
            worst = max(worst, abs(w - parts) / w)
    return worst


def critical_exponent(group, R_max, cert=None, qg=None):
    """(orbit-count estimate, exact Perron value)."""
    if R_max < 4:
        raise InputError("R_max must be at least 4")
    if cert is None:
        cert = find_certificate(group)
    if qg is None:
        qg = quotient_graph(group, cert)
    est = critical_exponent_estimate(group, cert, R_max)
    return est, critical_exponent_exact(qg)


def poincare_series(group, cert, s, R):
    """Truncated Poincare sums sum_{d(x0,y) <= r} e^{-s d} for r <= R;
    a slow-convergence cross-check, never the measure constructor."""
    hist = orbit_histogram(group, cert, R)
    out = []
    total = 0.0
    for r in range(R + 1):
        total += hist.get(r, 0) * math.exp(-s * r)
        out.append(total)
    return out
