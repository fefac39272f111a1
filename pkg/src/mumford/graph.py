"""Finite multigraphs with integer edge lengths.

Used for special fibers (quotient graphs of Schottky groups): loops and
parallel edges are allowed, vertices carry opaque labels, edges carry
opaque data that all structural operations ignore.

Canonical labeling is individualize-and-refine with full branch
exploration; graphs here are small (tens of vertices) and the minimum
serialization over branches is a true canonical form, so isomorphism and
deterministic reports both come from `canonical_key`.
"""
from __future__ import annotations

import math

from .errors import InputError


class MultiGraph:
    def __init__(self):
        self.labels = []
        self.edges = []  # (u, v, length, data)

    # -- construction -----------------------------------------------------

    def add_vertex(self, label=None):
        self.labels.append(label)
        return len(self.labels) - 1

    def add_edge(self, u, v, length=1, data=None):
        n = len(self.labels)
        if not (0 <= u < n and 0 <= v < n):
            raise InputError("edge endpoint out of range")
        if length < 1:
            raise InputError("edge length must be a positive integer")
        self.edges.append((u, v, length, data))
        return len(self.edges) - 1

    @property
    def num_vertices(self):
        return len(self.labels)

    @property
    def num_edges(self):
        return len(self.edges)

    def degree(self, v):
        d = 0
        for u, w, _, _ in self.edges:
            d += (u == v) + (w == v)
        return d

    def incident(self, v):
        out = []
        for i, (u, w, _, _) in enumerate(self.edges):
            if u == v or w == v:
                out.append(i)
        return out

    def total_length(self):
        return sum(e[2] for e in self.edges)

    # -- topology ------------------------------------------------------------

    def components(self):
        n = self.num_vertices
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for u, v, _, _ in self.edges:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
        return len({find(i) for i in range(n)})

    def betti(self):
        return self.num_edges - self.num_vertices + self.components()

    # -- derived graphs ----------------------------------------------------------

    def subdivided(self):
        """Every edge of length L becomes L unit edges."""
        g = MultiGraph()
        for lab in self.labels:
            g.add_vertex(lab)
        for u, v, length, data in self.edges:
            prev = u
            for i in range(length - 1):
                mid = g.add_vertex(None)
                g.add_edge(prev, mid, 1, data if i == 0 else None)
                prev = mid
            g.add_edge(prev, v, 1, data if length == 1 else None)
        return g

    def smoothed(self):
        """Contract through degree-2 vertices, summing lengths.  A component
        that is a plain cycle ends up as one vertex with a loop."""
        labels = list(self.labels)
        edges = [(u, v, ln) for u, v, ln, _ in self.edges]
        changed = True
        while changed:
            changed = False
            deg = [0] * len(labels)
            for u, v, _ in edges:
                deg[u] += 1
                deg[v] += 1
            for x in range(len(labels)):
                if deg[x] != 2:
                    continue
                inc = [i for i, (u, v, _) in enumerate(edges)
                       if u == x or v == x]
                if len(inc) != 2:
                    continue  # a loop at x: x is a whole cycle, keep it
                i1, i2 = inc
                u1, v1, l1 = edges[i1]
                u2, v2, l2 = edges[i2]
                a = u1 if v1 == x else v1
                b = u2 if v2 == x else v2
                for i in sorted((i1, i2), reverse=True):
                    edges.pop(i)
                edges.append((a, b, l1 + l2))
                changed = True
                break
        # drop now-isolated former degree-2 vertices
        used = set()
        for u, v, _ in edges:
            used.add(u)
            used.add(v)
        keep = [i for i in range(len(labels)) if i in used or self.degree(i) == 0]
        remap = {old: new for new, old in enumerate(keep)}
        g = MultiGraph()
        for old in keep:
            g.add_vertex(labels[old])
        for u, v, ln in edges:
            g.add_edge(remap[u], remap[v], ln)
        return g

    # -- non-backtracking structure ----------------------------------------------

    def directed_edges(self):
        """Each undirected edge twice: (edge index, direction flag)."""
        out = []
        for i in range(self.num_edges):
            out.append((i, 0))
            out.append((i, 1))
        return out

    def dart_endpoints(self, dart):
        i, flag = dart
        u, v, _, _ = self.edges[i]
        return (u, v) if flag == 0 else (v, u)

    def nb_matrix(self):
        """0/1 matrix over darts: follow without immediate backtracking.
        Subdivide first if edge lengths matter."""
        import numpy

        darts = self.directed_edges()
        pos = {d: k for k, d in enumerate(darts)}
        M = numpy.zeros((len(darts), len(darts)))
        for d1 in darts:
            _, head = self.dart_endpoints(d1)
            rev = (d1[0], 1 - d1[1])
            for d2 in darts:
                tail, _ = self.dart_endpoints(d2)
                if tail == head and d2 != rev:
                    M[pos[d1], pos[d2]] = 1.0
        return M, darts

    # -- canonical labeling ------------------------------------------------------

    def _edge_profile(self, v, colors, with_lengths):
        prof = []
        for u, w, ln, _ in self.edges:
            if u == v or w == v:
                other = w if u == v else u
                key = (colors[other], ln if with_lengths else 0)
                if u == v and w == v:
                    prof.append((colors[v], ln if with_lengths else 0))
                prof.append(key)
        return tuple(sorted(prof))

    def _refine(self, colors, with_lengths):
        n = self.num_vertices
        while True:
            sig = [(colors[v], self._edge_profile(v, colors, with_lengths))
                   for v in range(n)]
            order = sorted(set(sig))
            new = [order.index(s) for s in sig]
            if new == colors:
                return colors
            colors = new

    def _serialize(self, order, with_lengths):
        pos = {v: i for i, v in enumerate(order)}
        rows = []
        for u, v, ln, _ in self.edges:
            a, b = sorted((pos[u], pos[v]))
            rows.append((a, b, ln if with_lengths else 1))
        return tuple(sorted(rows))

    def canonical_key(self, with_lengths=True):
        """(serialized form, one vertex ordering realizing it)."""
        n = self.num_vertices
        if n == 0:
            return ((), ())
        best = [None, None]

        def descend(colors):
            classes = {}
            for v in range(n):
                classes.setdefault(colors[v], []).append(v)
            target = None
            for c in sorted(classes):
                if len(classes[c]) > 1:
                    target = classes[c]
                    break
            if target is None:
                order = sorted(range(n), key=lambda v: colors[v])
                ser = self._serialize(order, with_lengths)
                if best[0] is None or ser < best[0]:
                    best[0] = ser
                    best[1] = tuple(order)
                return
            for v in target:
                forced = list(colors)
                forced[v] = -1
                sig = sorted(set(forced))
                forced = [sig.index(c) for c in forced]
                descend(self._refine(forced, with_lengths))

        init = self._refine([0] * n, with_lengths)
        descend(init)
        return best[0], best[1]

    def is_isomorphic(self, other, with_lengths=True):
        return (self.canonical_key(with_lengths)[0]
                == other.canonical_key(with_lengths)[0])

    def find_isomorphism(self, other, with_lengths=True):
        """Vertex map self -> other, or None."""
        k1, o1 = self.canonical_key(with_lengths)
        k2, o2 = other.canonical_key(with_lengths)
        if k1 != k2:
            return None
        pos2 = {i: v for i, v in enumerate(o2)}
        return {v: pos2[i] for i, v in enumerate(o1)}

    def degree_sequence(self):
        return tuple(sorted(self.degree(v) for v in range(self.num_vertices)))

    def __repr__(self):
        return "MultiGraph(V=%d, E=%d, b1=%d)" % (
            self.num_vertices, self.num_edges, self.betti())


def perron_root(M, tol=1e-9):
    """Largest real eigenvalue of a nonnegative matrix, with a simplicity
    check on that value."""
    import numpy

    from .errors import DegenerateSpectrum

    if M.shape[0] == 0:
        raise DegenerateSpectrum("empty matrix")
    eig = numpy.linalg.eigvals(M)
    rho = max(e.real for e in eig)
    near = [e for e in eig if abs(e - rho) < tol * max(1.0, rho)]
    if len(near) != 1:
        raise DegenerateSpectrum(
            "leading eigenvalue has multiplicity %d" % len(near))
    if rho <= 1.0 + 1e-12:
        raise DegenerateSpectrum("no exponential growth (rho = %.6f)" % rho)
    return rho


def cycle_space_basis(graph):
    """Integer flows: one fundamental cycle per non-tree edge, as vectors
    indexed by (edge, +1 orientation u->v)."""
    n = graph.num_vertices
    parent = {0: None}
    parent_edge = {}
    order = []
    comps = []
    seen = set()
    for start in range(n):
        if start in seen:
            continue
        comps.append(start)
        stack = [start]
        parent[start] = None
        seen.add(start)
        while stack:
            v = stack.pop()
            order.append(v)
            for i, (a, b, _, _) in enumerate(graph.edges):
                if a == v and b not in seen:
                    seen.add(b)
                    parent[b] = v
                    parent_edge[b] = (i, +1)
                    stack.append(b)
                elif b == v and a not in seen:
                    seen.add(a)
                    parent[a] = v
                    parent_edge[a] = (i, -1)
                    stack.append(a)
    tree_edges = {i for i, _ in parent_edge.values()}
    basis = []
    for i, (a, b, _, _) in enumerate(graph.edges):
        if i in tree_edges:
            continue
        flow = [0] * graph.num_edges
        flow[i] = 1
        if a != b:
            # walk both endpoints up to their meeting point
            pa = _path_to_root(parent, parent_edge, a)
            pb = _path_to_root(parent, parent_edge, b)
            sa = {v for v, _ in pa}
            meet = next(v for v, _ in pb if v in sa)
            for v, step in pa:
                if v == meet:
                    break
                if step:
                    flow[step[0]] += step[1]
            for v, step in pb:
                if v == meet:
                    break
                if step:
                    flow[step[0]] -= step[1]
        basis.append(flow)
    return basis


def _path_to_root(parent, parent_edge, v):
    out = []
    while v is not None:
        out.append((v, parent_edge.get(v)))
        v = parent[v]
    return out


def graph_json(graph, with_lengths=True):
    """Deterministic plain-data form (canonical vertex order)."""
    key, _ = graph.canonical_key(with_lengths)
    return {
        "vertices": graph.num_vertices,
        "betti": graph.betti(),
        "edges": [list(row) for row in key],
    }


INF = math.inf
