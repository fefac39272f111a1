"""Multigraph structure: Betti numbers, smoothing, canonical forms, flows."""
from __future__ import annotations

import random

import numpy
import pytest

from mumford.errors import DegenerateSpectrum
from mumford.graph import MultiGraph, cycle_space_basis, perron_root


def complete_bipartite_33():
    g = MultiGraph()
    for i in range(6):
        g.add_vertex(i)
    for i in range(3):
        for j in range(3, 6):
            g.add_edge(i, j, 1)
    return g


def theta_graph(l1=1, l2=1, l3=1):
    g = MultiGraph()
    g.add_vertex("a")
    g.add_vertex("b")
    for ln in (l1, l2, l3):
        g.add_edge(0, 1, ln)
    return g


def dumbbell(l1=3, l2=3, bridge=1):
    g = MultiGraph()
    g.add_vertex("a")
    g.add_vertex("b")
    g.add_edge(0, 0, l1)
    g.add_edge(1, 1, l2)
    g.add_edge(0, 1, bridge)
    return g


def test_betti():
    assert complete_bipartite_33().betti() == 4
    assert theta_graph().betti() == 2
    assert dumbbell().betti() == 2
    g = MultiGraph()
    g.add_vertex()
    assert g.betti() == 0
    g.add_edge(0, 0)
    assert g.betti() == 1


def test_subdivide_and_smooth_roundtrip():
    for g in (theta_graph(2, 3, 1), dumbbell(2, 4, 3)):
        s = g.subdivided()
        assert s.total_length() == g.total_length()
        assert all(ln == 1 for _, _, ln, _ in s.edges)
        back = s.smoothed()
        assert back.is_isomorphic(g, with_lengths=True)


def test_smooth_cycle_to_loop():
    g = MultiGraph()
    for i in range(5):
        g.add_vertex(i)
    for i in range(5):
        g.add_edge(i, (i + 1) % 5, 1)
    s = g.smoothed()
    assert s.num_vertices == 1 and s.num_edges == 1
    u, v, ln, _ = s.edges[0]
    assert u == v and ln == 5


def test_canonical_iso_relabeling():
    rng = random.Random(21)
    g = complete_bipartite_33()
    perm = list(range(6))
    rng.shuffle(perm)
    h = MultiGraph()
    for i in range(6):
        h.add_vertex(i)
    shuffled = list(g.edges)
    rng.shuffle(shuffled)
    for u, v, ln, _ in shuffled:
        h.add_edge(perm[u], perm[v], ln)
    assert g.is_isomorphic(h)
    iso = g.find_isomorphism(h)
    assert iso is not None
    # the map must preserve edge multisets between mapped pairs
    for u, v, ln, _ in g.edges:
        count_g = sum(1 for a, b, l2, _ in g.edges
                      if {a, b} == {u, v} and l2 == ln)
        count_h = sum(1 for a, b, l2, _ in h.edges
                      if {a, b} == {iso[u], iso[v]} and l2 == ln)
        assert count_g == count_h


def test_lengths_distinguish():
    a = theta_graph(1, 1, 2)
    b = theta_graph(1, 2, 2)
    assert not a.is_isomorphic(b, with_lengths=True)
    assert a.is_isomorphic(b, with_lengths=False)
    assert a.find_isomorphism(b, with_lengths=True) is None


def test_non_iso_same_degree_sequence():
    # two cubic graphs on 6 vertices: K33 versus the 3-prism
    prism = MultiGraph()
    for i in range(6):
        prism.add_vertex(i)
    for i in range(3):
        prism.add_edge(i, (i + 1) % 3)
        prism.add_edge(3 + i, 3 + (i + 1) % 3)
        prism.add_edge(i, 3 + i)
    k33 = complete_bipartite_33()
    assert prism.degree_sequence() == k33.degree_sequence()
    assert not prism.is_isomorphic(k33)


def test_nb_perron_of_cubic_graphs():
    # non-backtracking growth of a (q+1)-regular graph is exactly q
    for g in (complete_bipartite_33(), theta_graph(), dumbbell(1, 1, 1)):
        M, darts = g.nb_matrix()
        assert len(darts) == 2 * g.num_edges
        assert abs(perron_root(M) - 2.0) < 1e-9


def test_nb_respects_lengths_after_subdivision():
    g = theta_graph(2, 2, 2)
    M, _ = g.subdivided().nb_matrix()
    rho = perron_root(M)
    # growth halves in exponent: rho = sqrt(2)
    assert abs(rho - 2.0 ** 0.5) < 1e-9


def test_perron_degenerate_on_disjoint_union():
    g = MultiGraph()
    for _ in range(4):
        g.add_vertex()
    for u, v in ((0, 1), (0, 1), (0, 1), (2, 3), (2, 3), (2, 3)):
        g.add_edge(u, v)
    M, _ = g.nb_matrix()
    with pytest.raises(DegenerateSpectrum):
        perron_root(M)


def test_cycle_basis_is_a_basis_of_flows():
    for g in (complete_bipartite_33(), theta_graph(2, 3, 1),
              dumbbell(2, 4, 3)):
        basis = cycle_space_basis(g)
        assert len(basis) == g.betti()
        # conservation at every vertex
        for flow in basis:
            net = [0] * g.num_vertices
            for i, (u, v, _, _) in enumerate(g.edges):
                net[u] -= flow[i]
                net[v] += flow[i]
            assert all(x == 0 for x in net)
        rank = numpy.linalg.matrix_rank(numpy.array(basis, dtype=float))
        assert rank == len(basis)
