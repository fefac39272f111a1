import math
import random

import pytest

from mumford.catalog import asm_group, dumbbell_group, genus3_group, theta_group
from mumford.errors import (
    DegenerateRank,
    NoCertificateFound,
    NotHyperbolic,
    WindowTooSmall,
)
from mumford.field import Qp
from mumford.graph import MultiGraph
from mumford.moebius import MoebiusMap
from mumford.schottky import (
    SchottkyGroup,
    critical_exponent_estimate,
    critical_exponent_exact,
    find_certificate,
    orbit_count,
    orbit_histogram,
    quotient_graph,
    reduce_word,
    word_inverse,
    word_mul,
)
from mumford.tree import distance


def test_word_helpers():
    assert reduce_word([1, -1]) == ()
    assert reduce_word([1, 2, -2, -1, 3]) == (3,)
    assert word_mul((1, 2), (-2, 1)) == (1, 1)
    assert word_inverse((1, -2, 3)) == (-3, 2, -1)
    rng = random.Random(11)
    for _ in range(100):
        w = tuple(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(0, 8)))
        w = reduce_word(w)
        assert word_mul(w, word_inverse(w)) == ()


def test_not_hyperbolic_rejected():
    f = Qp(5, 16)
    rot = MoebiusMap.from_ints(f, 0, 1, -1, 0)  # z -> -1/z, order two
    with pytest.raises(NotHyperbolic):
        SchottkyGroup(f, [rot])


def test_no_certificate_for_shared_end():
    # two hyperbolics attracting to the same point can never ping-pong
    from mumford.moebius import hyperbolic_with_fixed_points
    f = Qp(5, 32)
    g1 = hyperbolic_with_fixed_points(f, 5, 1, 2)
    g2 = hyperbolic_with_fixed_points(f, 5, 2, 2)
    bad = SchottkyGroup(f, [g1, g2])
    with pytest.raises(NoCertificateFound):
        find_certificate(bad, search_radius=4)


def test_certificate_validity():
    for G in (theta_group(), dumbbell_group(), genus3_group()):
        cert = find_certificate(G)
        assert cert.is_valid()
        opens = cert.all_opens()
        assert len(opens) == 2 * G.genus
        # repelling and attracting ends sit in their own opens
        for i in range(G.genus):
            att, rep = G.fixed[i]
            assert cert.opens_minus[i].contains(rep)
            assert cert.opens_plus[i].contains(att)
        assert cert.in_domain(G.base_vertex())


def test_reduction_is_orbit_invariant():
    G = theta_group()
    cert = find_certificate(G)
    v0 = G.base_vertex()
    rng = random.Random(23)
    verts = [v0] + v0.neighbors(G.field)
    for v in list(verts):
        verts.extend(v.neighbors(G.field))
    for _ in range(60):
        v = rng.choice(verts)
        rep, w = cert.reduce_vertex(v)
        assert cert.in_domain(rep)
        assert G.act(w, rep) == v
        k = rng.randint(1, 4)
        word = []
        for _ in range(k):
            t = rng.choice([x for x in G.letters()
                            if not word or x != -word[-1]])
            word.append(t)
        u = G.act(tuple(word), v)
        rep2, w2 = cert.reduce_vertex(u)
        assert rep2 == rep
        assert G.act(w2, rep) == u


def test_theta_quotient():
    qg = quotient_graph(theta_group())
    mg = qg.multigraph()
    assert (mg.num_vertices, mg.num_edges, mg.betti()) == (2, 3, 2)
    assert sorted(e[2] for e in mg.edges) == [1, 1, 1]


def test_dumbbell_quotient():
    qg = quotient_graph(dumbbell_group())
    mg = qg.multigraph()
    assert (mg.num_vertices, mg.num_edges, mg.betti()) == (6, 7, 2)
    sm = qg.metric_graph()
    assert sm.num_vertices == 2
    assert sorted(e[2] for e in sm.edges) == [1, 3, 3]


def test_genus3_quotient():
    qg = quotient_graph(genus3_group())
    mg = qg.multigraph()
    assert (mg.num_vertices, mg.num_edges, mg.betti()) == (9, 11, 3)
    assert qg.betti() == 3


def _k33():
    g = MultiGraph()
    for _ in range(6):
        g.add_vertex()
    for u in range(3):
        for v in range(3, 6):
            g.add_edge(u, v)
    return g


def test_asm_quotient_is_k33():
    G = asm_group(3)
    assert G.genus == 4
    assert G.amps == [4, 4, 4, 4]
    qg = quotient_graph(G)
    mg = qg.multigraph()
    assert (mg.num_vertices, mg.num_edges, mg.betti()) == (6, 9, 4)
    assert mg.is_isomorphic(_k33())


def test_asm_cubed_parameter_subdivides():
    qg = quotient_graph(asm_group(3, t=3))
    mg = qg.multigraph()
    assert (mg.num_vertices, mg.num_edges, mg.betti()) == (24, 27, 4)
    sm = qg.metric_graph()
    assert sorted(e[2] for e in sm.edges) == [3] * 9
    assert sm.is_isomorphic(_k33(), with_lengths=False)
    assert not sm.is_isomorphic(_k33())


def test_asm_q2_degenerate():
    with pytest.raises(DegenerateRank):
        asm_group(2)


def test_germ_pairing_involution():
    for G in (theta_group(), dumbbell_group()):
        qg = quotient_graph(G)
        for germ, (partner, w) in qg.pairing.items():
            back, winv = qg.pairing[partner]
            assert back == germ
            assert word_mul(w, winv) == ()
            # the germ target is the w-translate of the partner vertex
            assert G.act(w, qg.reps[partner[0]]) == germ[1]
            assert distance(qg.reps[germ[0]], germ[1]) == 1


def test_window_too_small():
    with pytest.raises(WindowTooSmall):
        quotient_graph(dumbbell_group(), radius=0)


def test_orbit_count_against_direct_enumeration():
    # precision 64: enumeration drives vertices much deeper than the
    # radius of interest before the d <= R filter discards them
    for mk, R in ((theta_group, 10), (dumbbell_group, 9)):
        G = mk(precision=64)
        cert = find_certificate(G)
        v0 = G.base_vertex()
        count = 1
        for w in G.reduced_words(R):
            if distance(v0, G.act(w, v0)) <= R:
                count += 1
        assert orbit_count(G, cert, R) == count


def test_orbit_count_equals_nb_path_count():
    # orbit points within R correspond to non-backtracking quotient paths
    # from the base representative back to itself, one per length
    import numpy
    for G in (theta_group(), dumbbell_group()):
        cert = find_certificate(G)
        qg = quotient_graph(G)
        mg = qg.multigraph()
        base = qg.rep_pos[qg.base_rep()]
        M, darts = mg.nb_matrix()
        starts = numpy.array([1.0 if mg.dart_endpoints(d)[0] == base else 0.0
                              for d in darts])
        at_base = numpy.array([1.0 if mg.dart_endpoints(d)[1] == base else 0.0
                               for d in darts])
        total = 0
        state = starts
        R = 12
        for _ in range(R):
            total += int(round(state @ at_base))
            state = state @ M
        assert orbit_count(G, cert, R) - 1 == total


def test_exponents():
    qg = quotient_graph(theta_group())
    assert abs(critical_exponent_exact(qg) - math.log(2)) < 1e-9
    qg3 = quotient_graph(asm_group(3, t=3))
    assert abs(critical_exponent_exact(qg3) - math.log(2) / 3) < 1e-9


def test_exponent_estimate_converges():
    G = dumbbell_group()
    cert = find_certificate(G)
    qg = quotient_graph(G)
    ex = critical_exponent_exact(qg)
    est = critical_exponent_estimate(G, cert, 90)
    assert abs(est - ex) / ex < 0.05


def test_histogram_monotone():
    G = theta_group()
    cert = find_certificate(G)
    hist = orbit_histogram(G, cert, 30)
    assert hist[0] == 1
    assert sum(hist.values()) == orbit_count(G, cert, 30)
