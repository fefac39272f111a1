"""Tree metric, rays, group action, boundary opens, cross ratios."""
from __future__ import annotations

import itertools
import random
from collections import deque

import pytest

from mumford import Qp
from mumford.errors import NotPairwiseDistinct, PrecisionExhausted
from mumford.moebius import MoebiusMap, as_point, hyperbolic_with_fixed_points
from mumford.tree import (
    ROOT,
    BoundaryOpen,
    TreeVertex,
    act_vertex,
    boundary_distance,
    cross_ratio_exponent,
    dilation_exponent,
    distance,
    geodesic,
    median,
    median_of_ends,
    pairs_to_scalar,
    project_to_line,
    ray,
    vertex_at,
)

K = Qp(5, 32)
K2 = Qp(2, 24)


def random_vertex(rng, field, steps=6):
    v = ROOT
    for _ in range(rng.randint(0, steps)):
        v = rng.choice(v.neighbors(field))
    return v


def bfs_distance(field, x, y, cap=30):
    seen = {x: 0}
    q = deque([x])
    while q:
        v = q.popleft()
        if v == y:
            return seen[v]
        if seen[v] >= cap:
            continue
        for w in v.neighbors(field):
            if w not in seen:
                seen[w] = seen[v] + 1
                q.append(w)
    raise AssertionError("BFS cap hit")


def test_distance_against_bfs():
    rng = random.Random(11)
    for _ in range(25):
        x = random_vertex(rng, K2)
        y = random_vertex(rng, K2)
        assert distance(x, y) == bfs_distance(K2, x, y)


def test_geodesic_shape():
    rng = random.Random(12)
    for _ in range(40):
        x = random_vertex(rng, K)
        y = random_vertex(rng, K)
        path = geodesic(x, y)
        assert path[0] == x and path[-1] == y
        assert len(path) == distance(x, y) + 1
        for a, b in zip(path, path[1:]):
            assert distance(a, b) == 1
        assert len(set(path)) == len(path)


def test_median_property():
    rng = random.Random(13)
    for _ in range(40):
        x, y, z = (random_vertex(rng, K) for _ in range(3))
        m = median(x, y, z)
        for a, b in ((x, y), (y, z), (x, z)):
            assert distance(a, m) + distance(m, b) == distance(a, b)


def test_action_conventions():
    g = MoebiusMap.from_ints(K, 5, 0, 0, 1)
    assert act_vertex(g, ROOT) == TreeVertex(1, ())
    h = MoebiusMap.from_ints(K, 1, 0, 0, 5)
    assert act_vertex(h, ROOT) == TreeVertex(-1, ())
    # z -> z + 1 stabilizes the root and shifts the child toward 0
    t = MoebiusMap.from_ints(K, 1, 1, 0, 1)
    assert act_vertex(t, ROOT) == ROOT
    assert act_vertex(t, TreeVertex(1, ())) == TreeVertex(1, ((0, 1),))


def test_action_is_isometric_and_compatible():
    rng = random.Random(14)
    for _ in range(30):
        ents = [rng.randint(-6, 6) for _ in range(4)]
        if ents[0] * ents[3] == ents[1] * ents[2]:
            continue
        g = MoebiusMap.from_ints(K, *ents)
        h = MoebiusMap.from_ints(K, 1, rng.randint(-6, 6), rng.choice([0, 5]), 1)
        if h.determinant().is_exact_zero():
            continue
        x = random_vertex(rng, K)
        y = random_vertex(rng, K)
        assert distance(act_vertex(g, x), act_vertex(g, y)) == distance(x, y)
        assert act_vertex(g * h, x) == act_vertex(g, act_vertex(h, x))
        gi = act_vertex(g.inverse(), act_vertex(g, x))
        assert gi == x


def test_ray_to_infinity_and_zero():
    r = ray(ROOT, as_point(K, None))
    first = [next(r) for _ in range(4)]
    assert [v.level for v in first] == [0, -1, -2, -3]
    r0 = ray(ROOT, as_point(K, 0))
    first = [next(r0) for _ in range(4)]
    assert all(v.pairs == () for v in first)
    assert [v.level for v in first] == [0, 1, 2, 3]


def test_ray_is_a_path_toward_the_end():
    rng = random.Random(15)
    for _ in range(20):
        v = random_vertex(rng, K)
        z = rng.randint(-40, 40)
        end = as_point(K, z)
        rr = ray(v, end)
        path = [next(rr) for _ in range(14)]
        assert path[0] == v
        for a, b in zip(path, path[1:]):
            assert distance(a, b) == 1
        # eventually the vertices are balls around z of growing level
        tail = path[-1]
        assert tail.level == vertex_at(K.from_int(z), tail.level).level
        assert tail == vertex_at(K.from_int(z), tail.level)


def test_vertex_at_precision_honesty():
    from fractions import Fraction
    y = K.from_fraction(Fraction(1, 3)) * 3 - 1
    with pytest.raises(PrecisionExhausted):
        vertex_at(y, 40)
    assert vertex_at(y, 5) == TreeVertex(5, ())


def test_projection_and_boundary_distance():
    # line 0 -- infinity is the spine through the root
    p = project_to_line(TreeVertex(2, ((0, 3),)), as_point(K, 0),
                        as_point(K, None), K)
    assert p == ROOT
    assert boundary_distance(K, as_point(K, 0), as_point(K, None)) == 0
    # integral ends: distance to the line is the contact valuation
    assert boundary_distance(K, as_point(K, 5), as_point(K, 30)) == 2
    assert boundary_distance(K, as_point(K, 1), as_point(K, 2)) == 0
    for a, b in [(0, 5), (1, 6), (2, 27), (3, 128)]:
        va = (K.from_int(a) - K.from_int(b)).valuation()
        assert boundary_distance(K, as_point(K, a), as_point(K, b)) == max(va, 0)
    # ends of negative valuation: toward infinity L = max(0, -v)
    from fractions import Fraction
    deep = as_point(K, Fraction(1, 25))
    assert boundary_distance(K, deep, as_point(K, None)) == 2
    # the line from 1/25 to 3 dives under the root on its way up
    assert boundary_distance(K, deep, as_point(K, 3)) == 0
    # two ends sharing the deep part 1/25 but differing at exponent 0
    other = as_point(K, Fraction(26, 25))
    assert boundary_distance(K, deep, other) == 4


def test_projection_is_closest_point():
    rng = random.Random(16)
    for _ in range(25):
        v = random_vertex(rng, K)
        z1, z2 = rng.sample(range(-20, 20), 2)
        xi, eta = as_point(K, z1), as_point(K, z2)
        proj = project_to_line(v, xi, eta, K)
        # proj is on the line: projecting it again is a fixed point
        assert project_to_line(proj, xi, eta, K) == proj
        # and no neighbor of proj on the line is closer to v
        d0 = distance(v, proj)
        for w in proj.neighbors(K):
            if project_to_line(w, xi, eta, K) == w:
                assert distance(v, w) >= d0


def test_median_of_ends():
    m = median_of_ends(K, as_point(K, 0), as_point(K, 5), as_point(K, 1))
    assert m == TreeVertex(1, ())
    m2 = median_of_ends(K, as_point(K, 0), as_point(K, 5), as_point(K, None))
    assert m2 == TreeVertex(1, ())
    with pytest.raises(NotPairwiseDistinct):
        median_of_ends(K, as_point(K, 0), as_point(K, 0), as_point(K, 1))


def test_axis_through_root():
    g = hyperbolic_with_fixed_points(K, 0, None, 2)
    from mumford.tree import translation_axis_vertex
    assert translation_axis_vertex(g) == ROOT
    # translation by amplitude along its own axis
    att, rep = g.fixed_points()
    moved = act_vertex(g, ROOT)
    assert distance(ROOT, moved) == 2
    assert project_to_line(moved, att, rep, K) == moved


def test_dilation_signs():
    g = MoebiusMap.from_ints(K, 5, 0, 0, 1)
    assert dilation_exponent(g, as_point(K, None)) == 1
    assert dilation_exponent(g, as_point(K, 0)) == -1
    assert dilation_exponent(g, as_point(K, 1)) == -1
    assert dilation_exponent(MoebiusMap.identity(K), as_point(K, 3)) == 0


def test_dilation_cocycle():
    rng = random.Random(17)
    mats = [MoebiusMap.from_ints(K, 1, 1, 0, 1),
            MoebiusMap.from_ints(K, 5, 0, 0, 1),
            MoebiusMap.from_ints(K, 0, 1, 1, 0),
            MoebiusMap.from_ints(K, 2, 5, 1, 3)]
    for _ in range(40):
        g = mats[rng.randrange(4)] * mats[rng.randrange(4)]
        h = mats[rng.randrange(4)] * mats[rng.randrange(4)]
        end = as_point(K, rng.choice([None, 0, 1, 2, 5, 7, 25, -1]))
        lhs = dilation_exponent(g * h, end)
        rhs = dilation_exponent(g, h.apply(end)) + dilation_exponent(h, end)
        assert lhs == rhs


def test_cross_ratio_frozen_example():
    pts = [as_point(K, None), as_point(K, 0), as_point(K, 5),
           as_point(K, 125)]
    assert cross_ratio_exponent(*pts) == 2


def test_cross_ratio_rejects_repeats():
    with pytest.raises(NotPairwiseDistinct):
        cross_ratio_exponent(as_point(K, 1), as_point(K, 1),
                             as_point(K, 2), as_point(K, 3))


def _signed_overlap(field, x1, x2, x3, x4, depth=14):
    """Independent oracle: signed edge count of the shared segment of the
    geodesics (x1,x2) and (x3,x4), traversed in those directions."""
    def deep(end):
        if end.is_infinity():
            return TreeVertex(-depth, ())
        return vertex_at(end.value(), depth)

    p1 = geodesic(deep(x1), deep(x2))
    p2 = geodesic(deep(x3), deep(x4))
    pos1 = {v: i for i, v in enumerate(p1)}
    common = [(pos1[v], j) for j, v in enumerate(p2) if v in pos1]
    if len(common) < 2:
        return 0
    common.sort()
    ii = [c[0] for c in common]
    jj = [c[1] for c in common]
    assert ii == list(range(ii[0], ii[0] + len(ii)))
    sign = 1 if jj[1] > jj[0] else -1
    return sign * (len(common) - 1)


def test_cross_ratio_against_overlap_oracle():
    rng = random.Random(18)
    pool = [None, 0, 1, 2, 3, 5, 6, 10, 25, 26, 30, 125, -5, 7]
    done = 0
    for _ in range(300):
        picks = rng.sample(pool, 4)
        pts = [as_point(K, p) for p in picks]
        got = cross_ratio_exponent(*pts)
        want = _signed_overlap(K, *pts)
        assert got == want, (picks, got, want)
        done += 1
    assert done == 300


def test_cross_ratio_moebius_invariance():
    rng = random.Random(19)
    mats = [MoebiusMap.from_ints(K, 1, 1, 0, 1),
            MoebiusMap.from_ints(K, 5, 0, 0, 1),
            MoebiusMap.from_ints(K, 0, 1, 1, 0),
            MoebiusMap.from_ints(K, 3, 5, 1, 2)]
    pool = [None, 0, 1, 2, 5, 7, 25, -1, 6]
    for _ in range(60):
        g = mats[rng.randrange(4)] * mats[rng.randrange(4)]
        picks = rng.sample(pool, 4)
        pts = [as_point(K, p) for p in picks]
        imgs = [g.apply(p) for p in pts]
        assert cross_ratio_exponent(*pts) == cross_ratio_exponent(*imgs)


def test_boundary_open_edges():
    child = TreeVertex(1, ((0, 2),))
    U = BoundaryOpen.from_edge(ROOT, child)
    assert U.kind == "ball" and U.radius == 1
    assert U.contains(as_point(K, 2))
    assert U.contains(as_point(K, 7))
    assert not U.contains(as_point(K, 1))
    assert not U.contains(as_point(K, None))
    V = BoundaryOpen.from_edge(child, ROOT)
    assert V.kind == "coball"
    assert V.contains(as_point(K, None))
    assert V.contains(as_point(K, 1))
    assert not V.contains(as_point(K, 7))


def test_boundary_open_disjointness_sampled():
    rng = random.Random(20)
    sample = [as_point(K, z) for z in
              list(range(-6, 31)) + [None, 125, 625, -25]]
    edges = []
    for _ in range(25):
        v = random_vertex(rng, K, steps=4)
        w = rng.choice(v.neighbors(K))
        edges.append(BoundaryOpen.from_edge(v, w))
    for U, V in itertools.combinations(edges, 2):
        members = [e for e in sample if U.contains(e) and V.contains(e)]
        if U.disjoint(V):
            assert not members
        # non-disjoint pairs must show a witness among dense samples when
        # one is not merely a thin set: here opens are balls/coballs so a
        # shared point exists; our sample may still miss deep balls, so we
        # only assert the converse direction above plus symmetry:
        assert U.disjoint(V) == V.disjoint(U)


def test_boundary_open_disjointness_exact_cases():
    # the five level-1 balls partition the integers: pairwise disjoint
    opens = []
    for d in range(5):
        ch = TreeVertex(1, ((0, d),)) if d else TreeVertex(1, ())
        opens.append(BoundaryOpen.from_edge(ROOT, ch))
    for U, V in itertools.combinations(opens, 2):
        assert U.disjoint(V)
    # the coball above the root excludes each of them
    up = BoundaryOpen.from_edge(ROOT, ROOT.parent())
    for U in opens:
        assert up.disjoint(U)
    # nested balls are not disjoint
    b1 = BoundaryOpen("ball", (), 1)
    b2 = BoundaryOpen("ball", (), 2)
    assert not b1.disjoint(b2)
    b3 = BoundaryOpen("ball", ((1, 1),), 2)  # 5 + O(25) sits inside b1
    assert not b1.disjoint(b3)
    # two coballs both contain infinity
    assert not up.disjoint(BoundaryOpen("coball", ((0, 1),), 1))
