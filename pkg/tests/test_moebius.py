"""Moebius maps: hyperbolicity, fixed points, canonical forms."""
from __future__ import annotations

import random

import pytest

from mumford import LaurentField, Qp
from mumford.errors import CoincidentEnds, NotHyperbolic
from mumford.moebius import (
    MoebiusMap,
    ProjectivePoint,
    as_point,
    hyperbolic_with_fixed_points,
)

K = Qp(5, 32)


def test_diagonal_is_hyperbolic():
    g = MoebiusMap.from_ints(K, 5, 0, 0, 1)
    assert g.is_hyperbolic()
    assert g.amplitude() == 1
    att, rep = g.fixed_points()
    # z -> 5z contracts toward 0 in the 5-adic metric
    assert att.value().is_exact_zero()
    assert rep.is_infinity()


def test_elliptic_rejected():
    w = MoebiusMap.from_ints(K, 0, 1, -1, 0)
    assert not w.is_hyperbolic()
    with pytest.raises(NotHyperbolic):
        w.amplitude()
    assert not MoebiusMap.identity(K).is_hyperbolic()


def test_trace_criterion():
    # det = 5^3, trace = 5: 2*1 < 3 so hyperbolic with amplitude 1
    g = MoebiusMap.from_ints(K, 5, 0, 0, 25)
    assert g.is_hyperbolic() and g.amplitude() == 1
    # det = 5^2, trace = 5: 2*1 >= 2, not hyperbolic
    h = MoebiusMap.from_ints(K, 5, 0, 0, 5)
    assert not h.is_hyperbolic()


def test_apply():
    g = MoebiusMap.from_ints(K, 2, 1, 1, 1)  # z -> (2z+1)/(z+1)
    p = g.apply(as_point(K, 1))
    assert p.value().agrees(K.from_int(3) / K.from_int(2))
    assert g.apply(as_point(K, None)).value().agrees(K.from_int(2))
    assert g.apply(as_point(K, -1)).is_infinity()


def test_group_identities():
    rng = random.Random(3)
    for _ in range(50):
        ents = [rng.randint(-9, 9) for _ in range(4)]
        if ents[0] * ents[3] == ents[1] * ents[2]:
            continue
        g = MoebiusMap.from_ints(K, *ents)
        assert (g * g.inverse()).is_identity()
        assert (g.inverse() * g).is_identity()
        h = MoebiusMap.from_ints(K, 1, rng.randint(-9, 9), 0, 1)
        assert ((g * h).inverse()).same_map(h.inverse() * g.inverse())


def test_constructed_hyperbolic_fixed_points():
    for att, rep, amp in [(0, None, 3), (1, 6, 2), (K.uniformizer(), 2, 4)]:
        g = hyperbolic_with_fixed_points(K, att, rep, amp)
        assert g.is_hyperbolic()
        assert g.amplitude() == amp
        a, r = g.fixed_points()
        assert a.same_point(as_point(K, att), digits=10)
        assert r.same_point(as_point(K, rep), digits=10)
        # dynamics double-check: g moves a generic point toward the
        # attracting end
        z = as_point(K, 7)
        w = z
        for _ in range(12):
            w = g.apply(w)
        pa = as_point(K, att)
        if pa.is_infinity():
            assert w.value().valuation() <= -12
        else:
            assert (w.value() - pa.value()).lower_valuation() >= 10


def test_fixed_point_iteration_matches_quadratic_formula():
    # fixed z of (az+b)/(cz+d) solves c z^2 + (d - a) z - b = 0
    g = hyperbolic_with_fixed_points(K, 2, 3, 2)
    assert g.is_hyperbolic()
    a, r = g.fixed_points()
    for pt in (a, r):
        z = pt.value()
        resid = g.c * z * z + (g.d - g.a) * z - g.b
        assert resid.lower_valuation() >= 20


def test_coincident_ends_rejected():
    with pytest.raises(CoincidentEnds):
        hyperbolic_with_fixed_points(K, 3, 3, 2)


def test_canonical_and_key():
    g = MoebiusMap.from_ints(K, 10, 25, 5, 125)
    c = g.canonical()
    # valuations are (1, 2, 1, 3): the first minimum is entry a
    assert c.a == K.one()
    scaled = MoebiusMap.from_ints(K, 30, 75, 15, 375)
    assert g.key() == scaled.key()
    assert g.same_map(scaled)
    assert not g.same_map(MoebiusMap.from_ints(K, 10, 25, 5, 126))


def test_laurent_side():
    L = LaurentField(3, 16)
    t = L.uniformizer()
    g = hyperbolic_with_fixed_points(L, 1, ProjectivePoint.affine(t), 2)
    assert g.amplitude() == 2
    a, r = g.fixed_points()
    assert a.value().agrees(L.one(), digits=8)
    assert r.value().agrees(t, digits=8)
