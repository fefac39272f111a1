"""Ready-made Schottky groups used throughout the tests and the CLI."""
from __future__ import annotations

from .errors import DegenerateRank, InputError
from .field import LaurentField, Qp
from .moebius import MoebiusMap, hyperbolic_with_fixed_points
from .schottky import SchottkyGroup


def theta_group(p=5, precision=32):
    """Genus 2, axes sharing one edge; quotient is a theta graph."""
    f = Qp(p, precision)
    g1 = hyperbolic_with_fixed_points(f, p, 1, 2)
    g2 = hyperbolic_with_fixed_points(f, 2 * p, 2, 2)
    return SchottkyGroup(f, [g1, g2])


def dumbbell_group(p=5, precision=32):
    """Genus 2, disjoint axes at distance one; quotient is a dumbbell."""
    f = Qp(p, precision)
    g1 = MoebiusMap(f.one(), f.zero(), f.zero(), f.uniformizer(3))
    g2 = hyperbolic_with_fixed_points(f, 1, 1 + p, 3)
    return SchottkyGroup(f, [g1, g2])


def genus3_group(p=5, precision=32):
    """Genus 3, three loops hanging off a common branch vertex."""
    f = Qp(p, precision)
    g1 = MoebiusMap(f.one(), f.zero(), f.zero(), f.uniformizer(3))
    g2 = hyperbolic_with_fixed_points(f, 1, 1 + p, 3)
    g3 = hyperbolic_with_fixed_points(f, 2, 2 + p, 3)
    return SchottkyGroup(f, [g1, g2, g3])


def asm_group(q, t=None, precision=32):
    """Commutator generators [upper(u), lower(w)] over F_q((T)).

    upper(u) is unipotent with entry u; lower(w) is its conjugate under
    z -> t/z.  The (q-1)^2 commutators generate a free group; at q=3 with
    t = T the quotient graph is complete bipartite K_{3,3}.
    """
    f = LaurentField(q, precision)
    if t is None:
        t = f.uniformizer(1)
    elif isinstance(t, int):
        t = f.uniformizer(t)
    elif isinstance(t, str):
        t = f.parse(t)
    if t.valuation() <= 0:
        raise InputError("t must have positive valuation")
    if (q - 1) ** 2 < 2:
        raise DegenerateRank(
            "residue order %d gives a single commutator generator" % q)
    one = f.one()
    zero = f.zero()
    gens = []
    for cu in range(1, q):
        u = f.from_residue(cu)
        for cw in range(1, q):
            w = f.from_residue(cw)
            upper = MoebiusMap(one, u, zero, one)
            lower = MoebiusMap(t, zero, w, t)
            c = upper * lower * upper.inverse() * lower.inverse()
            gens.append(c)
    return SchottkyGroup(f, gens)
