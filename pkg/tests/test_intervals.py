"""Interval arithmetic, boxes, enclosures, and the Krawczyk certifier."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from slogcensus.census import build_system
from slogcensus.errors import DomainError
from slogcensus.intervals import (Box, Interval, iadd, iexp, ilog, imul,
                                  iinv_pos, ineg, interval_eval, iscale,
                                  isqr, isub, krawczyk_test, subdivide)
from slogcensus.terms import (add, const, dphi, eval_term, exp, mul, neg,
                              parse_term, phi, sub, var)

_fin = st.floats(-1e6, 1e6, allow_nan=False)


# ---------------------------------------------------------------------------
# interval type

def test_interval_basics():
    x = Interval(1.0, 3.0)
    assert x.mid == 2.0
    assert x.width == 2.0
    assert x.contains(1.0) and x.contains(3.0)
    assert not x.contains_zero()
    assert Interval.point(2.0).width == 0.0


def test_interval_rejects_inverted_bounds():
    with pytest.raises((DomainError, ValueError)):
        Interval(2.0, 1.0)


def test_interval_set_operations():
    a = Interval(0.0, 2.0)
    b = Interval(1.0, 3.0)
    assert a.intersects(b)
    assert a.intersect(b).lo == 1.0
    assert Interval(1.2, 1.8).strictly_inside(a)
    assert not a.strictly_inside(a)


# ---------------------------------------------------------------------------
# outward-rounded arithmetic

def _contains(z: Interval, v: float) -> bool:
    return z.lo <= v <= z.hi


@settings(max_examples=200)
@given(_fin, _fin, _fin, _fin)
def test_add_mul_soundness(a, b, c, d):
    x = Interval(min(a, b), max(a, b))
    y = Interval(min(c, d), max(c, d))
    for px in (x.lo, x.hi, x.mid):
        for py in (y.lo, y.hi, y.mid):
            assert _contains(iadd(x, y), px + py)
            assert _contains(isub(x, y), px - py)
            assert _contains(imul(x, y), px * py)
    assert _contains(ineg(x), -x.mid)
    assert _contains(isqr(x), x.mid * x.mid)
    assert _contains(iscale(x, 3.0), 3.0 * x.mid)


def test_outward_rounding_strict():
    z = iadd(Interval.point(0.1), Interval.point(0.2))
    assert z.lo < 0.1 + 0.2 < z.hi or (z.lo <= 0.30000000000000004 <= z.hi
                                       and z.width > 0.0)


@settings(max_examples=200)
@given(st.floats(-700.0, 700.0), st.floats(-700.0, 700.0))
def test_exp_soundness(a, b):
    x = Interval(min(a, b), max(a, b))
    z = iexp(x)
    for p in (x.lo, x.mid, x.hi):
        assert _contains(z, math.exp(p))


@settings(max_examples=200)
@given(st.floats(1e-300, 1e300), st.floats(1e-300, 1e300))
def test_log_inv_soundness(a, b):
    x = Interval(min(a, b), max(a, b))
    for p in (x.lo, x.mid, x.hi):
        assert _contains(ilog(x), math.log(p))
        assert _contains(iinv_pos(x), 1.0 / p)


def test_log_rejects_nonpositive():
    with pytest.raises(DomainError):
        ilog(Interval(-1.0, 2.0))


def test_sqr_no_dependency_loss():
    z = isqr(Interval(-2.0, 3.0))
    assert z.lo == 0.0
    assert z.hi >= 9.0


# ---------------------------------------------------------------------------
# boxes

def test_box_cube_and_bounds():
    b = Box.cube(2.0, 3)
    assert b.n == 3
    assert b.max_width == 4.0
    assert b.contains([0.0, 1.9, -2.0])
    assert not b.contains([2.1, 0.0, 0.0])
    back = Box.from_bounds(b.bounds())
    assert back.bounds() == b.bounds()


def test_subdivide_splits_widest_axis():
    b = Box.from_bounds([(0.0, 1.0), (0.0, 4.0)])
    left, right = subdivide(b)
    assert left.coords[0].width == 1.0
    assert left.coords[1].hi == right.coords[1].lo == 2.0


def test_subdivide_point_box_rejected():
    with pytest.raises(DomainError):
        subdivide(Box.from_bounds([(1.0, 1.0)]))


# ---------------------------------------------------------------------------
# term enclosures

_leaf = st.one_of(
    st.integers(0, 1).map(var),
    st.floats(-2.0, 2.0, allow_nan=False).map(const))


def _trees(depth):
    if depth == 0:
        return _leaf
    inner = _trees(depth - 1)
    return st.one_of(
        _leaf,
        st.tuples(inner, inner).map(lambda p: add(*p)),
        st.tuples(inner, inner).map(lambda p: mul(*p)),
        st.tuples(inner, inner).map(lambda p: sub(*p)),
        inner.map(neg),
        inner.map(exp),
        inner.map(phi),
        inner.map(dphi))


_coord = st.tuples(st.floats(-3.0, 3.0), st.floats(0.0, 1.5))


@settings(max_examples=150, deadline=None)
@given(_trees(3), _coord, _coord)
def test_enclosure_soundness(abel, t, c0, c1):
    box = Box.from_bounds([(c0[0], c0[0] + c0[1]), (c1[0], c1[0] + c1[1])])
    try:
        rng = interval_eval(t, box, abel)
        v = eval_term(t, box.midpoint(), abel)
    except (DomainError, OverflowError):
        return
    assert rng.lo <= v <= rng.hi


def test_enclosure_isotone(abel):
    t = parse_term("phi(x1)*exp(x2) - x1*x1")
    outer = Box.from_bounds([(-1.0, 2.0), (-1.0, 1.0)])
    inner = Box.from_bounds([(0.0, 1.0), (-0.5, 0.5)])
    ro = interval_eval(t, outer, abel)
    ri = interval_eval(t, inner, abel)
    assert ro.lo <= ri.lo and ri.hi <= ro.hi


# ---------------------------------------------------------------------------
# Krawczyk certifier

def test_krawczyk_unique_sqrt2(abel):
    sys_ = build_system(["x1*x1 - 2"], abel=abel)
    res = krawczyk_test(sys_, Box.from_bounds([(1.0, 2.0)]))
    assert res.verdict == "UniqueZero"
    assert res.contracted.contains([math.sqrt(2.0)])


def test_krawczyk_no_zero(abel):
    sys_ = build_system(["x1*x1 - 2"], abel=abel)
    assert krawczyk_test(sys_, Box.from_bounds([(3.0, 4.0)])).verdict == "NoZero"


def test_krawczyk_unique_circle_line(abel):
    sys_ = build_system(["x1*x1 + x2*x2 - 1", "x1 - x2"], abel=abel)
    s = math.sqrt(0.5)
    box = Box.from_bounds([(s - 0.1, s + 0.1), (s - 0.1, s + 0.1)])
    assert krawczyk_test(sys_, box).verdict == "UniqueZero"


def test_krawczyk_singular_zero_unknown(abel):
    sys_ = build_system(["x1*x1"], abel=abel)
    res = krawczyk_test(sys_, Box.from_bounds([(-0.5, 0.5)]))
    assert res.verdict == "Unknown"


def test_krawczyk_phi_system(abel):
    sys_ = build_system(["phi(x1) - 0.5"], abel=abel)
    res = krawczyk_test(sys_, Box.from_bounds([(1.2, 2.0)]))
    assert res.verdict == "UniqueZero"
    assert res.contracted.contains([1.646292558082848])


def test_krawczyk_dimension_mismatch(abel):
    sys_ = build_system(["x1*x1 + x2*x2 - 1", "x1 - x2"], abel=abel)
    with pytest.raises(DomainError):
        krawczyk_test(sys_, Box.from_bounds([(0.0, 1.0)]))
