import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from halpern_mann import geometry as geo
from halpern_mann.errors import UsageError
from halpern_mann.geometry import EuclideanSpace, HyperboloidPlane, Point, SpiderTree

E1D = EuclideanSpace(1)
E2D = EuclideanSpace(2)
H = HyperboloidPlane()
TREE = SpiderTree(3)

lam = st.floats(0.0, 1.0)
coord = st.floats(-5.0, 5.0)


@st.composite
def e2_points(draw):
    return geo.euclidean(draw(coord), draw(coord))


@st.composite
def h_points(draw):
    return H.polar(draw(st.floats(0.0, 4.0)), draw(st.floats(0.0, 2 * math.pi)))


@st.composite
def tree_points(draw):
    t = draw(st.floats(0.0, 5.0))
    return TREE.point(draw(st.integers(0, 2)), t)


MODELS = [(E2D, e2_points()), (H, h_points()), (TREE, tree_points())]


# examples --------------------------------------------------------------


def test_dist_examples():
    assert E1D.dist(geo.euclidean(3), geo.euclidean(1)) == 2
    assert TREE.dist(TREE.point(1, 1), TREE.point(2, 1)) == 2
    x = H.polar(1.3, 0.4)
    assert H.dist(x, x) == 0


def test_combine_examples():
    a, b = geo.euclidean(0.0), geo.euclidean(4.0)
    assert E1D.combine(a, b, 0) == a
    assert E1D.combine(a, b, 0.25) == geo.euclidean(1.0)
    assert TREE.combine(TREE.point(1, 1), TREE.point(2, 1), 0.5) == TREE.junction()


def test_quasilin_examples():
    x, y = geo.euclidean(0, 0), geo.euclidean(1, 0)
    assert abs(geo.quasilin(x, y, geo.euclidean(0, 0), geo.euclidean(0, 1))) <= 1e-12
    assert geo.quasilin(x, y, x, y) == pytest.approx(1.0)


def test_cn_plus_examples():
    x, y, z = TREE.point(1, 1), TREE.point(2, 1), TREE.point(0, 1)
    assert TREE.cn_plus_gap(z, x, y, 0.5) >= 0
    assert TREE.cn_plus_gap(z, x, y, 0.0) == 0
    e = [geo.euclidean(1.0, 2.0), geo.euclidean(-3.0, 0.5), geo.euclidean(0.2, 0.1)]
    assert abs(E2D.cn_plus_gap(*e, 0.3)) <= 1e-10


def test_binomial_examples():
    x, y, z = geo.euclidean(1, 0), geo.euclidean(0, 1), geo.euclidean(0, 0)
    assert abs(geo.binomial_bound_gap(x, y, z, 0.5)) <= 1e-10
    assert geo.binomial_bound_gap(x, y, z, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert geo.binomial_bound_gap(x, y, z, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_tree_cn_plus_strict_at_branch():
    # midpoint is the junction: 0.5*4 + 0.5*4 - 0.25*4 - 1 = 2, where the plane gives 0
    gap = TREE.cn_plus_gap(TREE.point(0, 1), TREE.point(1, 1), TREE.point(2, 1), 0.5)
    assert gap == pytest.approx(2.0)


# errors ----------------------------------------------------------------


def test_model_mismatch():
    with pytest.raises(UsageError):
        geo.dist(geo.euclidean(0.0), TREE.point(0, 1))
    with pytest.raises(UsageError):
        geo.quasilin(geo.euclidean(0.0), geo.euclidean(1.0), H.origin(), H.origin())


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_combine_weight_range(bad):
    with pytest.raises(UsageError):
        E1D.combine(geo.euclidean(0.0), geo.euclidean(1.0), bad)


def test_point_invariants():
    with pytest.raises(UsageError):
        H.validate(Point(geo.HYPERBOLOID, (2.0, 0.0, 0.0)))
    with pytest.raises(UsageError):
        H.validate(Point(geo.HYPERBOLOID, (-1.0, 0.0, 0.0)))
    with pytest.raises(UsageError):
        TREE.point(3, 1.0)
    with pytest.raises(UsageError):
        TREE.point(0, -1.0)


def test_tree_junction_is_canonical():
    assert TREE.point(2, 0.0) == TREE.junction()
    assert Point.from_json({"model": "tree", "coords": [1, 0.0]}) == TREE.junction()


@pytest.mark.parametrize("p", [geo.euclidean(1.5, -2.0), H.polar(2.0, 1.0), TREE.point(2, 0.7)])
def test_json_round_trip(p):
    assert Point.from_json(p.to_json()) == p


def test_from_json_rejects_off_sheet():
    with pytest.raises(UsageError):
        Point.from_json({"model": "hyperboloid", "coords": [1.0, 1.0, 0.0]})
    with pytest.raises(UsageError):
        Point.from_json({"coords": [1.0]})


# hyperboloid specifics -------------------------------------------------


def test_hyperboloid_distance_matches_arccosh():
    a, b = H.polar(1.0, 0.2), H.polar(2.5, 2.0)
    inner = -geo.minkowski(a.coords, b.coords)
    assert H.dist(a, b) == pytest.approx(math.acosh(inner), rel=1e-12)


def test_hyperboloid_distance_stable_for_close_points():
    a = H.polar(3.0, 0.0)
    b = H.polar(3.0 + 1e-9, 0.0)
    assert H.dist(a, b) == pytest.approx(1e-9, rel=1e-5)


def test_polar_radius():
    assert H.dist(H.origin(), H.polar(2.0, 1.1)) == pytest.approx(2.0, rel=1e-12)


@given(h_points(), h_points(), lam)
def test_hyperboloid_combine_stays_on_sheet(a, b, t):
    H.validate(H.combine(a, b, t))


def test_hyperboloid_degenerate_combine_returns_first():
    a = H.polar(1.0, 1.0)
    assert H.combine(a, a, 0.3) == a


# properties ------------------------------------------------------------


@pytest.mark.parametrize("space,pts", MODELS, ids=["euclidean", "hyperboloid", "tree"])
@given(data=st.data())
def test_combine_splits_distance(space, pts, data):
    a, b, t = data.draw(pts), data.draw(pts), data.draw(lam)
    m = space.combine(a, b, t)
    d = space.dist(a, b)
    assert space.dist(a, m) == pytest.approx(t * d, abs=1e-9)
    assert space.dist(m, b) == pytest.approx((1 - t) * d, abs=1e-9)


@pytest.mark.parametrize("space,pts", MODELS, ids=["euclidean", "hyperboloid", "tree"])
@given(data=st.data())
def test_w_axioms(space, pts, data):
    x, y, z, w = (data.draw(pts) for _ in range(4))
    s, t = data.draw(lam), data.draw(lam)
    d, c = space.dist, space.combine
    m = c(x, y, s)
    assert d(z, m) <= (1 - s) * d(z, x) + s * d(z, y) + 1e-9
    assert d(m, c(x, y, t)) == pytest.approx(abs(s - t) * d(x, y), abs=1e-9)
    assert d(m, c(y, x, 1 - s)) <= 1e-9
    assert d(m, c(z, w, s)) <= (1 - s) * d(x, z) + s * d(y, w) + 1e-9


@pytest.mark.parametrize("space,pts", MODELS, ids=["euclidean", "hyperboloid", "tree"])
@given(data=st.data())
def test_metric_axioms(space, pts, data):
    x, y, z = (data.draw(pts) for _ in range(3))
    d = space.dist
    assert d(x, x) == 0
    assert d(x, y) == pytest.approx(d(y, x), abs=1e-12)
    assert d(x, z) <= d(x, y) + d(y, z) + 1e-9


@pytest.mark.parametrize("space,pts", MODELS, ids=["euclidean", "hyperboloid", "tree"])
@given(data=st.data())
def test_cat0_inequalities(space, pts, data):
    x, y, z = (data.draw(pts) for _ in range(3))
    t = data.draw(lam)
    assert space.cn_plus_gap(z, x, y, t) >= -1e-9
    assert space.binomial_bound_gap(x, y, z, t) >= -1e-9


@pytest.mark.parametrize("space,pts", MODELS, ids=["euclidean", "hyperboloid", "tree"])
@given(data=st.data())
def test_quasilin_laws(space, pts, data):
    x, y, u, v, w = (data.draw(pts) for _ in range(5))
    q, d = space.quasilin, space.dist
    scale = 1 + max(d(x, y), d(u, v), d(x, w)) ** 2
    assert q(x, y, x, y) == pytest.approx(d(x, y) ** 2, abs=1e-9 * scale)
    assert q(x, y, u, v) == pytest.approx(q(u, v, x, y), abs=1e-9 * scale)
    assert q(y, x, u, v) == pytest.approx(-q(x, y, u, v), abs=1e-9 * scale)
    assert q(x, y, u, v) + q(x, y, v, w) == pytest.approx(q(x, y, u, w), abs=1e-9 * scale)
    assert abs(q(x, y, u, v)) <= d(x, y) * d(u, v) + 1e-9 * scale


@given(e2_points(), e2_points(), e2_points(), e2_points())
def test_euclidean_quasilin_is_inner_product(x, y, u, v):
    expected = float(np.dot(np.subtract(y.coords, x.coords), np.subtract(v.coords, u.coords)))
    assert geo.quasilin(x, y, u, v) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("space,pts", MODELS, ids=["euclidean", "hyperboloid", "tree"])
@given(data=st.data())
def test_uniform_convexity(space, pts, data):
    a, x, y = (data.draw(pts) for _ in range(3))
    r = max(space.dist(x, a), space.dist(y, a))
    if r == 0:
        return
    eps = min(2.0, space.dist(x, y) / r)
    assert space.dist(space.midpoint(x, y), a) <= (1 - eps * eps / 8) * r + 1e-9


def test_samplers_stay_in_model(rng):
    for space in (E2D, H, TREE):
        for _ in range(200):
            space.validate(space.sample(rng))


def test_ball_nets_lie_in_ball():
    for space, c in ((E2D, geo.euclidean(1.0, 1.0)), (H, H.polar(1.0, 0.5)), (TREE, TREE.point(1, 0.3))):
        net = space.ball_net(c, 0.8, 9)
        assert c in net
        assert all(space.dist(c, p) <= 0.8 + 1e-9 for p in net)
