"""Convex sets, nonexpansive maps, monotone operators and their resolvents.

Sets know how to project onto themselves in closed form, test membership,
draw random members and produce local nets (the last two feed the
brute-force oracles in :mod:`halpern_mann.verify`). Monotone operators are
represented only by the handful of concrete kinds the splitting algorithms
need; everything the algorithms touch goes through the resolvent.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry as geo
from .errors import NumericError, UsageError
from .geometry import EUCLIDEAN, HYPERBOLOID, TREE, Point, minkowski


def _vec(x):
    if x.model != EUCLIDEAN:
        raise UsageError(f"operation needs a Euclidean point, got {x.model}")
    return np.asarray(x.coords, dtype=float)


def _pt(v):
    return Point(EUCLIDEAN, tuple(float(c) for c in np.atleast_1d(v)))


def _floats(values):
    return tuple(float(v) for v in values)


# --------------------------------------------------------------------------
# convex sets


class ConvexSet:
    """Closed convex subset of a model space."""

    kind = None
    model = EUCLIDEAN

    def project(self, x):
        raise UsageError(f"no closed-form projection onto {self.kind}")

    def contains(self, x, tol=1e-9):
        raise NotImplementedError

    def sample(self, rng):
        raise NotImplementedError

    def local_net(self, center, radius, m=21):
        """Members of the set within ``radius`` of ``center`` on a grid."""
        net = geo.space_of(center).ball_net(center, radius, m)
        return [p for p in net if self.contains(p, tol=0.0)]

    def check_point(self, x):
        if x.model != self.model:
            raise UsageError(f"{self.kind} lives in the {self.model} model, got {x.model}")

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Interval(ConvexSet):
    lo: float
    hi: float
    kind = "interval"

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise UsageError(f"empty interval [{self.lo}, {self.hi}]")

    def project(self, x):
        self.check_point(x)
        return geo.euclidean(min(max(x.coords[0], self.lo), self.hi))

    def contains(self, x, tol=1e-9):
        return self.lo - tol <= x.coords[0] <= self.hi + tol

    def sample(self, rng):
        return geo.euclidean(rng.uniform(self.lo, self.hi))

    def local_net(self, center, radius, m=21):
        a = max(self.lo, center.coords[0] - radius)
        b = min(self.hi, center.coords[0] + radius)
        if a > b:
            return []
        return [geo.euclidean(t) for t in np.linspace(a, b, m).tolist()]

    def to_json(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Box(ConvexSet):
    lo: tuple
    hi: tuple
    kind = "box"

    def __post_init__(self):
        object.__setattr__(self, "lo", _floats(self.lo))
        object.__setattr__(self, "hi", _floats(self.hi))
        if len(self.lo) != len(self.hi) or any(a > b for a, b in zip(self.lo, self.hi)):
            raise UsageError("box bounds must have equal length with lo <= hi")

    def project(self, x):
        self.check_point(x)
        return _pt(np.clip(_vec(x), self.lo, self.hi))

    def contains(self, x, tol=1e-9):
        return all(a - tol <= c <= b + tol for c, a, b in zip(x.coords, self.lo, self.hi))

    def sample(self, rng):
        return _pt(rng.uniform(self.lo, self.hi))

    def to_json(self):
        return {"kind": self.kind, "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Ball(ConvexSet):
    """Euclidean ball."""

    center: tuple
    radius: float
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", _floats(self.center))
        if not self.radius >= 0:
            raise UsageError("ball radius must be nonnegative")

    def project(self, x):
        self.check_point(x)
        c = np.asarray(self.center)
        v = _vec(x) - c
        n = float(np.linalg.norm(v))
        if n <= self.radius:
            return x
        return _pt(c + v * (self.radius / n))

    def contains(self, x, tol=1e-9):
        return math.dist(x.coords, self.center) <= self.radius + tol

    def sample(self, rng):
        d = len(self.center)
        g = rng.normal(size=d)
        g /= np.linalg.norm(g)
        return _pt(np.asarray(self.center) + g * self.radius * rng.uniform() ** (1.0 / d))

    def to_json(self):
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Halfspace(ConvexSet):
    """``{x : <normal, x> <= offset}``."""

    normal: tuple
    offset: float
    kind = "halfspace"

    def __post_init__(self):
        object.__setattr__(self, "normal", _floats(self.normal))
        if not any(self.normal):
            raise UsageError("halfspace normal must be nonzero")

    def project(self, x):
        self.check_point(x)
        a = np.asarray(self.normal)
        v = _vec(x)
        excess = float(a @ v) - self.offset
        if excess <= 0:
            return x
        return _pt(v - excess / float(a @ a) * a)

    def contains(self, x, tol=1e-9):
        a = np.asarray(self.normal)
        return float(a @ _vec(x)) - self.offset <= tol * float(np.linalg.norm(a))

    def sample(self, rng, scale=3.0):
        # members in a bounded window; reflect the outside ones across the boundary
        x = geo.EuclideanSpace(len(self.normal)).sample(rng, scale)
        if self.contains(x):
            return x
        p = _vec(self.project(x))
        return _pt(2 * p - _vec(x))

    def to_json(self):
        return {"kind": self.kind, "normal": list(self.normal), "offset": self.offset}


@dataclass(frozen=True)
class Line(ConvexSet):
    """Euclidean affine line ``{anchor + s * direction}``."""

    anchor: tuple
    direction: tuple
    kind = "line"

    def __post_init__(self):
        object.__setattr__(self, "anchor", _floats(self.anchor))
        d = np.asarray(_floats(self.direction))
        n = float(np.linalg.norm(d))
        if n == 0:
            raise UsageError("line direction must be nonzero")
        object.__setattr__(self, "direction", _floats(d / n))

    def _at(self, s):
        return _pt(np.asarray(self.anchor) + s * np.asarray(self.direction))

    def _param(self, x):
        return float((_vec(x) - np.asarray(self.anchor)) @ np.asarray(self.direction))

    def project(self, x):
        self.check_point(x)
        return self._at(self._param(x))

    def contains(self, x, tol=1e-9):
        return geo.dist(x, self._at(self._param(x))) <= tol

    def sample(self, rng, scale=3.0):
        return self._at(rng.uniform(-scale, scale))

    def local_net(self, center, radius, m=21):
        s0 = self._param(center)
        return [p for p in (self._at(s) for s in np.linspace(s0 - radius, s0 + radius, m))
                if geo.dist(p, center) <= radius]

    def to_json(self):
        return {"kind": self.kind, "anchor": list(self.anchor), "direction": list(self.direction)}


@dataclass(frozen=True)
class GeodesicBall(ConvexSet):
    """Closed metric ball in any model; projection moves radially toward the center."""

    center: Point
    radius: float
    kind = "geodesic_ball"

    def __post_init__(self):
        if not self.radius >= 0:
            raise UsageError("ball radius must be nonnegative")

    @property
    def model(self):
        return self.center.model

    def project(self, x):
        self.check_point(x)
        d = geo.dist(self.center, x)
        if d <= self.radius:
            return x
        return geo.combine(self.center, x, self.radius / d)

    def contains(self, x, tol=1e-9):
        return geo.dist(self.center, x) <= self.radius + tol

    def sample(self, rng):
        space = geo.space_of(self.center)
        q = space.sample(rng, scale=3.0 + self.radius)
        d = geo.dist(self.center, q)
        if d == 0:
            return self.center
        return geo.combine(self.center, q, min(1.0, self.radius * math.sqrt(rng.uniform()) / d))

    def to_json(self):
        return {"kind": self.kind, "center": self.center.to_json(), "radius": self.radius}


def _lorentz_cross(a, b):
    c = np.cross(np.asarray(a), np.asarray(b))
    return np.array([-c[0], c[1], c[2]])


@dataclass(frozen=True)
class HyperbolicLine(ConvexSet):
    """Complete geodesic of the hyperboloid: ``{x : <x, normal>_M = 0}``.

    ``normal`` must be spacelike; it is rescaled to unit Minkowski length.
    """

    normal: tuple
    kind = "hyperbolic_line"
    model = HYPERBOLOID

    def __post_init__(self):
        n = np.asarray(_floats(self.normal))
        q = minkowski(n, n)
        if q <= 0:
            raise UsageError("hyperbolic line needs a spacelike normal")
        object.__setattr__(self, "normal", _floats(n / math.sqrt(q)))

    @classmethod
    def through(cls, a, b):
        if geo.dist(a, b) < geo.DEGENERATE:
            raise UsageError("two distinct points determine a line")
        return cls(tuple(_lorentz_cross(a.coords, b.coords)))

    def _frame(self):
        n = np.asarray(self.normal)
        foot = np.array([1.0, 0.0, 0.0]) - minkowski((1.0, 0.0, 0.0), n) * n
        foot /= math.sqrt(-minkowski(foot, foot))
        tangent = _lorentz_cross(foot, n)
        tangent /= math.sqrt(minkowski(tangent, tangent))
        return foot, tangent

    def at(self, s):
        foot, tangent = self._frame()
        x = math.cosh(s) * foot + math.sinh(s) * tangent
        return geo.HyperboloidPlane.lift(x[1], x[2])

    def param(self, x):
        _, tangent = self._frame()
        return math.asinh(minkowski(self.project(x).coords, tangent))

    def project(self, x):
        self.check_point(x)
        n = np.asarray(self.normal)
        v = np.asarray(x.coords)
        k = minkowski(v, n)
        y = (v - k * n) / math.sqrt(1.0 + k * k)
        return geo.HyperboloidPlane.lift(y[1], y[2])

    def contains(self, x, tol=1e-9):
        return math.asinh(abs(minkowski(x.coords, self.normal))) <= tol

    def sample(self, rng, scale=3.0):
        return self.at(rng.uniform(-scale, scale))

    def local_net(self, center, radius, m=21):
        s0 = self.param(center)
        net = (self.at(s) for s in np.linspace(s0 - radius, s0 + radius, m))
        return [p for p in net if geo.dist(p, center) <= radius]

    def to_json(self):
        return {"kind": self.kind, "normal": list(self.normal)}


@dataclass(frozen=True)
class GeodesicSegment(ConvexSet):
    """Geodesic segment between two points of any model."""

    a: Point
    b: Point
    kind = "segment"

    def __post_init__(self):
        if self.a.model != self.b.model:
            raise UsageError("segment endpoints must share a model")

    @property
    def model(self):
        return self.a.model

    def at(self, lam):
        return geo.combine(self.a, self.b, lam)

    def project(self, x):
        self.check_point(x)
        length = geo.dist(self.a, self.b)
        if length < geo.DEGENERATE:
            return self.a
        if self.model == EUCLIDEAN:
            a, b = _vec(self.a), _vec(self.b)
            t = float((_vec(x) - a) @ (b - a)) / float((b - a) @ (b - a))
            return self.at(min(max(t, 0.0), 1.0))
        if self.model == HYPERBOLOID:
            q = HyperbolicLine.through(self.a, self.b).project(x)
            da, db = geo.dist(self.a, q), geo.dist(q, self.b)
            if da + db <= length + 1e-12 * max(1.0, length):
                return q
            return self.a if da < db else self.b
        # tree: distance along the segment is piecewise linear; test the breakpoints
        leg_x, t_x = x.coords
        candidates = [self.a, self.b]
        for lam in self._leg_params(leg_x, t_x) + self._leg_params(0, 0.0):
            candidates.append(self.at(lam))
        return min(candidates, key=lambda p: geo.dist(x, p))

    def _leg_params(self, leg, t):
        # parameters where the segment passes the arclength t on the given leg
        length = geo.dist(self.a, self.b)
        out = []
        target = geo.tree_point(leg, t) if leg < 3 else geo.SpiderTree(leg + 1).point(leg, t)
        da, db = geo.dist(self.a, target), geo.dist(target, self.b)
        if abs(da + db - length) <= 1e-12 * max(1.0, length):
            out.append(da / length)
        return out

    def contains(self, x, tol=1e-9):
        return geo.dist(x, self.project(x)) <= tol

    def sample(self, rng):
        return self.at(rng.uniform())

    def local_net(self, center, radius, m=21):
        length = geo.dist(self.a, self.b)
        if length < geo.DEGENERATE:
            return [self.a] if geo.dist(self.a, center) <= radius else []
        coarse = np.linspace(0.0, 1.0, 1025)
        lam0 = min(coarse, key=lambda s: geo.dist(center, self.at(float(s))))
        half = radius / length + 1.0 / 1024
        grid = np.linspace(max(0.0, lam0 - half), min(1.0, lam0 + half), m)
        return [p for p in (self.at(float(s)) for s in grid) if geo.dist(p, center) <= radius]

    def to_json(self):
        return {"kind": self.kind, "a": self.a.to_json(), "b": self.b.to_json()}


@dataclass(frozen=True)
class TreeStar(ConvexSet):
    """Subtree of a spider: leg ``k`` up to arclength ``reach[k]``."""

    reach: tuple
    kind = "tree_star"
    model = TREE

    def __post_init__(self):
        object.__setattr__(self, "reach", _floats(self.reach))
        if any(r < 0 for r in self.reach):
            raise UsageError("tree reach must be nonnegative")

    def project(self, x):
        self.check_point(x)
        leg, t = x.coords
        return geo.SpiderTree(len(self.reach)).point(leg, min(t, self.reach[leg]))

    def contains(self, x, tol=1e-9):
        leg, t = x.coords
        return t <= self.reach[leg] + tol

    def sample(self, rng):
        legs = [k for k, r in enumerate(self.reach) if r > 0]
        if not legs:
            return geo.SpiderTree(len(self.reach)).junction()
        leg = legs[int(rng.integers(len(legs)))]
        return geo.SpiderTree(len(self.reach)).point(leg, self.reach[leg] * rng.uniform())

    def local_net(self, center, radius, m=21):
        space = geo.SpiderTree(len(self.reach))
        return [p for p in space.ball_net(center, radius, m) if self.contains(p, tol=0.0)]

    def to_json(self):
        return {"kind": self.kind, "reach": list(self.reach)}


@dataclass(frozen=True)
class Singleton(ConvexSet):
    point: Point
    kind = "singleton"

    @property
    def model(self):
        return self.point.model

    def project(self, x):
        self.check_point(x)
        return self.point

    def contains(self, x, tol=1e-9):
        return geo.dist(x, self.point) <= tol

    def sample(self, rng):
        return self.point

    def local_net(self, center, radius, m=21):
        return [self.point] if geo.dist(center, self.point) <= radius else []

    def to_json(self):
        return {"kind": self.kind, "point": self.point.to_json()}


@dataclass(frozen=True)
class Intersection(ConvexSet):
    """Intersection of convex sets; nets come from the first member.

    No closed-form projection: use :func:`halpern_mann.verify.brute_force_projection`.
    Put the lowest-dimensional member first so its nets are not empty.
    """

    members: tuple
    kind = "intersection"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise UsageError("intersection of no sets")

    @property
    def model(self):
        return self.members[0].model

    def contains(self, x, tol=1e-9):
        return all(s.contains(x, tol) for s in self.members)

    def sample(self, rng):
        for _ in range(10_000):
            x = self.members[0].sample(rng)
            if self.contains(x, tol=0.0):
                return x
        raise UsageError("could not sample the intersection by rejection")

    def local_net(self, center, radius, m=21):
        net = self.members[0].local_net(center, radius, m)
        return [p for p in net if all(s.contains(p, tol=0.0) for s in self.members[1:])]

    def to_json(self):
        return {"kind": self.kind, "members": [s.to_json() for s in self.members]}


def project_convex(set_spec, x):
    """Nearest point of ``set_spec`` to ``x`` (closed form)."""
    return set_spec.project(x)


def set_from_json(data):
    """Rebuild a convex set from its JSON form."""
    kind = data.get("kind")
    if kind == "interval":
        return Interval(float(data["lo"]), float(data["hi"]))
    if kind == "box":
        return Box(data["lo"], data["hi"])
    if kind == "ball":
        return Ball(data["center"], float(data["radius"]))
    if kind == "halfspace":
        return Halfspace(data["normal"], float(data["offset"]))
    if kind == "line":
        return Line(data["anchor"], data["direction"])
    if kind == "geodesic_ball":
        return GeodesicBall(Point.from_json(data["center"]), float(data["radius"]))
    if kind == "hyperbolic_line":
        return HyperbolicLine(data["normal"])
    if kind == "segment":
        return GeodesicSegment(Point.from_json(data["a"]), Point.from_json(data["b"]))
    if kind == "tree_star":
        return TreeStar(data["reach"])
    if kind == "singleton":
        return Singleton(Point.from_json(data["point"]))
    if kind == "intersection":
        return Intersection(tuple(set_from_json(m) for m in data["members"]))
    raise UsageError(f"unknown set kind {kind!r}")


# --------------------------------------------------------------------------
# nonexpansive maps


@dataclass(frozen=True)
class NonexpansiveMap:
    """A 1-Lipschitz self-map with an optional known fixed point."""

    fn: Callable[[Point], Point]
    name: str = "map"
    fixed_point: Point | None = None
    lipschitz: float = 1.0

    def __post_init__(self):
        if not 0 <= self.lipschitz <= 1:
            raise UsageError(f"Lipschitz certificate {self.lipschitz} exceeds 1")

    def __call__(self, x):
        return self.fn(x)

    def __repr__(self):
        return f"NonexpansiveMap({self.name})"


def identity_map():
    return NonexpansiveMap(lambda x: x, "Id")


def projection_map(set_spec, fixed_point=None):
    return NonexpansiveMap(set_spec.project, f"P[{set_spec.kind}]", fixed_point)


def rotation_map(angle):
    """Rotation of the Euclidean plane about the origin."""
    c, s = math.cos(angle), math.sin(angle)

    def rotate(x):
        a, b = x.coords
        return Point(EUCLIDEAN, (c * a - s * b, s * a + c * b))

    return NonexpansiveMap(rotate, f"rot({angle:g})", geo.euclidean(0.0, 0.0))


def hyperbolic_rotation_map(angle):
    """Rotation of the hyperboloid about the origin (an isometry)."""
    c, s = math.cos(angle), math.sin(angle)

    def rotate(x):
        _, a, b = x.coords
        return geo.HyperboloidPlane.lift(c * a - s * b, s * a + c * b)

    return NonexpansiveMap(rotate, f"hrot({angle:g})", geo.HyperboloidPlane().origin())


def compose(f, g):
    """``f o g``."""
    witness = g.fixed_point if g.fixed_point is not None and f.fixed_point == g.fixed_point else None
    return NonexpansiveMap(lambda x: f(g(x)), f"{f.name}.{g.name}", witness,
                           f.lipschitz * g.lipschitz)


@dataclass(frozen=True)
class AveragedMap:
    """``x -> combine(x, base(x), alpha)`` for a nonexpansive ``base``."""

    base: NonexpansiveMap
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise UsageError(f"averaging parameter must lie in (0, 1], got {self.alpha}")

    def __call__(self, x):
        return geo.combine(x, self.base(x), self.alpha)

    def as_map(self):
        return NonexpansiveMap(self, f"avg({self.base.name},{self.alpha:g})",
                               self.base.fixed_point)


def averaged_eval(m, x):
    """Evaluate an averaged map: ``combine(x, m.base(x), m.alpha)``."""
    return m(x)


# --------------------------------------------------------------------------
# monotone operators


class MonotoneOp:
    """A maximal monotone operator on Euclidean space, one of a few concrete kinds."""

    kind = None
    single_valued = True

    def apply(self, x):
        raise UsageError(f"{self.kind} is multi-valued; only its resolvent is available")

    def resolvent(self, c, x):
        raise NotImplementedError

    def has_zero_at(self, x, tol=1e-9):
        """Closed-form test of ``0 in op(x)``."""
        raise NotImplementedError

    @property
    def cocoercivity(self):
        """Largest known ``delta`` with ``delta * op`` firmly nonexpansive, or None."""
        return None

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class NormalCone(MonotoneOp):
    """Subdifferential of the indicator of a closed convex Euclidean set."""

    set_spec: ConvexSet
    kind = "normal_cone"
    single_valued = False

    def __post_init__(self):
        if not isinstance(self.set_spec, (Interval, Box, Ball, Halfspace, Line)):
            raise UsageError("normal cones are supported for intervals, boxes, balls, halfspaces and lines")

    def resolvent(self, c, x):
        return self.set_spec.project(x)

    def has_zero_at(self, x, tol=1e-9):
        return self.set_spec.contains(x, tol)

    def to_json(self):
        return {"kind": self.kind, "set": self.set_spec.to_json()}


@dataclass(frozen=True)
class AffineGradient(MonotoneOp):
    """``x -> A x + b`` with ``A`` symmetric positive semidefinite."""

    matrix: tuple
    offset: tuple
    kind = "affine_gradient"
    _eig_max: float = field(default=0.0, init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        b = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
            raise UsageError("affine gradient needs a square matrix matching the offset")
        if not np.allclose(a, a.T, atol=1e-12):
            raise UsageError("affine gradient matrix must be symmetric")
        eig = np.linalg.eigvalsh(a)
        if eig.min() < -1e-12:
            raise UsageError("affine gradient matrix must be positive semidefinite")
        object.__setattr__(self, "matrix", tuple(tuple(row) for row in a.tolist()))
        object.__setattr__(self, "offset", tuple(b.tolist()))
        object.__setattr__(self, "_eig_max", float(eig.max()))

    def apply(self, x):
        return _pt(np.asarray(self.matrix) @ _vec(x) + np.asarray(self.offset))

    def resolvent(self, c, x):
        _check_step(c)
        a = np.asarray(self.matrix)
        lhs = np.eye(a.shape[0]) + c * a
        try:
            y = np.linalg.solve(lhs, _vec(x) - c * np.asarray(self.offset))
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular system in affine resolvent") from exc
        return _pt(y)

    def has_zero_at(self, x, tol=1e-9):
        return float(np.linalg.norm(_vec(self.apply(x)))) <= tol

    @property
    def cocoercivity(self):
        return math.inf if self._eig_max == 0 else 1.0 / self._eig_max

    def to_json(self):
        return {"kind": self.kind, "matrix": [list(r) for r in self.matrix],
                "offset": list(self.offset)}


@dataclass(frozen=True)
class ScaledIdentity(MonotoneOp):
    """``x -> s x`` with ``s >= 0``."""

    scale: float
    kind = "scaled_identity"

    def __post_init__(self):
        if not self.scale >= 0:
            raise UsageError("scaled identity needs a nonnegative scale")

    def apply(self, x):
        return _pt(self.scale * _vec(x))

    def resolvent(self, c, x):
        _check_step(c)
        return _pt(_vec(x) / (1.0 + c * self.scale))

    def has_zero_at(self, x, tol=1e-9):
        return self.scale * float(np.linalg.norm(_vec(x))) <= tol

    @property
    def cocoercivity(self):
        return math.inf if self.scale == 0 else 1.0 / self.scale

    def to_json(self):
        return {"kind": self.kind, "scale": self.scale}


@dataclass(frozen=True)
class ZeroOperator(MonotoneOp):
    kind = "zero"

    def apply(self, x):
        return _pt(np.zeros(len(x.coords)))

    def resolvent(self, c, x):
        _check_step(c)
        return x

    def has_zero_at(self, x, tol=1e-9):
        return True

    @property
    def cocoercivity(self):
        return math.inf

    def to_json(self):
        return {"kind": self.kind}


def op_from_json(data):
    """Rebuild a monotone operator spec from its JSON form."""
    kind = data.get("kind")
    if kind == "normal_cone":
        return NormalCone(set_from_json(data["set"]))
    if kind == "affine_gradient":
        return AffineGradient(data["matrix"], data["offset"])
    if kind == "scaled_identity":
        return ScaledIdentity(float(data["scale"]))
    if kind == "zero":
        return ZeroOperator()
    raise UsageError(f"unknown operator kind {kind!r}")


def _check_step(c):
    if not c > 0:
        raise UsageError(f"resolvent step must be positive, got {c}")


def resolvent(op, c, x):
    """``J_{c op}(x) = (I + c op)^{-1} x``."""
    _check_step(c)
    _vec(x)
    return op.resolvent(c, x)


def reflected_resolvent(op, c, x):
    """``2 J_{c op}(x) - x``."""
    return _pt(2 * _vec(resolvent(op, c, x)) - _vec(x))


def resolvent_map(op, c):
    return NonexpansiveMap(lambda x: resolvent(op, c, x), f"J[{op.kind},{c:g}]")


def reflected_map(op, c):
    return NonexpansiveMap(lambda x: reflected_resolvent(op, c, x), f"R[{op.kind},{c:g}]")


def forward_map(op, c):
    """``Id - c op``; nonexpansive when ``c <= 2 delta`` for a delta-cocoercive op."""
    delta = op.cocoercivity
    if delta is None or c > 2 * delta * (1 + 1e-12):
        raise UsageError("forward step needs a cocoercive operator with c <= 2 delta")
    return NonexpansiveMap(lambda x: _pt(_vec(x) - c * _vec(op.apply(x))), f"F[{op.kind},{c:g}]")


def firm_nonexp_gap(f, x, y):
    """``|x-y|^2 - |(x-f x)-(y-f y)|^2 - |f x - f y|^2`` (nonnegative iff firm)."""
    vx, vy, fx, fy = _vec(x), _vec(y), _vec(f(x)), _vec(f(y))
    return float((vx - vy) @ (vx - vy) - ((vx - fx) - (vy - fy)) @ ((vx - fx) - (vy - fy))
                 - (fx - fy) @ (fx - fy))


def cocoercive_gap(op, delta, x, y):
    """``<x-y, op x - op y> - delta |op x - op y|^2``."""
    vx, vy = _vec(x), _vec(y)
    d = _vec(op.apply(x)) - _vec(op.apply(y))
    return float((vx - vy) @ d - delta * (d @ d))
