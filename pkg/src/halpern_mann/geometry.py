"""Geodesic model spaces: Euclidean space, the hyperboloid plane, spider trees.

Each model exposes the metric ``dist`` and the convexity map ``combine``
(``combine(a, b, lam)`` is the point at fraction ``lam`` along the geodesic
from ``a`` to ``b``). The quasi-linearization and the CAT(0) gap functions
are derived from the metric alone, so they are shared by all models.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

EUCLIDEAN = "euclidean"
HYPERBOLOID = "hyperboloid"
TREE = "tree"
MODELS = (EUCLIDEAN, HYPERBOLOID, TREE)

SHEET_TOL = 1e-10
DEGENERATE = 1e-12


@dataclass(frozen=True, slots=True)
class Point:
    """Immutable point of a model space.

    ``coords`` is a tuple: a vector for Euclidean space, ``(x0, x1, x2)`` on
    the upper sheet for the hyperboloid, ``(leg, t)`` for a spider tree.
    """

    model: str
    coords: tuple

    def to_json(self):
        return {"model": self.model, "coords": list(self.coords)}

    @classmethod
    def from_json(cls, data):
        try:
            model, coords = data["model"], data["coords"]
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed point {data!r}") from exc
        if model == TREE:
            leg, t = int(coords[0]), float(coords[1])
            coords = (0 if t == 0.0 else leg, t)
        else:
            coords = tuple(float(c) for c in coords)
        point = cls(model, coords)
        space_of(point).validate(point)
        return point

    def __repr__(self):
        inner = ", ".join(repr(c) for c in self.coords)
        return f"{self.model}({inner})"


def _same_model(*points):
    model = points[0].model
    for p in points[1:]:
        if p.model != model:
            raise UsageError(f"points from different models: {model} vs {p.model}")


def _check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise UsageError(f"combination weight must lie in [0, 1], got {lam}")


class Space:
    """Common machinery of a geodesic model; subclasses supply the metric."""

    tag = None

    def dist(self, a, b):
        raise NotImplementedError

    def combine(self, a, b, lam):
        raise NotImplementedError

    def validate(self, p):
        if p.model != self.tag:
            raise UsageError(f"expected a {self.tag} point, got {p.model}")

    def sample(self, rng, scale=3.0):
        """One random point, roughly within distance ``scale`` of the base point."""
        raise NotImplementedError

    def base_point(self):
        raise NotImplementedError

    def ball_net(self, center, radius, m):
        """Finite net of the closed ball around ``center`` (used by oracles)."""
        raise NotImplementedError

    # derived quantities -------------------------------------------------

    def quasilin(self, x, y, u, v):
        d = self.dist
        return 0.5 * (d(x, v) ** 2 + d(y, u) ** 2 - d(x, u) ** 2 - d(y, v) ** 2)

    def cn_plus_gap(self, z, x, y, lam):
        d = self.dist
        m = self.combine(x, y, lam)
        return ((1 - lam) * d(z, x) ** 2 + lam * d(z, y) ** 2
                - lam * (1 - lam) * d(x, y) ** 2 - d(z, m) ** 2)

    def binomial_bound_gap(self, x, y, z, t):
        d = self.dist
        rhs = ((1 - t) ** 2 * d(x, z) ** 2
               + 2 * t * (1 - t) * self.quasilin(x, z, y, z)
               + t ** 2 * d(y, z) ** 2)
        return rhs - d(self.combine(x, y, t), z) ** 2

    def midpoint(self, x, y):
        return self.combine(x, y, 0.5)


class EuclideanSpace(Space):
    """Real coordinate space with the Euclidean norm."""

    tag = EUCLIDEAN

    def __init__(self, dim=2):
        if dim < 1:
            raise UsageError("dimension must be positive")
        self.dim = dim

    def __repr__(self):
        return f"EuclideanSpace(dim={self.dim})"

    def point(self, *coords):
        if len(coords) == 1 and isinstance(coords[0], (tuple, list, np.ndarray)):
            coords = coords[0]
        p = Point(EUCLIDEAN, tuple(float(c) for c in coords))
        self.validate(p)
        return p

    def zero(self):
        return Point(EUCLIDEAN, (0.0,) * self.dim)

    base_point = zero

    def validate(self, p):
        super().validate(p)
        if len(p.coords) != self.dim:
            raise UsageError(f"expected {self.dim} coordinates, got {len(p.coords)}")

    def dist(self, a, b):
        _same_model(a, b)
        return math.dist(a.coords, b.coords)

    def combine(self, a, b, lam):
        _same_model(a, b)
        _check_lambda(lam)
        if lam == 0.0:
            return a
        if lam == 1.0 or a == b:
            return b
        return Point(EUCLIDEAN, tuple((1 - lam) * s + lam * t
                                      for s, t in zip(a.coords, b.coords)))

    def sample(self, rng, scale=3.0):
        return Point(EUCLIDEAN, tuple(rng.uniform(-scale, scale, self.dim).tolist()))

    def ball_net(self, center, radius, m):
        axis = np.linspace(-radius, radius, m)
        grids = np.meshgrid(*([axis] * self.dim), indexing="ij")
        offsets = np.stack([g.ravel() for g in grids], axis=1)
        offsets = offsets[np.linalg.norm(offsets, axis=1) <= radius * (1 + 1e-12)]
        c = np.asarray(center.coords)
        return [Point(EUCLIDEAN, tuple(row)) for row in (c + offsets).tolist()]


def minkowski(x, y):
    """Lorentzian form ``-x0*y0 + x1*y1 + x2*y2``."""
    return -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


class HyperboloidPlane(Space):
    """Upper sheet of ``<x, x> = -1`` in Minkowski space, curvature -1."""

    tag = HYPERBOLOID

    def __repr__(self):
        return "HyperboloidPlane()"

    @staticmethod
    def lift(x1, x2):
        """Point of the sheet above ``(x1, x2)``."""
        return Point(HYPERBOLOID, (math.sqrt(1.0 + x1 * x1 + x2 * x2), float(x1), float(x2)))

    def polar(self, r, angle):
        """Point at distance ``r`` from the origin in direction ``angle``."""
        s = math.sinh(r)
        return self.lift(s * math.cos(angle), s * math.sin(angle))

    def origin(self):
        return Point(HYPERBOLOID, (1.0, 0.0, 0.0))

    base_point = origin

    def validate(self, p):
        super().validate(p)
        if len(p.coords) != 3:
            raise UsageError("hyperboloid points have three coordinates")
        x0 = p.coords[0]
        if x0 <= 0:
            raise UsageError("hyperboloid point is not on the upper sheet")
        if abs(minkowski(p.coords, p.coords) + 1.0) > SHEET_TOL * max(1.0, x0 * x0):
            raise UsageError("hyperboloid point is off the sheet")

    def dist(self, a, b):
        _same_model(a, b)
        # chord form: stable for nearby points, equal to arccosh(-<a,b>)
        diff = [s - t for s, t in zip(a.coords, b.coords)]
        chord2 = minkowski(diff, diff)
        if chord2 <= 0.0:
            return 0.0
        return 2.0 * math.asinh(math.sqrt(chord2) / 2.0)

    def combine(self, a, b, lam):
        _same_model(a, b)
        _check_lambda(lam)
        if lam == 0.0:
            return a
        if lam == 1.0:
            return b
        delta = self.dist(a, b)
        if delta < DEGENERATE:
            return a
        sa = math.sinh((1 - lam) * delta)
        sb = math.sinh(lam * delta)
        sd = math.sinh(delta)
        _, x1, x2 = ((sa * s + sb * t) / sd for s, t in zip(a.coords, b.coords))
        return self.lift(x1, x2)

    def tangent_frame(self, c):
        """Minkowski-orthonormal basis of the tangent plane at ``c``."""
        x = np.asarray(c.coords)
        basis = []
        for e in (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])):
            v = e + minkowski(e, x) * x
            for w in basis:
                v = v - minkowski(v, w) * w
            basis.append(v / math.sqrt(minkowski(v, v)))
        return basis

    def exp_at(self, c, r, angle, frame=None):
        """Point at distance ``r`` from ``c`` along tangent direction ``angle``."""
        e1, e2 = frame or self.tangent_frame(c)
        v = math.cos(angle) * e1 + math.sin(angle) * e2
        x = math.cosh(r) * np.asarray(c.coords) + math.sinh(r) * v
        return self.lift(x[1], x[2])

    def sample(self, rng, scale=3.0):
        return self.polar(scale * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi))

    def ball_net(self, center, radius, m):
        frame = self.tangent_frame(center)
        net = [center]
        rings = max(1, m // 2)
        for i in range(1, rings + 1):
            r = radius * i / rings
            k = max(6, int(round(2 * math.pi * i)))
            net.extend(self.exp_at(center, r, 2 * math.pi * j / k, frame) for j in range(k))
        return net


class SpiderTree(Space):
    """Star of ``legs`` half-lines glued at a junction; coords ``(leg, t)``."""

    tag = TREE

    def __init__(self, legs=3):
        if legs < 1:
            raise UsageError("a spider needs at least one leg")
        self.legs = legs

    def __repr__(self):
        return f"SpiderTree(legs={self.legs})"

    def point(self, leg, t):
        t = float(t)
        if t == 0.0:
            leg = 0  # every leg shares the junction
        p = Point(TREE, (int(leg), t))
        self.validate(p)
        return p

    def junction(self):
        return Point(TREE, (0, 0.0))

    base_point = junction

    def validate(self, p):
        super().validate(p)
        if len(p.coords) != 2:
            raise UsageError("tree points are (leg, t) pairs")
        leg, t = p.coords
        if not 0 <= leg < self.legs:
            raise UsageError(f"leg {leg} outside 0..{self.legs - 1}")
        if t < 0:
            raise UsageError("tree arclength must be nonnegative")

    def dist(self, a, b):
        _same_model(a, b)
        (la, ta), (lb, tb) = a.coords, b.coords
        if la == lb or ta == 0.0 or tb == 0.0:
            return abs(ta - tb)
        return ta + tb

    def combine(self, a, b, lam):
        _same_model(a, b)
        _check_lambda(lam)
        if lam == 0.0:
            return a
        if lam == 1.0:
            return b
        (la, ta), (lb, tb) = a.coords, b.coords
        if la == lb or ta == 0.0 or tb == 0.0:
            leg = la if ta > 0.0 else lb
            return self.point(leg, (1 - lam) * ta + lam * tb)
        total = ta + tb
        if lam * total <= ta:
            return self.point(la, ta - lam * total)
        return self.point(lb, tb - (1 - lam) * total)

    def sample(self, rng, scale=3.0):
        if rng.uniform() < 0.05:
            return self.junction()
        return self.point(int(rng.integers(self.legs)), scale * rng.uniform())

    def ball_net(self, center, radius, m):
        net = {center}
        leg_c, t_c = center.coords
        for leg in range(self.legs):
            for s in np.linspace(0.0, radius, m):
                if leg == leg_c:
                    for t in (t_c - s, t_c + s):
                        if t >= 0:
                            net.add(self.point(leg, t))
                elif s >= t_c:
                    net.add(self.point(leg, s - t_c))
        return sorted(net, key=lambda p: p.coords)


_DEFAULT_TREE = SpiderTree(3)
_HYPERBOLOID = HyperboloidPlane()


def space_of(p):
    """Default model space containing ``p``."""
    if p.model == EUCLIDEAN:
        return EuclideanSpace(len(p.coords))
    if p.model == HYPERBOLOID:
        return _HYPERBOLOID
    if p.model == TREE:
        leg = p.coords[0]
        return _DEFAULT_TREE if leg < 3 else SpiderTree(leg + 1)
    raise UsageError(f"unknown model {p.model!r}")


def dist(a, b):
    """Geodesic distance between two points of the same model."""
    _same_model(a, b)
    return space_of(a).dist(a, b)


def combine(a, b, lam):
    """Point ``(1 - lam) a + lam b`` on the geodesic from ``a`` to ``b``."""
    _same_model(a, b)
    return space_of(a).combine(a, b, lam)


def quasilin(x, y, u, v):
    """Quasi-linearization ``0.5 (d(x,v)^2 + d(y,u)^2 - d(x,u)^2 - d(y,v)^2)``.

    In Euclidean space this is the inner product of ``y - x`` and ``v - u``.
    """
    _same_model(x, y, u, v)
    return space_of(x).quasilin(x, y, u, v)


def cn_plus_gap(z, x, y, lam):
    """Slack in the CAT(0) comparison inequality at weight ``lam``.

    Returns ``(1-l) d(z,x)^2 + l d(z,y)^2 - l(1-l) d(x,y)^2 - d(z, m)^2`` with
    ``m = combine(x, y, l)``. Nonnegative in CAT(0) spaces, zero in Euclidean
    space.
    """
    _same_model(z, x, y)
    return space_of(x).cn_plus_gap(z, x, y, lam)


def binomial_bound_gap(x, y, z, t):
    """Slack in the squared-distance expansion of ``combine(x, y, t)`` seen from ``z``."""
    _same_model(x, y, z)
    return space_of(x).binomial_bound_gap(x, y, z, t)


def euclidean(*coords):
    """Shorthand for a Euclidean point."""
    if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
        coords = coords[0]
    return Point(EUCLIDEAN, tuple(float(c) for c in coords))


def tree_point(leg, t):
    """Shorthand for a point of the default 3-leg spider."""
    return _DEFAULT_TREE.point(leg, t)
