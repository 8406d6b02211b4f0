"""Named problem instances with known limits.

``E1``, ``E2``, ``T1`` and ``H1`` are alternating-iteration problems in the
three model spaces; ``S1`` (forward-backward) and ``S2`` (Douglas-Rachford)
are splitting problems on the real line.
"""

import math
from dataclasses import dataclass

from . import geometry as geo
from .errors import UsageError
from .operators import (
    AffineGradient,
    Ball,
    ConvexSet,
    GeodesicBall,
    HyperbolicLine,
    Intersection,
    Interval,
    NormalCone,
    Singleton,
    TreeStar,
    projection_map,
    rotation_map,
)
from .schemes import HMProblem
from .splitting import GDR, GFB, SplitProblem


@dataclass(frozen=True)
class Fixture:
    """A problem, its fixed-point (or zero) set and the limit of the anchored scheme."""

    name: str
    problem: object
    target: ConvexSet
    limit: object
    note: str = ""

    @property
    def is_split(self):
        return isinstance(self.problem, SplitProblem)

    @property
    def space(self):
        return self.problem.space


def _e1():
    box = Interval(0.0, 1.0)
    P = projection_map(box, geo.euclidean(1.0))
    prob = HMProblem(geo.EuclideanSpace(1), P, P, geo.euclidean(2.0), geo.euclidean(3.0),
                     geo.euclidean(1.0), 2)
    return Fixture("E1", prob, box, box.project(prob.u), "T = U = projection onto [0, 1]")


def _e2():
    disk = Ball((0.0, 0.0), 1.0)
    origin = geo.euclidean(0.0, 0.0)
    prob = HMProblem(geo.EuclideanSpace(2), rotation_map(math.pi / 2),
                     projection_map(disk, origin), geo.euclidean(1.0, 0.0),
                     geo.euclidean(0.0, 2.0), origin, 2)
    return Fixture("E2", prob, Singleton(origin), origin,
                   "T = quarter rotation, U = projection onto the unit disk")


def _t1():
    tree = geo.SpiderTree(3)
    T, U = TreeStar((2.0, 2.0, 0.0)), TreeStar((1.0, 0.0, 1.0))
    F = TreeStar((1.0, 0.0, 0.0))
    p = tree.point(0, 1.0)
    prob = HMProblem(tree, projection_map(T), projection_map(U), tree.point(0, 3.0),
                     tree.point(2, 2.0), p, 4)
    return Fixture("T1", prob, F, F.project(prob.u), "projections onto two subtrees of a 3-leg spider")


def h1_limit(line, ball, u):
    """Nearest point of ``line`` intersected with a ball centred on it: clamp the foot."""
    foot = line.project(u)
    return ball.project(foot)


def _h1():
    h = geo.HyperboloidPlane()
    line = HyperbolicLine((0.0, 0.0, 1.0))
    ball = GeodesicBall(h.origin(), 1.0)
    F = Intersection((line, ball))
    u, x0 = h.polar(2.0, 0.6), h.polar(2.0, 2.5)
    prob = HMProblem(h, projection_map(ball), projection_map(line), u, x0, h.origin(), 4)
    return Fixture("H1", prob, F, h1_limit(line, ball, u),
                   "projections onto a unit ball and a geodesic through its centre")


def _s1():
    prob = SplitProblem(NormalCone(Interval(0.0, 1.0)), AffineGradient([[1.0]], [-3.0]), 1.0,
                        geo.euclidean(0.0), geo.euclidean(0.0), GFB)
    return Fixture("S1", prob, Singleton(geo.euclidean(1.0)), geo.euclidean(1.0),
                   "minimise (x-3)^2/2 over [0, 1]")


def _s2():
    prob = SplitProblem(NormalCone(Interval(0.0, 1.0)), NormalCone(Interval(0.5, 2.0)), 1.0,
                        geo.euclidean(3.0), geo.euclidean(3.0), GDR)
    return Fixture("S2", prob, Interval(0.5, 1.0), None,
                   "find a point of [0, 1] and [0.5, 2]; any point of [0.5, 1] is a zero")


_BUILDERS = {"E1": _e1, "E2": _e2, "T1": _t1, "H1": _h1, "S1": _s1, "S2": _s2}

NAMES = tuple(_BUILDERS)
HM_NAMES = ("E1", "E2", "T1", "H1")


def get(name):
    """Build the named fixture."""
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise UsageError(f"unknown fixture {name!r}; known: {', '.join(NAMES)}") from None
