"""Iteration generators: alternating Halpern-Mann and its special cases.

All generators are deterministic and work in any model space. The
Tikhonov-Mann and CL schemes are produced by reduction to the alternating
scheme rather than by separate kernels, so their relation to it holds by
construction.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import geometry as geo
from .errors import UsageError
from .geometry import EUCLIDEAN, Point
from .operators import NonexpansiveMap, identity_map
from .rates import Moduli, example_moduli

FIXED_POINT_TOL = 1e-9


@dataclass(frozen=True)
class Schedule:
    """Parameter sequences ``alpha(n)``, ``beta(n)`` and their moduli.

    ``moduli`` is optional; rate computations need it, iterations do not.
    """

    alpha: Callable[[int], float]
    beta: Callable[[int], float]
    moduli: Moduli | None = None
    label: str = "custom"

    def check(self, probe=1000):
        """Validate ranges (and the ``gamma`` band when moduli exist) on ``n < probe``."""
        for n in range(probe):
            a, b = float(self.alpha(n)), float(self.beta(n))
            if not (0 <= a <= 1 and 0 <= b <= 1):
                raise UsageError(f"schedule leaves [0, 1] at n={n}: alpha={a}, beta={b}")
            if self.moduli is not None:
                g = float(self.moduli.gamma)
                if not g - 1e-15 <= b <= 1 - g + 1e-15:
                    raise UsageError(f"beta({n})={b} outside [gamma, 1-gamma] with gamma={g}")
        return self


def harmonic_schedule(beta=Fraction(1, 2)):
    """``alpha_n = 1/(n+1)`` and constant ``beta`` with their standard moduli."""
    beta = Fraction(beta)
    if not 0 < beta < 1:
        raise UsageError("constant beta must lie strictly between 0 and 1")
    b = float(beta)
    return Schedule(lambda n: 1.0 / (n + 1), lambda n: b, example_moduli(beta),
                    f"harmonic(beta={beta})")


def constant_schedule(alpha, beta):
    a, b = float(alpha), float(beta)
    return Schedule(lambda n: a, lambda n: b, None, f"constant({a:g},{b:g})")


def _weight(fn, n, name):
    w = float(fn(n))
    if not 0.0 <= w <= 1.0:
        raise UsageError(f"{name}({n}) = {w} outside [0, 1]")
    return w


def _check_steps(steps):
    if not isinstance(steps, int) or steps < 1:
        raise UsageError(f"steps must be a positive integer, got {steps!r}")


@dataclass(frozen=True)
class HMProblem:
    """Maps, anchor, start point and a common fixed point ``p`` with radius ``N``.

    ``N`` defaults to the least integer with ``N >= max(d(x0, p), 2 d(u, p))``
    (at least 1); an explicit ``N`` below that bound is rejected.
    """

    space: geo.Space
    T: NonexpansiveMap
    U: NonexpansiveMap
    u: Point
    x0: Point
    p: Point | None = None
    N: int | None = None

    def __post_init__(self):
        for q in (self.u, self.x0) + ((self.p,) if self.p is not None else ()):
            self.space.validate(q)
        if self.p is None:
            return
        for name, f in (("T", self.T), ("U", self.U)):
            if self.space.dist(f(self.p), self.p) > FIXED_POINT_TOL:
                raise UsageError(f"{name}(p) != p: p is not a common fixed point")
        bound = max(self.space.dist(self.x0, self.p), 2 * self.space.dist(self.u, self.p))
        least = max(1, math.ceil(bound - 1e-12))
        if self.N is None:
            object.__setattr__(self, "N", least)
        elif self.N < bound - 1e-9:
            raise UsageError(f"N={self.N} is below max(d(x0,p), 2d(u,p)) = {bound:.6g}")


@dataclass(frozen=True)
class Trajectory:
    """Stored iterates with cached distances.

    ``index[i]`` is the iteration number of ``points[i]``; ``d_prev[i]`` is the
    distance to the previous iterate (``None`` at ``n = 0``); ``d_T``/``d_U``
    are the displacements under the two maps (``None`` when not applicable).
    """

    points: tuple
    index: tuple
    d_prev: tuple
    d_T: tuple
    d_U: tuple
    stream: str = "x"
    space: geo.Space = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.points)

    @property
    def last(self):
        return self.points[-1]

    @property
    def dense(self):
        return self.index == tuple(range(len(self.index)))

    def at(self, n):
        """Iterate number ``n`` (requires it to be stored)."""
        if self.dense:
            return self.points[n]
        return self.points[self.index.index(n)]

    def step_residuals(self):
        """Array ``r`` with ``r[n] = d(x_{n+1}, x_n)``; needs dense storage."""
        self._need_dense()
        return np.array(self.d_prev[1:], dtype=float)

    def map_residuals(self, which):
        """Array of ``d(T x_n, x_n)`` (``which='T'``) or ``d(U x_n, x_n)``."""
        self._need_dense()
        values = self.d_T if which == "T" else self.d_U
        if values[0] is None:
            raise UsageError(f"trajectory has no {which} residuals")
        return np.array(values, dtype=float)

    def coords(self):
        return np.array([p.coords for p in self.points], dtype=float)

    def subsequence(self, start, step, stream=None):
        """Every ``step``-th stored iterate from ``start``, renumbered from 0."""
        pts = self.points[start::step]
        prev = [None] + [self.space.dist(a, b) for a, b in zip(pts, pts[1:])]
        return Trajectory(tuple(pts), tuple(range(len(pts))), tuple(prev),
                          self.d_T[start::step], self.d_U[start::step],
                          stream or self.stream, self.space)

    def _need_dense(self):
        if not self.dense:
            raise UsageError("operation needs a densely stored trajectory")


class _Recorder:
    def __init__(self, space, T, U, keep_every, residuals, stream="x"):
        if keep_every < 1:
            raise UsageError("keep_every must be at least 1")
        self.space, self.T, self.U = space, T, U
        self.keep_every, self.residuals, self.stream = keep_every, residuals, stream
        self.points, self.index, self.prev, self.dT, self.dU = [], [], [], [], []

    def add(self, n, x, d_prev, tx=None, ux=None):
        if n % self.keep_every:
            return
        self.points.append(x)
        self.index.append(n)
        self.prev.append(d_prev)
        d_t = d_u = None
        if self.residuals and self.T is not None:
            d_t = self.space.dist(self.T(x) if tx is None else tx, x)
        if self.residuals and self.U is not None:
            d_u = self.space.dist(self.U(x) if ux is None else ux, x)
        self.dT.append(d_t)
        self.dU.append(d_u)

    def finish(self):
        return Trajectory(tuple(self.points), tuple(self.index), tuple(self.prev),
                          tuple(self.dT), tuple(self.dU), self.stream, self.space)


def run_hm(problem, schedule, steps, keep_every=1, residuals=True):
    """Run the alternating Halpern-Mann iteration.

    ``x_{2n+1} = combine(T x_{2n}, u, alpha_n)`` and
    ``x_{2n+2} = combine(U x_{2n+1}, x_{2n+1}, beta_n)``.

    Parameters
    ----------
    problem : HMProblem
    schedule : Schedule
    steps : int
        Number of single updates; the result holds ``x_0 .. x_steps``.
    keep_every : int, optional
        Store only iterates whose index is a multiple of this.
    residuals : bool, optional
        Cache ``d(T x_n, x_n)`` and ``d(U x_n, x_n)`` for stored iterates.

    Returns
    -------
    Trajectory
    """
    _check_steps(steps)
    space, T, U, u = problem.space, problem.T, problem.U, problem.u
    rec = _Recorder(space, T, U, keep_every, residuals)
    x, d_prev = problem.x0, None
    for k in range(steps + 1):
        n, odd_next = divmod(k, 2)
        tx = T(x) if odd_next == 0 or residuals else None
        ux = U(x) if odd_next == 1 or residuals else None
        rec.add(k, x, d_prev, tx, ux)
        if k == steps:
            break
        if odd_next == 0:
            nxt = space.combine(tx, u, _weight(schedule.alpha, n, "alpha"))
        else:
            nxt = space.combine(ux, x, _weight(schedule.beta, n, "beta"))
        d_prev = space.dist(nxt, x)
        x = nxt
    return rec.finish()


def shift_rule(direction):
    """Perturbation rule: translate the exact update by ``delta * direction``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)

    def rule(space, exact, delta, k):
        return Point(EUCLIDEAN, tuple((np.asarray(exact.coords) + delta * d).tolist()))

    return rule


def toward_rule(target):
    """Perturbation rule: move the exact update a distance ``delta`` toward ``target``.

    The step is shortened by a relative ``1e-9`` so that rounding in curved
    models never carries the point outside the ``delta``-ball.
    """

    def rule(space, exact, delta, k):
        d = space.dist(exact, target)
        if d == 0 or delta == 0:
            return exact
        return space.combine(exact, target, min(1.0, delta * (1 - 1e-9) / d))

    return rule


def default_perturbation(space):
    """Fixed deterministic direction: ``+e_1`` in Euclidean space, else toward a far point."""
    if space.tag == EUCLIDEAN:
        return shift_rule([1.0] + [0.0] * (space.dim - 1))
    if space.tag == geo.HYPERBOLOID:
        return toward_rule(space.polar(10.0, 0.0))
    return toward_rule(space.point(0, 1000.0))


def run_hm_errors(problem, schedule, deltas, steps, rule=None, keep_every=1, residuals=True):
    """Alternating iteration with each update displaced by at most ``deltas(k)``.

    The update producing ``x'_{k+1}`` may deviate from the exact step by
    ``deltas(k)``. ``rule(space, exact, delta, k)`` chooses the displaced
    point; by default :func:`default_perturbation`. Rules that move farther
    than allowed are rejected.
    """
    _check_steps(steps)
    space, T, U, u = problem.space, problem.T, problem.U, problem.u
    rule = rule or default_perturbation(space)
    rec = _Recorder(space, T, U, keep_every, residuals, stream="x_err")
    x, d_prev = problem.x0, None
    for k in range(steps + 1):
        rec.add(k, x, d_prev)
        if k == steps:
            break
        n, odd_next = divmod(k, 2)
        if odd_next == 0:
            exact = space.combine(T(x), u, _weight(schedule.alpha, n, "alpha"))
        else:
            exact = space.combine(U(x), x, _weight(schedule.beta, n, "beta"))
        delta = float(deltas(k))
        if not delta >= 0:
            raise UsageError(f"error term deltas({k}) = {delta} is negative")
        nxt = rule(space, exact, delta, k) if delta > 0 else exact
        if space.dist(nxt, exact) > delta * (1 + 1e-12) + 1e-15:
            raise UsageError(f"perturbation rule moved {space.dist(nxt, exact)} > delta={delta}")
        d_prev = space.dist(nxt, x)
        x = nxt
    return rec.finish()


def run_halpern(T, u, y0, alpha, steps, keep_every=1):
    """Halpern iteration ``y_{n+1} = combine(T y_n, u, alpha_n)``."""
    _check_steps(steps)
    space = geo.space_of(y0)
    rec = _Recorder(space, T, None, keep_every, True, stream="y")
    y, d_prev = y0, None
    for n in range(steps + 1):
        ty = T(y)
        rec.add(n, y, d_prev, tx=ty)
        if n == steps:
            break
        nxt = space.combine(ty, u, _weight(alpha, n, "alpha"))
        d_prev = space.dist(nxt, y)
        y = nxt
    return rec.finish()


def run_km(U, x0, beta, steps, keep_every=1):
    """Krasnoselskii-Mann iteration ``x_{n+1} = combine(U x_n, x_n, beta_n)``."""
    _check_steps(steps)
    space = geo.space_of(x0)
    rec = _Recorder(space, None, U, keep_every, True)
    x, d_prev = x0, None
    for n in range(steps + 1):
        ux = U(x)
        rec.add(n, x, d_prev, ux=ux)
        if n == steps:
            break
        nxt = space.combine(ux, x, _weight(beta, n, "beta"))
        d_prev = space.dist(nxt, x)
        x = nxt
    return rec.finish()


def run_cl(U, u, x0, schedule, steps, keep_every=1):
    """Alternating iteration with ``T = Id``: Halpern step toward ``u``, then a Mann step."""
    space = geo.space_of(x0)
    problem = HMProblem(space, identity_map(), U, u, x0)
    return run_hm(problem, schedule, steps, keep_every)


def run_tkm(U, x0, beta, gamma_seq, steps):
    """Tikhonov-Mann iteration, obtained as the even iterates of :func:`run_cl` with ``u = 0``.

    ``x_{n+1} = (1 - beta_n) U(gamma_n x_n) + beta_n gamma_n x_n``, realised via
    ``alpha_n = 1 - gamma_n``.
    """
    _check_steps(steps)
    if x0.model != EUCLIDEAN:
        raise UsageError("the Tikhonov-Mann scheme needs a Euclidean model (it scales by gamma_n)")

    def alpha(n):
        g = float(gamma_seq(n))
        if not 0 < g <= 1:
            raise UsageError(f"gamma({n}) = {g} outside (0, 1]")
        return 1.0 - g

    space = geo.space_of(x0)
    schedule = Schedule(alpha, beta, None, "tikhonov")
    full = run_cl(U, space.zero(), x0, schedule, 2 * steps)
    return full.subsequence(0, 2)
