"""Strongly convergent forward-backward and Douglas-Rachford splitting.

Both schemes interleave a Halpern step toward an anchor ``u`` with a relaxed
splitting step. Each has a direct kernel (``run_gfb``, ``run_gdr``) and a
reduction to the alternating Halpern-Mann iteration with ``T = Id``
(``gfb_as_hm``, ``gdr_as_hm``); tests compare the two routes.

Euclidean model only.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import geometry as geo
from .errors import UsageError
from .geometry import EUCLIDEAN, Point
from .operators import MonotoneOp, NonexpansiveMap, identity_map
from .schemes import HMProblem, Schedule, _check_steps, _Recorder

GFB = "gfb"
GDR = "gdr"

_SLACK = 1e-12


def _vec(x):
    return np.asarray(x.coords, dtype=float)


def _pt(v):
    return Point(EUCLIDEAN, tuple(float(c) for c in v))


@dataclass(frozen=True)
class SplitProblem:
    """Two monotone operators, a step ``c``, anchor ``u`` and start ``x0``.

    ``gamma`` is the optional band constant of ``beta_n``; when given, every
    ``beta_n`` used by a run is checked against the flavour's band.
    """

    U1: MonotoneOp
    U2: MonotoneOp
    c: float
    u: Point
    x0: Point
    flavor: str = GFB
    gamma: float | None = None

    def __post_init__(self):
        if self.flavor not in (GFB, GDR):
            raise UsageError(f"unknown splitting flavour {self.flavor!r}")
        for q in (self.u, self.x0):
            if q.model != EUCLIDEAN:
                raise UsageError("splitting works in the Euclidean model only")
        if len(self.u.coords) != len(self.x0.coords):
            raise UsageError("u and x0 have different dimensions")
        if not (isinstance(self.c, (int, float, Fraction)) and self.c > 0 and math.isfinite(self.c)):
            raise UsageError(f"step c must be a positive finite real, got {self.c!r}")
        if self.flavor == GFB:
            delta = self.U2.cocoercivity
            if delta is None:
                raise UsageError("forward-backward needs a cocoercive U2")
            if self.c > 2 * delta * (1 + _SLACK):
                raise UsageError(f"c={self.c} exceeds 2*delta={2 * delta}")
        if self.gamma is not None:
            if not 0 < self.gamma <= 1:
                raise UsageError(f"gamma must lie in (0, 1], got {self.gamma}")

    @property
    def delta(self):
        return self.U2.cocoercivity

    @property
    def space(self):
        return geo.EuclideanSpace(len(self.x0.coords))

    def beta_range(self):
        """Interval that every ``beta_n`` must lie in (band if ``gamma`` is set)."""
        if self.flavor == GFB:
            lo = 1.0 - 1.0 / gfb_averaging(self.delta, self.c)
        else:
            lo = -1.0
        hi = 1.0
        if self.gamma is not None:
            lo, hi = lo + self.gamma, hi - self.gamma
        return lo, hi

    def check_beta(self, n, beta):
        b = float(beta)
        lo, hi = self.beta_range()
        if not lo - _SLACK <= b <= hi + _SLACK:
            raise UsageError(f"beta({n}) = {b} outside [{lo:.6g}, {hi:.6g}] for {self.flavor}")
        return b

    def forward_backward_map(self):
        """``J_{c U1} o (Id - c U2)``, whose fixed points are the zeros of ``U1 + U2``."""
        U1, U2, c = self.U1, self.U2, float(self.c)
        return NonexpansiveMap(lambda x: U1.resolvent(c, _pt(_vec(x) - c * _vec(U2.apply(x)))),
                               "J.(Id-cU2)")

    def reflected_composition(self):
        """``R_{c U1} o R_{c U2}``."""
        U1, U2, c = self.U1, self.U2, float(self.c)

        def refl(op, v):
            return 2 * _vec(op.resolvent(c, _pt(v))) - v

        return NonexpansiveMap(lambda x: _pt(refl(U1, refl(U2, _vec(x)))), "R1.R2")

    def is_zero(self, x, tol=1e-9):
        """Closed-form test of ``0 in (U1 + U2)(x)`` when one operator is single valued."""
        if self.U2.single_valued:
            g = _vec(self.U2.apply(x))
            # 0 in U1(x) + g  iff  x = J_{U1}(x - g)
            return float(np.linalg.norm(_vec(self.U1.resolvent(1.0, _pt(_vec(x) - g))) - _vec(x))) <= tol
        if self.U1.single_valued:
            g = _vec(self.U1.apply(x))
            return float(np.linalg.norm(_vec(self.U2.resolvent(1.0, _pt(_vec(x) - g))) - _vec(x))) <= tol
        raise UsageError("zero test needs a single-valued operator")


def gfb_averaging(delta, c):
    """Averagedness constant ``2 delta / (4 delta - c)`` of the forward-backward map."""
    if delta is None or delta <= 0:
        raise UsageError("delta must be positive")
    if math.isinf(delta):
        return 0.5
    return 2 * delta / (4 * delta - c)


def averaged_reduce(beta, alpha):
    """``n -> 1 - alpha + alpha * beta(n)``: relaxation against the nonexpansive part.

    If ``U = (1 - alpha) Id + alpha U'`` then a Mann step with ``U`` and
    ``beta_n`` equals a Mann step with ``U'`` and the returned sequence.
    """
    if not 0 < alpha <= 1:
        raise UsageError(f"alpha must lie in (0, 1], got {alpha}")
    return lambda n: 1 - alpha + alpha * beta(n)


def gdr_reduce(beta):
    """``n -> (1 + beta(n)) / 2``."""
    return lambda n: (1 + beta(n)) / 2


def reduced_band(flavor, gamma, sigma=None):
    """Band constant of the reduced ``beta`` sequence.

    ``sigma * gamma`` for an averaged map with lower averagedness bound
    ``sigma``; ``gamma / 2`` for both splitting schemes.
    """
    if flavor == "averaged":
        if sigma is None:
            raise UsageError("averaged band needs sigma")
        return sigma * gamma
    if flavor in (GFB, GDR):
        return gamma / 2
    raise UsageError(f"unknown flavour {flavor!r}")


def _halpern(x, u, a):
    return (1 - a) * x + a * u


def _alpha(schedule, n):
    a = float(schedule.alpha(n))
    if not 0 <= a <= 1:
        raise UsageError(f"alpha({n}) = {a} outside [0, 1]")
    return a


def run_gfb(problem, schedule, steps, keep_every=1, residuals=True):
    """Forward-backward with Halpern anchoring.

    ``x_{2n+1} = (1 - alpha_n) x_{2n} + alpha_n u`` and
    ``x_{2n+2} = (1 - beta_n) J_{c U1}(x_{2n+1} - c U2 x_{2n+1}) + beta_n x_{2n+1}``.
    The ``d_U`` column holds ``|U x_n - x_n|`` for the forward-backward map ``U``.
    """
    if problem.flavor != GFB:
        raise UsageError("run_gfb needs a forward-backward problem")
    _check_steps(steps)
    U = problem.forward_backward_map()
    rec = _Recorder(problem.space, None, U if residuals else None, keep_every, residuals)
    u = _vec(problem.u)
    x, d_prev = _vec(problem.x0), None
    for k in range(steps + 1):
        n, odd_next = divmod(k, 2)
        px = _pt(x)
        ux = U(px) if (odd_next or residuals) else None
        rec.add(k, px, d_prev, ux=ux)
        if k == steps:
            break
        if odd_next == 0:
            nxt = _halpern(x, u, _alpha(schedule, n))
        else:
            b = problem.check_beta(n, schedule.beta(n))
            nxt = (1 - b) * _vec(ux) + b * x
        d_prev = float(np.linalg.norm(nxt - x))
        x = nxt
    return rec.finish()


def gfb_as_hm(problem, schedule, p=None, N=None):
    """The forward-backward run as an alternating iteration with ``T = Id``.

    Returns ``(HMProblem, Schedule)`` with ``U' = (U - (1 - a) Id) / a`` for
    ``a = 2 delta / (4 delta - c)`` and ``beta~_n = 1 - a + a beta_n``.
    """
    a = gfb_averaging(problem.delta, float(problem.c))
    U = problem.forward_backward_map()

    def u_prime(x):
        v = _vec(x)
        return _pt((_vec(U(x)) - (1 - a) * v) / a)

    beta_raw = schedule.beta

    def checked_beta(n):
        return problem.check_beta(n, beta_raw(n))

    hm = HMProblem(problem.space, identity_map(), NonexpansiveMap(u_prime, "U'"),
                   problem.u, problem.x0, p, N)
    return hm, Schedule(schedule.alpha, averaged_reduce(checked_beta, a), None, "gfb-reduced")


class GDRRun:
    """Result of :func:`run_gdr`: the ``x``, ``y`` and ``z`` trajectories."""

    def __init__(self, x, y, z):
        self.x, self.y, self.z = x, y, z

    def __iter__(self):
        return iter((self.x, self.y, self.z))


def run_gdr(problem, schedule, steps, keep_every=1, residuals=True):
    """Douglas-Rachford with Halpern anchoring.

    ``x_{2n+1} = (1 - alpha_n) x_{2n} + alpha_n u``, ``y_n = J_{c U2}(x_{2n+1})``,
    ``z_n = J_{c U1}(2 y_n - x_{2n+1})`` and
    ``x_{2n+2} = x_{2n+1} + (1 - beta_n)(z_n - y_n)``.

    Returns a :class:`GDRRun`; ``y`` and ``z`` hold one entry per completed
    splitting step (streams ``"y"`` and ``"z"``). ``d_U`` on ``x`` is
    ``|R_{c U1} R_{c U2} x_n - x_n|``.
    """
    if problem.flavor != GDR:
        raise UsageError("run_gdr needs a Douglas-Rachford problem")
    _check_steps(steps)
    space = problem.space
    c = float(problem.c)
    R = problem.reflected_composition()
    rec = _Recorder(space, None, R if residuals else None, keep_every, residuals)
    rec_y = _Recorder(space, None, None, keep_every, False, stream="y")
    rec_z = _Recorder(space, None, None, keep_every, False, stream="z")
    u = _vec(problem.u)
    x, d_prev = _vec(problem.x0), None
    last_y = last_z = None
    for k in range(steps + 1):
        n, odd_next = divmod(k, 2)
        rec.add(k, _pt(x), d_prev)
        if k == steps:
            break
        if odd_next == 0:
            nxt = _halpern(x, u, _alpha(schedule, n))
        else:
            b = problem.check_beta(n, schedule.beta(n))
            y = _vec(problem.U2.resolvent(c, _pt(x)))
            z = _vec(problem.U1.resolvent(c, _pt(2 * y - x)))
            nxt = x + (1 - b) * (z - y)
            yp, zp = _pt(y), _pt(z)
            rec_y.add(n, yp, None if last_y is None else float(np.linalg.norm(y - last_y)))
            rec_z.add(n, zp, None if last_z is None else float(np.linalg.norm(z - last_z)))
            last_y, last_z = y, z
        d_prev = float(np.linalg.norm(nxt - x))
        x = nxt
    return GDRRun(rec.finish(), rec_y.finish(), rec_z.finish())


def gdr_as_hm(problem, schedule, p=None, N=None):
    """The Douglas-Rachford run as an alternating iteration with ``T = Id``,
    ``U = R_{c U1} R_{c U2}`` and ``beta~_n = (1 + beta_n) / 2``.
    """
    beta_raw = schedule.beta

    def checked_beta(n):
        return problem.check_beta(n, beta_raw(n))

    hm = HMProblem(problem.space, identity_map(), problem.reflected_composition(),
                   problem.u, problem.x0, p, N)
    return hm, Schedule(schedule.alpha, gdr_reduce(checked_beta), None, "gdr-reduced")


def gdr_step_identity_gap(run, schedule):
    """Largest ``| |z_n - y_n| - |x_{2n+2} - x_{2n+1}| / (1 - beta_n) |`` along a dense run.

    Indices with ``beta_n = 1`` are skipped (the step is then zero).
    """
    x, y, z = run.x, run.y, run.z
    if not (x.dense and y.dense and z.dense):
        raise UsageError("identity check needs dense trajectories")
    worst = 0.0
    for n in range(len(y)):
        if 2 * n + 2 >= len(x):
            break
        b = float(schedule.beta(n))
        if b == 1:
            continue
        lhs = float(np.linalg.norm(_vec(z.points[n]) - _vec(y.points[n])))
        rhs = float(np.linalg.norm(_vec(x.points[2 * n + 2]) - _vec(x.points[2 * n + 1]))) / (1 - b)
        worst = max(worst, abs(lhs - rhs))
    return worst
