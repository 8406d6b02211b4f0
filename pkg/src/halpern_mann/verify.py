"""Empirical oracles and property checks.

Brute-force projections, suffix threshold searches, metastability window
searches, the axiom suite for the model spaces, and soundness reports that
compare empirical indices with computed rates.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import geometry as geo
from .errors import RateOverflow, UsageError
from .exact import as_float, format_nat, to_real
from .geometry import EUCLIDEAN

NOT_REACHED = None


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ThresholdReport:
    """Empirical index against a computed rate.

    ``rate_bound`` is the rate value when ``rate_exact`` holds, otherwise a
    certified lower bound on it (the rate overflowed the bit budget).
    ``sound`` is True when the index is at most the bound, False when it
    exceeds an exact rate, and None when undecided (index not reached, or
    index above a mere lower bound).
    """

    eps: Fraction
    empirical_index: int | None
    rate_bound: int | None
    rate_exact: bool
    horizon: int
    sound: bool | None
    rate_name: str = ""
    detail: dict = field(default_factory=dict)

    def to_json(self):
        bound = self.rate_bound
        return {
            "eps": str(self.eps),
            "empirical_index": self.empirical_index,
            "rate_name": self.rate_name,
            "rate_bound": None if bound is None else (str(bound) if bound.bit_length() <= 4096
                                                      else format_nat(bound)),
            "rate_bound_bits": None if bound is None else bound.bit_length(),
            "rate_exact": self.rate_exact,
            "horizon": self.horizon,
            "sound": self.sound,
            **self.detail,
        }


def evaluate_rate(rate, *args):
    """``(value, exact)``; on overflow the value is the certified lower bound."""
    try:
        return rate(*args), True
    except RateOverflow as exc:
        return exc.lower, False


def soundness(index, bound, exact):
    if index is None:
        return None
    if index <= bound:
        return True
    return False if exact else None


def threshold_report(eps, index, rate, horizon, *rate_args, name=None):
    """Evaluate ``rate(eps, *rate_args)`` and compare it with ``index``."""
    bound, exact = evaluate_rate(rate, eps, *rate_args)
    return ThresholdReport(to_real(eps), index, bound, exact, horizon,
                           soundness(index, bound, exact), name or getattr(rate, "name", ""))


# --------------------------------------------------------------------------
# threshold and window searches


def empirical_threshold(residual, eps, horizon=None):
    """Least ``n`` with ``residual[m] <= eps`` for every ``m`` in ``[n, horizon]``.

    ``residual`` is a sequence or a callable ``n -> value``. Returns None when
    no suffix of at least two entries stays below ``eps`` (a lone final entry
    is no evidence of a threshold).
    """
    if callable(residual):
        if horizon is None:
            raise UsageError("a callable residual needs a horizon")
        values = np.fromiter((float(residual(n)) for n in range(horizon + 1)), float, horizon + 1)
    else:
        values = np.asarray(residual, dtype=float)
        if horizon is not None:
            values = values[:horizon + 1]
    if values.size == 0:
        raise UsageError("empty residual sequence")
    horizon = values.size - 1
    bad = np.flatnonzero(~(values <= float(eps)))
    n = 0 if bad.size == 0 else int(bad[-1]) + 1
    if n > horizon or (n == horizon and horizon > 0):
        return NOT_REACHED
    return n


def _coords(traj):
    points = traj.points if hasattr(traj, "points") else traj
    return points


def _window_diam_ok(space, pts, arr, lo, hi, eps):
    """Whether ``d(x_i, x_j) <= eps`` for all ``i, j`` in ``[lo, hi]``."""
    if hi <= lo:
        return True
    if arr is not None:
        block = arr[lo:hi + 1]
        if block.shape[1] == 1:
            return float(block.max() - block.min()) <= eps
        # quick accept and reject before the quadratic check
        r = np.linalg.norm(block - block[0], axis=1).max()
        if 2 * r <= eps:
            return True
        if r > eps:
            return False
        step = 512
        for i in range(0, len(block), step):
            d = np.linalg.norm(block[i:i + step, None, :] - block[None, :, :], axis=2)
            if d.max() > eps:
                return False
        return True
    for i in range(lo, hi + 1):
        for j in range(i + 1, hi + 1):
            if space.dist(pts[i], pts[j]) > eps:
                return False
    return True


def empirical_metastability(traj, eps, f, horizon=None, space=None):
    """Least ``n`` with ``d(x_i, x_j) <= eps`` for all ``i, j`` in ``[n, f(n)]``.

    Only ``n`` with ``f(n) <= horizon`` can be confirmed. The scan stops with
    None at the first ``n`` whose window runs past the data, since a smaller
    answer can then no longer be ruled out.
    """
    pts = list(_coords(traj))
    if horizon is None:
        horizon = len(pts) - 1
    if horizon > len(pts) - 1:
        raise UsageError("horizon beyond the stored trajectory")
    space = space or geo.space_of(pts[0])
    eps = float(eps)
    arr = None
    if pts[0].model == EUCLIDEAN:
        arr = np.array([p.coords for p in pts[:horizon + 1]], dtype=float)
    for n in range(horizon + 1):
        end = f(n)
        if end > horizon:
            return NOT_REACHED
        if _window_diam_ok(space, pts, arr, n, end, eps):
            return n
    return NOT_REACHED


def check_F_N_membership(x, T, U, p, N, eta, tol=1e-12, space=None):
    """``d(x, T x) <= eta``, ``d(x, U x) <= eta`` and ``d(x, p) <= N``, each up to ``tol``."""
    space = space or geo.space_of(x)
    return (space.dist(x, T(x)) <= eta + tol and space.dist(x, U(x)) <= eta + tol
            and space.dist(x, p) <= N + tol)


# --------------------------------------------------------------------------
# projections


def brute_force_projection(space, S, u, tol=1e-9, start=None, radius=None, m=21, seed=0):
    """Nearest point of ``S`` to ``u`` by a zooming net search.

    Starting from the best of a batch of random members (or ``start``), the
    search takes the best point of ``S.local_net`` around the incumbent,
    halving the radius whenever the incumbent is interior to the net, until
    the radius drops below ``tol``.
    """
    if start is None:
        rng = np.random.default_rng(seed)
        candidates = [S.sample(rng) for _ in range(256)]
        if not candidates:
            raise UsageError("empty sample of the target set")
        start = min(candidates, key=lambda p: space.dist(u, p))
    best, best_d = start, space.dist(u, start)
    if radius is None:
        radius = 2.0 * best_d
    while radius >= tol:
        prev = best
        for q in S.local_net(prev, radius, m):
            d = space.dist(u, q)
            if d < best_d:
                best, best_d = q, d
        # keep the radius while the incumbent still runs to the edge of the net
        if space.dist(prev, best) < 0.5 * radius:
            radius *= 0.5
    return best


def check_projection_variational(space, S, u, Pu, tol=1e-9, n_samples=1000, seed=0, extra=()):
    """Test ``<u Pu, y Pu> <= tol`` for sampled ``y`` in ``S`` (and membership of ``Pu``).

    Returns ``(ok, worst)`` with ``worst`` the largest quasi-linearization value.
    """
    rng = np.random.default_rng(seed)
    ys = [S.sample(rng) for _ in range(n_samples)]
    ys.extend(extra)
    ys.extend(S.local_net(Pu, 1.0, 21))
    worst = max((space.quasilin(u, Pu, y, Pu) for y in ys), default=-math.inf)
    ok = worst <= tol and S.contains(Pu, tol)
    return ok, worst


# --------------------------------------------------------------------------
# axiom suite


class BrokenW2Space(geo.EuclideanSpace):
    """Negative control: the combination weight is squared."""

    def combine(self, a, b, lam):
        return super().combine(a, b, lam * lam)


@dataclass(frozen=True)
class SuiteReport:
    name: str
    checks: dict
    samples: int
    tol: float

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks.values())

    def failed(self):
        return [k for k, c in self.checks.items() if not c["passed"]]

    def to_json(self):
        checks = {k: {"passed": c["passed"],
                      "worst": c["worst"] if math.isfinite(c["worst"]) else repr(c["worst"])}
                  for k, c in self.checks.items()}
        return {"suite": self.name, "passed": self.passed, "samples": self.samples,
                "tol": self.tol, "checks": checks}


class _Worst:
    def __init__(self, tol):
        self.tol = tol
        self.values = {}

    def add(self, name, violation):
        if violation != violation:  # NaN counts as failure
            violation = math.inf
        self.values[name] = max(self.values.get(name, -math.inf), violation)

    def report(self, name, samples):
        checks = {k: {"worst": v, "passed": v <= self.tol} for k, v in sorted(self.values.items())}
        return SuiteReport(name, checks, samples, self.tol)


def _axiom_sample(space, rng, w):
    x, y, z, v, a = (space.sample(rng) for _ in range(5))
    lam, lam2 = float(rng.uniform()), float(rng.uniform())
    d, comb, q = space.dist, space.combine, space.quasilin
    m = comb(x, y, lam)

    w.add("metric_symmetry", abs(d(x, y) - d(y, x)))
    w.add("metric_triangle", d(x, z) - d(x, y) - d(y, z))
    w.add("W1", d(z, m) - (1 - lam) * d(z, x) - lam * d(z, y))
    w.add("W2", abs(d(m, comb(x, y, lam2)) - abs(lam - lam2) * d(x, y)))
    w.add("W3", d(m, comb(y, x, 1 - lam)))
    w.add("W4", d(m, comb(z, v, lam)) - (1 - lam) * d(x, z) - lam * d(y, v))
    w.add("CN+", -space.cn_plus_gap(z, x, y, lam))
    w.add("binomial", -space.binomial_bound_gap(x, y, z, lam))

    r = max(d(x, a), d(y, a))
    if r > 0:
        e = min(2.0, d(x, y) / r)
        w.add("uniform_convexity", d(space.midpoint(x, y), a) - (1 - e * e / 8) * r)

    w.add("quasilin_i", abs(q(x, y, x, y) - d(x, y) ** 2))
    w.add("quasilin_ii", abs(q(x, y, z, v) - q(z, v, x, y)))
    w.add("quasilin_iii", abs(q(y, x, z, v) + q(x, y, z, v)))
    w.add("quasilin_iv", abs(q(x, y, z, v) + q(x, y, v, a) - q(x, y, z, a)))
    w.add("cauchy_schwarz", q(x, y, z, v) - d(x, y) * d(z, v))


def run_axiom_suite(space, n_samples=10_000, tol=1e-9, seed=0, name=None):
    """Worst violation of each axiom over ``n_samples`` random configurations."""
    rng = np.random.default_rng(seed)
    w = _Worst(tol)
    for _ in range(n_samples):
        _axiom_sample(space, rng, w)
    return w.report(name or repr(space), n_samples)


def nonexpansive_gap(f, space, points):
    """Largest ``d(f x, f y) - d(x, y)`` over pairs of ``points``."""
    worst = -math.inf
    images = [f(p) for p in points]
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            worst = max(worst, space.dist(images[i], images[j]) - space.dist(points[i], points[j]))
    return worst


def display(value):
    """Compact textual form of a rate value for reports."""
    if isinstance(value, int):
        return format_nat(value)
    return repr(as_float(value))
