"""Exact quantitative rates: convergence, asymptotic regularity, metastability.

Every rate maps an exact positive rational ``eps`` (or a downward-rounded
mpf once rationals get unwieldy) to a Python int. Values are exact big
integers; exponentials and logarithms are resolved exactly or rounded
upward, which keeps every output a valid rate.

Some rates are far too large to write down (their bit length is itself
astronomical). Evaluation then stops with :class:`RateOverflow`, whose
``lower`` attribute is a certified lower bound on the true value. Soundness
checks compare an empirical index ``n*`` against that bound: ``n* <= lower``
implies ``n* <= rate``.

Conventions for the moduli of a parameter schedule ``(alpha_n, beta_n)``:

``gamma1``
    rate of convergence of ``alpha_n -> 0``.
``gamma2``
    rate of divergence of ``sum alpha_n`` (optionally with a product form
    ``gamma2.prime(m, eps)`` bounding when ``prod_{i=m}^{n} (1 - alpha_i) <= eps``).
``gamma3``, ``gamma4``
    Cauchy rates for ``sum |alpha_{n+1} - alpha_n|`` and ``sum |beta_{n+1} - beta_n|``.
``gamma``
    band constant with ``gamma <= beta_n <= 1 - gamma``.
"""

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, NamedTuple

from .errors import RateOverflow, UsageError
from .exact import (
    ceil_nat,
    div,
    exp_floor,
    floor_nat,
    is_mpf,
    ln_ceil,
    log2_ceil,
    minimum,
    mul,
    positive,
    square,
    to_real,
)

#: Hard cap on the number of compositions in the projection modulus.
MAX_COMPOSITIONS = 200_000

#: Counter functions not declared monotone are monotonized by enumeration up to here.
ENUMERATION_CAP = 1_000_000


def _nat(value, name):
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise UsageError(f"{name} must return a natural number, got {value!r}")
    return value


class RateFn:
    """A map from positive reals ``eps`` to naturals, memoized.

    ``monotone`` records the contract that smaller ``eps`` never gives a
    smaller value; it is not enforced, but tests sample it.
    """

    def __init__(self, fn, name="rate", formula="", monotone=True):
        self._fn = fn
        self.name = name
        self.formula = formula
        self.monotone = monotone
        self._cache = {}

    def __call__(self, eps):
        eps = positive(eps)
        try:
            return self._cache[eps]
        except KeyError:
            pass
        value = _nat(self._fn(eps), self.name)
        self._cache[eps] = value
        return value

    def __repr__(self):
        return f"RateFn({self.name})"


class DivRateFn:
    """A monotone map ``k -> n`` (a rate of divergence), with optional product form."""

    def __init__(self, fn, prime=None, name="A", formula=""):
        self._fn = fn
        self._prime = prime
        self.name = name
        self.formula = formula
        self._cache = {}

    def __call__(self, k):
        if not isinstance(k, int) or k < 0:
            raise UsageError(f"{self.name} expects a natural number, got {k!r}")
        try:
            return self._cache[k]
        except KeyError:
            pass
        value = _nat(self._fn(k), self.name)
        self._cache[k] = value
        return value

    @property
    def has_prime(self):
        return self._prime is not None

    def prime(self, m, eps):
        """Product-form bound: ``prod_{i=m}^{n} (1 - alpha_i) <= eps`` for ``n >= prime(m, eps)``."""
        if self._prime is None:
            raise UsageError(f"{self.name} has no product-form variant")
        if not isinstance(m, int) or m < 0:
            raise UsageError("prime expects a natural first argument")
        return _nat(self._prime(m, positive(eps)), self.name + "'")

    def __repr__(self):
        return f"DivRateFn({self.name})"


class CounterFn:
    """A counter function ``f: N -> N`` as used in metastability statements."""

    def __init__(self, fn, monotone=False, name="f"):
        self._fn = fn
        self.monotone = monotone
        self.name = name

    @classmethod
    def affine(cls, a, b):
        """``n -> a*n + b`` with natural ``a``, ``b``; monotone."""
        if a < 0 or b < 0 or int(a) != a or int(b) != b:
            raise UsageError("affine counters need natural coefficients")
        a, b = int(a), int(b)
        return cls(lambda n: a * n + b, monotone=True, name=f"{a}n+{b}")

    @classmethod
    def constant(cls, c):
        return cls.affine(0, c)

    def __call__(self, n):
        return _nat(self._fn(n), self.name)

    def max_view(self):
        """The monotonization ``f_max(k) = max{f(j) : j <= k}``."""
        if self.monotone:
            return self
        best = [self(0)]

        def fmax(k):
            if k >= ENUMERATION_CAP:
                raise RateOverflow(
                    f"monotonizing {self.name} at {k} needs enumeration; declare it monotone",
                    lower=0)
            while len(best) <= k:
                best.append(max(best[-1], self(len(best))))
            return best[k]

        return CounterFn(fmax, monotone=True, name=f"{self.name}^max")

    def __repr__(self):
        return f"CounterFn({self.name})"


def as_counter(f):
    if isinstance(f, CounterFn):
        return f
    if callable(f):
        return CounterFn(f)
    raise UsageError("counter function must be callable")


class MetaRateFn:
    """A map ``(eps, f) -> n`` (rate of metastability). Not memoized."""

    def __init__(self, fn, name="mu", formula=""):
        self._fn = fn
        self.name = name
        self.formula = formula

    def __call__(self, eps, f):
        return _nat(self._fn(positive(eps), as_counter(f)), self.name)

    def __repr__(self):
        return f"MetaRateFn({self.name})"


@dataclass(frozen=True)
class Moduli:
    """Moduli of a parameter schedule; see the module docstring.

    ``certified`` asserts that ``gamma2`` is a genuine divergence rate of a
    sequence in ``[0, 1]`` (so ``gamma2(k) >= k - 1``); overflow bounds that
    pass through the projection modulus rely on it.
    """

    gamma1: RateFn
    gamma2: DivRateFn
    gamma3: RateFn
    gamma4: RateFn
    gamma: Fraction
    certified: bool = True

    def __post_init__(self):
        g = to_real(self.gamma)
        if is_mpf(g) or not 0 < g <= Fraction(1, 2):
            raise UsageError(f"gamma must be a rational in (0, 1/2], got {self.gamma}")
        object.__setattr__(self, "gamma", g)


def _recip_floor(eps):
    return floor_nat(div(1, eps, up=True))


def example_moduli(beta=Fraction(1, 2)):
    """Moduli of ``alpha_n = 1/(n+1)`` and constant ``beta_n = beta``.

    ``gamma1 = gamma3 = floor(1/eps)``, ``gamma2(k) = floor(e^k)`` with product form
    ``ceil(m/eps)``, ``gamma4 = 0``, ``gamma = min(beta, 1 - beta)``.
    """
    beta = to_real(beta)
    g1 = RateFn(_recip_floor, "Gamma1", "floor(1/eps)")
    g2 = DivRateFn(exp_floor, lambda m, e: ceil_nat(div(m, e, up=True)), "Gamma2",
                   "floor(e^k); product form ceil(m/eps)")
    g3 = RateFn(_recip_floor, "Gamma3", "floor(1/eps)")
    g4 = RateFn(lambda e: 0, "Gamma4", "0")
    return Moduli(g1, g2, g3, g4, min(beta, 1 - beta))


def zero_moduli(gamma=Fraction(1, 2)):
    """All moduli identically zero (a toy for exercising the recipes, not valid moduli)."""
    zero = RateFn(lambda e: 0, "zero", "0")
    return Moduli(zero, DivRateFn(lambda k: 0, lambda m, e: 0, "zero", "0"), zero, zero,
                  gamma, certified=False)


def linear_moduli(gamma=Fraction(1, 2)):
    """Moduli of the constant schedule ``alpha_n = 1``: ``gamma2(k) = k``.

    Rates built from these are small enough to evaluate exactly, which makes
    them handy for checking structural properties of the recipes.
    """
    g1 = RateFn(_recip_floor, "Gamma1", "floor(1/eps)")
    g2 = DivRateFn(lambda k: k, lambda m, e: m, "Gamma2", "k")
    g3 = RateFn(lambda e: 0, "Gamma3", "0")
    g4 = RateFn(lambda e: 0, "Gamma4", "0")
    return Moduli(g1, g2, g3, g4, gamma)


# --------------------------------------------------------------------------
# quantitative Xu lemmas


def _check_bound(D):
    if not isinstance(D, int) or D < 1:
        raise UsageError(f"bound D must be a positive integer, got {D!r}")
    return D


def xu_theta(A, R, V, D, eps):
    """``A(K + ceil(ln(3D/eps))) + 1`` with ``K = max(R(eps/3), V(eps/3) + 1)``.

    Rate of convergence for ``s_{n+1} <= (1-a_n) s_n + a_n r_n + v_n`` with
    ``s_n <= D``, ``A`` a divergence rate of ``sum a_n``, ``R`` a rate for
    ``r_n`` eventually below ``eps`` and ``V`` a Cauchy rate of ``sum v_n``.
    """
    eps, D = positive(eps), _check_bound(D)
    third = div(eps, 3)
    K = max(R(third), V(third) + 1)
    return A(K + ln_ceil(div(3 * D, eps, up=True))) + 1


def xu_theta_hat(A, V, D, eps):
    """Case ``r_n = 0``: ``A(V(eps/2) + ceil(ln(2D/eps)) + 1) + 1``."""
    eps, D = positive(eps), _check_bound(D)
    return A(V(div(eps, 2)) + ln_ceil(div(2 * D, eps, up=True)) + 1) + 1


def xu_theta_check(A, R, D, eps):
    """Case ``v_n = 0``: ``A(R(eps/2) + ceil(ln(2D/eps))) + 1``."""
    eps, D = positive(eps), _check_bound(D)
    return A(R(div(eps, 2)) + ln_ceil(div(2 * D, eps, up=True))) + 1


def xu_theta_prime(A_prime, R, V, D, eps):
    """Product-form variant: ``A'(K, eps/3D) + 1``."""
    eps, D = positive(eps), _check_bound(D)
    third = div(eps, 3)
    K = max(R(third), V(third) + 1)
    return A_prime(K, div(eps, 3 * D)) + 1


def xu_theta_hat_prime(A_prime, V, D, eps):
    eps, D = positive(eps), _check_bound(D)
    return A_prime(V(div(eps, 2)) + 1, div(eps, 2 * D)) + 1


def xu_theta_check_prime(A_prime, R, D, eps):
    eps, D = positive(eps), _check_bound(D)
    return A_prime(R(div(eps, 2)), div(eps, 3 * D)) + 1


def xu_window_sigma(A, D, eps, K):
    """Window start ``A(K + ceil(ln(3D/eps))) + 1`` for the variant with an error term."""
    eps, D = positive(eps), _check_bound(D)
    return A(K + ln_ceil(div(3 * D, eps, up=True))) + 1


def xu_window_sigma_prime(A_prime, D, eps, K):
    """Product-form window start ``A'(K, eps/3D) + 1``."""
    eps, D = positive(eps), _check_bound(D)
    return A_prime(K, div(eps, 3 * D)) + 1


# --------------------------------------------------------------------------
# asymptotic regularity of the alternating iteration


class ARRates(NamedTuple):
    theta1: RateFn
    theta2: RateFn
    theta3: RateFn
    theta4: RateFn


class RhoRates(NamedTuple):
    rho1: RateFn
    rho2: RateFn
    rho3: RateFn
    rho: RateFn


def _check_N(N):
    if not isinstance(N, int) or N < 1:
        raise UsageError(f"N must be a positive integer, got {N!r}")
    return N


def _need(moduli):
    if moduli is None:
        raise UsageError("rate computation needs schedule moduli")
    return moduli


def ar_rates(moduli, N, q_star=False):
    """Rates for the even-step, odd-step and map residuals.

    ``theta1`` bounds ``d(x_{2n+2}, x_{2n})``, ``theta2`` bounds
    ``d(x_{2n+1}, x_{2n-1})``, ``theta3`` bounds ``d(x_{2n+1}, x_{2n})`` and
    ``theta4`` bounds ``d(x_{2n+2}, x_{2n+1})``. With ``q_star`` the product
    form of ``gamma2`` replaces the divergence rate in ``theta1``.
    """
    m, N = _need(moduli), _check_N(N)
    g1, g2, g3, g4, gam = m.gamma1, m.gamma2, m.gamma3, m.gamma4, m.gamma

    def A(k):
        return g2(k + 1)

    def V(e):
        q = div(e, 4 * N)
        return max(g3(q), g4(q))

    if q_star:
        def t1(e):
            return xu_theta_hat_prime(lambda k, x: g2.prime(k + 1, x), V, 2 * N, e)
        f1 = "hat-theta'[A'(m,e)=G2'(m+1,e), V=max(G3,G4)(e/4N), D=2N]"
    else:
        def t1(e):
            return xu_theta_hat(A, V, 2 * N, e)
        f1 = "hat-theta[A(k)=G2(k+1), V=max(G3,G4)(e/4N), D=2N]"
    theta1 = RateFn(t1, "theta1", f1)

    def t2(e):
        return max(theta1(div(e, 2)), g3(div(e, 4 * N)) + 1)

    def t3(e):
        ge2 = square(mul(gam, e))
        return max(theta1(div(ge2, 8 * N)), g1(div(ge2, 2 * N * N)))

    theta2 = RateFn(t2, "theta2", "max{theta1(e/2), G3(e/4N)+1}")
    theta3 = RateFn(t3, "theta3", "max{theta1((ge)^2/8N), G1((ge)^2/2N^2)}")

    def t4(e):
        return max(theta1(div(e, 2)), theta3(div(e, 2)))

    theta4 = RateFn(t4, "theta4", "max{theta1(e/2), theta3(e/2)}")
    return ARRates(theta1, theta2, theta3, theta4)


def ar_rates_rho(moduli, N, q_star=False):
    """Rates for ``d(x_{n+1}, x_n)``, ``d(U x_n, x_n)``, ``d(T x_n, x_n)`` and their max."""
    th = ar_rates(moduli, N, q_star)
    g1 = moduli.gamma1
    rho1 = RateFn(lambda e: max(2 * th.theta3(e) + 1, 2 * th.theta4(e)),
                  "rho1", "max{2 theta3(e)+1, 2 theta4(e)}")
    rho2 = RateFn(lambda e: 2 * th.theta3(div(e, 3)) + 2, "rho2", "2 theta3(e/3)+2")
    rho3 = RateFn(lambda e: 2 * max(th.theta4(div(e, 6)), g1(div(e, 4 * N))) + 1,
                  "rho3", "2 max{theta4(e/6), G1(e/4N)}+1")
    rho = RateFn(lambda e: max(rho2(e), rho3(e)), "rho", "max{rho2, rho3}")
    return RhoRates(rho1, rho2, rho3, rho)


# --------------------------------------------------------------------------
# moduli for approximate projections


def proj_phi(N, eps, delta):
    """Least iterate ``min{delta^(i)(1) : i <= r}`` with ``r = ceil(N^2 / 4 eps)``.

    Returns ``(phi, r)``. ``delta`` must map ``(0, 1]`` into ``(0, 1]``. The
    iteration stops early at a fixed point of ``delta``.
    """
    N, eps = _check_N(N), positive(eps)
    r = ceil_nat(div(N * N, mul(4, eps), up=True))
    if r > MAX_COMPOSITIONS:
        raise RateOverflow(f"projection modulus needs {r} compositions", lower=0)
    xi = best = Fraction(1)
    for _ in range(r):
        nxt = to_real(delta(xi))
        if not 0 < nxt <= 1:
            raise UsageError(f"delta left (0, 1]: delta({xi}) = {nxt}")
        best = minimum(best, nxt)
        if nxt == xi:
            break
        xi = nxt
    return best, r


def proj_Phi(N, eps, delta):
    """``phi(eps~, delta~)^2 / 24N`` with ``eps~ = eps^2/4N^2`` and
    ``delta~(xi) = min{delta(xi^2/24N), xi^2/24N}``.
    """
    N, eps = _check_N(N), positive(eps)

    def delta_tilde(xi):
        q = div(square(xi), 24 * N)
        return minimum(delta(q), q)

    phi, _ = proj_phi(N, div(square(eps), 4 * N * N), delta_tilde)
    return div(square(phi), 24 * N)


def proj_Psi(N, rho, eps, Delta):
    """``rho(Phi(eps, Delta o rho))``."""
    N = _check_N(N)
    return rho(proj_Phi(N, eps, lambda eta: Delta(rho(eta))))


# --------------------------------------------------------------------------
# metastability


def meta_mu(N, moduli, eps, f, q_star=False):
    """Rate of metastability of the alternating iteration.

    Parameters
    ----------
    N : int
        Bound with ``N >= max(d(x0, p), 2 d(u, p))``.
    moduli : Moduli
    eps : rational
    f : CounterFn or callable
        Counter function; it is monotonized before use.
    q_star : bool
        Use the product form of ``gamma2`` in the window start.

    Raises
    ------
    RateOverflow
        When the value exceeds the bit budget; ``lower`` is a certified
        lower bound on the rate.
    """
    m, N, eps = _need(moduli), _check_N(N), positive(eps)
    f = as_counter(f).max_view()
    th = ar_rates(m, N)
    rh = ar_rates_rho(m, N)
    eps_t = div(square(eps), 16)
    D = 4 * N * N

    try:
        th4 = th.theta4(div(eps, 4))
    except RateOverflow as exc:
        raise RateOverflow(str(exc), lower=2 * exc.lower + 1) from exc
    floor_value = 2 * th4 + 1

    def K(n):
        return max(n, rh.rho3(div(eps_t, 36 * N)))

    if q_star:
        def Sigma(n):
            return xu_window_sigma_prime(m.gamma2.prime, D, eps_t, K(n))
    else:
        def Sigma(n):
            return xu_window_sigma(m.gamma2, D, eps_t, K(n))

    def Delta(n):
        P = f(2 * max(Sigma(n), th4) + 1)
        return minimum(div(eps_t, 30 * N * (P + 1)), 1)

    try:
        psi = proj_Psi(N, rh.rho, div(eps_t, 24), Delta)
        return 2 * max(Sigma(psi), th4) + 1
    except RateOverflow as exc:
        inner = exc.lower if m.certified else 0
        raise RateOverflow(str(exc), lower=max(floor_value, inner)) from exc


def metastability_rate(moduli, N, q_star=False):
    return MetaRateFn(lambda e, f: meta_mu(N, moduli, e, f, q_star), "mu",
                      "2 max{Sigma(Psi(e~/24, Delta)), theta4(e/4)}+1, e~=e^2/16")


class HalpernRates(NamedTuple):
    ar_rate: RateFn
    rho_tilde: RateFn
    zeta: MetaRateFn


def halpern_rates(N, moduli, sigma_divergence=None):
    """Rates for the Halpern iteration ``y_{n+1} = combine(T y_n, u, alpha_n)``.

    ``ar_rate`` bounds ``d(y_{n+1}, y_n)``, ``rho_tilde`` bounds
    ``d(T y_n, y_n)`` and ``zeta`` is a rate of metastability. The window
    start inside ``zeta`` takes ``gamma3`` as its first argument, exactly as
    the recipe is written; pass ``sigma_divergence=moduli.gamma2`` to use the
    divergence rate there instead.
    """
    m, N = _need(moduli), _check_N(N)
    g1, g2, g3 = m.gamma1, m.gamma2, m.gamma3

    ar = RateFn(lambda e: xu_theta_hat(lambda k: g2(k + 1),
                                       lambda x: g3(div(mul(2, x), 3 * N)), 2 * N, e),
                "halpern_ar", "hat-theta[A(k)=G2(k+1), V(e)=G3(2e/3N), D=2N]")
    rho_t = RateFn(lambda e: max(ar(div(e, 2)), g1(div(e, 3 * N))),
                   "halpern_rho", "max{ar(e/2), G1(e/3N)}")

    if sigma_divergence is None:
        def A(k):
            if k == 0:
                raise UsageError("the window start evaluates gamma3 at 0; "
                                 "use sigma_divergence to substitute a divergence rate")
            return g3(k)
        label = "G3"
    else:
        A = sigma_divergence
        label = getattr(sigma_divergence, "name", "A")

    def zeta(eps, f):
        f = f.max_view()
        eps_t = div(square(eps), 4)
        D = 4 * N * N

        def Sigma(n):
            return xu_window_sigma(A, D, eps_t, max(n, rho_t(div(eps_t, 36 * N))))

        def Delta(n):
            return minimum(div(eps_t, 30 * N * (f(Sigma(n)) + 1)), 1)

        try:
            return Sigma(proj_Psi(N, rho_t, div(eps_t, 24), Delta))
        except RateOverflow as exc:
            inner = exc.lower if (m.certified and sigma_divergence is not None) else 0
            raise RateOverflow(str(exc), lower=inner) from exc

    z = MetaRateFn(zeta, "zeta", f"Sigma~(Psi[N,rho~](e~/24, Delta~)), Sigma~ with {label}")
    return HalpernRates(ar, rho_t, z)


# --------------------------------------------------------------------------
# error terms and composition


def error_rates(gamma2, deltas, chi1=None, chi2=None, alpha=None):
    """Rate for ``d(x'_n, x_n) -> 0`` when updates carry errors ``deltas(k)``.

    Supply exactly one of ``chi1`` (Cauchy rate of ``sum deltas``) or ``chi2``
    (rate for ``(deltas(2n) + deltas(2n+1)) / alpha(n) -> 0``; needs ``alpha``).
    """
    if (chi1 is None) == (chi2 is None):
        raise UsageError("supply exactly one of chi1 or chi2")
    if chi1 is not None:
        total = sum((to_real(deltas(i)) for i in range(chi1(1) + 1)), Fraction(0))
        D = ceil_nat(total) + 1
        theta = RateFn(lambda e: xu_theta_hat(gamma2, chi1, D, e), "theta", "hat-theta[G2, chi1, D]")
        nu = RateFn(lambda e: 2 * max(theta(div(e, 2)), chi1(div(e, 2))) + 3,
                    "nu_hat", f"2 max{{theta(e/2), chi1(e/2)}}+3, D={D}")
    else:
        if alpha is None:
            raise UsageError("chi2 needs the alpha sequence")
        ratios = [div(to_real(deltas(2 * i)) + to_real(deltas(2 * i + 1)), positive(alpha(i), "alpha"))
                  for i in range(chi2(1) + 1)]
        D = ceil_nat(max(ratios + [Fraction(1)]))
        theta = RateFn(lambda e: xu_theta_check(gamma2, chi2, D, e), "theta", "check-theta[G2, chi2, D]")
        nu = RateFn(lambda e: 2 * max(theta(div(e, 2)), chi2(div(e, 2))) + 1,
                    "nu_check", f"2 max{{theta(e/2), chi2(e/2)}}+1, D={D}")
    nu.bound = D
    return nu


def geometric_chi(scale=1, ratio=Fraction(1, 2)):
    """Cauchy rate for ``sum scale * ratio^n`` with ``0 < ratio < 1``.

    The tail after ``n`` is ``scale * ratio^(n+1) / (1 - ratio)``.
    """
    scale, ratio = to_real(scale), to_real(ratio)
    if not 0 < ratio < 1:
        raise UsageError("geometric ratio must lie in (0, 1)")

    def chi(eps):
        # least n with scale * ratio^(n+1) / (1 - ratio) <= eps
        n, tail = 0, scale * ratio / (1 - ratio)
        while tail > eps:
            tail = mul(tail, ratio, up=True)
            n += 1
        return n

    return RateFn(chi, "chi1", f"tail of {scale} * {ratio}^n")


def compose_tau(tau, nu):
    """``tau_nu(eps, f) = max{tau(eps/3, f_nu), nu(eps/3)}`` with ``f_nu(n) = f(max{n, nu(eps/3)})``."""

    def composed(eps, f):
        third = div(eps, 3)
        shift = nu(third)
        g = CounterFn(lambda n: f(max(n, shift)), monotone=f.monotone, name=f"{f.name}_nu")
        return max(tau(third, g), shift)

    return MetaRateFn(composed, f"{tau.name}_nu", "max{tau(e/3, f_nu), nu(e/3)}")


# --------------------------------------------------------------------------
# splitting algorithms


def splitting_rates(flavor, N, moduli, gamma, sigma=None):
    """Rates of metastability for the splitting schemes.

    ``flavor`` is ``"averaged"`` (a map that is ``alpha``-averaged for some
    ``alpha >= sigma``), ``"gfb"`` or ``"gdr"``. ``gamma`` is the band constant
    of the raw ``beta_n``; ``moduli.gamma`` is ignored. Returns a dict of
    :class:`MetaRateFn` keyed ``mu1`` .. ``mu5``.
    """
    m, N, gam = _need(moduli), _check_N(N), to_real(gamma)
    if flavor == "averaged":
        if sigma is None:
            raise UsageError("the averaged flavour needs sigma")
        sigma = to_real(sigma)
        if not 0 < sigma < 1:
            raise UsageError("sigma must lie in (0, 1)")
        if not 0 < gam <= 1 / (2 * sigma):
            raise UsageError("gamma must lie in (0, 1/(2 sigma)]")
        inner = replace(m, gamma=sigma * gam)
        return {"mu1": _renamed(metastability_rate(inner, N), "mu1", "mu[N, sigma*gamma]")}
    if not 0 < gam <= 1:
        raise UsageError("gamma must lie in (0, 1]")
    if flavor not in ("gfb", "gdr"):
        raise UsageError(f"unknown splitting flavour {flavor!r}")
    inner = replace(m, gamma=gam / 2)
    mu = metastability_rate(inner, N)
    if flavor == "gfb":
        return {"mu2": _renamed(mu, "mu2", "mu[N, gamma/2]")}

    def shifted(f):
        return CounterFn(lambda n: 2 * f(n) + 1, monotone=f.monotone, name=f"2{f.name}+1")

    mu3 = _renamed(mu, "mu3", "mu[N, gamma/2]")
    mu4 = MetaRateFn(lambda e, f: mu3(e, shifted(f)), "mu4", "mu3(e, 2f+1)")
    mu5 = MetaRateFn(lambda e, f: mu3(div(e, 3), shifted(f)), "mu5", "mu3(e/3, 2f+1)")
    return {"mu3": mu3, "mu4": mu4, "mu5": mu5}


def _renamed(rate, name, formula):
    return MetaRateFn(rate._fn, name, formula)


# --------------------------------------------------------------------------
# closed forms displayed for the harmonic schedule


def closed_form(name, N, gamma, eps):
    """Displayed upper bounds for ``alpha_n = 1/(n+1)``, as exact integers.

    ``theta1``: ``floor(exp(12N/eps + 2)) + 1``; ``theta3``:
    ``floor(exp((14N/(gamma eps))^2 + 2)) + 1``; ``theta4``:
    ``floor(exp((20N/(gamma eps))^2 + 2)) + 1``; ``rho``:
    ``floor(exp((20N/(gamma eps))^2 + 3)) + 2`` (used for every rho-level rate).
    """
    N, gamma, eps = _check_N(N), to_real(gamma), positive(eps)
    if name == "theta1":
        return exp_floor(Fraction(12 * N) / eps + 2) + 1
    if name == "theta2":
        return exp_floor(Fraction(12 * N) / eps + 2) + 1
    k = N / (gamma * eps)
    if name == "theta3":
        return exp_floor((14 * k) ** 2 + 2) + 1
    if name == "theta4":
        return exp_floor((20 * k) ** 2 + 2) + 1
    if name in ("rho", "rho1", "rho2", "rho3"):
        return exp_floor((20 * k) ** 2 + 3) + 2
    raise UsageError(f"no closed form for {name!r}")
