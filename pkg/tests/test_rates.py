from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from halpern_mann import rates as R
from halpern_mann.errors import RateOverflow, UsageError
from halpern_mann.exact import exp_floor, leq

EX = R.example_moduli()


def A_shift(k):
    return EX.gamma2(k + 1)


def zero(_):
    return 0


def test_example_moduli_values():
    assert EX.gamma1(F(1, 4)) == 4
    assert EX.gamma2(2) == 7
    assert EX.gamma3(F(1, 3)) == 3
    assert EX.gamma4(F(1, 1000)) == 0
    assert EX.gamma == F(1, 2)
    assert R.example_moduli(F(1, 4)).gamma == F(1, 4)
    # product form: prod_{i=m}^{n} (1 - 1/(i+1)) = m/(n+1)
    assert EX.gamma2.prime(2, F(1, 3)) == 6


def test_product_form_is_a_rate_for_the_telescoping_product():
    for m in range(1, 6):
        for eps in (F(1, 2), F(1, 7), F(1, 30)):
            n = EX.gamma2.prime(m, eps)
            prod = F(1)
            for i in range(m, n + 1):
                prod *= 1 - F(1, i + 1)
            assert prod <= eps


def test_xu_theta_hat_example():
    assert R.xu_theta_hat(A_shift, zero, 2, 2) == 21


def test_xu_theta_trivial_log_term():
    assert R.xu_theta(A_shift, zero, zero, 1, 3) == A_shift(1) + 1
    assert R.xu_theta_check(A_shift, zero, 1, 2) == A_shift(0) + 1


def test_xu_window_sigma_examples():
    assert R.xu_window_sigma(A_shift, 1, 3, 0) == A_shift(0) + 1
    assert R.xu_window_sigma(EX.gamma2, 4, 1, 5) == exp_floor(8) + 1 == 2981
    assert R.xu_window_sigma_prime(EX.gamma2.prime, 1, 1, 2) == 7


def test_xu_prime_variants():
    assert R.xu_theta_hat_prime(EX.gamma2.prime, zero, 1, 2) == EX.gamma2.prime(1, 1) + 1
    assert R.xu_theta_check_prime(EX.gamma2.prime, zero, 1, 3) == EX.gamma2.prime(0, 1) + 1


def test_xu_rejects_bad_input():
    with pytest.raises(UsageError):
        R.xu_theta_hat(A_shift, zero, 2, 0)
    with pytest.raises(UsageError):
        R.xu_theta_hat(A_shift, zero, 0, 1)


def test_theta1_value_and_closed_form_bound():
    th = R.ar_rates(EX, 1)
    # hat-theta with V = Gamma3(1/8) = 8 and ceil(ln 4) = 2 gives Gamma2(12) + 1
    assert th.theta1(1) == exp_floor(12) + 1 == 162755
    assert th.theta1(1) <= R.closed_form("theta1", 1, F(1, 2), 1) == 1202605


def test_theta3_closed_form_example():
    assert R.closed_form("theta3", 1, F(1, 2), 28) == 21


@pytest.mark.parametrize("eps", [F(4), F(1), F(1, 2)])
def test_ar_structure(eps):
    th = R.ar_rates(EX, 1)
    rh = R.ar_rates_rho(EX, 1)
    assert th.theta4(eps) >= th.theta1(eps / 2)
    assert th.theta2(eps) >= th.theta1(eps / 2)
    assert rh.rho(eps) >= rh.rho2(eps) and rh.rho(eps) >= rh.rho3(eps)
    assert rh.rho1(eps) == max(2 * th.theta3(eps) + 1, 2 * th.theta4(eps))


def test_q_star_theta1_is_smaller():
    plain = R.ar_rates(EX, 1).theta1(F(1, 2))
    prod = R.ar_rates(EX, 1, q_star=True).theta1(F(1, 2))
    assert 0 < prod <= plain


@given(st.fractions(min_value=F(1, 3), max_value=8), st.fractions(min_value=F(1, 3), max_value=8))
def test_rates_antitone_in_eps(a, b):
    lo, hi = min(a, b), max(a, b)
    th = R.ar_rates(EX, 1)
    for fn in (th.theta1, th.theta2, EX.gamma1):
        assert fn(lo) >= fn(hi)


@given(st.integers(0, 40), st.integers(0, 40))
def test_divergence_rate_monotone(j, k):
    lo, hi = min(j, k), max(j, k)
    assert EX.gamma2(lo) <= EX.gamma2(hi)


def test_proj_phi_examples():
    assert R.proj_phi(2, 1, lambda x: x) == (1, 1)
    assert R.proj_phi(2, 1, lambda x: x / 2) == (F(1, 2), 1)
    assert R.proj_phi(2, 100, lambda x: x)[1] == 1


def test_proj_phi_rejects_out_of_range():
    with pytest.raises(UsageError):
        R.proj_phi(1, F(1, 100), lambda x: 2 * x)


def test_proj_Phi_example():
    assert R.proj_Phi(1, 2, lambda x: 1) == F(1, 24) ** 2 / 24


@given(st.fractions(min_value=F(1, 10), max_value=10), st.fractions(min_value=F(1, 10), max_value=10))
def test_proj_Phi_nondecreasing_in_eps(a, b):
    def delta(x):
        return x / 3
    lo, hi = min(a, b), max(a, b)
    a, b = R.proj_Phi(1, lo, delta), R.proj_Phi(1, hi, delta)
    assert leq(a, b) and leq(b, 1)


def test_proj_Psi_trivial():
    zero_rate = R.RateFn(lambda e: 0)
    const = R.RateFn(lambda e: 7)
    assert R.proj_Psi(1, zero_rate, 1, lambda n: 1) == 0
    assert R.proj_Psi(3, const, F(1, 5), lambda n: F(1, n + 1)) == 7


def test_proj_Psi_fixture_rates():
    # finite, but beyond the default bit budget; the certified lower bound still clears rho(1)
    rho = R.ar_rates_rho(EX, 1).rho
    try:
        psi = R.proj_Psi(1, rho, 1, lambda n: 1)
    except RateOverflow as exc:
        psi = exc.lower
    assert psi >= rho(1)


def test_meta_mu_toy_value():
    assert R.meta_mu(1, R.zero_moduli(), 4, lambda n: 0) == 3


def test_meta_mu_lower_bound_with_constant_counter():
    lm = R.linear_moduli()
    th4 = R.ar_rates(lm, 1).theta4(10)
    assert R.meta_mu(1, lm, 40, R.CounterFn.constant(0)) >= 2 * th4 + 1


def test_meta_mu_monotone_in_counter():
    lm = R.linear_moduli()
    counters = [R.CounterFn.constant(0), R.CounterFn.affine(2, 0), R.CounterFn.affine(5, 7)]
    values = [R.meta_mu(1, lm, 40, f) for f in counters]
    assert values == sorted(values)


def test_meta_mu_monotonizes_counter(monkeypatch):
    lm = R.linear_moduli()
    wiggly = R.CounterFn(lambda n: 50 if n == 3 else n)
    flat = R.CounterFn(lambda n: max(50 if n >= 3 else 0, n), monotone=True)
    monkeypatch.setattr(R, "ENUMERATION_CAP", 10_000_000)
    assert R.meta_mu(1, lm, 40, wiggly) == R.meta_mu(1, lm, 40, flat)


def test_non_monotone_counter_beyond_enumeration_cap():
    lm = R.linear_moduli()
    with pytest.raises(RateOverflow) as info:
        R.meta_mu(1, lm, 40, R.CounterFn(lambda n: n % 7))
    assert info.value.lower >= 0


def test_meta_mu_overflow_gives_lower_bound():
    with pytest.raises(RateOverflow) as info:
        R.meta_mu(2, EX, F(1, 2), R.CounterFn.affine(2, 0))
    th4 = R.ar_rates(EX, 2).theta4(F(1, 8))
    assert info.value.lower >= 2 * th4 + 1


def test_counter_max_view():
    f = R.CounterFn(lambda n: [5, 1, 7, 2, 0][n % 5])
    g = f.max_view()
    assert [g(k) for k in range(6)] == [5, 5, 7, 7, 7, 7]


def test_halpern_rates():
    h = R.halpern_rates(1, EX)
    # V(1/2) = Gamma3(1/3) = 3, ceil(ln 4) = 2: Gamma2(3 + 2 + 1 + 1) + 1
    assert h.ar_rate(1) == exp_floor(7) + 1 == 1097
    for e in (F(1), F(1, 2)):
        assert h.rho_tilde(e) >= h.ar_rate(e / 2)


def test_error_rates_zero_errors():
    nu = R.error_rates(EX.gamma2, lambda n: 0, chi1=R.RateFn(lambda e: 0))
    assert nu.bound == 1
    theta = R.xu_theta_hat(EX.gamma2, lambda e: 0, 1, F(1, 2))
    assert nu(1) == 2 * theta + 3


def test_error_rates_geometric():
    chi = R.geometric_chi()
    # tail after n is 2^-n
    assert chi(F(1, 8)) == 3
    nu = R.error_rates(EX.gamma2, lambda n: F(1, 2 ** n), chi1=chi)
    assert nu.bound == 2  # chi(1) = 0, so only delta_0 = 1 enters the sum
    assert nu(F(1, 10)) == 325513


def test_error_rates_check_variant():
    alpha = lambda n: F(1, n + 1)  # noqa: E731
    chi2 = R.RateFn(lambda e: 0)
    nu = R.error_rates(EX.gamma2, lambda n: 0, chi2=chi2, alpha=alpha)
    assert nu.bound == 1
    with pytest.raises(UsageError):
        R.error_rates(EX.gamma2, lambda n: 0)
    with pytest.raises(UsageError):
        R.error_rates(EX.gamma2, lambda n: 0, chi1=chi2, chi2=chi2, alpha=alpha)


def test_compose_tau():
    tau = R.MetaRateFn(lambda e, f: f(3))
    nu5 = R.RateFn(lambda e: 5)
    assert R.compose_tau(tau, nu5)(1, R.CounterFn(lambda n: n)) == 5
    tau0 = R.MetaRateFn(lambda e, f: f(0))
    nu = R.RateFn(lambda e: 4)
    f = R.CounterFn(lambda n: n * n)
    assert R.compose_tau(tau0, nu)(1, f) == max(f(4), 4)
    nu_zero = R.RateFn(lambda e: 0)
    tau_e = R.MetaRateFn(lambda e, f: R.ceil_nat(1 / e) + f(1))
    assert R.compose_tau(tau_e, nu_zero)(1, f) == tau_e(F(1, 3), f)


def test_splitting_rates_relations():
    lm = R.linear_moduli()
    rates = R.splitting_rates("gdr", 1, lm, 1)
    f = R.CounterFn.constant(0)
    assert rates["mu4"](40, f) == rates["mu3"](40, R.CounterFn.constant(1))
    assert rates["mu5"](120, f) == rates["mu4"](40, f)
    mu2 = R.splitting_rates("gfb", 1, lm, F(1, 2))["mu2"]
    assert mu2(40, f) == R.meta_mu(1, lm._replace(gamma=F(1, 4)) if hasattr(lm, "_replace")
                                   else R.linear_moduli(F(1, 4)), 40, f)


def test_splitting_rates_band_errors():
    with pytest.raises(UsageError):
        R.splitting_rates("averaged", 1, EX, 2, sigma=F(1, 2))
    with pytest.raises(UsageError):
        R.splitting_rates("gfb", 1, EX, 0)
    with pytest.raises(UsageError):
        R.splitting_rates("bogus", 1, EX, F(1, 2))


def test_mu2_example_moduli_reports_lower_bound():
    mu2 = R.splitting_rates("gfb", 2, EX, F(1, 2))["mu2"]
    with pytest.raises(RateOverflow) as info:
        mu2(F(1, 2), R.CounterFn.affine(2, 0))
    assert info.value.lower > 0
