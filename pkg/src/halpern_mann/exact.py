"""Exact rationals, directed rounding and big-integer exp/ln for rate evaluation.

Rate inputs are kept as :class:`fractions.Fraction` whenever possible. Once
a quantity becomes too small to carry as a rational (the iterated moduli in
the projection bounds decay doubly exponentially) it is demoted to an
``mpmath.mpf`` rounded *down*, which can only make a rate larger and is
therefore safe. Exponentials and logarithms are evaluated with ``gmpy2`` and
``mpmath`` at a working precision large enough to pin down the exact floor
or ceiling; when that cannot be confirmed the upward value is returned.
"""

import contextlib
import contextvars
import math
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache

import gmpy2
import mpmath
from mpmath.libmp import (
    from_rational,
    mpf_ceil,
    mpf_floor,
    mpf_log,
    mpf_pos,
    to_int,
)

from .errors import RateOverflow, UsageError

#: Mantissa bits carried by demoted (non-rational) reals.
PRECISION = 128

#: Denominators above this many bits are demoted to mpf.
RATIONAL_BITS = 1024

DEFAULT_MAX_BITS = 1 << 22

_max_bits = contextvars.ContextVar("max_bits", default=DEFAULT_MAX_BITS)

# upper bounds on 1/ln 2 and ln 2; the second certifies e**x > 2**budget on overflow
_LOG2_E_UP = Fraction(14427, 10000)
_LN2_UP = Fraction(6932, 10000)


def max_bits():
    """Current bit budget for any single rate value."""
    return _max_bits.get()


@contextlib.contextmanager
def bit_budget(bits):
    """Temporarily change the bit budget for rate values."""
    if bits < 64:
        raise UsageError("bit budget must be at least 64")
    token = _max_bits.set(int(bits))
    try:
        yield
    finally:
        _max_bits.reset(token)


def _overflow(what):
    bits = max_bits()
    return RateOverflow(f"{what} exceeds the {bits}-bit budget", lower=1 << bits)


def is_mpf(x):
    return isinstance(x, mpmath.mpf)


def to_real(x):
    """Coerce ``x`` to an exact Fraction (or keep an mpf as is).

    Floats are read through their shortest decimal repr, so ``0.1`` becomes
    ``1/10``; this matches what a user typing ``0.1`` means.
    """
    if isinstance(x, bool):
        raise UsageError("booleans are not real numbers")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            raise UsageError(f"expected a finite real, got {x}")
        return Fraction(repr(x))
    if isinstance(x, (str, Decimal)):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"cannot parse {x!r} as a rational") from exc
    if is_mpf(x):
        if mpmath.isnan(x) or mpmath.isinf(x):
            raise UsageError(f"expected a finite real, got {x}")
        return x
    if isinstance(x, (type(gmpy2.mpz()), type(gmpy2.mpq()))):
        return Fraction(int(x.numerator), int(x.denominator))
    raise UsageError(f"expected a real number, got {type(x).__name__}")


def positive(x, name="eps"):
    """Validate and coerce a strictly positive real."""
    x = to_real(x)
    if x <= 0:
        raise UsageError(f"{name} must be positive, got {x}")
    return x


def _raw(x, prec, rnd):
    """Raw mpf tuple for ``x`` rounded in direction ``rnd`` ('f' or 'c')."""
    if is_mpf(x):
        return mpf_pos(x._mpf_, prec, rnd)
    return from_rational(x.numerator, x.denominator, prec, rnd)


def lower_mpf(x):
    """Largest mpf at working precision not exceeding ``x``."""
    return mpmath.mpf(_raw(to_real(x), PRECISION, "f"))


def _demote(x):
    if isinstance(x, Fraction) and x.denominator.bit_length() > RATIONAL_BITS:
        return mpmath.mpf(_raw(x, PRECISION, "f"))
    return x


def _directed(op, x, y, up):
    rnd = "c" if up else "f"
    with mpmath.workprec(PRECISION):
        a, b = mpmath.mpf(_raw(x, PRECISION, rnd)), None
        if op == "div":
            # positive operands: round the divisor the other way
            b = mpmath.mpf(_raw(y, PRECISION, "f" if up else "c"))
            return mpmath.fdiv(a, b, prec=PRECISION, rounding=rnd)
        b = mpmath.mpf(_raw(y, PRECISION, rnd))
        return mpmath.fmul(a, b, prec=PRECISION, rounding=rnd)


def div(x, y, up=False):
    """``x / y`` for positive reals, exact for rationals, else directed."""
    x, y = to_real(x), to_real(y)
    if not is_mpf(x) and not is_mpf(y):
        return x / y if up else _demote(x / y)
    return _directed("div", x, y, up)


def mul(x, y, up=False):
    """``x * y`` for positive reals, exact for rationals, else directed."""
    x, y = to_real(x), to_real(y)
    if not is_mpf(x) and not is_mpf(y):
        return x * y if up else _demote(x * y)
    return _directed("mul", x, y, up)


def square(x, up=False):
    return mul(x, x, up)


def minimum(*xs):
    """Minimum of positive reals; a lower bound when representations mix."""
    xs = [to_real(x) for x in xs]
    if not any(is_mpf(x) for x in xs):
        return min(xs)
    return min(mpmath.mpf(_raw(x, PRECISION, "f")) for x in xs)


def leq(x, y):
    """Exact ``x <= y`` for reals in either representation."""
    x, y = to_real(x), to_real(y)
    if not is_mpf(x) and not is_mpf(y):
        return x <= y
    if is_mpf(x) and is_mpf(y):
        return x <= y
    if is_mpf(x):
        # x is a float with at most prec bits, so x <= y iff x <= round_down(y)
        prec = max(PRECISION, x._mpf_[3])
        return x <= mpmath.mpf(_raw(y, prec, "f"))
    prec = max(PRECISION, y._mpf_[3])
    return mpmath.mpf(_raw(x, prec, "c")) <= y


def _check_size(x, what):
    bits = max_bits()
    if is_mpf(x):
        if x >= mpmath.mpf(2) ** bits:
            raise _overflow(what)
    elif x.numerator.bit_length() - x.denominator.bit_length() > bits:
        raise _overflow(what)


def floor_nat(x):
    """``max(0, floor(x))`` as a Python int."""
    x = to_real(x)
    if x <= 0:
        return 0
    _check_size(x, "floor")
    if is_mpf(x):
        return int(to_int(mpf_floor(x._mpf_)))
    return x.numerator // x.denominator


def ceil_nat(x):
    """``max(0, ceil(x))`` as a Python int."""
    x = to_real(x)
    if x <= 0:
        return 0
    _check_size(x, "ceiling")
    if is_mpf(x):
        return int(to_int(mpf_ceil(x._mpf_)))
    return -((-x.numerator) // x.denominator)


def ceil_conv(x):
    """Clamped ceiling ``max{0, ceil(x)}``.

    Accepts floats, rationals and mpf values. NaN raises
    :class:`UsageError`.
    """
    if isinstance(x, float):
        if math.isnan(x):
            raise UsageError("ceil_conv of NaN")
        if math.isinf(x):
            raise UsageError("ceil_conv of an infinite value")
        return max(0, math.ceil(x))
    return ceil_nat(x)


def _log2_magnitude(x):
    if is_mpf(x):
        sign, man, exp, bc = x._mpf_
        return exp + bc
    return x.numerator.bit_length() - x.denominator.bit_length()


def ln_ceil(x):
    """``max(0, ceil(ln x))`` for ``x > 0``, correct or rounded upward."""
    x = positive(x, "ln argument")
    if x <= 1:
        return 0
    extra = max(0, _log2_magnitude(x)).bit_length()
    hi = None
    for base in (64, 256, 1024):
        prec = base + extra
        lo_raw = mpf_log(_raw(x, prec, "f"), prec, "f")
        hi_raw = mpf_log(_raw(x, prec, "c"), prec, "c")
        lo = int(to_int(mpf_ceil(lo_raw)))
        hi = int(to_int(mpf_ceil(hi_raw)))
        if lo == hi:
            break
    return max(0, int(hi))


def log2_ceil(x):
    """Exact ``max(0, ceil(log2 x))`` for a positive rational."""
    x = positive(x, "log2 argument")
    if is_mpf(x):
        raise UsageError("log2_ceil needs an exact rational")
    if x <= 1:
        return 0
    k = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** k < x:
        k += 1
    while k > 0 and Fraction(2) ** (k - 1) >= x:
        k -= 1
    return k


def exp_floor(x):
    """Exact ``floor(e**x)`` as a Python int.

    The working precision covers every bit of the integer part plus a guard
    band; if the fractional part is too close to an integer to decide, the
    precision grows, and as a last resort the upward-rounded value is used.
    Raises :class:`RateOverflow` when the result would exceed the budget.
    """
    x = to_real(x)
    if x < 0:
        return 0
    if x == 0:
        return 1
    if is_mpf(x):
        if x < mpmath.mpf(2) ** -64:
            return 1  # e**x lies in (1, 2)
        x = as_fraction(x)
    if x > max_bits() * _LN2_UP:
        raise _overflow("exponential")
    return _exp_floor_rational(x)


@lru_cache(maxsize=128)
def _exp_floor_rational(x):
    q = gmpy2.mpq(x.numerator, x.denominator)
    int_bits = int(math.ceil(x * _LOG2_E_UP)) + 2
    guard = 64
    hi = None
    for _ in range(4):
        prec = int_bits + guard
        with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
            x_up = gmpy2.mpfr(q)
            v_up = gmpy2.exp(x_up)
            hi = gmpy2.floor(v_up)
            ulp = gmpy2.mul_2exp(gmpy2.mpfr(1), gmpy2.get_exp(v_up) - prec)
            frac = v_up - hi
        if x_up == q:
            # one correctly rounded evaluation: e**x lies in (v_up - ulp, v_up]
            if frac >= ulp:
                return int(hi)
        else:
            with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
                lo = gmpy2.floor(gmpy2.exp(gmpy2.mpfr(q)))
            if lo == hi:
                return int(hi)
        guard *= 4
    return int(hi)


def as_fraction(x):
    """Exact rational value of a real (mpf values are dyadic rationals)."""
    x = to_real(x)
    if is_mpf(x):
        sign, man, exp, _ = x._mpf_
        v = Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)
        return -v if sign else v
    return x


def as_float(x):
    """Best-effort float view of a real (for display only)."""
    if is_mpf(x):
        return float(x)
    return float(Fraction(x))


def format_nat(n, digits=60):
    """Human readable rendering of a possibly enormous natural."""
    if n.bit_length() <= 4096:
        s = str(n)
        if len(s) <= digits:
            return s
    return f"~2^{n.bit_length() - 1} ({n.bit_length()} bits)"


__all__ = [
    "DEFAULT_MAX_BITS",
    "PRECISION",
    "as_float",
    "as_fraction",
    "leq",
    "bit_budget",
    "ceil_conv",
    "ceil_nat",
    "div",
    "exp_floor",
    "floor_nat",
    "format_nat",
    "ln_ceil",
    "log2_ceil",
    "lower_mpf",
    "max_bits",
    "minimum",
    "mul",
    "positive",
    "square",
    "to_real",
]
