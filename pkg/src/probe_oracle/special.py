"""Regularized incomplete beta and the distribution tails built on it.

Continued-fraction evaluation (modified Lentz), good to better than 1e-12
absolute over the tested domain; no dependency beyond math.lgamma.
"""

import math

from .errors import InvalidDof, NonConvergence, ValueOutOfRange

_MAXIT = 500
_EPS = 1e-15
_FPMIN = 1e-300


def _betacf(a, b, x):
    # continued fraction for the incomplete beta, Lentz's method with the
    # standard even/odd coefficient pair per iteration
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NonConvergence(f"incomplete beta continued fraction stalled at a={a}, b={b}, x={x}")


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueOutOfRange(f"beta parameters must be positive, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueOutOfRange(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only below the mean; mirror otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_cdf(f, d1, d2):
    """P(F <= f) for an F distribution with (d1, d2) degrees of freedom."""
    if d1 < 1 or d2 < 1:
        raise InvalidDof(f"F dof must be >= 1, got ({d1}, {d2})")
    if f <= 0.0:
        return 0.0
    x = d1 * f / (d1 * f + d2)
    return reg_inc_beta(0.5 * d1, 0.5 * d2, x)


def t_cdf(t, dof):
    """P(T <= t) for a Student t distribution with dof degrees of freedom."""
    if dof < 1:
        raise InvalidDof(f"t dof must be >= 1, got {dof}")
    x = dof / (dof + t * t)
    tail = 0.5 * reg_inc_beta(0.5 * dof, 0.5, x)
    return tail if t < 0.0 else 1.0 - tail
