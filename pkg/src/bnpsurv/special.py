"""Scalar special functions used by the exact samplers.

The exponential integral E1(x) = Gamma(0, x) is evaluated with a power
series for small arguments and a continued fraction (modified Lentz) for
large ones, targeting 1e-12 relative accuracy.  The acceptance-rate
constant of the double-rejection truncated-gamma scheme is sensitive to
this value, which is why the function is implemented here rather than
delegated wholesale to an opaque routine; scipy is used only as a test
oracle.
"""

from __future__ import annotations

import math

EULER_GAMMA = 0.5772156649015328606

_SERIES_CF_SWITCH = 1.0
_MAX_ITER = 500


def exp_integral_e1(x: float) -> float:
    """Upper incomplete gamma function Gamma(0, x) = int_x^inf exp(-t)/t dt.

    Requires x > 0; diverges logarithmically as x -> 0.
    """
    if x <= 0.0:
        raise ValueError(f"E1 requires a positive argument, got {x}")
    if x < _SERIES_CF_SWITCH:
        # E1(x) = -gamma - log(x) + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
        total = -EULER_GAMMA - math.log(x)
        term = 1.0
        for k in range(1, _MAX_ITER):
            term *= -x / k
            contrib = -term / k
            total += contrib
            if abs(contrib) < 1e-18 * max(abs(total), 1e-300):
                break
        return total
    # Continued fraction for Gamma(0, x):
    #   E1(x) = exp(-x) / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(...))))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * i
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x) * h


def ein(x: float) -> float:
    """Entire exponential integral Ein(x) = int_0^x (1 - exp(-t))/t dt.

    Satisfies Ein(x) = EULER_GAMMA + log(x) + E1(x) for x > 0; Ein(0) = 0.
    """
    if x < 0.0:
        raise ValueError(f"Ein requires a non-negative argument, got {x}")
    if x == 0.0:
        return 0.0
    if x < 2.0:
        # direct alternating series avoids the gamma/log cancellation
        total = 0.0
        term = 1.0
        for k in range(1, _MAX_ITER):
            term *= -x / k
            contrib = -term / k
            total += contrib
            if abs(contrib) < 1e-18 * max(abs(total), 1e-300):
                break
        return total
    return EULER_GAMMA + math.log(x) + exp_integral_e1(x)
