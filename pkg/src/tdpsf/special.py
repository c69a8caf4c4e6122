"""Upper incomplete gamma function and its inverse in the second argument.

The forward evaluation follows the classic split: a power series for the
lower function when ``x < a + 1`` and a modified-Lentz continued fraction
for the upper function otherwise.  The inverse brackets the root and polishes
it with Newton steps on whichever of the two complementary functions is
better conditioned at the target.
"""

from __future__ import annotations

import math

__all__ = ["upper_incomplete_gamma", "inverse_upper_incomplete_gamma", "GammaDomainError"]

_EPS = 1e-16
_TINY = 1e-300
_MAX_TERMS = 10_000


class GammaDomainError(ValueError):
    pass


def _log_prefactor(a: float, x: float) -> float:
    # log(x^a e^{-x})
    return a * math.log(x) - x


def _lower_series(a: float, x: float) -> float:
    """gamma(a, x) via sum x^n / (a (a+1) ... (a+n))."""
    if x == 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:  # pragma: no cover - unreachable for x < a + 1
        raise RuntimeError(f"lower gamma series did not converge for a={a}, x={x}")
    return total * math.exp(_log_prefactor(a, x))


def _upper_fraction(a: float, x: float) -> float:
    """Gamma(a, x) via the Legendre continued fraction (modified Lentz)."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:  # pragma: no cover
        raise RuntimeError(f"incomplete gamma continued fraction did not converge for a={a}, x={x}")
    return math.exp(_log_prefactor(a, x)) * h


def _check_a(a: float) -> None:
    if not a > 0:
        raise GammaDomainError(f"shape parameter must be positive, got a={a}")


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Gamma(a, x) = integral of t^(a-1) e^(-t) from x to infinity."""
    _check_a(a)
    if x < 0:
        raise GammaDomainError(f"x must be non-negative, got x={x}")
    if x < a + 1.0:
        return math.gamma(a) - _lower_series(a, x)
    return _upper_fraction(a, x)


def lower_incomplete_gamma(a: float, x: float) -> float:
    _check_a(a)
    if x < 0:
        raise GammaDomainError(f"x must be non-negative, got x={x}")
    if x < a + 1.0:
        return _lower_series(a, x)
    return math.gamma(a) - _upper_fraction(a, x)


def inverse_upper_incomplete_gamma(a: float, y: float, rtol: float = 1e-14) -> float:
    """Solve Gamma(a, x) = y for x, with 0 < y < Gamma(a).

    Raises:
        GammaDomainError: if ``y`` is outside the open range of Gamma(a, .).
    """
    _check_a(a)
    full = math.gamma(a)
    if not (0.0 < y < full):
        raise GammaDomainError(f"inverse incomplete gamma needs 0 < y < Gamma(a) = {full!r}, got y={y!r} (a={a})")

    # Near x = 0 the upper function is flat; work with the complementary lower
    # function there so the target keeps its significant digits.
    use_lower = y > 0.5 * full
    target = full - y if use_lower else y
    log_target = math.log(target)

    def residual(x: float) -> float:
        value = lower_incomplete_gamma(a, x) if use_lower else upper_incomplete_gamma(a, x)
        if value <= 0.0:
            return -math.inf
        return math.log(value) - log_target

    # residual is increasing in x for the lower branch, decreasing for the upper
    sign = 1.0 if use_lower else -1.0

    lo, hi = 0.0, max(1.0, a)
    while sign * residual(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:  # pragma: no cover - target below double range
            raise GammaDomainError(f"could not bracket Gamma^-1(a={a}, y={y})")

    x = 0.5 * (lo + hi)
    for _ in range(200):
        r = residual(x)
        if r == 0.0:
            return x
        if sign * r > 0.0:
            hi = x
        else:
            lo = x
        # d/dx log F = +-x^(a-1) e^(-x) / F
        value = math.exp(r + log_target)
        slope = sign * math.exp((a - 1.0) * math.log(x) - x) / value if x > 0 else math.inf
        step = r / slope if slope not in (0.0, math.inf) else math.inf
        candidate = x - step
        if not (lo < candidate < hi) or not math.isfinite(candidate):
            candidate = 0.5 * (lo + hi)
        if abs(candidate - x) <= rtol * abs(candidate) or hi - lo <= rtol * hi:
            return candidate
        x = candidate
    return x  # pragma: no cover
