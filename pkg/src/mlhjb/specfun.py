"""Mittag-Leffler functions and discount kernels.

The one- and two-parameter Mittag-Leffler functions are evaluated by direct
power-series summation,

    E_a(z)   = sum_{n>=0} z^n / Gamma(a n + 1),
    E_{a,b}(z) = sum_{n>=0} z^n / Gamma(a n + b),

with a floating-point fast path and an arbitrary-precision fallback that is
engaged automatically when alternating terms cancel too many digits for
double precision.  The discount kernel built on top of them is

    kernel(t) = E_a(lam * t**a),

which reduces to exp(lam * t) at a = 1 and to a heavy-tailed relaxation for
0 < a < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "DiscountSpec",
    "SeriesControl",
    "gamma",
    "ml_one",
    "ml_two",
    "kernel",
    "kernel_deriv",
]

# Escalate from float64 to mpmath once more than this many decimal digits
# are lost to cancellation between the largest term and the final sum.
_ESCALATE_DIGITS = 5.0
_OVERFLOW_GUARD = 1e290


@dataclass(frozen=True)
class DiscountSpec:
    """Discount description: order ``alpha`` in (0, 1] and rate ``lam``.

    ``lam < 0`` discounts future cost, ``lam > 0`` inflates it.  ``alpha = 1``
    recovers the classical exponential discount.
    """

    alpha: float
    lam: float

    def __post_init__(self) -> None:
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha)):
            raise DomainError("alpha must be a finite real number")
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (isinstance(self.lam, (int, float)) and math.isfinite(self.lam)):
            raise DomainError("lam must be a finite real number")


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for Mittag-Leffler series summation."""

    max_terms: int = 2000
    abs_tol: float = 1e-30
    rel_tol: float = 1e-15

    def __post_init__(self) -> None:
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise DomainError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise DomainError("at least one of abs_tol, rel_tol must be positive")


_DEFAULT_CONTROL = SeriesControl()


def gamma(x: float) -> float:
    """Gamma function for real ``x``, excluding the poles.

    Backed by the platform's Lanczos-type rational approximation
    (``math.gamma``), which keeps the relative error at a few ulp across
    (0, 170].  Negative non-integer arguments go through the reflection
    formula inside the same routine.  Raises ``DomainError`` at the poles
    (zero and negative integers) and ``OverflowError`` once the result
    leaves double range.
    """
    x = float(x)
    if not math.isfinite(x):
        raise DomainError("gamma requires a finite argument")
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"gamma pole at non-positive integer x={x:g}")
    try:
        return math.gamma(x)
    except OverflowError:
        raise OverflowError(f"gamma({x:g}) exceeds double-precision range") from None
    except ValueError:  # pragma: no cover - poles already rejected above
        raise DomainError(f"gamma undefined at x={x:g}") from None


def _series_float(alpha: float, beta: float, z: np.ndarray, ctl: SeriesControl):
    """One pass of the power series in float64.

    Returns ``(total, max_term, ok)`` where ``max_term`` is the per-element
    peak of ``|term|`` and ``ok`` is False when the term recurrence overflowed
    or the truncation rule was not met within ``ctl.max_terms``.
    """
    total = np.full_like(z, 1.0 / math.gamma(beta))
    term = total.copy()
    peak = np.abs(term)
    consecutive_small = 0
    for n in range(ctl.max_terms):
        ratio = math.exp(math.lgamma(alpha * n + beta) - math.lgamma(alpha * (n + 1) + beta))
        term = term * z * ratio
        mags = np.abs(term)
        if not np.all(np.isfinite(term)) or mags.max(initial=0.0) > _OVERFLOW_GUARD:
            return total, peak, False
        np.maximum(peak, mags, out=peak)
        total = total + term
        if np.all(mags <= ctl.abs_tol + ctl.rel_tol * np.abs(total)):
            consecutive_small += 1
            if consecutive_small >= 2:
                return total, peak, True
        else:
            consecutive_small = 0
    return total, peak, False


def _series_mp(alpha: float, beta: float, z: float, ctl: SeriesControl, dps: int) -> float:
    """Arbitrary-precision summation of one series element.

    The working precision is raised until it covers the cancellation actually
    observed between the largest term and the partial sum.
    """
    for _ in range(4):
        with mp.workdps(dps):
            zm = mp.mpf(z)
            g_prev = mp.gamma(beta)
            term = 1 / g_prev
            total = term
            peak = abs(term)
            consecutive_small = 0
            converged = False
            for n in range(ctl.max_terms):
                g_next = mp.gamma(alpha * (n + 1) + beta)
                term = term * zm * (g_prev / g_next)
                g_prev = g_next
                peak = max(peak, abs(term))
                total += term
                if abs(term) <= ctl.abs_tol + ctl.rel_tol * abs(total):
                    consecutive_small += 1
                    if consecutive_small >= 2:
                        converged = True
                        break
                else:
                    consecutive_small = 0
            if not converged:
                raise ConvergenceError(
                    f"Mittag-Leffler series not converged in {ctl.max_terms} terms "
                    f"(alpha={alpha:g}, beta={beta:g}, z={z:g})"
                )
            lost = mp.log10(peak / abs(total)) if total != 0 else mp.mpf(0)
            needed = 20 + int(max(lost, 0))
            if dps >= needed:
                return float(total)
        dps = needed + 10
    raise ConvergenceError(  # pragma: no cover - precision loop always settles
        f"series precision did not settle (alpha={alpha:g}, beta={beta:g}, z={z:g})"
    )


def _series(alpha: float, beta: float, z: np.ndarray, ctl: SeriesControl) -> np.ndarray:
    total, peak, ok = _series_float(alpha, beta, z, ctl)
    if ok:
        tiny = np.finfo(float).tiny
        lost = np.log10(np.maximum(peak, tiny) / np.maximum(np.abs(total), tiny))
        redo = np.flatnonzero(lost > _ESCALATE_DIGITS)
    else:
        redo = np.arange(z.size)
    if redo.size:
        flat = total.ravel()
        zflat = z.ravel()
        for j in redo:
            flat[j] = _series_mp(alpha, beta, float(zflat[j]), ctl, dps=30)
    return total


def _eval_series(alpha: float, beta: float, z, ctl: SeriesControl):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("series argument must be finite")
    out = _series(alpha, beta, np.atleast_1d(arr).copy(), ctl)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def ml_one(alpha: float, z, control: SeriesControl | None = None):
    """One-parameter Mittag-Leffler function E_alpha(z).

    ``z`` may be a scalar or an array.  ``alpha = 0`` is the geometric series
    1/(1 - z), valid only for ``|z| < 1``.
    """
    ctl = control or _DEFAULT_CONTROL
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0.0:
        raise DomainError(f"ml_one requires alpha >= 0, got {alpha}")
    if alpha == 0.0:
        if np.any(np.abs(np.asarray(z, dtype=float)) >= 1.0):
            raise DomainError("ml_one at alpha=0 requires |z| < 1")
    return _eval_series(alpha, 1.0, z, ctl)


def ml_two(alpha: float, beta: float, z, control: SeriesControl | None = None):
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z)."""
    ctl = control or _DEFAULT_CONTROL
    alpha = float(alpha)
    beta = float(beta)
    if not math.isfinite(alpha) or alpha <= 0.0:
        raise DomainError(f"ml_two requires alpha > 0, got {alpha}")
    if not math.isfinite(beta) or beta <= 0.0:
        raise DomainError(f"ml_two requires beta > 0, got {beta}")
    return _eval_series(alpha, beta, z, ctl)


def kernel(spec: DiscountSpec, t, control: SeriesControl | None = None):
    """Discount kernel E_alpha(lam * t**alpha) for t >= 0."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("kernel requires finite t >= 0")
    return ml_one(spec.alpha, spec.lam * np.power(arr, spec.alpha), control)


def kernel_deriv(spec: DiscountSpec, sigma, control: SeriesControl | None = None):
    """Time derivative of the discount kernel,

        d/dsigma E_a(lam sigma^a) = lam sigma^(a-1) E_{a,a}(lam sigma^a),

    valid for sigma > 0.  The sigma^(a-1) factor is integrable but unbounded
    as sigma -> 0+ for a < 1, so non-positive arguments are rejected.
    """
    arr = np.asarray(sigma, dtype=float)
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("kernel_deriv requires finite sigma > 0")
    a = spec.alpha
    body = ml_two(a, a, spec.lam * np.power(arr, a), control)
    return spec.lam * np.power(arr, a - 1.0) * body
