"""Quadrature and one-dimensional search helpers."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from .errors import NumericFailure

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def panels(lo: float, hi: float, breaks=()) -> list[tuple[float, float]]:
    """Split [lo, hi] at every break point that falls strictly inside."""
    inner = sorted({float(b) for b in breaks if lo < b < hi})
    edges = [lo, *inner, hi]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def integrate_panels(func, lo, hi, breaks=(), *, abs_tol=1e-10, rel_tol=1e-9, limit=200):
    """Adaptive Gauss-Kronrod integral of a scalar function over [lo, hi].

    The interval is cut at ``breaks`` before integration so kinks and jumps of
    the integrand sit on panel edges. Raises NumericFailure when QUADPACK
    reports an error estimate well above the requested tolerance.
    """
    if not hi > lo:
        return 0.0
    total = 0.0
    err_total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in panels(lo, hi, breaks):
            val, err = integrate.quad(func, a, b, epsabs=abs_tol, epsrel=rel_tol, limit=limit)
            total += val
            err_total += err
    if not math.isfinite(total):
        raise NumericFailure(f"non-finite integral over [{lo}, {hi}]")
    if err_total > 1e3 * max(abs_tol, rel_tol * abs(total)):
        raise NumericFailure(
            f"quadrature did not converge over [{lo}, {hi}]: value {total}, error estimate {err_total}"
        )
    return total


def golden_section_max(func, lo, hi, *, xtol=1e-10, max_iter=500):
    """Maximize a unimodal function on [lo, hi]; returns (argmax, max).

    Endpoints are compared at the end so a maximum sitting on the boundary of
    the bracket is still returned exactly.
    """
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = func(d)
    candidates = [(fc, c), (fd, d), (func(lo), float(lo)), (func(hi), float(hi))]
    best_val, best_x = candidates[0]
    for val, x in candidates[1:]:
        if val > best_val:
            best_val, best_x = val, x
    return best_x, best_val


def bisect_root(func, lo, hi, *, xtol=1e-12, max_iter=200):
    """Root of func on a sign-changing bracket (Brent's method)."""
    flo, fhi = func(lo), func(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NumericFailure(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    try:
        return brentq(func, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    except RuntimeError as exc:
        raise NumericFailure(f"root finding failed on [{lo}, {hi}]: {exc}") from exc
