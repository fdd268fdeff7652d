"""Expected order-statistic functionals of i.i.d. draws.

``i`` counts from the top: ``i=1`` is the maximum of ``n`` draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import NumericConfig
from .distributions import Distribution
from .errors import InvalidParameter, NumericFailure
from .numerics import integrate_panels


@dataclass(frozen=True)
class OrderStatQuery:
    dist: Distribution
    i: int
    n: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1 and 1 <= self.i <= self.n):
            raise InvalidParameter(f"need 1 <= i <= n, got i={self.i}, n={self.n}")


def _coef(i, n):
    return n * math.comb(n - 1, i - 1)


def order_stat_density(q: OrderStatQuery, x):
    """Density of the i-th highest of n draws at x (vectorized)."""
    d = q.dist
    F = d.cdf(x)
    return _coef(q.i, q.n) * d.pdf(x) * F ** (q.n - q.i) * (1.0 - F) ** (q.i - 1)


def _integrate(q: OrderStatQuery, weight, cfg: NumericConfig, upper=None):
    d = q.dist
    hi = d.truncation(cfg) if upper is None else upper

    def integrand(x):
        return float(weight(x) * order_stat_density(q, x))

    return integrate_panels(
        integrand, d.support_lo, hi, d.discontinuities,
        abs_tol=cfg.quad_abs_tol, rel_tol=cfg.quad_rel_tol,
    )


def expected_order_stat(q: OrderStatQuery, cfg: NumericConfig | None = None) -> float:
    """V_i^n: mean of the i-th highest draw."""
    cfg = cfg or NumericConfig()
    return _integrate(q, lambda x: x, cfg)


def _bounded_upper(d: Distribution, cfg: NumericConfig) -> float:
    # (1-F)/f and f/(1-F) are 0/0 at a finite support end; stop just short of it
    if math.isfinite(d.support_hi):
        return float(d.quantile(cfg.truncation_quantile))
    return d.truncation(cfg)


def expected_hazard_order(q: OrderStatQuery, cfg: NumericConfig | None = None) -> float:
    """h_i^n: mean hazard rate evaluated at the i-th highest draw.

    For i = 2 the value is cross-checked against n * E[f(max of n-1 draws)];
    a relative disagreement above 1e-6 raises NumericFailure.
    """
    cfg = cfg or NumericConfig()
    d = q.dist
    value = _integrate(q, d.hazard_rate, cfg, upper=_bounded_upper(d, cfg))
    if q.i == 2:
        other = q.n * expected_density_at_max(d, q.n - 1, cfg)
        if abs(value - other) > 1e-6 * max(abs(value), abs(other), 1e-300):
            raise NumericFailure(f"h_2^{q.n}({d.spec}) routes disagree: {value} vs {other}")
    return value


def expected_density_at_max(d: Distribution, m: int, cfg: NumericConfig | None = None) -> float:
    """E[f(X)] where X is the maximum of m draws."""
    cfg = cfg or NumericConfig()
    return _integrate(OrderStatQuery(d, 1, m), d.pdf, cfg)


def expected_inverse_hazard_order(q: OrderStatQuery, cfg: NumericConfig | None = None) -> float:
    """H_i^n: mean inverse hazard (1-F)/f at the i-th highest draw."""
    cfg = cfg or NumericConfig()
    d = q.dist
    return _integrate(q, d.inverse_hazard, cfg, upper=_bounded_upper(d, cfg))


# shorthand used throughout the package

def V(d, i, n, cfg=None):
    return expected_order_stat(OrderStatQuery(d, i, n), cfg)


def h(d, i, n, cfg=None):
    return expected_hazard_order(OrderStatQuery(d, i, n), cfg)


def H(d, i, n, cfg=None):
    return expected_inverse_hazard_order(OrderStatQuery(d, i, n), cfg)
