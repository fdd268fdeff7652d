"""Free-Market and Limited-Entry equilibria.

Best responses are found two ways: a revenue-curve grid scan refined by
golden-section search, and a root of the starred virtual value. The second
is global when the starred law passes the MHR grid check and local (inside
the winning grid cell) otherwise.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import NumericConfig
from .distributions import Distribution, Verdict, classify
from .errors import InvalidParameter, MarketError, NumericFailure
from .numerics import bisect_root, golden_section_max
from .order_statistics import h as expected_hazard
from .star import StarDistribution, symmetric_star

log = logging.getLogger(__name__)

PRICE_FLOOR = 1e-9


@dataclass(frozen=True)
class BestResponse:
    price: float
    revenue: float
    upper_bound: float
    grid_price: float
    foc_price: float | None
    foc_kind: str  # "global", "local" or "none"
    star_mhr: Verdict


@dataclass
class EquilibriumReport:
    setting: str
    n: int
    candidate_prices: list
    best_responses: list
    relative_gap: float
    revenue_at_candidate: list
    revenue_at_best_response: list
    star_mhr: dict | None
    verdict: str
    distribution: str = ""
    cost: float = 0.0
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


@dataclass
class FixedPointTrace:
    iterates: list
    T: float
    converged: bool
    iterations: int
    label: str = "theorem"  # "heuristic" when the MHR+ premise fails or n > 2
    mutual_gap: float | None = None
    verified: bool | None = None

    def to_csv(self) -> str:
        n = len(self.iterates[0]) if self.iterates else 2
        lines = ["iter," + ",".join(f"p{k + 1}" for k in range(n))]
        for t, p in enumerate(self.iterates):
            lines.append(f"{t}," + ",".join(f"{v:.12g}" for v in p))
        return "\n".join(lines) + "\n"


# --- symmetric candidate --------------------------------------------------------


def free_market_candidate(d: Distribution, n: int, cfg: NumericConfig | None = None) -> float:
    """The only price that can be a symmetric Free-Market equilibrium: 1/h_2^n."""
    if n < 2:
        raise InvalidParameter("free market needs n >= 2")
    rate = expected_hazard(d, 2, n, cfg)
    if not rate > 0:
        raise NumericFailure(f"h_2^{n} is not positive for {d.spec}")
    return 1.0 / rate


def limited_entry_equilibrium(n: int) -> np.ndarray:
    """Prices at the Limited-Entry equilibrium: everyone undercuts down to zero."""
    if n < 2:
        raise InvalidParameter("limited entry needs n >= 2")
    return np.zeros(n)


def limited_entry_report(d: Distribution, n: int) -> EquilibriumReport:
    prices = limited_entry_equilibrium(n).tolist()
    # n-1 entrants split the market evenly at equal prices
    return EquilibriumReport(
        setting="limited-entry", n=n, candidate_prices=prices, best_responses=list(prices),
        relative_gap=0.0, revenue_at_candidate=[0.0] * n, revenue_at_best_response=[0.0] * n,
        star_mhr=None, verdict="equilibrium", distribution=d.spec,
    )


# --- best response -------------------------------------------------------------


def _search_bound(marginals, peer_prices, candidate=None) -> float:
    h_min = min(d.min_hazard for d in marginals)
    pmax = max(peer_prices) if len(peer_prices) else 0.0
    cand = candidate if candidate is not None else pmax
    return max(4.0 * pmax, 8.0 / h_min, 8.0 * cand)


def best_response(marginals, i: int, peer_prices, cfg: NumericConfig | None = None,
                  candidate: float | None = None, check_methods: bool = True,
                  cost: float = 0.0) -> BestResponse:
    """Payoff-maximizing price of provider ``i`` against fixed peer prices.

    The payoff is (q - cost)·S(q); ``revenue`` in the result is that payoff.
    """
    cfg = cfg or NumericConfig()
    if not cost >= 0:
        raise InvalidParameter(f"cost must be nonnegative, got {cost}")
    s = StarDistribution(tuple(marginals), i, tuple(peer_prices), cfg)
    upper = _search_bound(marginals, s.peer_prices, candidate) + cost
    if not upper > 0:
        raise InvalidParameter("empty best-response search range")

    for _ in range(8):
        grid = np.linspace(0.0, upper, cfg.grid_points)
        curve = s.curve(grid)
        revenue = (grid - cost) * curve.survival
        k = int(np.argmax(revenue))
        if grid[k] < 0.99 * upper:
            break
        upper *= 2.0
    else:
        raise NumericFailure(f"best response keeps running into the search bound {upper}")

    def rev(q):
        return float((q - cost) * s.curve([q]).survival[0])

    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    q_grid, r_grid = golden_section_max(rev, a, b, xtol=1e-12)

    # method (b): first-order condition on the starred virtual value
    mhr = star_is_mhr_from_curve(curve)
    virtual = curve.virtual - cost

    def phi(q):
        c = s.curve([q])
        return float(q - cost - c.survival[0] / c.pdf[0])

    foc, kind = None, "none"
    if mhr.passed:
        crossing = np.flatnonzero((virtual[:-1] < 0) & (virtual[1:] >= 0))
        if crossing.size:
            j = crossing[0]
            foc, kind = bisect_root(phi, grid[j], grid[j + 1], xtol=1e-13), "global"
    else:
        lo_, hi_ = max(k - 1, 0), min(k + 1, len(grid) - 1)
        if np.isfinite(virtual[lo_]) and np.isfinite(virtual[hi_]) and virtual[lo_] < 0 <= virtual[hi_]:
            foc, kind = bisect_root(phi, grid[lo_], grid[hi_], xtol=1e-13), "local"

    price = q_grid
    if foc is not None:
        if check_methods and abs(foc - q_grid) > 1e-3 * max(abs(q_grid), PRICE_FLOOR):
            raise NumericFailure(
                f"best-response methods disagree for provider {i}: grid {q_grid} vs first-order {foc}"
            )
        # the root is resolved far below the flat revenue top's golden-section noise
        if rev(foc) >= r_grid - 1e-12 * max(1.0, abs(r_grid)):
            price = foc
    return BestResponse(price, rev(price), upper, q_grid, foc, kind, mhr)


def star_is_mhr_from_curve(curve, slack: float = 1e-9) -> Verdict:
    ok = curve.pdf**2 + curve.pdf_prime * curve.survival >= -slack
    ok |= curve.survival <= 1e-14
    bad = np.flatnonzero(~ok)
    return Verdict(True) if bad.size == 0 else Verdict(False, float(curve.q[bad[0]]))


# --- symmetric verification -----------------------------------------------------


def verify_symmetric_equilibrium(d: Distribution, n: int, cfg: NumericConfig | None = None) -> EquilibriumReport:
    """Check whether 1/h_2^n is a best response to itself."""
    cfg = cfg or NumericConfig()
    if n < 2:
        raise InvalidParameter("free market needs n >= 2")
    try:
        p = free_market_candidate(d, n, cfg)
        marginals = (d,) * n
        br = best_response(marginals, n - 1, (p,) * (n - 1), cfg, candidate=p)
        rev_cand = p * symmetric_star(d, n, p, cfg).survival(p)
    except MarketError as exc:
        log.warning("symmetric verification inconclusive for %s, n=%d: %s", d.spec, n, exc)
        return EquilibriumReport(
            setting="free-market", n=n, candidate_prices=[], best_responses=[], relative_gap=math.nan,
            revenue_at_candidate=[], revenue_at_best_response=[], star_mhr=None,
            verdict="inconclusive", distribution=d.spec, diagnostics=[str(exc)],
        )
    gap = abs(br.price - p) / max(p, PRICE_FLOOR)
    ok = gap <= cfg.eq_tolerance and br.revenue <= rev_cand * (1 + cfg.rev_tolerance)
    diagnostics = [f"first-order method: {br.foc_kind}"]
    if br.foc_price is not None:
        diagnostics.append(f"grid price {br.grid_price!r}, first-order price {br.foc_price!r}")
    return EquilibriumReport(
        setting="free-market", n=n,
        candidate_prices=[p] * n, best_responses=[br.price] * n, relative_gap=gap,
        revenue_at_candidate=[rev_cand] * n, revenue_at_best_response=[br.revenue] * n,
        star_mhr=br.star_mhr.to_dict(), verdict="equilibrium" if ok else "not-equilibrium",
        distribution=d.spec, diagnostics=diagnostics,
    )


# --- asymmetric fixed point --------------------------------------------------------


def fixed_point_box(marginals, cfg: NumericConfig | None = None) -> float:
    """T = max_i S_i(0) / f*_i(0) with every price at zero."""
    cfg = cfg or NumericConfig()
    n = len(marginals)
    out = 0.0
    for i in range(n):
        s = StarDistribution(tuple(marginals), i, (0.0,) * (n - 1), cfg)
        dens = s.pdf(0.0)
        if not dens > 0:
            raise NumericFailure(f"starred density of provider {i} vanishes at zero prices")
        out = max(out, s.survival(0.0) / dens)
    return out


def fixed_point_two_providers(marginals, cfg: NumericConfig | None = None):
    """Best-response iteration from zero prices for two providers."""
    if len(marginals) != 2:
        raise InvalidParameter("fixed_point_two_providers takes exactly two marginals")
    return fixed_point_iteration(marginals, cfg)


def fixed_point_iteration(marginals, cfg: NumericConfig | None = None):
    """Simultaneous best-response iteration p <- q(p), clamped to [0, T]^n.

    Returns ``(prices, trace)``. With two MHR+ providers the best responses are
    nondecreasing in the peer price, so the iterates climb monotonically to a
    pure equilibrium. Other inputs run the same iteration labeled heuristic.
    """
    cfg = cfg or NumericConfig()
    marginals = tuple(marginals)
    n = len(marginals)
    label = "theorem"
    if n != 2 or not all(classify(d, cfg).mhr_plus.passed for d in marginals):
        label = "heuristic"
    T = fixed_point_box(marginals, cfg)
    p = np.zeros(n)
    trace = FixedPointTrace([p.tolist()], T, False, 0, label)
    for it in range(1, cfg.max_iterations + 1):
        new = np.array([
            best_response(marginals, i, np.delete(p, i), cfg).price for i in range(n)
        ])
        new = np.clip(new, 0.0, T)
        trace.iterates.append(new.tolist())
        trace.iterations = it
        change = float(np.max(np.abs(new - p)))
        p = new
        if change <= cfg.fp_tolerance:
            trace.converged = True
            break
    if not trace.converged:
        raise NumericFailure(f"best-response iteration did not converge in {cfg.max_iterations} steps", trace)
    trace.verified, trace.mutual_gap = verify_mutual_best_responses(marginals, p, cfg)
    return p, trace


def verify_mutual_best_responses(marginals, prices, cfg: NumericConfig | None = None) -> tuple[bool, float]:
    """Grid-oracle check that each price is a best response to the others."""
    cfg = cfg or NumericConfig()
    worst = 0.0
    for i in range(len(marginals)):
        br = best_response(marginals, i, np.delete(np.asarray(prices, float), i), cfg)
        worst = max(worst, abs(br.grid_price - prices[i]) / max(prices[i], PRICE_FLOOR))
    return worst <= cfg.eq_tolerance, worst
