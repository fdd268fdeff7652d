"""Free Market versus Limited Entry: consumer utility and the Limit-Entry condition."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

from .config import NumericConfig
from .distributions import Distribution, classify, make_distribution
from .equilibrium import EquilibriumReport, verify_symmetric_equilibrium
from .errors import InvalidParameter, MarketError
from .order_statistics import H, V, h

log = logging.getLogger(__name__)

CONDITION_SLACK = 1e-9

SWEEP_HEADER = (
    "dist_spec", "n", "cost", "h2n", "H1n", "V1n", "V1n1",
    "utility_free", "utility_limited", "condition", "eq_verdict", "consistent",
)


@dataclass(frozen=True)
class MarketInstance:
    """A market of ``n`` providers with per-consumer cost and optional base value."""

    marginals: tuple
    n: int
    cost: float = 0.0
    base_value: Distribution | None = None  # None means w0 = 0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParameter(f"a market needs n >= 2 providers, got {self.n}")
        if not self.cost >= 0:
            raise InvalidParameter(f"cost must be nonnegative, got {self.cost}")
        if len(self.marginals) != self.n:
            raise InvalidParameter(f"expected {self.n} marginals, got {len(self.marginals)}")

    @classmethod
    def symmetric(cls, d: Distribution, n: int, cost: float = 0.0, base_value=None) -> MarketInstance:
        return cls((d,) * n, n, cost, base_value)

    @property
    def is_symmetric(self) -> bool:
        return all(m == self.marginals[0] for m in self.marginals)

    @property
    def base_mean(self) -> float:
        return 0.0 if self.base_value is None else float(self.base_value.mean())


@dataclass(frozen=True)
class PolicyComparison:
    n: int
    distribution: str
    cost: float
    V1n: float
    V1n_minus_1: float
    V2n: float
    h2n: float
    H1n: float
    utility_free: float
    utility_limited: float
    limit_entry_lhs: float
    limit_entry_rhs: float
    condition_satisfied: bool
    utilities_consistent: bool
    free_market_equilibrium_exists: str
    base_mean: float = 0.0

    @property
    def utility_difference(self) -> float:
        return self.utility_limited - self.utility_free

    def to_dict(self) -> dict:
        out = asdict(self)
        out["utility_difference"] = self.utility_difference
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def limit_entry_condition(d: Distribution, n: int, cfg: NumericConfig | None = None):
    """Returns ``(H_1^n, n / h_2^n, satisfied)``."""
    if n < 2:
        raise InvalidParameter("the condition needs n >= 2")
    lhs = H(d, 1, n, cfg)
    rhs = n / h(d, 2, n, cfg)
    return lhs, rhs, bool(lhs <= rhs + CONDITION_SLACK)


def mhr_sufficiency_check(d: Distribution, n: int, cfg: NumericConfig | None = None) -> str:
    """MHR with a decreasing density must satisfy the condition.

    Returns "pass", "fail" or "not-applicable".
    """
    c = classify(d, cfg)
    if not (c.mhr.passed and c.decreasing_density.passed):
        return "not-applicable"
    return "pass" if limit_entry_condition(d, n, cfg)[2] else "fail"


def compare_policies(m: MarketInstance, cfg: NumericConfig | None = None,
                     check_equilibrium: bool = True) -> PolicyComparison:
    """Consumer utility at each setting's symmetric equilibrium.

    The consumer pays the cost ``c`` on top of either equilibrium, and the
    common base value adds its mean to both utilities.
    """
    cfg = cfg or NumericConfig()
    if not m.is_symmetric:
        raise InvalidParameter("policy comparison needs identical marginals")
    d, n = m.marginals[0], m.n
    v1n, v1n1, v2n = V(d, 1, n, cfg), V(d, 1, n - 1, cfg), V(d, 2, n, cfg)
    lhs, rhs, ok = limit_entry_condition(d, n, cfg)
    h2n = n / rhs
    shift = m.base_mean - m.cost
    u_free = v1n - 1.0 / h2n + shift
    u_lim = v1n1 + shift
    diff = u_lim - u_free
    consistent = abs(diff) <= cfg.consistency_band or (ok == (diff >= 0))
    eq = verify_symmetric_equilibrium(d, n, cfg).verdict if check_equilibrium else "not-checked"
    return PolicyComparison(
        n=n, distribution=d.spec, cost=m.cost, V1n=v1n, V1n_minus_1=v1n1, V2n=v2n, h2n=h2n, H1n=lhs,
        utility_free=u_free, utility_limited=u_lim, limit_entry_lhs=lhs, limit_entry_rhs=rhs,
        condition_satisfied=ok, utilities_consistent=bool(consistent),
        free_market_equilibrium_exists=eq, base_mean=m.base_mean,
    )


def apply_cost(m: MarketInstance, report: EquilibriumReport) -> EquilibriumReport:
    """Shift a zero-cost equilibrium report by the per-consumer cost.

    Prices move up by ``c``; provider payoffs (p - c)·share stay as they were.
    """
    c = m.cost
    if c == 0:
        return report
    return replace(
        report,
        candidate_prices=[p + c for p in report.candidate_prices],
        best_responses=[p + c for p in report.best_responses],
        cost=report.cost + c,
        diagnostics=[*report.diagnostics, f"prices shifted by cost {c!r}"],
    )


def apply_base_value(m: MarketInstance, comparison: PolicyComparison) -> PolicyComparison:
    """Add the common base value's mean to both utilities."""
    w = m.base_mean - comparison.base_mean
    if w == 0:
        return comparison
    return replace(
        comparison,
        utility_free=comparison.utility_free + w,
        utility_limited=comparison.utility_limited + w,
        base_mean=comparison.base_mean + w,
    )


# --- sweeps ---------------------------------------------------------------------


def _sweep_cell(args):
    spec, n, cost, cfg = args
    d = make_distribution(spec)
    try:
        comp = compare_policies(MarketInstance.symmetric(d, n, cost), cfg)
    except MarketError as exc:
        log.warning("sweep cell %s n=%d failed: %s", spec, n, exc)
        return {"dist_spec": spec, "n": n, "cost": cost, "eq_verdict": "inconclusive", "consistent": ""}
    return {
        "dist_spec": spec, "n": n, "cost": cost, "h2n": comp.h2n, "H1n": comp.H1n, "V1n": comp.V1n,
        "V1n1": comp.V1n_minus_1, "utility_free": comp.utility_free, "utility_limited": comp.utility_limited,
        "condition": comp.condition_satisfied, "eq_verdict": comp.free_market_equilibrium_exists,
        "consistent": comp.utilities_consistent,
    }


def sweep(specs, ns, costs=(0.0,), cfg: NumericConfig | None = None, workers: int = 1) -> list[dict]:
    """Cartesian product of specs × n × cost; rows come back in input order."""
    cfg = cfg or NumericConfig()
    cells = [(s, int(n), float(c), cfg) for s in specs for n in ns for c in costs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_cell, cells))
    return [_sweep_cell(c) for c in cells]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n", restval="")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
