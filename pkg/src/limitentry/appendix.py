"""Counterexample battery for the piecewise-exponential-hazard family.

Each check is either an oracle assertion (drives the exit status) or an
annotation comparing a published figure with our oracle (reported as a
warning when they disagree, never silently dropped).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import NumericConfig
from .distributions import classify, epsk
from .equilibrium import best_response, free_market_candidate, verify_symmetric_equilibrium
from .montecarlo import empirical_star_survival
from .order_statistics import h
from .policy import limit_entry_condition
from .star import symmetric_star


@dataclass
class Check:
    lemma: str
    name: str
    value: object
    expected: object = None
    tolerance: float | None = None
    passed: bool = True
    kind: str = "oracle"  # or "annotation"
    note: str = ""


@dataclass
class AppendixReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.kind == "oracle")

    @property
    def warnings(self) -> list:
        return [c for c in self.checks if c.kind == "annotation" and not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "warnings": [f"{c.lemma} {c.name}: {c.note}" for c in self.warnings],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_plain)

    def table(self) -> str:
        rows = []
        for c in self.checks:
            status = "PASS" if c.passed else ("WARN" if c.kind == "annotation" else "FAIL")
            rows.append(f"{status:4}  {c.lemma:4}  {c.name}: {_fmt(c.value)}"
                        + (f" (expected {_fmt(c.expected)})" if c.expected is not None else ""))
        return "\n".join(rows)


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x))


def _fmt(x):
    return f"{x:.10g}" if isinstance(x, float) else str(x)


def _close(value, expected, tol, relative=False):
    scale = abs(expected) if relative else 1.0
    return bool(abs(value - expected) <= tol * scale)


# --- individual lemmas ----------------------------------------------------------


def decreasing_hazard_run(q, hazard):
    """Longest interval of the grid on which the hazard strictly decreases."""
    dec = np.diff(hazard) < 0
    best, start, best_span = 0.0, None, (math.nan, math.nan)
    for k, flag in enumerate(dec):
        if flag and start is None:
            start = k
        if (not flag or k == len(dec) - 1) and start is not None:
            end = k + 1 if flag else k
            if q[end] - q[start] > best:
                best, best_span = q[end] - q[start], (float(q[start]), float(q[end]))
            start = None
    return best, best_span


def anti_mhr_witness(cfg: NumericConfig, eps_grid=(0.01, 0.02, 0.05, 0.1, 0.2), k_grid=(1.5, 2.0, 4.0, 8.0, 16.0),
                     n: int = 2, min_length: float = 0.01):
    """Search for an MHR marginal whose starred law has a decreasing hazard stretch."""
    for eps in eps_grid:
        for k in k_grid:
            d = epsk(eps, k)
            if not classify(d, cfg).mhr.passed:
                continue
            p = free_market_candidate(d, n, cfg)
            s = symmetric_star(d, n, p, cfg)
            q = np.linspace(0.0, 4.0 * p, cfg.grid_points)
            c = s.curve(q)
            keep = c.survival > 1e-12
            length, span = decreasing_hazard_run(q[keep], c.hazard[keep])
            if length >= min_length:
                return {"eps": eps, "k": k, "n": n, "p": p, "interval": list(span), "length": float(length)}
    return None


def lemma_a1(cfg, tol):
    w = anti_mhr_witness(cfg)
    ok = w is not None and w["length"] >= 0.01
    return [Check("A.1", "MHR marginal with a decreasing starred hazard", w, ">= 0.01 long", None, ok,
                  note="" if ok else "no witness found in the sweep")]


def lemma_a2(cfg, tol, mc_samples):
    d = epsk(0.1, 2)
    out = []
    h2 = h(d, 2, 2, cfg)
    out.append(Check("A.2", "h_2^2", h2, 13 / 40, tol(1e-9), _close(h2, 13 / 40, tol(1e-9))))
    p = 1.0 / h2
    out.append(Check("A.2", "candidate price", p, 40 / 13, tol(1e-9), _close(p, 40 / 13, tol(1e-9), True)))
    rep = verify_symmetric_equilibrium(d, 2, cfg)
    out.append(Check("A.2", "no symmetric equilibrium", rep.verdict, "not-equilibrium", None,
                     rep.verdict == "not-equilibrium" and rep.relative_gap > 0.05,
                     note=f"relative gap {rep.relative_gap:.4f}"))
    if rep.best_responses:
        q, r = rep.best_responses[0], rep.revenue_at_best_response[0]
        ok = _close(q, 3.50618, 1e-2) and _close(r, 1.53855, 1e-2)
        out.append(Check("A.2", "published best response 3.50618 / revenue 1.53855", [q, r],
                         [3.50618, 1.53855], 1e-2, ok, "annotation",
                         note="" if ok else f"oracle gives q={q:.6f}, revenue={r:.6f}"))
        # independent Monte Carlo check of the deviation's sales
        s = symmetric_star(d, 2, p, cfg)
        est, se = empirical_star_survival([d, d], 1, [p], q, mc_samples, cfg.seed)
        exact = s.survival(q)
        out.append(Check("A.2", "Monte Carlo sales at the best response", est, exact, 4 * se,
                         abs(est - exact) <= tol(4.0) * se, note=f"stderr {se:.3g}"))
    return out


def lemma_a3(cfg, tol):
    d = epsk(0.1, 2)
    lhs, rhs, ok = limit_entry_condition(d, 2, cfg)
    out = [
        Check("A.3", "H_1^2", lhs, 3.25, tol(1e-9), _close(lhs, 3.25, tol(1e-9))),
        Check("A.3", "2 / h_2^2", rhs, 80 / 13, tol(1e-9), _close(rhs, 80 / 13, tol(1e-9))),
        Check("A.3", "condition satisfied", ok, True, None, ok),
    ]

    def margin(e):
        a, b, _ = limit_entry_condition(epsk(e, 2), 2, cfg)
        return a - b

    boundary = brentq(margin, 0.02, 0.1, xtol=1e-14)
    closed = (13 - math.sqrt(160)) / 9  # smaller root of 9e^2 - 26e + 1
    out.append(Check("A.3", "condition boundary in eps", boundary, closed, tol(1e-6),
                     _close(boundary, closed, tol(1e-6))))
    agrees = abs(boundary - 1 / 27) <= 1e-6
    out.append(Check("A.3", "published threshold 1/27", boundary, 1 / 27, 1e-6, agrees, "annotation",
                     note="" if agrees else f"boundary is {boundary:.6f}, not 1/27 = {1 / 27:.6f}"))
    return out


def lemma_a4(cfg, tol):
    d = epsk(0.02, 4.0 / 3.0)
    lhs, rhs, ok = limit_entry_condition(d, 2, cfg)
    printed = math.log(4.0 / 3.0) / 0.02
    out = [
        Check("A.4", "threshold ln(k)/eps as printed vs mass convention", d.threshold, printed, None, False,
              "annotation", note=f"printed break {printed:.6f} gives low-region mass 1-1/k; the appendix "
                                 f"arithmetic needs mass 1/k, i.e. break {d.threshold:.6f}"),
        Check("A.4", "H_1^2", lhs, 28.5625, tol(1e-6), _close(lhs, 28.5625, tol(1e-6))),
        Check("A.4", "condition violated", [lhs, rhs], [28.5625, 320 / 13], None, not ok),
    ]
    p = free_market_candidate(d, 2, cfg)
    out.append(Check("A.4", "candidate price", p, 160 / 13, tol(1e-9), _close(p, 160 / 13, tol(1e-9), True)))
    br = best_response((d, d), 1, (p,), cfg, candidate=p)
    agree = br.foc_price is not None and abs(br.foc_price - br.grid_price) <= tol(1e-3) * br.grid_price
    out.append(Check("A.4", "best-response methods agree", [br.grid_price, br.foc_price], None, 1e-3, agree,
                     note=f"first-order route: {br.foc_kind}"))
    gap = abs(br.price - p) / p
    verdict = "equilibrium" if gap <= cfg.eq_tolerance else "not-equilibrium"
    out.append(Check("A.4", "symmetric equilibrium verdict (oracle)", verdict, None, None, True,
                     note=f"best response {br.price:.6f} to candidate {p:.6f}"))
    claimed = verdict == "equilibrium"
    out.append(Check("A.4", "published claim of a symmetric equilibrium", verdict, "equilibrium", None,
                     claimed, "annotation",
                     note="" if claimed else "oracle finds a profitable deviation from 1/h_2^2"))
    alt = 160 / 3
    br_alt = best_response((d, d), 1, (alt,), cfg, candidate=alt)
    alt_fixed = abs(br_alt.price - alt) / alt <= cfg.eq_tolerance
    out.append(Check("A.4", "published price 160/3 vs candidate 160/13", [alt, p], None, None, False,
                     "annotation",
                     note=f"the text uses both; 1/h_2^2 = {p:.6f}; best response to 160/3 is "
                          f"{br_alt.price:.6f} ({'a' if alt_fixed else 'not a'} fixed point)"))
    return out


def run_appendix(cfg: NumericConfig | None = None, tolerance_scale: float = 1.0,
                 mc_samples: int | None = None) -> AppendixReport:
    """Run the battery. ``tolerance_scale`` multiplies every assertion tolerance."""
    cfg = cfg or NumericConfig()
    mc = int(cfg.mc_samples if mc_samples is None else mc_samples)

    def tol(t):
        return t * tolerance_scale

    rep = AppendixReport()
    for part in (lemma_a1(cfg, tol), lemma_a2(cfg, tol, mc), lemma_a3(cfg, tol), lemma_a4(cfg, tol)):
        rep.checks.extend(part)
    return rep
