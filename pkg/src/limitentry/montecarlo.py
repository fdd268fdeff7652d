"""Monte Carlo market simulation.

Every draw comes from a Philox stream keyed by ``(seed, stream)`` where the
stream is the provider index (or ``BASE_STREAM`` for the common base value).
Consumer ``c`` reads word ``c`` of that stream, so any chunking of the
consumer range reproduces the same values bit for bit.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from numpy.random import Philox

from .config import NumericConfig
from .errors import InvalidParameter
from .policy import MarketInstance

BASE_STREAM = 2**32
CHUNK = 1 << 16  # multiple of 4, the Philox block width


def uniforms(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Open-interval uniforms for consumers ``start .. start+count-1``."""
    block, lane = divmod(start, 4)
    bg = Philox(key=[int(seed) % 2**64, int(stream)], counter=block)
    raw = bg.random_raw(count + lane)[lane:]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _values(m: MarketInstance, seed: int, start: int, count: int):
    v = np.empty((count, m.n))
    for j, d in enumerate(m.marginals):
        v[:, j] = d.quantile(uniforms(seed, j, start, count))
    w0 = None
    if m.base_value is not None:
        w0 = m.base_value.quantile(uniforms(seed, BASE_STREAM, start, count))
    return v, w0


def _choose(v, prices, active):
    # argmax picks the lowest index on ties
    surplus = v[:, active] - prices[active]
    return active[np.argmax(surplus, axis=1)]


def _ranges(N: int):
    return [(a, min(CHUNK, N - a)) for a in range(0, N, CHUNK)]


def _run(fn, N, workers):
    parts = _ranges(N)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda r: fn(*r), parts))
    return [fn(*r) for r in parts]


def _check(m, prices, active, N):
    prices = np.asarray(prices, dtype=float)
    if prices.shape != (m.n,):
        raise InvalidParameter(f"expected {m.n} prices, got {prices.shape}")
    active = np.arange(m.n) if active is None else np.array(sorted(set(int(a) for a in active)))
    if active.size == 0 or active.min() < 0 or active.max() >= m.n:
        raise InvalidParameter(f"active set must be a nonempty subset of 0..{m.n - 1}")
    if N < 1:
        raise InvalidParameter("need at least one consumer")
    return prices, active


@dataclass(frozen=True)
class SimResult:
    shares: list
    revenue: float
    welfare: float
    utility: float
    stderr: dict
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def choices(m: MarketInstance, prices, active=None, N: int = 1000, seed: int = 1729, workers: int = 1):
    """Index of the plan each consumer buys."""
    prices, active = _check(m, prices, active, N)

    def part(start, count):
        v, _ = _values(m, seed, start, count)
        return _choose(v, prices, active)

    return np.concatenate(_run(part, N, workers))


def simulate_market(m: MarketInstance, prices, active=None, N: int | None = None,
                    seed: int | None = None, cfg: NumericConfig | None = None, workers: int = 1) -> SimResult:
    """Simulate ``N`` consumers buying argmax over ``active`` of v_i - p_i."""
    cfg = cfg or NumericConfig()
    N = int(cfg.mc_samples if N is None else N)
    seed = int(cfg.seed if seed is None else seed)
    prices, active = _check(m, prices, active, N)

    def part(start, count):
        v, w0 = _values(m, seed, start, count)
        pick = _choose(v, prices, active)
        val = v[np.arange(count), pick]
        if w0 is not None:
            val = val + w0
        pay = prices[pick]
        surplus = val - pay
        counts = np.bincount(pick, minlength=m.n)
        return counts, np.array([pay.sum(), (pay**2).sum(), val.sum(), (val**2).sum(),
                                 surplus.sum(), (surplus**2).sum()])

    results = _run(part, N, workers)
    counts = sum(r[0] for r in results)
    sums = np.sum([r[1] for r in results], axis=0)  # fixed chunk order keeps this deterministic

    shares = counts / N
    means = sums[0::2] / N
    sq = sums[1::2] / N

    def se(mean, sq_mean):
        if N < 2:
            return 0.0
        var = max(sq_mean - mean**2, 0.0) * N / (N - 1)
        return float(np.sqrt(var / N))

    share_se = np.sqrt(shares * (1 - shares) / N)
    revenue = float(np.dot(prices, shares))
    stderr = {
        "shares": share_se.tolist(),
        "revenue": se(revenue, float(np.dot(prices**2, shares))),
        "welfare": se(means[1], sq[1]),
        "utility": se(means[2], sq[2]),
    }
    return SimResult(
        shares=shares.tolist(), revenue=revenue, welfare=float(means[1]), utility=float(means[2]),
        stderr=stderr, samples=N, seed=seed,
    )


def _star_gap(marginals, i, peer_prices, N, seed, workers=1):
    """D = v_i - max_j (v_j - p_j): provider i wins at price q iff D > q."""
    n = len(marginals)
    if not 0 <= i < n or len(peer_prices) != n - 1:
        raise InvalidParameter("need one peer price per other provider")
    prices = np.insert(np.asarray(peer_prices, float), i, 0.0)
    m = MarketInstance(tuple(marginals), n)

    def part(start, count):
        v, _ = _values(m, seed, start, count)
        others = np.delete(v - prices, i, axis=1)
        return v[:, i] - others.max(axis=1)

    return np.concatenate(_run(part, N, workers))


def empirical_star_survival(marginals, i, peer_prices, q, N: int = 10**6, seed: int = 1729):
    """Fraction of consumers buying from ``i`` at price ``q``, with its standard error."""
    prices = np.insert(np.asarray(peer_prices, float), i, q)
    res = simulate_market(MarketInstance(tuple(marginals), len(marginals)), prices, None, N, seed)
    return res.shares[i], res.stderr["shares"][i]


@dataclass(frozen=True)
class EmpiricalRevenueCurve:
    q: np.ndarray
    revenue: np.ndarray
    stderr: np.ndarray

    @property
    def argmax(self) -> float:
        return float(self.q[int(np.argmax(self.revenue))])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("q,revenue_estimate,stderr\n")
        for row in zip(self.q, self.revenue, self.stderr):
            buf.write(",".join(f"{x:.12g}" for x in row) + "\n")
        return buf.getvalue()


def empirical_revenue_curve(marginals, i, peer_prices, q_grid, N: int = 10**6, seed: int = 1729,
                            workers: int = 1) -> EmpiricalRevenueCurve:
    """Revenue q·S(q) from one shared consumer sample (common random numbers)."""
    q = np.asarray(q_grid, dtype=float)
    if q.size == 0:
        raise InvalidParameter("price grid is empty")
    gap = np.sort(_star_gap(marginals, i, peer_prices, N, seed, workers))
    # ties go to the lowest index, so provider 0 also wins at D == q
    side = "left" if i == 0 else "right"
    surv = 1.0 - np.searchsorted(gap, q, side=side) / N
    return EmpiricalRevenueCurve(q, q * surv, q * np.sqrt(surv * (1 - surv) / N))


def empirical_best_response(marginals, i, peer_prices, q_grid, N: int = 10**6, seed: int = 1729,
                            workers: int = 1) -> float:
    return empirical_revenue_curve(marginals, i, peer_prices, q_grid, N, seed, workers).argmax
