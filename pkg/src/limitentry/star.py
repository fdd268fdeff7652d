"""The derived law a lone provider faces given the other providers' prices.

For provider ``i`` quoting ``q`` while peer ``j`` quotes ``p_j``, the
survival ``S(q)`` is the probability the consumer buys from ``i``. Writing
``Y = max_j (v_j - p_j) + q``, its density in ``x`` is the kernel

    g(q, x) = sum_j f_j(x - q + p_j) * prod_{k != j} F_k(x - q + p_k)

and ``S(q) = P(v_i > Y)``. The density ``f*(q) = -S'(q)`` and its derivative
follow by differentiating under the integral; every jump of ``f_i`` (support
edges included) contributes ``jump * g(q, t)`` to the derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import NumericConfig
from .distributions import Distribution, Verdict
from .errors import InvalidParameter, NumericFailure, UndefinedVirtualValue
from .numerics import integrate_panels

__all__ = ["StarDistribution", "symmetric_star", "kernel_g", "star_is_mhr", "market_outcome", "StarCurve"]


@dataclass(frozen=True)
class StarCurve:
    q: np.ndarray
    survival: np.ndarray
    pdf: np.ndarray
    pdf_prime: np.ndarray

    @property
    def hazard(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.pdf / self.survival

    @property
    def virtual(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.q - self.survival / self.pdf

    def rows(self):
        return zip(self.q, self.survival, self.pdf, self.pdf_prime, self.hazard, self.virtual)


@dataclass(frozen=True)
class StarDistribution:
    """Law of provider ``i``'s sales as a function of its own price.

    ``marginals`` lists every provider's value distribution (length n);
    ``peer_prices`` lists the prices of the other providers in index order.
    """

    marginals: tuple
    i: int
    peer_prices: tuple
    cfg: NumericConfig = field(default_factory=NumericConfig)
    force_general: bool = False

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        object.__setattr__(self, "peer_prices", tuple(float(p) for p in self.peer_prices))
        n = len(self.marginals)
        if n < 2:
            raise InvalidParameter("a star distribution needs at least two providers")
        if not 0 <= self.i < n:
            raise InvalidParameter(f"provider index {self.i} out of range for n={n}")
        if len(self.peer_prices) != n - 1:
            raise InvalidParameter(f"expected {n - 1} peer prices, got {len(self.peer_prices)}")
        if any(p < 0 or not math.isfinite(p) for p in self.peer_prices):
            raise InvalidParameter(f"peer prices must be finite and >= 0, got {self.peer_prices}")

    # -- structure -------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.marginals)

    @property
    def own(self) -> Distribution:
        return self.marginals[self.i]

    @property
    def peers(self) -> list:
        return [d for j, d in enumerate(self.marginals) if j != self.i]

    @property
    def is_symmetric(self) -> bool:
        peers = self.peers
        return (
            not self.force_general
            and all(d == peers[0] for d in peers)
            and all(p == self.peer_prices[0] for p in self.peer_prices)
        )

    def lower_limit(self, q: float) -> float:
        """Lower cutoff M: below it either v_i < 0 or the kernel vanishes."""
        return max(0.0, q - min(self.peer_prices))

    def _upper(self) -> float:
        return self.own.truncation(self.cfg)

    def breakpoints(self, q: float) -> list[float]:
        pts = [self.lower_limit(q)]
        pts.extend(t for t, _ in self.own.jumps())
        for d, p in zip(self.peers, self.peer_prices):
            pts.extend(t + q - p for t, _ in d.jumps())
        return pts

    def _quad(self, func, lo, hi, q):
        return integrate_panels(
            func, lo, hi, self.breakpoints(q),
            abs_tol=self.cfg.quad_abs_tol, rel_tol=self.cfg.quad_rel_tol,
        )

    # -- kernel ----------------------------------------------------------------

    def kernel(self, q, x):
        """g(q, x), vectorized over x (and over q when shapes broadcast)."""
        x = np.asarray(x, dtype=float)
        if self.is_symmetric:
            d, p = self.peers[0], self.peer_prices[0]
            y = x - q + p
            m = self.n - 1
            return m * d.pdf(y) * d.cdf(y) ** (m - 1)
        ys = [x - q + p for p in self.peer_prices]
        dens = [d.pdf(y) for d, y in zip(self.peers, ys)]
        cdfs = [d.cdf(y) for d, y in zip(self.peers, ys)]
        total = 0.0
        for j in range(len(ys)):
            term = dens[j]
            for k in range(len(ys)):
                if k != j:
                    term = term * cdfs[k]
            total = total + term
        return np.asarray(total, dtype=float) * np.ones_like(x)

    def _all_peers_below(self, q, y_shift):
        """prod_j F_j(y_shift + p_j - q): probability every peer utility is below."""
        out = 1.0
        for d, p in zip(self.peers, self.peer_prices):
            out = out * d.cdf(y_shift + p - q)
        return out

    # -- starred quantities ----------------------------------------------------

    def survival(self, q: float) -> float:
        """Probability the consumer buys from provider i at price q."""
        q = float(q)
        lo = self.lower_limit(q)
        own = self.own
        boundary = float(self._all_peers_below(q, lo))
        if lo >= own.support_hi:
            return boundary
        integral = self._quad(lambda x: float(own.sf(x) * self.kernel(q, x)), max(lo, own.support_lo), self._upper(), q)
        # below the own support the survival is 1
        if own.support_lo > lo:
            integral += self._quad(lambda x: float(self.kernel(q, x)), lo, own.support_lo, q)
        return integral + boundary

    def survival_direct(self, q: float) -> float:
        """Same probability, integrating over provider i's own value instead."""
        q = float(q)
        own = self.own
        return self._quad(
            lambda v: float(own.pdf(v) * self._all_peers_below(q, v)), own.support_lo, self._upper(), q
        )

    def pdf(self, q: float) -> float:
        q = float(q)
        own = self.own
        lo = max(self.lower_limit(q), own.support_lo)
        return self._quad(lambda x: float(own.pdf(x) * self.kernel(q, x)), lo, self._upper(), q)

    def pdf_prime(self, q: float) -> float:
        """Left derivative of the starred density in q."""
        q = float(q)
        own = self.own
        lo = max(self.lower_limit(q), own.support_lo)
        smooth = self._quad(lambda x: float(own.pdf_prime(x) * self.kernel(q, x)), lo, self._upper(), q)
        return smooth + float(self._jump_terms(q))

    def hazard(self, q: float) -> float:
        return self.pdf(q) / self.survival(q)

    def virtual(self, q: float) -> float:
        dens = self.pdf(q)
        if not dens > 0:
            raise UndefinedVirtualValue(f"starred density vanishes at q={q}")
        return q - self.survival(q) / dens

    def revenue(self, q: float) -> float:
        return q * self.survival(q)

    # -- whole curves ----------------------------------------------------------

    def _panel_nodes(self, qs):
        """Gauss-Legendre nodes and weights on per-price panels.

        Each price gets its own panel edges (support edges, own jumps, and the
        shifted peer jumps) so every integrand is smooth inside a panel.
        """
        own = self.own
        lo, hi = own.support_lo, self._upper()
        own_pts = [t for t, _ in own.jumps()]
        shifts = [(t, p) for d, p in zip(self.peers, self.peer_prices) for t, _ in d.jumps()]
        cols = [np.full_like(qs, v) for v in own_pts]
        cols += [t + qs - p for t, p in shifts]
        cols.append(np.maximum(0.0, qs - min(self.peer_prices)))
        edges = np.sort(np.clip(np.column_stack([np.full_like(qs, lo), *cols, np.full_like(qs, hi)]), lo, hi), axis=1)
        a = edges[:, :-1, None] + (edges[:, 1:, None] - edges[:, :-1, None]) * _SUB_LEFT
        b = a + (edges[:, 1:, None] - edges[:, :-1, None]) / _SUBPANELS
        a, b = a.reshape(len(qs), -1), b.reshape(len(qs), -1)
        half = 0.5 * (b - a)
        x = (0.5 * (a + b))[:, :, None] + half[:, :, None] * _GL_X
        w = half[:, :, None] * _GL_W
        return x.reshape(len(qs), -1), w.reshape(len(qs), -1)

    def curve(self, qs, chunk: int = 256) -> StarCurve:
        """Survival, density and density derivative on a price grid.

        Uses fixed-order panel quadrature; the scalar methods are the adaptive
        reference it is tested against.
        """
        qs = np.atleast_1d(np.asarray(qs, dtype=float))
        own = self.own
        surv = np.empty_like(qs)
        dens = np.empty_like(qs)
        slope = np.empty_like(qs)
        for start in range(0, len(qs), chunk):
            qc = qs[start:start + chunk]
            x, w = self._panel_nodes(qc)
            q2 = qc[:, None]
            g = self.kernel(q2, x)
            f = own.pdf(x)
            surv[start:start + chunk] = np.sum(w * f * self._all_peers_below(q2, x), axis=1)
            dens[start:start + chunk] = np.sum(w * f * g, axis=1)
            smooth = np.sum(w * own.pdf_prime(x) * g, axis=1)
            slope[start:start + chunk] = smooth + self._jump_terms(qc)
        return StarCurve(qs, surv, dens, slope)

    def survival_curve(self, qs) -> np.ndarray:
        return self.curve(qs).survival

    def _jump_terms(self, q):
        q = np.asarray(q, dtype=float)
        return sum(jump * self.kernel(q, np.full_like(q, t)) for t, jump in self.own.jumps())


_GL_ORDER = 24
_SUBPANELS = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
_SUB_LEFT = (np.arange(_SUBPANELS) / _SUBPANELS)[None, None, :]


def symmetric_star(d: Distribution, n: int, p: float, cfg: NumericConfig | None = None) -> StarDistribution:
    """Star law of the last of n identical providers when the others charge p."""
    return StarDistribution((d,) * n, n - 1, (p,) * (n - 1), cfg or NumericConfig())


def kernel_g(s: StarDistribution, q: float, x):
    return s.kernel(q, x)


def star_is_mhr(s: StarDistribution, q_grid, slack: float = 1e-9) -> Verdict:
    """Grid check of f*(q)^2 >= -f*'(q) S(q) (condition for a monotone hazard)."""
    q_grid = np.sort(np.asarray(q_grid, dtype=float))
    c = s.curve(q_grid)
    ok = c.pdf**2 - (-c.pdf_prime * c.survival) >= -slack
    # past the support the law has no mass left to classify
    ok |= c.survival <= 1e-14
    bad = np.flatnonzero(~ok)
    return Verdict(True) if bad.size == 0 else Verdict(False, float(q_grid[bad[0]]))


def market_outcome(marginals, prices, active=None, cfg: NumericConfig | None = None, base_mean: float = 0.0) -> dict:
    """Quadrature shares, welfare, revenue and utility at a price vector.

    ``active`` restricts the consumer's choice set (default: all providers).
    The consumer must buy from some active provider.
    """
    cfg = cfg or NumericConfig()
    n = len(marginals)
    active = sorted(range(n) if active is None else active)
    if not active:
        raise InvalidParameter("active set must be nonempty")
    shares = np.zeros(n)
    welfare = 0.0
    if len(active) == 1:
        shares[active[0]] = 1.0
        welfare = marginals[active[0]].mean()
    else:
        sub = [marginals[k] for k in active]
        for pos, k in enumerate(active):
            peers = [prices[j] for j in active if j != k]
            s = StarDistribution(sub, pos, peers, cfg)
            shares[k] = s.survival(prices[k])
            own = marginals[k]
            welfare += s._quad(
                lambda v: float(v * own.pdf(v) * s._all_peers_below(prices[k], v)),
                own.support_lo, s._upper(), prices[k],
            )
    revenue = float(np.dot(shares, prices))
    welfare += base_mean
    if abs(shares.sum() - 1.0) > 1e-6:
        raise NumericFailure(f"analytic shares sum to {shares.sum()}")
    return {"shares": shares, "welfare": welfare, "revenue": revenue, "utility": welfare - revenue}
