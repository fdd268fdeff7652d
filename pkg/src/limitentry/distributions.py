"""One-dimensional value distributions and their class certificates.

All evaluation methods are numpy-vectorized. Densities are right-continuous
at jump points (``pdf(t)`` is the limit from the right); ``pdf_left`` gives
the limit from the left and ``pdf_prime`` is the derivative from the left.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .config import NumericConfig
from .errors import InvalidParameter, InvalidSpec, NumericFailure, UndefinedHazard, UndefinedVirtualValue
from .numerics import bisect_root, golden_section_max, integrate_panels

__all__ = [
    "Distribution",
    "Exponential",
    "Uniform",
    "HalfNormal",
    "PiecewiseExponentialHazard",
    "Verdict",
    "Classification",
    "make_distribution",
    "epsk",
    "hazard",
    "virtual_value",
    "virtual_value_inverse_zero",
    "classify",
]


class Distribution:
    """Base class for a value law on [support_lo, support_hi).

    Subclasses implement ``cdf``, ``pdf`` and ``quantile``; everything else has
    a generic fallback. Instances are immutable.
    """

    support_lo: float = 0.0
    support_hi: float = math.inf
    discontinuities: tuple[float, ...] = ()

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def pdf_left(self, x):
        """Limit of the density from the left."""
        x = np.asarray(x, dtype=float)
        return self.pdf(np.nextafter(x, -np.inf))

    def pdf_prime(self, x):
        """Derivative of the density; finite-difference fallback."""
        x = np.asarray(x, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(x))
        return (self.pdf(x + h) - self.pdf(x - h)) / (2 * h)

    def pdf_prime_right(self, x):
        x = np.asarray(x, dtype=float)
        return self.pdf_prime(np.nextafter(x, np.inf))

    def hazard_rate(self, x):
        """Vectorized f/(1-F); inf where the survival function vanishes."""
        s = self.sf(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s > 0, self.pdf(x) / np.where(s > 0, s, 1.0), np.inf)

    def inverse_hazard(self, x):
        """Vectorized (1-F)/f; inf where the density vanishes."""
        f = self.pdf(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(f > 0, self.sf(x) / np.where(f > 0, f, 1.0), np.inf)

    def sample(self, u):
        """Inverse-CDF sampling from uniforms in (0, 1)."""
        return self.quantile(u)

    def sampler(self, rng: np.random.Generator, size=None):
        return self.sample(rng.random(size))

    def truncation(self, cfg: NumericConfig | None = None) -> float:
        """Upper end of integration: support_hi or a far quantile for infinite tails."""
        if math.isfinite(self.support_hi):
            return float(self.support_hi)
        q = (cfg or NumericConfig()).truncation_quantile
        return float(self.quantile(q))

    def jumps(self) -> list[tuple[float, float]]:
        """Points where the density jumps, with jump size right minus left.

        Includes the lower support edge (jump from 0) and a finite upper edge.
        """
        out = [(self.support_lo, float(self.pdf(self.support_lo)))]
        for t in self.discontinuities:
            out.append((t, float(self.pdf(t) - self.pdf_left(t))))
        if math.isfinite(self.support_hi):
            out.append((self.support_hi, -float(self.pdf_left(self.support_hi))))
        return out

    def mean(self) -> float:
        hi = self.truncation()
        return self.support_lo + integrate_panels(
            lambda x: float(self.sf(x)), self.support_lo, hi, self.discontinuities
        )

    @property
    def min_hazard(self) -> float:
        """Smallest hazard rate on the support (used for search-range scaling)."""
        grid = self.quantile(np.linspace(0.0, 0.999, 512))
        return float(np.min(self.hazard_rate(grid)))

    @property
    def spec(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return self.spec


def _as_array(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, repr=False)
class Exponential(Distribution):
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidParameter(f"exp rate must be > 0, got {self.rate}")

    def cdf(self, x):
        x = _as_array(x)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0)), 0.0)

    def sf(self, x):
        x = _as_array(x)
        return np.exp(-self.rate * np.maximum(x, 0))

    def pdf(self, x):
        x = _as_array(x)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0)), 0.0)

    def pdf_left(self, x):
        x = _as_array(x)
        return np.where(x > 0, self.pdf(x), 0.0)

    def pdf_prime(self, x):
        x = _as_array(x)
        return np.where(x > 0, -self.rate * self.pdf(x), 0.0)

    def pdf_prime_right(self, x):
        x = _as_array(x)
        return np.where(x >= 0, -self.rate * self.pdf(x), 0.0)

    def hazard_rate(self, x):
        return np.where(_as_array(x) >= 0, self.rate, 0.0)

    def inverse_hazard(self, x):
        return np.where(_as_array(x) >= 0, 1.0 / self.rate, np.inf)

    def quantile(self, u):
        return -np.log1p(-_as_array(u)) / self.rate

    def mean(self):
        return 1.0 / self.rate

    @property
    def min_hazard(self):
        return self.rate

    @property
    def spec(self):
        return f"exp(rate={self.rate!r})"


@dataclass(frozen=True, repr=False)
class Uniform(Distribution):
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo >= 0 and self.hi > self.lo and math.isfinite(self.hi)):
            raise InvalidParameter(f"uniform needs 0 <= lo < hi < inf, got ({self.lo}, {self.hi})")

    @property
    def support_lo(self):
        return float(self.lo)

    @property
    def support_hi(self):
        return float(self.hi)

    @property
    def _width(self):
        return self.hi - self.lo

    def cdf(self, x):
        return np.clip((_as_array(x) - self.lo) / self._width, 0.0, 1.0)

    def sf(self, x):
        return np.clip((self.hi - _as_array(x)) / self._width, 0.0, 1.0)

    def pdf(self, x):
        x = _as_array(x)
        return np.where((x >= self.lo) & (x < self.hi), 1.0 / self._width, 0.0)

    def pdf_left(self, x):
        x = _as_array(x)
        return np.where((x > self.lo) & (x <= self.hi), 1.0 / self._width, 0.0)

    def pdf_prime(self, x):
        return np.zeros_like(_as_array(x))

    def pdf_prime_right(self, x):
        return np.zeros_like(_as_array(x))

    def hazard_rate(self, x):
        x = _as_array(x)
        with np.errstate(divide="ignore"):
            return np.where(x < self.lo, 0.0, np.where(x < self.hi, 1.0 / (self.hi - np.minimum(x, self.hi)), np.inf))

    def inverse_hazard(self, x):
        x = _as_array(x)
        return np.where((x >= self.lo) & (x <= self.hi), self.hi - x, np.inf)

    def quantile(self, u):
        return self.lo + _as_array(u) * self._width

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def min_hazard(self):
        return 1.0 / self._width

    @property
    def spec(self):
        return f"uniform(lo={self.lo!r},hi={self.hi!r})"


@dataclass(frozen=True, repr=False)
class HalfNormal(Distribution):
    """Gaussian with mean 0 truncated to [0, inf)."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameter(f"halfnormal sigma must be > 0, got {self.sigma}")

    def _z(self, x):
        return np.maximum(_as_array(x), 0.0) / (self.sigma * math.sqrt(2.0))

    def cdf(self, x):
        return special.erf(self._z(x))

    def sf(self, x):
        return special.erfc(self._z(x))

    def pdf(self, x):
        x = _as_array(x)
        z = self._z(x)
        return np.where(x >= 0, math.sqrt(2.0 / math.pi) / self.sigma * np.exp(-z * z), 0.0)

    def pdf_left(self, x):
        x = _as_array(x)
        return np.where(x > 0, self.pdf(x), 0.0)

    def pdf_prime(self, x):
        x = _as_array(x)
        return np.where(x > 0, -x / self.sigma**2 * self.pdf(x), 0.0)

    def pdf_prime_right(self, x):
        x = _as_array(x)
        return np.where(x >= 0, -x / self.sigma**2 * self.pdf(x), 0.0)

    def inverse_hazard(self, x):
        x = _as_array(x)
        # Mills ratio via the scaled complementary error function
        return np.where(x >= 0, self.sigma * math.sqrt(math.pi / 2.0) * special.erfcx(self._z(x)), np.inf)

    def hazard_rate(self, x):
        x = _as_array(x)
        return np.where(x >= 0, 1.0 / self.inverse_hazard(np.maximum(x, 0.0)), 0.0)

    def quantile(self, u):
        u = _as_array(u)
        low = self.sigma * math.sqrt(2.0) * special.erfinv(np.minimum(u, 0.5))
        high = -self.sigma * special.ndtri((1.0 - np.maximum(u, 0.5)) / 2.0)
        return np.where(u < 0.5, low, high)

    def mean(self):
        return self.sigma * math.sqrt(2.0 / math.pi)

    @property
    def min_hazard(self):
        return math.sqrt(2.0 / math.pi) / self.sigma

    @property
    def spec(self):
        return f"halfnormal(sigma={self.sigma!r})"


@dataclass(frozen=True, repr=False)
class PiecewiseExponentialHazard(Distribution):
    """Hazard ``h1`` until the survival drops to ``1 - mass1``, then ``h2``.

    The break point is ``threshold = -log(1 - mass1) / h1``, so the low region
    carries probability exactly ``mass1``.
    """

    h1: float
    h2: float
    mass1: float
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.h1 > 0 and self.h2 > 0):
            raise InvalidParameter(f"pwexp hazards must be > 0, got ({self.h1}, {self.h2})")
        if not 0 < self.mass1 < 1:
            raise InvalidParameter(f"pwexp mass1 must lie in (0, 1), got {self.mass1}")

    @property
    def threshold(self) -> float:
        return -math.log1p(-self.mass1) / self.h1

    @property
    def discontinuities(self):
        return (self.threshold,)

    def sf(self, x):
        x = np.maximum(_as_array(x), 0.0)
        t = self.threshold
        return np.where(x < t, np.exp(-self.h1 * x), (1.0 - self.mass1) * np.exp(-self.h2 * (x - t)))

    def cdf(self, x):
        x = np.maximum(_as_array(x), 0.0)
        t = self.threshold
        return np.where(x < t, -np.expm1(-self.h1 * x), 1.0 - (1.0 - self.mass1) * np.exp(-self.h2 * (x - t)))

    def hazard_rate(self, x):
        x = _as_array(x)
        return np.where(x < 0, 0.0, np.where(x < self.threshold, self.h1, self.h2))

    def inverse_hazard(self, x):
        x = _as_array(x)
        return np.where(x < 0, np.inf, np.where(x < self.threshold, 1.0 / self.h1, 1.0 / self.h2))

    def pdf(self, x):
        x = _as_array(x)
        return np.where(x >= 0, self.hazard_rate(x) * self.sf(x), 0.0)

    def pdf_left(self, x):
        x = _as_array(x)
        left_rate = np.where(x <= self.threshold, self.h1, self.h2)
        return np.where(x > 0, left_rate * self.sf(x), 0.0)

    def pdf_prime(self, x):
        x = _as_array(x)
        left_rate = np.where(x <= self.threshold, self.h1, self.h2)
        return np.where(x > 0, -left_rate * left_rate * self.sf(x), 0.0)

    def pdf_prime_right(self, x):
        x = _as_array(x)
        rate = self.hazard_rate(x)
        return np.where(x >= 0, -rate * rate * self.sf(x), 0.0)

    def quantile(self, u):
        u = _as_array(u)
        t = self.threshold
        low = -np.log1p(-np.minimum(u, self.mass1)) / self.h1
        with np.errstate(divide="ignore"):
            high = t - np.log((1.0 - np.maximum(u, self.mass1)) / (1.0 - self.mass1)) / self.h2
        return np.where(u < self.mass1, low, high)

    def mean(self):
        return self.mass1 / self.h1 + (1.0 - self.mass1) / self.h2

    @property
    def min_hazard(self):
        return min(self.h1, self.h2)

    @property
    def spec(self):
        if self.label:
            return self.label
        return f"pwexp(h1={self.h1!r},h2={self.h2!r},mass1={self.mass1!r})"


def epsk(eps: float, k: float) -> PiecewiseExponentialHazard:
    """The two-region family with hazard ``eps`` on mass ``1/k`` and 1 on the rest."""
    if not 0 < eps <= 1:
        raise InvalidParameter(f"epsk eps must lie in (0, 1], got {eps}")
    if not k > 1:
        raise InvalidParameter(f"epsk k must be > 1, got {k}")
    return PiecewiseExponentialHazard(eps, 1.0, 1.0 / k, label=f"epsk(eps={eps!r},k={k!r})")


# --- spec parsing -----------------------------------------------------------

_NUMBER = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_SPEC_RE = re.compile(rf"^([a-z]+)\((\w+={_NUMBER}(?:,\w+={_NUMBER})*)\)$")

_FAMILIES = {
    "exp": (("rate",), lambda p: Exponential(p["rate"])),
    "uniform": (("lo", "hi"), lambda p: Uniform(p["lo"], p["hi"])),
    "halfnormal": (("sigma",), lambda p: HalfNormal(p["sigma"])),
    "pwexp": (("h1", "h2", "mass1"), lambda p: PiecewiseExponentialHazard(p["h1"], p["h2"], p["mass1"])),
    "epsk": (("eps", "k"), lambda p: epsk(p["eps"], p["k"])),
}


def make_distribution(spec: str) -> Distribution:
    """Build a distribution from a spec such as ``"epsk(eps=0.1,k=2)"``."""
    if isinstance(spec, Distribution):
        return spec
    compact = re.sub(r"\s+", "", str(spec))
    m = _SPEC_RE.match(compact)
    if not m:
        raise InvalidSpec(f"cannot parse distribution spec {spec!r}")
    name, body = m.groups()
    if name not in _FAMILIES:
        raise InvalidSpec(f"unknown distribution family {name!r}; expected one of {sorted(_FAMILIES)}")
    expected, build = _FAMILIES[name]
    params = {}
    for item in body.split(","):
        key, value = item.split("=")
        if key in params:
            raise InvalidSpec(f"duplicate parameter {key!r} in {spec!r}")
        params[key] = float(value)
    if set(params) != set(expected):
        raise InvalidSpec(f"{name} takes parameters {expected}, got {tuple(params)}")
    return build(params)


# --- scalar functionals -----------------------------------------------------


def hazard(d: Distribution, x: float) -> float:
    if float(d.sf(x)) <= 4 * np.finfo(float).eps:
        raise UndefinedHazard(f"hazard of {d.spec} undefined at x={x}: survival is 0")
    return float(d.hazard_rate(x))


def virtual_value(d: Distribution, v: float) -> float:
    """v - (1 - F(v)) / f(v)."""
    if not float(d.pdf(v)) > 0:
        raise UndefinedVirtualValue(f"virtual value of {d.spec} undefined at v={v}: density is 0")
    return float(v - d.inverse_hazard(v))


def _revenue_argmax_grid(d: Distribution, cfg: NumericConfig) -> float:
    hi = d.truncation(cfg)
    grid = np.linspace(d.support_lo, hi, cfg.grid_points)
    rev = grid * d.sf(grid)
    k = int(np.argmax(rev))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    x, _ = golden_section_max(lambda p: float(p * d.sf(p)), a, b, xtol=1e-13)
    return x


def _virtual_zero_bisection(d: Distribution, cfg: NumericConfig) -> float:
    lo, hi = d.support_lo, d.truncation(cfg)
    phi = lambda v: float(v - d.inverse_hazard(v))  # noqa: E731
    if phi(lo) >= 0:
        return lo
    top = float(np.nextafter(hi, -np.inf)) if math.isfinite(d.support_hi) else hi
    root = bisect_root(phi, lo, top, xtol=1e-13)
    tol = 1e-8 * max(1.0, abs(root))
    if abs(phi(root)) <= 1e-6 * max(1.0, abs(root)):
        return root
    # sign change across an upward jump of the virtual value
    for t in d.discontinuities:
        if abs(root - t) <= tol and phi(np.nextafter(t, -np.inf)) <= 0 <= phi(t):
            return float(t)
    raise NumericFailure(f"bisection on the virtual value of {d.spec} ended at {root} with residual {phi(root)}")


def virtual_value_inverse_zero(d: Distribution, cfg: NumericConfig | None = None, method: str = "auto") -> float:
    """Revenue-maximizing posted price argmax_p p(1 - F(p)).

    ``method="bisection"`` solves the first-order condition on the virtual
    value (valid for regular laws), ``"grid"`` maximizes the revenue curve
    directly, and ``"auto"`` uses bisection when ``d`` classifies as regular
    and the grid otherwise.
    """
    cfg = cfg or NumericConfig()
    if method == "grid":
        return _revenue_argmax_grid(d, cfg)
    if method == "bisection":
        return _virtual_zero_bisection(d, cfg)
    if method != "auto":
        raise InvalidParameter(f"unknown method {method!r}")
    if classify(d, cfg).regular.passed:
        return _virtual_zero_bisection(d, cfg)
    return _revenue_argmax_grid(d, cfg)


# --- classification -----------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    passed: bool
    witness: float | None = None

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Classification:
    regular: Verdict
    mhr: Verdict
    mhr_plus: Verdict
    decreasing_density: Verdict
    mhr_plus_constant: float

    def to_dict(self):
        return {
            "regular": self.regular.to_dict(),
            "mhr": self.mhr.to_dict(),
            "mhr_plus": {**self.mhr_plus.to_dict(), "c": self.mhr_plus_constant},
            "decreasing_density": self.decreasing_density.to_dict(),
        }


def _holds(lhs, rhs, tol=1e-9):
    """lhs >= rhs up to a relative slack; NaN counts as failure."""
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    with np.errstate(invalid="ignore"):
        ok = lhs - rhs >= -tol * scale
    return ok & np.isfinite(lhs) & np.isfinite(rhs)


def _first_failure(xs, ok) -> Verdict:
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return Verdict(True)
    return Verdict(False, float(xs[bad[0]]))


def classify(d: Distribution, cfg: NumericConfig | None = None) -> Classification:
    """Grid certificate for regular / MHR / MHR+ / decreasing density.

    Conditions are checked pointwise on a quantile-spaced grid plus both
    one-sided limits at every declared density discontinuity. MHR+ uses the
    constant c = f(support_lo).
    """
    cfg = cfg or NumericConfig()
    us = np.linspace(0.0, cfg.truncation_quantile, cfg.grid_points)
    grid = np.asarray(d.quantile(us), dtype=float)
    grid = grid[grid < d.support_hi]
    jumps = np.asarray(d.discontinuities, dtype=float)

    # one row per evaluation point: (x, f, f', S); jump points appear twice
    xs = np.concatenate([grid, jumps, jumps])
    f = np.concatenate([d.pdf(grid), d.pdf_left(jumps), d.pdf(jumps)])
    fp = np.concatenate([d.pdf_prime(grid), d.pdf_prime(jumps), d.pdf_prime_right(jumps)])
    s = np.concatenate([d.sf(grid), d.sf(jumps), d.sf(jumps)])
    order = np.argsort(xs, kind="stable")
    xs, f, fp, s = xs[order], f[order], fp[order], s[order]

    c = float(d.pdf(d.support_lo))
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(s > 0, f / s, np.inf)

    regular_ok = _holds(2 * f * f, -fp * s)
    mhr_ok = _holds(f * f, -fp * s)
    plus_ok = _holds(c * f, -fp) & _holds(h, np.full_like(h, c))
    dec_ok = _holds(np.zeros_like(fp), fp)

    # jumps: survival is continuous, so hazard and virtual value move with f
    if jumps.size:
        f_left, f_right = d.pdf_left(jumps), d.pdf(jumps)
        up = _holds(f_right, f_left)
        down = _holds(f_left, f_right)
        jump_ok = {"regular": up, "mhr": up, "mhr_plus": up, "dec": down}
        jx = jumps
    else:
        jump_ok, jx = {}, np.empty(0)

    def verdict(point_ok, key):
        if key in jump_ok:
            allx = np.concatenate([xs, jx])
            allok = np.concatenate([point_ok, jump_ok[key]])
            idx = np.argsort(allx, kind="stable")
            return _first_failure(allx[idx], allok[idx])
        return _first_failure(xs, point_ok)

    regular = verdict(regular_ok, "regular")
    mhr = verdict(mhr_ok, "mhr")
    mhr_plus = verdict(plus_ok, "mhr_plus")
    if mhr_plus.passed and not mhr.passed:
        mhr_plus = Verdict(False, mhr.witness)
    if mhr.passed and not regular.passed:
        mhr = Verdict(False, regular.witness)
        mhr_plus = Verdict(False, regular.witness) if mhr_plus.passed else mhr_plus
    return Classification(regular, mhr, mhr_plus, verdict(dec_ok, "dec"), c)
