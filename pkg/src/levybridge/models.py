"""Standardized Levy process models with exact jump-level sampling.

Every model samples a process with mean 0 and variance 1 at t = 1 (after
standardization).  Compound-Poisson variants are exact: jump times and
sizes are drawn once and the path is evaluated on any grid without
discretization error, so refining the grid leaves coarse-point values
bit-identical for the same random stream.

The random stream consumption order per path sample is fixed:
(1) Poisson jump count, (2) jump times, (3) jump signs then sizes,
(4) Brownian fine increments.  Composite models draw their jump component
first and Brownian increments last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import exp1

from .normal import norm_cdf, norm_quantile

#: Guard on the expected number of jumps drawn for a single path.
MAX_EXPECTED_JUMPS = 1e8


class NumericalGuardError(RuntimeError):
    """A numerical safety guard tripped (jump-rate or range overflow)."""


@dataclass(frozen=True)
class FinePath:
    """A path sampled on the dyadic grid {0, 2^-q, ..., 1}.

    values has length 2^q + 1 and starts at 0.  n_jumps records how many
    jumps were drawn while sampling (cost accounting only).
    """

    q: int
    values: np.ndarray
    n_jumps: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"resolution exponent must be >= 1, got {self.q}")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (2 ** self.q + 1,):
            raise ValueError(
                f"values must have length 2^q + 1 = {2 ** self.q + 1}, got {vals.shape}")
        if vals[0] != 0.0:
            raise ValueError("path must start at 0")
        if not np.all(np.isfinite(vals)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def n_cells(self) -> int:
        return 2 ** self.q

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) / self.n_cells

    @property
    def endpoint(self) -> float:
        return float(self.values[-1])

    def increments(self, k: int) -> np.ndarray:
        return increments_on_grid(self, k)


def increments_on_grid(path: FinePath, k: int) -> np.ndarray:
    """Increments of the path over the uniform k-cell grid.

    k must divide 2^q.  The i-th entry is path(i/k) - path((i-1)/k).
    """
    n = path.n_cells
    if k < 1 or n % k != 0:
        raise ValueError(f"k = {k} does not divide 2^q = {n}")
    step = n // k
    anchors = path.values[::step]
    return np.diff(anchors)


@dataclass(frozen=True)
class ModelMoments:
    """Moments of a model's jump measure.

    mu4 is the fourth moment of the standardized jump measure, sigma2 the
    second moment before standardization, jump_rate the total jump
    intensity, and tail maps x to the standardized-scale mass of jumps
    with magnitude above x.
    """

    mu4: float
    sigma2: float
    jump_rate: float
    tail: Callable[[float], float]


def _group_sums(sizes: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sum consecutive groups of `sizes` with the given group counts."""
    cums = np.concatenate([[0.0], np.cumsum(sizes)])
    bounds = np.concatenate([[0], np.cumsum(counts)])
    return cums[bounds[1:]] - cums[bounds[:-1]]


def _chunked_poisson_sums(rate: float, n_draws: int, sampler,
                          rng: np.random.Generator,
                          max_chunk_jumps: float = 5e6) -> np.ndarray:
    """n_draws compound-Poisson sums, drawn in chunks to bound memory."""
    per_draw = max(rate, 1.0)
    chunk = max(1, int(max_chunk_jumps / per_draw))
    out = np.empty(n_draws)
    for start in range(0, n_draws, chunk):
        stop = min(start + chunk, n_draws)
        counts = rng.poisson(rate, size=stop - start)
        sizes = sampler(int(counts.sum()), rng)
        out[start:stop] = _group_sums(sizes, counts)
    return out


# ---------------------------------------------------------------------------
# Jump size distributions for compound Poisson models
# ---------------------------------------------------------------------------

class JumpDistribution:
    """Jump-size law with quantile access (inverse-transform sampling)."""

    name = "jump"

    def quantile(self, u):
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def atom(self, x: float) -> float:
        return 0.0

    def moment(self, p: int) -> float:
        """E[J^p]; closed form where available, quadrature fallback."""
        val, _ = integrate.quad(lambda u: float(self.quantile(u)) ** p, 0.0, 1.0,
                                epsabs=0.0, epsrel=1e-12, limit=200)
        return val

    def abs_tail(self, y: float) -> float:
        """P(|J| > y)."""
        if y < 0:
            return 1.0
        return 1.0 - self.cdf(y) + self.cdf(-y) - self.atom(-y)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.quantile(rng.uniform(size=n)), dtype=float)


@dataclass(frozen=True)
class NormalJumps(JumpDistribution):
    mu: float = 0.0
    sigma: float = 1.0
    name = "normal"

    def quantile(self, u):
        if np.isscalar(u):
            return self.mu + self.sigma * norm_quantile(float(u))
        flat = np.asarray(u, dtype=float).ravel()
        out = np.array([norm_quantile(v) for v in flat]).reshape(np.shape(u))
        return self.mu + self.sigma * out

    def cdf(self, x):
        return norm_cdf((x - self.mu) / self.sigma)

    def moment(self, p):
        m, s = self.mu, self.sigma
        if p == 1:
            return m
        if p == 2:
            return m * m + s * s
        if p == 3:
            return m ** 3 + 3 * m * s * s
        if p == 4:
            return m ** 4 + 6 * m * m * s * s + 3 * s ** 4
        return super().moment(p)


@dataclass(frozen=True)
class ExponentialJumps(JumpDistribution):
    """Positive jumps, mean `scale`."""

    scale: float = 1.0
    name = "exponential"

    def quantile(self, u):
        if np.isscalar(u):
            return -self.scale * math.log1p(-u)
        return -self.scale * np.log1p(-np.asarray(u, dtype=float))

    def cdf(self, x):
        return 0.0 if x <= 0 else 1.0 - math.exp(-x / self.scale)

    def moment(self, p):
        return math.factorial(p) * self.scale ** p


@dataclass(frozen=True)
class UniformJumps(JumpDistribution):
    lo: float = 0.0
    hi: float = 1.0
    name = "uniform"

    def quantile(self, u):
        if np.isscalar(u):
            return self.lo + (self.hi - self.lo) * u
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    def cdf(self, x):
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        return (x - self.lo) / (self.hi - self.lo)

    def moment(self, p):
        a, b = self.lo, self.hi
        return (b ** (p + 1) - a ** (p + 1)) / ((p + 1) * (b - a))


@dataclass(frozen=True)
class ConstantJumps(JumpDistribution):
    """All jumps equal `value`; produces genuine increment ties."""

    value: float = 1.0
    name = "constant"

    def quantile(self, u):
        if np.isscalar(u):
            return self.value
        return np.full(np.shape(u), self.value)

    def cdf(self, x):
        return 1.0 if x >= self.value else 0.0

    def atom(self, x):
        return 1.0 if x == self.value else 0.0

    def moment(self, p):
        return self.value ** p

    def abs_tail(self, y):
        return 1.0 if abs(self.value) > y else 0.0


class TruncatedJumps(JumpDistribution):
    """Base law conditioned on lo < |J| <= hi (atomless base, or a constant
    base whose atom lies inside the band)."""

    name = "truncated"

    def __init__(self, base: JumpDistribution, lo: float, hi: float):
        self.base = base
        self.lo = lo
        self.hi = hi
        if isinstance(base, ConstantJumps):
            self._const_inside = lo < abs(base.value) <= hi
            self._mass_neg = 1.0 if (self._const_inside and base.value < 0) else 0.0
            self._mass_pos = 1.0 if (self._const_inside and base.value > 0) else 0.0
        else:
            self._const_inside = None
            hi_cdf = base.cdf(hi) if math.isfinite(hi) else 1.0
            lo_cdf = base.cdf(-hi) if math.isfinite(hi) else 0.0
            self._mass_neg = max(base.cdf(-lo) - lo_cdf, 0.0)
            self._mass_pos = max(hi_cdf - base.cdf(lo), 0.0)

    @property
    def band_mass(self) -> float:
        """P(lo < |J| <= hi) under the base law."""
        return self._mass_neg + self._mass_pos

    def quantile(self, u):
        if self._const_inside is not None:
            if not self._const_inside:
                raise ValueError("constant jump lies outside the band")
            return self.base.quantile(u)
        if np.isscalar(u):
            return self._quantile_scalar(float(u))
        return np.array([self._quantile_scalar(float(v)) for v in np.ravel(u)])

    def _quantile_scalar(self, u: float) -> float:
        mass = self.band_mass
        if mass <= 0:
            raise ValueError("band has zero mass")
        t = u * mass
        if t < self._mass_neg:
            base_lo = self.base.cdf(-self.hi) if math.isfinite(self.hi) else 0.0
            return float(self.base.quantile(base_lo + t))
        t -= self._mass_neg
        return float(self.base.quantile(self.base.cdf(self.lo) + t))

    def cdf(self, x):
        mass = self.band_mass
        if mass <= 0:
            raise ValueError("band has zero mass")
        if self._const_inside is not None:
            return self.base.cdf(x)
        lo, hi = self.lo, self.hi
        lo_cdf = self.base.cdf(-hi) if math.isfinite(hi) else 0.0
        if math.isfinite(hi) and x < -hi:
            return 0.0
        if x <= -lo:
            return (self.base.cdf(x) - lo_cdf) / mass
        if x < lo:
            return self._mass_neg / mass
        upper = self.base.cdf(min(x, hi)) if math.isfinite(hi) else self.base.cdf(x)
        return (self._mass_neg + upper - self.base.cdf(lo)) / mass

    def atom(self, x):
        if self._const_inside:
            return 1.0 if x == self.base.value else 0.0
        return 0.0

    def moment(self, p):
        if self._const_inside is not None:
            return self.base.moment(p) if self._const_inside else 0.0
        mass = self.band_mass
        if mass <= 0:
            return 0.0
        # Integrate the two sides of the band separately; the quantile is
        # smooth on each.
        split = self._mass_neg / mass
        total = 0.0
        for lo, hi in ((0.0, split), (split, 1.0)):
            if hi - lo <= 0:
                continue
            val, _ = integrate.quad(lambda u: self._quantile_scalar(u) ** p,
                                    lo, hi, epsabs=1e-14, epsrel=1e-11, limit=400)
            total += val
        return total


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

class LevyModel:
    """Base class: exact sampling on grids plus jump-measure moments."""

    #: second moment of the standardized jump measure (1 for pure-jump models)
    _std_jump_var = 1.0

    def _skeleton(self, n_cells: int, rng: np.random.Generator):
        """Return (values, n_jumps) on the uniform n_cells grid."""
        raise NotImplementedError

    def sample_skeleton(self, n_cells: int, rng: np.random.Generator) -> np.ndarray:
        """Path values on {0, 1/n, ..., 1}; values[0] = 0, exact in law at
        every grid point."""
        return self._skeleton(n_cells, rng)[0]

    def sample_fine_path(self, q: int, rng: np.random.Generator) -> FinePath:
        if q < 1:
            raise ValueError(f"resolution exponent must be >= 1, got {q}")
        values, n_jumps = self._skeleton(2 ** q, rng)
        return FinePath(q=q, values=values, n_jumps=n_jumps)

    def sample_marginal(self, t: float, rng: np.random.Generator,
                        size: Optional[int] = None):
        """Exact draw(s) of X(t)."""
        raise NotImplementedError

    def sample_endpoint(self, rng: np.random.Generator) -> float:
        return float(self.sample_marginal(1.0, rng))

    def moments(self) -> ModelMoments:
        raise NotImplementedError

    def endpoint_cdf(self):
        """Exact CDF handle for X(1) where available, else None."""
        return None


class BrownianMotion(LevyModel):
    """Standard Brownian motion (no jumps)."""

    _std_jump_var = 0.0

    def _skeleton(self, n_cells, rng):
        dt = 1.0 / n_cells
        incr = rng.standard_normal(n_cells) * math.sqrt(dt)
        values = np.empty(n_cells + 1)
        values[0] = 0.0
        np.cumsum(incr, out=values[1:])
        return values, 0

    def sample_marginal(self, t, rng, size=None):
        if size is None:
            return math.sqrt(t) * float(rng.standard_normal())
        return math.sqrt(t) * rng.standard_normal(size)

    def moments(self):
        return ModelMoments(mu4=0.0, sigma2=0.0, jump_rate=0.0, tail=lambda x: 0.0)

    def endpoint_cdf(self):
        from .coupling import NormalCdf
        return NormalCdf()

    def __repr__(self):
        return "BrownianMotion()"


@dataclass(frozen=True)
class TruncatedStable(LevyModel):
    """Compensated, variance-standardized jumps with density
    c_neg |x|^(-alpha-1) on (-eps_hi, -eps_lo) plus c_pos x^(-alpha-1) on
    (eps_lo, eps_hi): a finite-activity drifted compound Poisson process.
    """

    alpha: float
    c_neg: float
    c_pos: float
    eps_lo: float
    eps_hi: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must be in (0, 2), got {self.alpha}")
        if not 0.0 < self.eps_lo < self.eps_hi:
            raise ValueError("need 0 < eps_lo < eps_hi")
        if self.c_neg < 0 or self.c_pos < 0 or self.c_neg + self.c_pos == 0:
            raise ValueError("side weights must be >= 0 with at least one positive")

    # Raw measure integrals (before standardization) ------------------------

    def _power_integral(self, p: float) -> float:
        """Integral of x^(p - alpha - 1) over (eps_lo, eps_hi), one side."""
        a, lo, hi = self.alpha, self.eps_lo, self.eps_hi
        if abs(p - a) < 1e-14:
            return math.log(hi / lo)
        return (hi ** (p - a) - lo ** (p - a)) / (p - a)

    @property
    def jump_rate(self) -> float:
        return (self.c_neg + self.c_pos) * self._power_integral(0.0)

    @property
    def mean1(self) -> float:
        """Raw drift compensator: integral of x against the jump density."""
        return (self.c_pos - self.c_neg) * self._power_integral(1.0)

    @property
    def sigma2_raw(self) -> float:
        return (self.c_neg + self.c_pos) * self._power_integral(2.0)

    @property
    def mu4_raw(self) -> float:
        return (self.c_neg + self.c_pos) * self._power_integral(4.0)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2_raw)

    def jump_variance_below(self, eps: float) -> float:
        """Raw second moment of the jumps with |x| <= eps."""
        hi = min(eps, self.eps_hi)
        if hi <= self.eps_lo:
            return 0.0
        sub = TruncatedStable(self.alpha, self.c_neg, self.c_pos, self.eps_lo, hi)
        return sub.sigma2_raw

    def magnitude_quantile(self, u):
        """Inverse CDF of the jump magnitude (truncated Pareto)."""
        a, lo, hi = self.alpha, self.eps_lo, self.eps_hi
        return (lo ** -a - np.asarray(u) * (lo ** -a - hi ** -a)) ** (-1.0 / a)

    # Sampling ---------------------------------------------------------------

    def _signed_sizes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        p_pos = self.c_pos / (self.c_pos + self.c_neg)
        signs = np.where(rng.uniform(size=n) < p_pos, 1.0, -1.0)
        return signs * self.magnitude_quantile(rng.uniform(size=n))

    def _skeleton(self, n_cells, rng):
        rate = self.jump_rate
        if rate > MAX_EXPECTED_JUMPS:
            raise NumericalGuardError(
                f"expected jump count {rate:.3g} exceeds guard {MAX_EXPECTED_JUMPS:.3g}")
        n = int(rng.poisson(rate))
        times = np.sort(rng.uniform(size=n))
        sizes = self._signed_sizes(n, rng)
        cum = np.concatenate([[0.0], np.cumsum(sizes)])
        t = np.arange(n_cells + 1) / n_cells
        idx = np.searchsorted(times, t, side="right")
        return (cum[idx] - t * self.mean1) / self.sigma, n

    def sample_marginal(self, t, rng, size=None):
        scalar = size is None
        m = 1 if scalar else size
        if self.jump_rate * t > MAX_EXPECTED_JUMPS:
            raise NumericalGuardError("jump rate guard tripped")
        sums = _chunked_poisson_sums(self.jump_rate * t, m, self._signed_sizes, rng)
        out = (sums - t * self.mean1) / self.sigma
        return float(out[0]) if scalar else out

    def moments(self):
        sig2 = self.sigma2_raw
        mu4 = self.mu4_raw / (sig2 * sig2)
        rate = self.jump_rate
        c_sum = self.c_neg + self.c_pos
        a, lo, hi, sig = self.alpha, self.eps_lo, self.eps_hi, self.sigma

        def tail(x: float) -> float:
            y = x * sig  # standardized magnitude back to raw scale
            if y >= hi:
                return 0.0
            y = max(y, lo)
            return c_sum * (y ** -a - hi ** -a) / a

        return ModelMoments(mu4=mu4, sigma2=sig2, jump_rate=rate, tail=tail)


@dataclass(frozen=True)
class CompoundPoissonDrift(LevyModel):
    """Compound Poisson process, optionally compensated and rescaled to
    unit variance at t = 1."""

    rate: float
    jumps: JumpDistribution
    standardize: bool = True

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be >= 0")

    @property
    def sigma2_raw(self) -> float:
        return self.rate * self.jumps.moment(2)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2_raw)

    @property
    def mean1(self) -> float:
        return self.rate * self.jumps.moment(1)

    def jump_variance_below(self, eps: float) -> float:
        band = TruncatedJumps(self.jumps, 0.0, eps)
        if band.band_mass <= 0:
            return 0.0
        return self.rate * band.band_mass * band.moment(2)

    def _skeleton(self, n_cells, rng):
        if self.rate > MAX_EXPECTED_JUMPS:
            raise NumericalGuardError("jump rate guard tripped")
        n = int(rng.poisson(self.rate))
        times = np.sort(rng.uniform(size=n))
        sizes = self.jumps.sample(n, rng)
        cum = np.concatenate([[0.0], np.cumsum(sizes)])
        t = np.arange(n_cells + 1) / n_cells
        idx = np.searchsorted(times, t, side="right")
        raw = cum[idx]
        if not self.standardize:
            return raw, n
        if self.sigma2_raw == 0.0:
            return np.zeros(n_cells + 1), n
        return (raw - t * self.mean1) / self.sigma, n

    def sample_marginal(self, t, rng, size=None):
        scalar = size is None
        m = 1 if scalar else size
        if self.rate * t > MAX_EXPECTED_JUMPS:
            raise NumericalGuardError("jump rate guard tripped")
        sums = _chunked_poisson_sums(self.rate * t, m, self.jumps.sample, rng)
        if self.standardize:
            sums = np.zeros(m) if self.sigma2_raw == 0.0 \
                else (sums - t * self.mean1) / self.sigma
        return float(sums[0]) if scalar else sums

    def moments(self):
        sig2 = self.sigma2_raw
        mu4 = 0.0 if sig2 == 0 else self.rate * self.jumps.moment(4) / (sig2 * sig2)
        scale = self.sigma if self.standardize and sig2 > 0 else 1.0
        rate = self.rate
        jumps = self.jumps

        def tail(x: float) -> float:
            return rate * jumps.abs_tail(x * scale)

        return ModelMoments(mu4=mu4, sigma2=sig2, jump_rate=rate, tail=tail)


@dataclass(frozen=True)
class GammaMartingale(LevyModel):
    """Gamma subordinator minus its mean, rescaled to unit variance.

    Sampled at grid points via independent gamma increments; no jump-level
    decomposition.
    """

    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValueError("shape and rate must be positive")

    def _skeleton(self, n_cells, rng):
        a, b = self.shape, self.rate
        dt = 1.0 / n_cells
        incr = rng.gamma(a * dt, 1.0 / b, size=n_cells)
        values = np.empty(n_cells + 1)
        values[0] = 0.0
        np.cumsum(incr, out=values[1:])
        t = np.arange(n_cells + 1) / n_cells
        return (values - t * a / b) * (b / math.sqrt(a)), 0

    def sample_marginal(self, t, rng, size=None):
        a, b = self.shape, self.rate
        g = rng.gamma(a * t, 1.0 / b) if size is None else rng.gamma(a * t, 1.0 / b, size=size)
        out = (g - t * a / b) * (b / math.sqrt(a))
        return float(out) if size is None else out

    def moments(self):
        a, b = self.shape, self.rate
        # Jump measure a x^-1 e^(-bx) dx: second moment a/b^2, fourth 6a/b^4.
        mu4 = 6.0 / a
        sqrt_a = math.sqrt(a)

        def tail(x: float) -> float:
            if x <= 0:
                return math.inf
            return a * float(exp1(sqrt_a * x))

        return ModelMoments(mu4=mu4, sigma2=a / b ** 2, jump_rate=math.inf, tail=tail)

    def endpoint_cdf(self):
        from .coupling import GammaMartingaleCdf
        return GammaMartingaleCdf(self.shape)


@dataclass(frozen=True)
class PerturbedBM(LevyModel):
    """sqrt(1 - eps^2) * B + eps * Y for an independent standardized Y."""

    eps: float
    inner: LevyModel

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError("eps must be in (0, 1]")

    def _skeleton(self, n_cells, rng):
        y, n_jumps = self.inner._skeleton(n_cells, rng)
        dt = 1.0 / n_cells
        bm = np.empty(n_cells + 1)
        bm[0] = 0.0
        np.cumsum(rng.standard_normal(n_cells) * math.sqrt(dt), out=bm[1:])
        return math.sqrt(1.0 - self.eps ** 2) * bm + self.eps * y, n_jumps

    def sample_marginal(self, t, rng, size=None):
        y = self.inner.sample_marginal(t, rng, size=size)
        z = rng.standard_normal() if size is None else rng.standard_normal(size)
        out = math.sqrt(1.0 - self.eps ** 2) * math.sqrt(t) * z + self.eps * y
        return float(out) if size is None else out

    @property
    def _std_jump_var(self):
        return self.eps ** 2 * self.inner._std_jump_var

    def moments(self):
        inner_m = self.inner.moments()
        e = self.eps
        inner_tail = inner_m.tail

        def tail(x: float) -> float:
            return inner_tail(x / e)

        return ModelMoments(mu4=e ** 4 * inner_m.mu4,
                            sigma2=e ** 2 * self.inner._std_jump_var,
                            jump_rate=inner_m.jump_rate, tail=tail)


class SmallJumpAnnulus(LevyModel):
    """Standardized martingale of the base model's jumps with magnitude in
    (eps_lo, eps_hi].  Degenerate (identically zero) if the band carries no
    mass."""

    def __init__(self, base: LevyModel, eps_lo: float, eps_hi: float):
        if eps_lo < 0 or eps_hi <= eps_lo:
            raise ValueError("need 0 <= eps_lo < eps_hi")
        self.base = base
        self.eps_lo = eps_lo
        self.eps_hi = eps_hi
        self._inner, self._raw_sigma = self._restrict(base, eps_lo, eps_hi)

    @staticmethod
    def _restrict(base, lo, hi):
        if isinstance(base, TruncatedStable):
            lo_eff = max(lo, base.eps_lo)
            hi_eff = min(hi, base.eps_hi)
            if lo_eff >= hi_eff:
                return None, 0.0
            inner = TruncatedStable(base.alpha, base.c_neg, base.c_pos, lo_eff, hi_eff)
            return inner, inner.sigma
        if isinstance(base, CompoundPoissonDrift):
            band = TruncatedJumps(base.jumps, lo, hi)
            if band.band_mass <= 0:
                return None, 0.0
            inner = CompoundPoissonDrift(rate=base.rate * band.band_mass,
                                         jumps=band, standardize=True)
            if inner.sigma2_raw <= 0:
                return None, 0.0
            return inner, inner.sigma
        if isinstance(base, BrownianMotion):
            return None, 0.0
        raise ValueError(f"annulus restriction not supported for {type(base).__name__}")

    @property
    def degenerate(self) -> bool:
        return self._inner is None

    @property
    def raw_sigma(self) -> float:
        """Std dev of the band's jump martingale in the base's natural units."""
        return self._raw_sigma

    def _skeleton(self, n_cells, rng):
        if self.degenerate:
            return np.zeros(n_cells + 1), 0
        return self._inner._skeleton(n_cells, rng)

    def sample_marginal(self, t, rng, size=None):
        if self.degenerate:
            return 0.0 if size is None else np.zeros(size)
        return self._inner.sample_marginal(t, rng, size=size)

    def moments(self):
        if self.degenerate:
            return ModelMoments(mu4=0.0, sigma2=0.0, jump_rate=0.0, tail=lambda x: 0.0)
        return self._inner.moments()

    def __repr__(self):
        return f"SmallJumpAnnulus({self.base!r}, {self.eps_lo}, {self.eps_hi})"


class WithBrownianJitter(LevyModel):
    """Base model plus a negligible independent Brownian component.

    Breaks undetected numerical increment ties in drifted compound Poisson
    paths; the added variance (default 1e-12) is far below statistical
    resolution and is not folded into the reported moments.
    """

    def __init__(self, base: LevyModel, variance: float = 1e-12):
        if variance <= 0:
            raise ValueError("variance must be positive")
        self.base = base
        self.noise_std = math.sqrt(variance)

    def _skeleton(self, n_cells, rng):
        values, n_jumps = self.base._skeleton(n_cells, rng)
        dt = 1.0 / n_cells
        noise = np.empty(n_cells + 1)
        noise[0] = 0.0
        np.cumsum(rng.standard_normal(n_cells) * math.sqrt(dt), out=noise[1:])
        return values + self.noise_std * noise, n_jumps

    def sample_marginal(self, t, rng, size=None):
        x = self.base.sample_marginal(t, rng, size=size)
        z = rng.standard_normal() if size is None else rng.standard_normal(size)
        out = x + self.noise_std * math.sqrt(t) * z
        return float(out) if size is None else out

    def moments(self):
        return self.base.moments()

    def __repr__(self):
        return f"WithBrownianJitter({self.base!r}, variance={self.noise_std ** 2:g})"


# ---------------------------------------------------------------------------
# Named presets
# ---------------------------------------------------------------------------

#: Truncated-stable parameters shared by the experiment presets.
STABLE_ALPHA = 1.5
STABLE_C_NEG = 0.4
STABLE_C_POS = 0.6


def stable_preset(eps1: float, eps2: float) -> TruncatedStable:
    """Truncated 1.5-stable preset; eps1 is the outer, eps2 the inner cutoff."""
    return TruncatedStable(STABLE_ALPHA, STABLE_C_NEG, STABLE_C_POS, eps2, eps1)


def annulus_preset(n: int) -> TruncatedStable:
    """Standardized jump martingale for the band (2^-(n+1), 2^-n]."""
    return stable_preset(2.0 ** -n, 2.0 ** -(n + 1))


def mlmc_base_preset(eps_floor: float = 2.0 ** -16) -> TruncatedStable:
    """Stable-density base whose levels the MLMC driver decomposes."""
    return TruncatedStable(STABLE_ALPHA, STABLE_C_NEG, STABLE_C_POS, eps_floor, 1.0)


def parse_model_spec(spec: str) -> LevyModel:
    """Parse CLI model names like 'exp-stable(0.1,0.03)' or 'fig1-gamma'."""
    spec = spec.strip()
    name, args = spec, []
    if "(" in spec:
        if not spec.endswith(")"):
            raise ValueError(f"malformed model spec: {spec!r}")
        name, inside = spec[:-1].split("(", 1)
        args = [float(a) for a in inside.split(",") if a.strip()]
    name = name.strip().lower()
    if name == "exp-stable":
        if len(args) != 2:
            raise ValueError("exp-stable needs (eps_hi, eps_lo)")
        return stable_preset(max(args), min(args))
    if name == "annulus":
        if len(args) != 1:
            raise ValueError("annulus needs (n)")
        return annulus_preset(int(args[0]))
    if name == "perturbed":
        if len(args) != 1:
            raise ValueError("perturbed needs (eps)")
        return PerturbedBM(args[0], stable_preset(0.1, 0.03))
    if name == "fig1-gamma":
        shape = args[0] if args else 1.0
        rate = args[1] if len(args) > 1 else 1.0
        return GammaMartingale(shape, rate)
    if name in ("bm", "brownian"):
        return BrownianMotion()
    if name == "stable-base":
        return mlmc_base_preset(args[0]) if args else mlmc_base_preset()
    raise ValueError(f"unknown model preset: {spec!r}")
