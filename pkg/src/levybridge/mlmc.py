"""Multilevel Monte Carlo driver built on the reordering coupling.

A level-n approximation of the base process keeps the jumps above 2^-n
and replaces the remaining small-jump martingale by a Brownian motion of
matching variance.  Consecutive approximations share every component
except the annulus martingale of jumps in (2^-(n+1), 2^-n], which the
fine path keeps and the coarse path replaces by a scaled Brownian motion:
either independent, or coupled to the annulus martingale by increment
reordering.

Work units: 1 per jump drawn, 1 per fine-grid point of each sampled
process component (four components per coupled pair), and k log2 k per
reordering sort.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coupling import EmpiricalCdf, hierarchical_coupling, recommended_k
from .models import (BrownianMotion, CompoundPoissonDrift, FinePath,
                     LevyModel, SmallJumpAnnulus, TruncatedStable)

MODES = ("independent", "reordering")


def blumenthal_getoor(base: LevyModel) -> float:
    """Small-jump activity index of the supported base models."""
    if isinstance(base, TruncatedStable):
        return base.alpha
    if isinstance(base, (CompoundPoissonDrift, BrownianMotion)):
        return 0.0
    raise ValueError(f"no activity index for {type(base).__name__}")


@dataclass(frozen=True)
class Functional:
    """Path functional, Lipschitz in supremum norm with the given constant."""

    kind: str
    lipschitz_constant: float = 1.0

    def __post_init__(self):
        if self.kind not in ("terminal", "supremum", "integral"):
            raise ValueError(f"unknown functional kind: {self.kind}")

    def of_values(self, values: np.ndarray, dt: float) -> float:
        if self.kind == "terminal":
            return float(values[-1])
        if self.kind == "supremum":
            return float(np.max(values))
        return float(np.trapezoid(values, dx=dt))

    def __call__(self, path: FinePath) -> float:
        return self.of_values(path.values, 1.0 / path.n_cells)


TERMINAL = Functional("terminal")
SUPREMUM = Functional("supremum")
INTEGRAL = Functional("integral")


@dataclass(frozen=True)
class LevelSpec:
    """Static description of one MLMC level."""

    n: int
    eps: float
    sigma_prime_sq: float
    k_prime: int
    m_n: int
    p: float


@dataclass(frozen=True)
class LevelStats:
    """Sample statistics of the coupled difference at one level.

    var_std_error is the large-sample standard error of var_diff from the
    fourth central moment of the differences.
    """

    mean_diff: float
    var_diff: float
    cost: float
    n_samples: int
    var_std_error: float = 0.0


@dataclass(frozen=True)
class LevelDecomposition:
    """Process components shared by the level-n pair.

    The fine path is sigma_prime * annulus + remainder; the coarse path
    replaces the annulus part with a scaled Brownian motion.  remainder =
    sigma_small * BM + sigma_big * big (jumps above eps_n).

    Both paths are sampled on the m_fine grid; the coarse functional is
    evaluated on the m_n subgrid so level terms telescope across levels.
    """

    spec: LevelSpec
    annulus: SmallJumpAnnulus
    sigma_small: float
    big: SmallJumpAnnulus
    sigma_big: float
    m_fine: int

    @property
    def degenerate(self) -> bool:
        return self.annulus.degenerate or self.spec.sigma_prime_sq <= 0.0

    @property
    def sigma_prime(self) -> float:
        return math.sqrt(self.spec.sigma_prime_sq)


def _grid_cells(eps: float, p: float) -> int:
    """ceil(eps^-p) rounded up to a power of two, at least 2."""
    target = math.ceil(eps ** -p) if p > 0 else 1
    return 2 ** max(1, math.ceil(math.log2(max(target, 2))))


def decompose_level(base: LevyModel, n: int, p: Optional[float] = None
                    ) -> LevelDecomposition:
    """Split the base process at truncation levels (2^-(n+1), 2^-n].

    sigma_prime_sq is computed analytically from the base jump measure.
    k_prime follows the fourth-moment rule applied to the standardized
    annulus martingale, capped to divide the fine grid; degenerate levels
    (no jumps in the band) get k_prime = 1.
    """
    eps_n = 2.0 ** -n
    eps_next = 2.0 ** -(n + 1)
    if p is None:
        p = blumenthal_getoor(base)
    annulus = SmallJumpAnnulus(base, eps_next, eps_n)
    sigma_prime_sq = annulus.raw_sigma ** 2
    jump_var_below = getattr(base, "jump_variance_below", None)
    sigma_small_sq = jump_var_below(eps_next) if jump_var_below else 0.0
    big = SmallJumpAnnulus(base, eps_n, math.inf)
    m_n = _grid_cells(eps_n, p)
    m_fine = max(_grid_cells(eps_next, p), m_n)

    k_prime = 1
    if not annulus.degenerate:
        mu4 = annulus.moments().mu4
        if 0.0 < mu4 < 1.0:
            k_prime = min(recommended_k(mu4).k, m_fine)

    spec = LevelSpec(n=n, eps=eps_n, sigma_prime_sq=sigma_prime_sq,
                     k_prime=k_prime, m_n=m_n, p=p)
    return LevelDecomposition(spec=spec, annulus=annulus,
                              sigma_small=math.sqrt(max(sigma_small_sq, 0.0)),
                              big=big, sigma_big=big.raw_sigma, m_fine=m_fine)


def _brownian(m: int, rng: np.random.Generator) -> np.ndarray:
    vals = np.empty(m + 1)
    vals[0] = 0.0
    np.cumsum(rng.standard_normal(m) * math.sqrt(1.0 / m), out=vals[1:])
    return vals


def _remainder(decomp: LevelDecomposition, m: int, rng: np.random.Generator):
    """Shared remainder path values and the jumps drawn for it."""
    q = int(math.log2(m))
    vals = np.zeros(m + 1)
    n_jumps = 0
    if decomp.sigma_small > 0:
        vals += decomp.sigma_small * _brownian(m, rng)
    if not decomp.big.degenerate:
        big_path = decomp.big.sample_fine_path(q, rng)
        vals += decomp.sigma_big * big_path.values
        n_jumps = big_path.n_jumps
    return vals, n_jumps


def sample_coupled_pair(decomp: LevelDecomposition, mode: str, g: Functional,
                        rng: np.random.Generator, endpoint_cdf=None):
    """One draw of (g(fine), g(coarse), cost) for the level pair.

    In reordering mode the coarse Brownian stand-in is coupled to the
    standardized annulus martingale with k_prime increments and the given
    endpoint CDF; in independent mode it is a fresh Brownian motion.
    Degenerate levels return identical values.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    spec = decomp.spec
    m = decomp.m_fine
    q = int(math.log2(m))
    dt = 1.0 / m
    step = m // spec.m_n
    dt_coarse = 1.0 / spec.m_n

    if decomp.degenerate:
        r_vals, n_jumps = _remainder(decomp, m, rng)
        g_fine = g.of_values(r_vals, dt)
        g_coarse = g.of_values(r_vals[::step], dt_coarse)
        return g_fine, g_coarse, float(n_jumps + 2 * (m + 1))

    sort_cost = spec.k_prime * math.log2(spec.k_prime) if spec.k_prime > 1 else 0.0
    if mode == "reordering":
        pair = hierarchical_coupling(decomp.annulus, [spec.k_prime], q,
                                     endpoint_cdf, rng)
        x_prime, w = pair.x, pair.w
    else:
        x_prime = decomp.annulus.sample_fine_path(q, rng)
        w = FinePath(q=q, values=_brownian(m, rng))
        sort_cost = 0.0

    r_vals, big_jumps = _remainder(decomp, m, rng)
    sp = decomp.sigma_prime
    g_fine = g.of_values(sp * x_prime.values + r_vals, dt)
    coarse_vals = (sp * w.values + r_vals)[::step]
    g_coarse = g.of_values(coarse_vals, dt_coarse)
    cost = x_prime.n_jumps + big_jumps + 4.0 * (m + 1) + sort_cost
    return g_fine, g_coarse, cost


def estimate_level_stats(decomp: LevelDecomposition, mode: str, g: Functional,
                         n_samples: int, rng: np.random.Generator,
                         endpoint_samples: int = 30000) -> LevelStats:
    """Sample mean/variance of the coupled difference and its average cost.

    The annulus endpoint CDF is drawn once and cached for all samples.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    fx = None
    if mode == "reordering" and not decomp.degenerate:
        fx = EmpiricalCdf.from_model(decomp.annulus, endpoint_samples, rng)
    diffs = np.empty(n_samples)
    costs = np.empty(n_samples)
    for i, stream in enumerate(rng.spawn(n_samples)):
        g_fine, g_coarse, cost = sample_coupled_pair(decomp, mode, g, stream, fx)
        diffs[i] = g_fine - g_coarse
        costs[i] = cost
    mean = math.fsum(diffs) / n_samples
    var = math.fsum((d - mean) ** 2 for d in diffs) / (n_samples - 1)
    m4 = math.fsum((d - mean) ** 4 for d in diffs) / n_samples
    var_se = math.sqrt(max(m4 - var * var, 0.0) / n_samples)
    return LevelStats(mean_diff=mean, var_diff=var,
                      cost=math.fsum(costs) / n_samples, n_samples=n_samples,
                      var_std_error=var_se)


def sample_single_approximation(base: LevyModel, n: int, p: float,
                                g: Functional, rng: np.random.Generator):
    """One draw of g(X_n) where X_n keeps jumps above 2^-n and replaces the
    rest by a matched-variance Brownian motion."""
    eps_n = 2.0 ** -n
    jump_var_below = getattr(base, "jump_variance_below", None)
    sigma_n = math.sqrt(jump_var_below(eps_n)) if jump_var_below else 0.0
    big = SmallJumpAnnulus(base, eps_n, math.inf)
    m = _grid_cells(eps_n, p)
    q = int(math.log2(m))
    vals = np.zeros(m + 1)
    n_jumps = 0
    if sigma_n > 0:
        vals += sigma_n * _brownian(m, rng)
    if not big.degenerate:
        path = big.sample_fine_path(q, rng)
        vals += big.raw_sigma * path.values
        n_jumps = path.n_jumps
    return g.of_values(vals, 1.0 / m), float(n_jumps + 2 * (m + 1))


# ---------------------------------------------------------------------------
# Full driver
# ---------------------------------------------------------------------------

class _Accumulator:
    """Streaming mean/variance/cost for one level term."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.cost_total = 0.0

    def add(self, values: np.ndarray, costs: np.ndarray):
        nb = len(values)
        if nb == 0:
            return
        mb = math.fsum(values) / nb
        m2b = math.fsum((v - mb) ** 2 for v in values)
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mb, m2b
        else:
            na, ma = self.n, self.mean
            delta = mb - ma
            n = na + nb
            self.mean = (na * ma + nb * mb) / n
            self.m2 = self.m2 + m2b + delta * delta * na * nb / n
            self.n = n
        self.cost_total += math.fsum(costs)

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def mean_cost(self) -> float:
        return self.cost_total / self.n if self.n else 0.0


@dataclass
class MlmcResult:
    """Outcome of an MLMC run with its per-level table.

    total_cost tallies the per-sample path work (jumps + grid points +
    sorts).  endpoint_cache_cost is the one-time expected work of drawing
    the cached endpoint samples behind each level's comonotone coupler; it
    is reported separately because it amortizes across all samples of the
    run.
    """

    estimate: float
    std_error: float
    levels: list
    total_cost: float
    bias_converged: bool
    mode: str
    delta: float
    endpoint_cache_cost: float = 0.0


#: Columns of the per-level table (and of the emitted CSV).
LEVEL_COLUMNS = ("level", "eps", "k_prime", "m_n", "mean_diff", "var_diff",
                 "cost", "n_samples")


def mlmc_run(base: LevyModel, g: Functional, mode: str, delta: float,
             max_level: int, rng: np.random.Generator,
             start_level: int = 0, pilot: int = 100,
             p: Optional[float] = None, endpoint_samples: int = 30000,
             max_samples_per_level: int = 2_000_000) -> MlmcResult:
    """MLMC estimate of E g(X) with target RMS error delta.

    Pilot samples seed each level; samples are then allocated
    proportionally to sqrt(V/C) against a delta^2/2 variance budget, and
    levels are appended until the geometric bias proxy drops below
    delta/sqrt(2) or max_level is reached (reported via bias_converged,
    not fatal).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if p is None:
        p = blumenthal_getoor(base)

    decomps: dict[int, LevelDecomposition] = {}
    endpoints: dict[int, Optional[EmpiricalCdf]] = {}
    accs: dict[int, _Accumulator] = {}
    cache_cost = 0.0

    def ensure_level(j: int):
        nonlocal cache_cost
        if j in accs:
            return
        accs[j] = _Accumulator()
        if j > 0:
            decomp = decompose_level(base, start_level + j - 1, p)
            decomps[j] = decomp
            fx = None
            if mode == "reordering" and not decomp.degenerate:
                fx = EmpiricalCdf.from_model(decomp.annulus, endpoint_samples, rng)
                cache_cost += endpoint_samples * (
                    1.0 + decomp.annulus.moments().jump_rate)
            endpoints[j] = fx

    def draw(j: int, count: int):
        count = min(count, max_samples_per_level - accs[j].n)
        if count <= 0:
            return
        vals = np.empty(count)
        costs = np.empty(count)
        if j == 0:
            for i, stream in enumerate(rng.spawn(count)):
                vals[i], costs[i] = sample_single_approximation(
                    base, start_level, p, g, stream)
        else:
            decomp, fx = decomps[j], endpoints[j]
            for i, stream in enumerate(rng.spawn(count)):
                g_fine, g_coarse, cost = sample_coupled_pair(decomp, mode, g,
                                                             stream, fx)
                vals[i] = g_fine - g_coarse
                costs[i] = cost
        accs[j].add(vals, costs)

    for j in (0, 1):
        ensure_level(j)
        draw(j, pilot)
    top = 1

    bias_converged = False
    while True:
        # Optimal allocation against the delta^2 / 2 variance budget.
        for _ in range(32):
            weights = {j: math.sqrt(max(accs[j].variance, 0.0) * accs[j].mean_cost)
                       for j in accs}
            budget_sum = sum(weights.values())
            needed = False
            for j in accs:
                v, c = accs[j].variance, accs[j].mean_cost
                if v <= 0 or c <= 0:
                    continue
                n_opt = math.ceil(2.0 / delta ** 2 * math.sqrt(v / c) * budget_sum)
                if n_opt > accs[j].n:
                    needed = True
                    draw(j, n_opt - accs[j].n)
            if not needed:
                break

        # Geometric extrapolation of the remaining bias.
        diff_means = [(j, accs[j].mean) for j in sorted(accs) if j >= 1]
        tail = diff_means[-3:]
        if len(tail) >= 2:
            ys = [math.log2(max(abs(m), 1e-300)) for _, m in tail]
            xs = [j for j, _ in tail]
            slope = np.polyfit(xs, ys, 1)[0]
            alpha_hat = max(-slope, 0.3)
        else:
            alpha_hat = 1.0
        last_mean = abs(diff_means[-1][1])
        bias = last_mean / (2.0 ** alpha_hat - 1.0)
        if bias <= delta / math.sqrt(2.0):
            bias_converged = True
            break
        if start_level + top - 1 >= max_level:
            break
        top += 1
        ensure_level(top)
        draw(top, pilot)

    estimate = math.fsum(accs[j].mean for j in sorted(accs))
    var_est = math.fsum(accs[j].variance / accs[j].n for j in accs if accs[j].n)
    total_cost = math.fsum(accs[j].cost_total for j in accs)

    rows = []
    for j in sorted(accs):
        acc = accs[j]
        if j == 0:
            eps = 2.0 ** -start_level
            k_prime, m_n = 0, _grid_cells(eps, p)
            level = start_level
        else:
            spec = decomps[j].spec
            eps, k_prime, m_n, level = spec.eps, spec.k_prime, spec.m_n, spec.n
        rows.append({"level": level, "eps": eps, "k_prime": k_prime, "m_n": m_n,
                     "mean_diff": acc.mean, "var_diff": acc.variance,
                     "cost": acc.mean_cost, "n_samples": acc.n})

    return MlmcResult(estimate=estimate, std_error=math.sqrt(var_est),
                      levels=rows, total_cost=total_cost,
                      bias_converged=bias_converged, mode=mode, delta=delta,
                      endpoint_cache_cost=cache_cost)
