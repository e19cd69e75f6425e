"""Couplings between Levy paths and Brownian paths.

Construction summary: a reference Brownian motion w' is drawn whose
endpoint is comonotonically coupled to the Levy endpoint and whose bridge
is independent of the Levy path.  Its k grid segments are then translated
so that the ordering of the coupled path's increments matches the ordering
of the Levy increments (ties resolved by auxiliary uniforms).  The
construction can be repeated inside every cell with fresh bridges, giving
a hierarchy of reordering levels.

Floating point discipline: grid anchor values are snapped to a dyadic
lattice (2^-40 at the deepest level) before assembly.  All anchor sums and
differences are then exact, so reordered increment multisets, telescoping
sums, and endpoint pinning hold bit-for-bit.  The snap perturbs paths by
less than 1e-11, far below every statistical tolerance in the suite.

Random stream consumption order per coupling:
(1) the model path, (2) one endpoint uniform, (3) 2^q reference Brownian
increments, (4) k1 tie uniforms, then per deeper level: one block of 2^q
bridge increments (cell-major), then one block of tie uniforms.
Tie uniforms are always consumed, even for models with continuous
increments, so stream alignment never depends on tie occurrence.
"""

from __future__ import annotations

import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammainc

from .models import (FinePath, LevyModel, NumericalGuardError,
                     increments_on_grid)
from .normal import PROB_CLAMP, norm_cdf, norm_quantile

logger = logging.getLogger(__name__)

#: Deepest-level lattice resolution; anchors are multiples of 2^-LATTICE_BITS.
LATTICE_BITS = 40
#: Anchor values must stay below this for lattice arithmetic to be exact.
ANCHOR_LIMIT = 64.0
#: Scale of the strictly-monotone rank tiebreak added to comonotone increments.
LEX_EPS = 2.0 ** -40


# ---------------------------------------------------------------------------
# Endpoint distribution handles
# ---------------------------------------------------------------------------

class EmpiricalCdf:
    """Sorted sample set with left-limit CDF, atom mass and quantile queries."""

    def __init__(self, samples):
        arr = np.sort(np.asarray(samples, dtype=float))
        if arr.size < 1:
            raise ValueError("need at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        self.sorted_samples = arr
        self.n = arr.size

    @classmethod
    def from_model(cls, model: LevyModel, n: int, rng: np.random.Generator,
                   t: float = 1.0) -> "EmpiricalCdf":
        return cls(model.sample_marginal(t, rng, size=n))

    def cdf_left(self, x: float) -> float:
        """P(sample < x)."""
        return np.searchsorted(self.sorted_samples, x, side="left") / self.n

    def atom(self, x: float) -> float:
        """P(sample = x)."""
        lo = np.searchsorted(self.sorted_samples, x, side="left")
        hi = np.searchsorted(self.sorted_samples, x, side="right")
        return (hi - lo) / self.n

    def quantile(self, u: float) -> float:
        """Smallest sample with rank >= ceil(u * n), for u in (0, 1]."""
        if not 0.0 < u <= 1.0:
            raise ValueError(f"u must be in (0, 1], got {u}")
        idx = max(math.ceil(u * self.n), 1) - 1
        return float(self.sorted_samples[idx])

    def cdf_left_many(self, x: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.sorted_samples, x, side="left") / self.n

    def atom_many(self, x: np.ndarray) -> np.ndarray:
        lo = np.searchsorted(self.sorted_samples, x, side="left")
        hi = np.searchsorted(self.sorted_samples, x, side="right")
        return (hi - lo) / self.n


class NormalCdf:
    """Exact centered normal CDF handle (continuous, no atoms)."""

    def __init__(self, scale: float = 1.0):
        self.scale = scale

    def cdf_left(self, x: float) -> float:
        return norm_cdf(x / self.scale)

    def atom(self, x: float) -> float:
        return 0.0

    def cdf_left_many(self, x):
        return np.array([norm_cdf(v / self.scale) for v in np.asarray(x, dtype=float)])

    def atom_many(self, x):
        return np.zeros(np.shape(x))


class GammaMartingaleCdf:
    """Exact CDF of the standardized gamma martingale at t = 1."""

    def __init__(self, shape: float):
        if shape <= 0:
            raise ValueError("shape must be positive")
        self.shape = shape

    def cdf_left(self, x: float) -> float:
        arg = self.shape + math.sqrt(self.shape) * x
        if arg <= 0.0:
            return 0.0
        return float(gammainc(self.shape, arg))

    def atom(self, x: float) -> float:
        return 0.0


def endpoint_comonotone(x1: float, fx, u: float) -> float:
    """Comonotone map of a Levy endpoint into a standard normal value.

    Returns the normal quantile of cdf_left(x1) + u * atom(x1); the
    probability is clamped to [1e-12, 1 - 1e-12] before inversion.
    """
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must be in (0, 1), got {u}")
    p = fx.cdf_left(x1) + u * fx.atom(x1)
    p = min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)
    return norm_quantile(p)


# ---------------------------------------------------------------------------
# Rank-matching permutations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Permutation:
    """Bijection on {0, ..., k-1} stored as the array pi."""

    pi: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pi, dtype=np.intp)
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ValueError("pi is not a bijection")
        object.__setattr__(self, "pi", arr)

    @property
    def k(self) -> int:
        return self.pi.size


def _row_rank_permutations(dx: np.ndarray, ties: np.ndarray,
                           dw: np.ndarray) -> np.ndarray:
    """Row-wise rank-matching permutations for stacked instances.

    Row r gets pi with: the rank of dw[r, pi[i]] among dw[r] equals the
    rank of (dx[r, i], ties[r, i]) in lexicographic order.
    """
    rows, k = dx.shape
    row_key = np.repeat(np.arange(rows), k)
    order = np.lexsort((ties.ravel(), dx.ravel(), row_key))
    order = order.reshape(rows, k) - (np.arange(rows) * k)[:, None]
    ranks = np.empty((rows, k), dtype=np.intp)
    np.put_along_axis(ranks, order, np.broadcast_to(np.arange(k), (rows, k)), axis=1)
    sorter = np.argsort(dw, axis=1, kind="stable")
    sorted_dw = np.take_along_axis(dw, sorter, axis=1)
    if k > 1 and np.any(sorted_dw[:, 1:] == sorted_dw[:, :-1]):
        logger.warning("tied Brownian increments detected; breaking ties by index")
    return np.take_along_axis(sorter, ranks, axis=1)


def rank_permutation(dx, ties, dw) -> Permutation:
    """Permutation matching Brownian increment ranks to Levy increment ranks.

    Sorting keys are (dx[i], ties[i]) lexicographically; dw is assumed to
    have distinct entries (almost sure for Gaussian increments); exact ties
    in dw are broken by index and logged.
    """
    dx = np.asarray(dx, dtype=float)
    ties_arr = np.asarray(ties, dtype=float)
    dw = np.asarray(dw, dtype=float)
    if not dx.shape == ties_arr.shape == dw.shape or dx.ndim != 1:
        raise ValueError("dx, ties, dw must be 1-D arrays of equal length")
    pi = _row_rank_permutations(dx[None, :], ties_arr[None, :], dw[None, :])[0]
    return Permutation(pi=pi)


def _lex_ranks(dx: np.ndarray, ties: np.ndarray) -> np.ndarray:
    """Rank of each (dx[i], ties[i]) pair in lexicographic order."""
    order = np.lexsort((ties, dx))
    ranks = np.empty(dx.size, dtype=np.intp)
    ranks[order] = np.arange(dx.size)
    return ranks


# ---------------------------------------------------------------------------
# Lattice helpers
# ---------------------------------------------------------------------------

def _snap(values: np.ndarray, bits: int) -> np.ndarray:
    scale = 2.0 ** bits
    out = np.round(np.asarray(values, dtype=float) * scale) / scale
    if np.any(np.abs(out) >= ANCHOR_LIMIT):
        raise NumericalGuardError(
            f"path anchor exceeded {ANCHOR_LIMIT}; lattice arithmetic would lose exactness")
    return out


def _level_bits(ks: Sequence[int]) -> list[int]:
    """Lattice resolution per level: finest (LATTICE_BITS) at the deepest.

    Coarser lattices at outer levels keep the per-level linear shares
    (divisions by the sub-level cell counts) exactly representable.
    """
    bits = [LATTICE_BITS - sum(int(round(math.log2(k))) for k in ks[level + 1:])
            for level in range(len(ks))]
    if bits[0] < 24:
        raise NumericalGuardError("hierarchy too deep for exact lattice arithmetic")
    return bits


def _brownian_values(n_cells: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    values = np.empty(n_cells + 1)
    values[0] = 0.0
    np.cumsum(rng.standard_normal(n_cells) * math.sqrt(dt), out=values[1:])
    return values


# ---------------------------------------------------------------------------
# Coupled path containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoupledPaths:
    """A Levy path with its coupled and reference Brownian paths.

    w's k1-grid increments are a bit-exact permutation of w_prime's, and
    w.values[-1] == endpoint_w1 exactly.  level_increments holds the
    pre-permutation source increments per level: entry 0 is the reference
    path's k1 increments; entry l >= 1 stacks each cell's fresh-bridge
    sub-increments row by row.
    """

    x: FinePath
    w: FinePath
    w_prime: FinePath
    permutations: list[Permutation]
    endpoint_w1: float
    config_ks: tuple[int, ...]
    level_increments: list[np.ndarray] = field(default_factory=list)

    @property
    def q(self) -> int:
        return self.x.q


@dataclass(frozen=True)
class TrivariateCoupling:
    """Shared-randomness triple: Levy path, comonotone-increment Brownian
    path, and reordered Brownian path.

    xi are the comonotone increments that drive w_hat; w_increments are the
    assembled coarse increments of w.  Both use the same Levy increments
    and the same tie uniforms, so their rank vectors agree exactly.
    """

    x: FinePath
    w_hat: FinePath
    w: FinePath
    xi: np.ndarray
    w_increments: np.ndarray
    ties: np.ndarray
    k: int


@dataclass(frozen=True)
class SkeletonCoupling:
    """Grid-only coupling for an arbitrary cell count (no fine structure)."""

    times: np.ndarray
    x: np.ndarray
    w_prime: np.ndarray
    w: np.ndarray
    permutation: Permutation
    endpoint_w1: float


# ---------------------------------------------------------------------------
# Core assembly
# ---------------------------------------------------------------------------

def _rebuild_with_anchors(raw: np.ndarray, anchors: np.ndarray, m: int) -> np.ndarray:
    """Replace the anchor values of `raw` (every m-th point) by `anchors`,
    ramping the in-segment shape so each segment still meets its anchors."""
    n = raw.size - 1
    k = n // m
    idx = np.arange(n + 1)
    j = np.minimum(idx // m, k - 1)
    s = idx - j * m
    d_new = np.diff(anchors)
    d_raw = raw[m::m] - raw[:-1:m]
    out = anchors[j] + (raw[idx] - raw[j * m]) + (s / m) * (d_new[j] - d_raw[j])
    out[::m] = anchors
    return out


def _translate_segments(source: np.ndarray, src_anchors: np.ndarray,
                        dest_anchors: np.ndarray, pi: np.ndarray,
                        m: int) -> np.ndarray:
    """Assemble a path whose segment i is source's segment pi[i] shifted to
    start at dest_anchors[i].  Anchor arithmetic is lattice-exact."""
    k = pi.size
    n = k * m
    idx = np.arange(n + 1)
    j = np.minimum(idx // m, k - 1)
    s = idx - j * m
    src = pi[j] * m + s
    out = dest_anchors[j] + (source[src] - src_anchors[pi[j]])
    out[::m] = dest_anchors
    return out


def _cumsum0_exact(increments: np.ndarray) -> np.ndarray:
    out = np.empty(increments.size + 1)
    out[0] = 0.0
    np.cumsum(increments, out=out[1:])
    if np.any(np.abs(out) >= ANCHOR_LIMIT):
        raise NumericalGuardError("anchor walk left the exact-lattice range")
    return out


def _endpoint_value(x1: float, endpoint, u: float) -> float:
    if endpoint is None:
        p = min(max(u, PROB_CLAMP), 1.0 - PROB_CLAMP)
        return norm_quantile(p)
    return endpoint_comonotone(x1, endpoint, u)


def hierarchical_coupling(model: LevyModel, ks: Sequence[int], q: int,
                          endpoint, rng: np.random.Generator) -> CoupledPaths:
    """Reordering coupling with one reordering level per entry of ks.

    ks[0] cells are coupled by reordering the reference path's segments;
    within each cell, deeper levels replace the bridge by a fresh bridge
    whose ks[level] sub-increments are reordered to match the Levy path's
    sub-increment ranks.  Cell endpoints fixed at a parent level are never
    re-coupled.  endpoint is a CDF handle for X(1) (None couples the
    endpoint independently).
    """
    ks = [int(k) for k in ks]
    if not ks or any(k < 1 for k in ks):
        raise ValueError("ks must be a non-empty list of positive cell counts")
    n = 2 ** q
    prod = math.prod(ks)
    if prod < 1 or n % prod != 0:
        raise ValueError(f"product of ks = {prod} does not divide 2^q = {n}")
    bits = _level_bits(ks)
    dt = 1.0 / n

    x = model.sample_fine_path(q, rng)
    u_end = float(rng.uniform())
    w1_raw = _endpoint_value(x.endpoint, endpoint, u_end)

    # Reference Brownian motion: independent bridge plus the coupled endpoint.
    bm = _brownian_values(n, dt, rng)
    t_frac = np.arange(n + 1) / n
    wp_raw = (bm - t_frac * bm[-1]) + t_frac * w1_raw

    k1 = ks[0]
    m1 = n // k1
    wp_anchors = _snap(wp_raw[::m1], bits[0])
    wp_vals = _rebuild_with_anchors(wp_raw, wp_anchors, m1)
    w1 = float(wp_anchors[-1])

    d = np.diff(wp_anchors)
    dx1 = np.diff(x.values[::m1])
    ties1 = rng.uniform(size=k1)
    perm1 = rank_permutation(dx1, ties1, d)
    w_anchors = _cumsum0_exact(d[perm1.pi])

    drift = w_anchors[-1] - w1
    if abs(drift) >= 1e-9:
        raise NumericalGuardError(f"endpoint drift {drift:.3e} after reordering")

    w_vals = _translate_segments(wp_vals, wp_anchors, w_anchors, perm1.pi, m1)
    permutations = [perm1]
    level_increments = [d]

    # Deeper levels: breadth-first passes replacing in-cell bridges.
    spacing = m1
    for level in range(1, len(ks)):
        k_sub = ks[level]
        cells = n // spacing
        msub = spacing // k_sub
        parent_anchors = w_vals[::spacing]
        targets = np.diff(parent_anchors)

        incr = rng.standard_normal((cells, spacing)) * math.sqrt(dt)
        b = np.concatenate([np.zeros((cells, 1)), np.cumsum(incr, axis=1)], axis=1)
        frac = np.arange(spacing + 1) / spacing
        b0 = b - frac[None, :] * b[:, -1:]

        raw_sub = b0[:, ::msub]
        snapped_sub = _snap(raw_sub, bits[level])
        db = np.diff(snapped_sub, axis=1)
        db_raw = np.diff(raw_sub, axis=1)

        dx_sub = np.diff(x.values[::msub]).reshape(cells, k_sub)
        ties = rng.uniform(size=(cells, k_sub))
        pis = _row_rank_permutations(dx_sub, ties, db)
        permutations.extend(Permutation(pi=p) for p in pis)
        level_increments.append(db)

        db_perm = np.take_along_axis(db, pis, axis=1)
        walk = np.concatenate([np.zeros((cells, 1)), np.cumsum(db_perm, axis=1)], axis=1)
        share = targets / k_sub
        sub_anchors = (parent_anchors[:-1, None] + walk
                       + np.arange(k_sub + 1)[None, :] * share[:, None])
        if np.any(np.abs(sub_anchors) >= ANCHOR_LIMIT):
            raise NumericalGuardError("anchor walk left the exact-lattice range")

        # Rebuild the bridge in-segment shapes against snapped sub-anchors,
        # then translate segment pi[j] into slot j of each cell.  vals[c, j, s]
        # is the fine value at index c * spacing + j * msub + s; s = 0 reduces
        # to the lattice-exact sub-anchor because every other term is 0.0.
        s = np.arange(msub + 1)
        ramp = s / msub
        src = (pis * msub)[:, :, None] + s[None, None, :]
        rows = np.arange(cells)[:, None, None]
        shape = b0[rows, src] - np.take_along_axis(raw_sub, pis, axis=1)[:, :, None]
        correction = (np.take_along_axis(db, pis, axis=1)
                      - np.take_along_axis(db_raw, pis, axis=1))[:, :, None] * ramp
        vals = (sub_anchors[:, :-1, None] + shape + correction
                + share[:, None, None] * ramp)
        w_vals = np.empty(n + 1)
        w_vals[:n] = vals[:, :, :-1].reshape(n)
        w_vals[n] = sub_anchors[-1, -1]
        spacing = msub

    w_vals[-1] = w1
    w = FinePath(q=q, values=w_vals, n_jumps=0)
    w_prime = FinePath(q=q, values=wp_vals, n_jumps=0)
    return CoupledPaths(x=x, w=w, w_prime=w_prime, permutations=permutations,
                        endpoint_w1=w1, config_ks=tuple(ks),
                        level_increments=level_increments)


def reorder_coupling(model: LevyModel, k: int, q: int, endpoint,
                     rng: np.random.Generator) -> CoupledPaths:
    """Single-level reordering coupling (hierarchical_coupling with [k])."""
    return hierarchical_coupling(model, [k], q, endpoint, rng)


def comonotone_increment_coupling(model: LevyModel, k: int, q: int,
                                  cdf_xk, rng: np.random.Generator,
                                  endpoint=None) -> TrivariateCoupling:
    """Trivariate construction on shared randomness.

    The same Levy increments and tie uniforms drive both the reordered
    path w and the comonotone-increment path w_hat, whose increments are
    the 1/k-marginal CDF values of the Levy increments pushed through the
    centered normal quantile.  A rank-proportional offset of size 2^-40
    keeps the increment map strictly monotone in (increment, uniform), so
    the two paths' increment orderings agree exactly; the offset is far
    below every statistical tolerance.
    """
    n = 2 ** q
    if k < 1 or n % k != 0:
        raise ValueError(f"k = {k} does not divide 2^q = {n}")
    m = n // k
    dt = 1.0 / n

    x = model.sample_fine_path(q, rng)
    u_end = float(rng.uniform())
    w1_raw = _endpoint_value(x.endpoint, endpoint, u_end)

    bm = _brownian_values(n, dt, rng)
    t_frac = np.arange(n + 1) / n
    wp_raw = (bm - t_frac * bm[-1]) + t_frac * w1_raw
    wp_anchors = _snap(wp_raw[::m], LATTICE_BITS)
    wp_vals = _rebuild_with_anchors(wp_raw, wp_anchors, m)
    w1 = float(wp_anchors[-1])

    d = np.diff(wp_anchors)
    dx = np.diff(x.values[::m])
    ties = rng.uniform(size=k)
    perm = rank_permutation(dx, ties, d)
    w_anchors = _cumsum0_exact(d[perm.pi])
    w_vals = _translate_segments(wp_vals, wp_anchors, w_anchors, perm.pi, m)
    w_vals[-1] = w1
    w = FinePath(q=q, values=w_vals)

    # Comonotone increments from the shared (dx, ties).
    if hasattr(cdf_xk, "cdf_left_many"):
        probs = cdf_xk.cdf_left_many(dx) + ties * cdf_xk.atom_many(dx)
    else:
        probs = np.array([cdf_xk.cdf_left(v) for v in dx]) \
            + ties * np.array([cdf_xk.atom(v) for v in dx])
    probs = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    sqrt_k = math.sqrt(k)
    xi = np.array([norm_quantile(p) for p in probs]) / sqrt_k
    xi = xi + LEX_EPS * _lex_ranks(dx, ties)

    hat_anchors = _cumsum0_exact(xi)
    bridge_bm = _brownian_values(n, dt, rng)
    idx = np.arange(n + 1)
    j = np.minimum(idx // m, k - 1)
    s = idx - j * m
    cell_start = bridge_bm[j * m]
    cell_incr = bridge_bm[(j + 1) * m] - cell_start
    bridge = (bridge_bm[idx] - cell_start) - (s / m) * cell_incr
    hat_vals = hat_anchors[j] + bridge + (s / m) * xi[j]
    hat_vals[::m] = hat_anchors
    w_hat = FinePath(q=q, values=hat_vals)

    return TrivariateCoupling(x=x, w_hat=w_hat, w=w, xi=xi,
                              w_increments=d[perm.pi], ties=ties, k=k)


def couple_skeletons(model: LevyModel, k: int, rng: np.random.Generator,
                     endpoint=None) -> SkeletonCoupling:
    """Grid-skeleton coupling for an arbitrary cell count k >= 1.

    No fine structure is produced: the Levy skeleton, the reference
    Brownian skeleton and its reordered counterpart are returned on the
    uniform k-cell grid.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x_vals = model.sample_skeleton(k, rng)
    u_end = float(rng.uniform())
    w1_raw = _endpoint_value(float(x_vals[-1]), endpoint, u_end)

    bm = _brownian_values(k, 1.0 / k, rng)
    t_frac = np.arange(k + 1) / k
    wp_raw = (bm - t_frac * bm[-1]) + t_frac * w1_raw
    wp = _snap(wp_raw, LATTICE_BITS)

    d = np.diff(wp)
    ties = rng.uniform(size=k)
    perm = rank_permutation(np.diff(x_vals), ties, d)
    w = _cumsum0_exact(d[perm.pi])
    return SkeletonCoupling(times=t_frac, x=x_vals, w_prime=wp, w=w,
                            permutation=perm, endpoint_w1=float(wp[-1]))


# ---------------------------------------------------------------------------
# Auxiliary couplers and diagnostics
# ---------------------------------------------------------------------------

def empirical_rank_coupling(xi_samples, zeta_samples, rank: int):
    """Rank-matched pair from two equally sized sample sets.

    Both arrays are sorted and the rank-th order statistic of each is
    returned (rank is 1-based).  Marginals are preserved when rank is
    uniform on {1, ..., n}.
    """
    xi = np.sort(np.asarray(xi_samples, dtype=float))
    zeta = np.sort(np.asarray(zeta_samples, dtype=float))
    if xi.size != zeta.size:
        raise ValueError("sample arrays must have equal length")
    if xi.size == 0:
        raise ValueError("sample arrays must be non-empty")
    if not 1 <= rank <= xi.size:
        raise ValueError(f"rank must be in 1..{xi.size}, got {rank}")
    return float(xi[rank - 1]), float(zeta[rank - 1])


RecommendedK = namedtuple("RecommendedK", ["k", "raw"])


def recommended_k(mu4: float) -> RecommendedK:
    """Cell count suggested by the fourth jump moment.

    raw = sqrt(|log mu4| / mu4); k is the power of two nearest to raw in
    log scale (at least 1).  Valid for mu4 in (0, 1); outside that range
    the rule has no meaning and the caller must sweep k manually.
    """
    if not 0.0 < mu4 < 1.0:
        raise ValueError(f"mu4 must be in (0, 1), got {mu4}")
    raw = math.sqrt(abs(math.log(mu4)) / mu4)
    exponent = max(0, round(math.log2(raw)))
    return RecommendedK(k=2 ** exponent, raw=raw)


def centered_order_stat_gap(k: int, rng: np.random.Generator) -> float:
    """Sum of squared gaps between the centered order statistics of two
    independent standard normal samples of size k."""
    z1 = np.sort(rng.standard_normal(k))
    z2 = np.sort(rng.standard_normal(k))
    a = z1 - z1.mean()
    b = z2 - z2.mean()
    return float(np.sum((a - b) ** 2))


def normalized_order_stat_gap(k: int, n_reps: int,
                              rng: np.random.Generator) -> float:
    """Monte Carlo mean of centered_order_stat_gap(k) / log(log(k)).

    The normalized statistic approaches 2 for large k; it quantifies the
    unavoidable bridge mismatch between independently sampled increment
    sets of the same law.
    """
    if k < 3:
        raise ValueError("k must be >= 3 so log(log(k)) > 0")
    norm = math.log(math.log(k))
    total = math.fsum(centered_order_stat_gap(k, rng) for _ in range(n_reps))
    return total / (n_reps * norm)
