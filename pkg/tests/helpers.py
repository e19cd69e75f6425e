"""Independent brute-force oracles shared by the tests.

These enumerate exhaustively and never reuse the library's fast paths.
"""

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def _all_permutations(k: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(k))), dtype=np.intp)


def brute_force_permutation(dx, ties, dw) -> np.ndarray:
    """The unique permutation matching the rank condition, by exhaustive
    search over all k! candidates (k <= 8)."""
    dx = np.asarray(dx, dtype=float)
    ties = np.asarray(ties, dtype=float)
    dw = np.asarray(dw, dtype=float)
    k = dx.size
    perms = _all_permutations(k)
    # rhs[i, j]: the Levy side of the iff-condition for the pair (i, j)
    rhs = (dx[:, None] < dx[None, :]) | ((dx[:, None] == dx[None, :])
                                         & (ties[:, None] < ties[None, :]))
    dw_p = dw[perms]  # (k!, k)
    lhs = dw_p[:, :, None] < dw_p[:, None, :]
    off_diag = ~np.eye(k, dtype=bool)
    match = np.all((lhs == rhs[None]) | ~off_diag[None], axis=(1, 2))
    hits = np.flatnonzero(match)
    assert hits.size >= 1, "no permutation satisfies the rank condition"
    return perms[hits[0]]


def brute_force_permutation_is_unique(dx, ties, dw) -> bool:
    dx = np.asarray(dx, dtype=float)
    ties = np.asarray(ties, dtype=float)
    dw = np.asarray(dw, dtype=float)
    perms = _all_permutations(dx.size)
    rhs = (dx[:, None] < dx[None, :]) | ((dx[:, None] == dx[None, :])
                                         & (ties[:, None] < ties[None, :]))
    dw_p = dw[perms]
    lhs = dw_p[:, :, None] < dw_p[:, None, :]
    off_diag = ~np.eye(dx.size, dtype=bool)
    match = np.all((lhs == rhs[None]) | ~off_diag[None], axis=(1, 2))
    return int(match.sum()) == 1


def brute_force_wasserstein2(a, b) -> float:
    """Minimal root mean squared pairing cost over all n! assignments."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    perms = _all_permutations(a.size)
    costs = np.mean((a[None, :] - b[perms]) ** 2, axis=1)
    return float(np.sqrt(costs.min()))


def bisect_normal_quantile(p: float, tol: float = 1e-13) -> float:
    """Solve Phi(x) = p by bisection on the error-function family.

    Works on the tail-stable side (lower-tail mass for p < 1/2, upper-tail
    mass otherwise) so the oracle keeps full precision out to p = 1e-12.
    """
    import math

    if p > 0.5:
        return -bisect_normal_quantile(1.0 - p, tol)

    def lower_mass(x):
        return 0.5 * math.erfc(-x / math.sqrt(2.0))

    lo, hi = -10.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lower_mass(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
