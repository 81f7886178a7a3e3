"""p-variation of discrete curves and related dyadic statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class DiscreteCurve:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1:
            raise ValueError("xs and ys must be 1-d arrays of equal length")
        if xs.size < 2:
            raise ValueError("a curve needs at least two points")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)


def _as_values(curve) -> np.ndarray:
    if isinstance(curve, DiscreteCurve):
        return curve.ys
    if hasattr(curve, "values") and hasattr(curve, "xgrid"):
        return np.asarray(curve.values, dtype=float)
    return np.asarray(curve, dtype=float)


def turning_points(y: np.ndarray) -> np.ndarray:
    """Indices of the endpoints and of every change of monotone direction.

    For p >= 1 a maximising partition can always be chosen among these.
    """
    n = y.size
    if n <= 2:
        return np.arange(n)
    d = np.sign(np.diff(y))
    nz = np.flatnonzero(d)
    if nz.size == 0:
        return np.array([0, n - 1])
    keep = [0]
    ds = d[nz]
    # a turn happens between consecutive nonzero steps of opposite sign;
    # the extremum sits at the start of the later step
    turns = nz[1:][ds[1:] != ds[:-1]]
    keep.extend(turns.tolist())
    keep.append(n - 1)
    return np.unique(np.array(keep))


def dp_max_partition(n: int, weight_row: Callable[[int], np.ndarray]) -> float:
    """max over index subsets {0 = i_0 < ... < i_k = n-1} of Σ W(i_l, i_{l+1}).

    ``weight_row(j)`` returns W(i, j) for all i < j as an array of length j.
    """
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + weight_row(j))
    return float(best[-1])


def pvar_exact(curve, p: float) -> float:
    """sup over grid partitions of Σ |Δy|^p, by dynamic programming."""
    if p < 1:
        raise ValueError("p must be >= 1")
    y = _as_values(curve)
    if y.size < 2:
        raise ValueError("a curve needs at least two points")
    y = y[turning_points(y)]
    if y.size == 2:
        return float(abs(y[1] - y[0]) ** p)
    return dp_max_partition(y.size, lambda j: np.abs(y[j] - y[:j]) ** p)


def pvar_bruteforce(ys, p: float) -> float:
    """Exhaustive maximum over all 2^(n-2) partitions; for small n only."""
    ys = list(map(float, ys))
    n = len(ys)
    best = 0.0
    for mask in range(1 << max(n - 2, 0)):
        idx = [0] + [k + 1 for k in range(n - 2) if mask >> k & 1] + [n - 1]
        s = sum(abs(ys[b] - ys[a]) ** p for a, b in zip(idx, idx[1:]))
        best = max(best, s)
    return best


def resample_dyadic(curve) -> np.ndarray:
    """Linear resampling to 2^m + 1 equally spaced points (identity if already so)."""
    if isinstance(curve, DiscreteCurve):
        xs, ys = curve.xs, curve.ys
    elif hasattr(curve, "xgrid"):
        xs, ys = np.asarray(curve.xgrid), np.asarray(curve.values)
    else:
        ys = np.asarray(curve, dtype=float)
        xs = np.arange(ys.size, dtype=float)
    n = ys.size - 1
    m = max(int(np.ceil(np.log2(max(n, 1)))), 1)
    if n == 2 ** m:
        return ys
    grid = np.linspace(xs[0], xs[-1], 2 ** m + 1)
    return np.interp(grid, xs, ys)


def pvar_dyadic_bound(curve, p: float, gamma: float | None = None) -> float:
    """Σ_{n>=1} n^gamma Σ_k |y(a_k^n) - y(a_{k-1}^n)|^p over the dyadic levels."""
    if gamma is None:
        gamma = p - 1.0 + 0.1
    if not gamma > p - 1:
        raise ValueError("gamma must exceed p - 1")
    y = resample_dyadic(curve)
    m = int(round(np.log2(y.size - 1)))
    total = 0.0
    for n in range(1, m + 1):
        pts = y[:: 2 ** (m - n)]
        total += n ** gamma * float(np.sum(np.abs(np.diff(pts)) ** p))
    return total


def quadratic_variation_sum(curve, n_points: int) -> float:
    """Σ (ΔL)^2 over the uniform partition of the curve's support with n_points points."""
    x = np.linspace(curve.xgrid[0], curve.xgrid[-1], n_points)
    return float(np.sum(np.diff(curve(x)) ** 2))
