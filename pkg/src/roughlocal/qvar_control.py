"""Controls, equal-mass partitions, mollification and jump extension for g.

A ``QVarFunction`` is piecewise linear between its grid nodes, right
continuous, and carries explicit jumps at grid nodes. Its q-variation is
computed on the node sequence with the left limits inserted, so jumps count
in full.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .variation import pvar_exact

DEFAULT_HAT_Q = 2.05


@dataclass(frozen=True)
class QVarFunction:
    grid: np.ndarray
    values: np.ndarray
    jumps: tuple[tuple[float, float], ...] = ()
    q: float = 1.0
    name: str = ""

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape or grid.size < 2:
            raise ValueError("grid and values must match and have >= 2 points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        snapped = []
        for x, s in self.jumps:
            if s == 0:
                continue
            k = int(np.argmin(np.abs(grid - x)))
            if not math.isclose(grid[k], x, rel_tol=0, abs_tol=1e-12) or k == 0:
                raise ValueError(f"jump at {x} must sit on an interior grid node")
            snapped.append((float(grid[k]), float(s)))
        object.__setattr__(self, "jumps", tuple(snapped))

    @property
    def jump_index(self) -> np.ndarray:
        return np.array([int(np.searchsorted(self.grid, x)) for x, _ in self.jumps], dtype=int)

    @property
    def left_values(self) -> np.ndarray:
        """g(x-) at every node."""
        left = self.values.copy()
        for k, (_, s) in zip(self.jump_index, self.jumps):
            left[k] -= s
        return left

    @property
    def lo(self) -> float:
        return float(self.grid[0])

    @property
    def hi(self) -> float:
        return float(self.grid[-1])

    def __call__(self, x):
        """Right-continuous evaluation; constant extension outside the grid."""
        x = np.asarray(x, dtype=float)
        g, v = self.grid, self.values
        if not self.jumps:
            return np.interp(x, g, v)
        left = self.left_values
        k = np.clip(np.searchsorted(g, x, side="right"), 1, g.size - 1)
        h = g[k] - g[k - 1]
        frac = np.clip((x - g[k - 1]) / h, 0.0, 1.0)
        out = v[k - 1] + frac * (left[k] - v[k - 1])
        out = np.where(x >= g[-1], v[-1], out)
        return np.where(x < g[0], v[0], out)

    def node_sequence(self):
        """(abscissae, values) with (x_n, g(x_n-)) inserted before each jump node."""
        xs, ys = [], []
        left = self.left_values
        jset = set(self.jump_index.tolist())
        for k, (x, y) in enumerate(zip(self.grid, self.values)):
            if k in jset:
                xs.append(x)
                ys.append(left[k])
            xs.append(x)
            ys.append(y)
        return np.array(xs), np.array(ys)

    def total_jump_power(self, q=None) -> float:
        q = self.q if q is None else q
        return float(sum(abs(s) ** q for _, s in self.jumps))

    def qvar(self) -> float:
        return pvar_exact(self.node_sequence()[1], self.q)

    def restrict(self, lo, hi, n=None):
        """Resample on [lo, hi]; jumps inside are kept."""
        inner = self.grid[(self.grid > lo) & (self.grid < hi)]
        grid = np.unique(np.concatenate([[lo], inner, [hi]]))
        jumps = tuple((x, s) for x, s in self.jumps if lo < x < hi)
        return QVarFunction(grid, self(grid), jumps, self.q, self.name)


def from_callable(fn: Callable, lo: float, hi: float, n: int, q: float = 1.0,
                  jumps: Sequence[tuple[float, float]] = (), name: str = "") -> QVarFunction:
    """Sample ``fn`` (assumed right continuous) on a uniform grid plus the jump nodes."""
    grid = np.linspace(lo, hi, n)
    if jumps:
        jx = np.array([x for x, _ in jumps], dtype=float)
        far = np.min(np.abs(grid[:, None] - jx[None, :]), axis=0) > 1e-12
        grid = np.unique(np.concatenate([grid, jx[far]]))
    return QVarFunction(grid, np.asarray(fn(grid), dtype=float), tuple(jumps), q, name)


def pair_exponent(q: float, hat_q: float = DEFAULT_HAT_Q) -> float:
    """Variation exponent of Z = (L, g): q itself above 2, a number > 2 otherwise."""
    return q if q > 2 else hat_q


def default_theta(q: float, hat_q: float = DEFAULT_HAT_Q) -> float:
    return min(pair_exponent(q, hat_q) + 0.1, 3.0 - 1e-9)


# ---------------------------------------------------------------------------
# controls
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlFn:
    """Cumulative control W(x) = w(x', x) + (x - x') on the node sequence.

    ``xs``/``W`` may repeat an abscissa at a jump node: W then jumps there.
    """

    xs: np.ndarray
    W: np.ndarray
    q: float
    grid_index: np.ndarray = field(repr=False, default=None)

    @property
    def total(self) -> float:
        return float(self.W[-1])

    @property
    def lo(self) -> float:
        return float(self.xs[0])

    @property
    def hi(self) -> float:
        return float(self.xs[-1])

    def at_nodes(self) -> np.ndarray:
        """W at the grid nodes (right values at jumps)."""
        return self.W[self.grid_index]

    def __call__(self, x):
        # right-continuous: take the last occurrence of a repeated abscissa
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, self.xs.size - 1)
        k1 = np.minimum(k + 1, self.xs.size - 1)
        h = self.xs[k1] - self.xs[k]
        frac = np.where(h > 0, (x - self.xs[k]) / np.where(h > 0, h, 1.0), 0.0)
        return self.W[k] + np.clip(frac, 0.0, 1.0) * (self.W[k1] - self.W[k])


def _prefix_pvar(y: np.ndarray, q: float) -> np.ndarray:
    """best[j] = q-variation of y[0..j] (partitions containing 0 and j)."""
    n = y.size
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + np.abs(y[j] - y[:j]) ** q)
    return best


def build_control(g: QVarFunction) -> ControlFn:
    """W from the q-variation dynamic program on every prefix of the node sequence."""
    xs, ys = g.node_sequence()
    w = _prefix_pvar(ys, g.q)
    W = w + (xs - xs[0])
    # index of each grid node's right value inside the node sequence
    idx = np.searchsorted(xs, g.grid, side="right") - 1
    return ControlFn(xs, W, g.q, idx)


def control_increment(w1: ControlFn, i: int, j: int) -> float:
    """W(grid_j) - W(grid_i) for grid indices i < j."""
    Wn = w1.at_nodes()
    return float(Wn[j] - Wn[i])


def build_partition(w1: ControlFn, m: int) -> np.ndarray:
    """2^m + 1 points with equal W-mass increments; endpoints are x' and x''."""
    if m < 0:
        raise ValueError("m must be >= 0")
    targets = w1.total * np.arange(2 ** m + 1) / 2 ** m
    W, xs = w1.W, w1.xs
    k = np.searchsorted(W, targets, side="left")
    k = np.clip(k, 1, W.size - 1)
    W0, W1 = W[k - 1], W[k]
    x0, x1 = xs[k - 1], xs[k]
    frac = np.where(W1 > W0, (targets - W0) / np.where(W1 > W0, W1 - W0, 1.0), 1.0)
    pts = x0 + np.clip(frac, 0.0, 1.0) * (x1 - x0)
    pts[0], pts[-1] = xs[0], xs[-1]
    return pts


# ---------------------------------------------------------------------------
# mollifier
# ---------------------------------------------------------------------------

MOLLIFIER_NODES = 256


def _bump(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    inside = (v > 0) & (v < 2)
    d = (v[inside] - 1.0) ** 2 - 1.0
    out[inside] = np.exp(1.0 / d)
    return out


@lru_cache(maxsize=None)
def mollifier_constant() -> float:
    """c with ∫_0^2 c exp(1/((v-1)^2 - 1)) dv = 1 (and so ∫ k^j = 1 for every j)."""
    val, _ = integrate.quad(lambda v: math.exp(1.0 / ((v - 1.0) ** 2 - 1.0)), 0.0, 2.0,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 / val


def kernel(j: float, x):
    """k^j(x) = c j exp(1/((j x - 1)^2 - 1)) on (0, 2/j)."""
    return mollifier_constant() * j * _bump(j * np.asarray(x, dtype=float))


@lru_cache(maxsize=None)
def _gauss_nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


def kernel_rule(j: float, n: int = MOLLIFIER_NODES):
    """Composite quadrature nodes/weights u, w for ∫_0^{2/j} k^j(u) f(u) du.

    The bump is smooth and flat at both ends, so Gauss-Legendre on a few
    panels converges fast; weights are renormalized to sum exactly to 1.
    """
    panels = 8
    t, wt = _gauss_nodes(n // panels)
    edges = np.linspace(0.0, 2.0 / j, panels + 1)
    u = (0.5 * (edges[1:, None] - edges[:-1, None]) * t[None, :]
         + 0.5 * (edges[1:, None] + edges[:-1, None])).ravel()
    w = (0.5 * (edges[1:, None] - edges[:-1, None]) * wt[None, :]).ravel() * kernel(j, u)
    return u, w / w.sum()


def convolve(fn: Callable, j: float, x, n: int = MOLLIFIER_NODES):
    """∫ k^j(u) fn(x - u) du for an array of x."""
    x = np.asarray(x, dtype=float)
    u, w = kernel_rule(j, n)
    return (fn(x[..., None] - u) * w).sum(-1)


def mollify(g: QVarFunction, j: float, grid: Optional[np.ndarray] = None) -> QVarFunction:
    """g_j = k^j * g sampled on g's grid (or ``grid``), g extended constantly."""
    if j < 1:
        raise ValueError("smoothing index j must be >= 1")
    grid = g.grid if grid is None else np.asarray(grid, dtype=float)
    vals = convolve(g, j, grid)
    return QVarFunction(grid, vals, (), 1.0, f"{g.name}*k^{j:g}")


# ---------------------------------------------------------------------------
# jump extension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Extension:
    """tau_delta and the nodes of the continuous extended path."""

    delta: float
    q: float
    jump_x: np.ndarray
    jump_size: np.ndarray
    y_nodes: np.ndarray
    x_of_node: np.ndarray
    is_gap_start: np.ndarray
    g_ext: QVarFunction

    def tau(self, x):
        x = np.asarray(x, dtype=float)
        shift = self.delta * np.abs(self.jump_size) ** self.q
        return x + np.sum(shift[None, :] * (self.jump_x[None, :] <= x[..., None]), axis=-1) \
            if x.ndim else x + float(np.sum(shift[self.jump_x <= x]))

    def tau_left(self, x):
        x = np.asarray(x, dtype=float)
        shift = self.delta * np.abs(self.jump_size) ** self.q
        return x + float(np.sum(shift[self.jump_x < x]))

    @property
    def length_added(self) -> float:
        return float(self.delta * np.sum(np.abs(self.jump_size) ** self.q))


def extend_cadlag(g: QVarFunction, delta: float, extra_nodes=None) -> Extension:
    """Open a gap of width delta*|j|^q at every jump and fill it linearly.

    ``extra_nodes`` adds abscissae (e.g. a local-time grid) to the node set.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    xs = g.grid
    if extra_nodes is not None:
        extra = np.asarray(extra_nodes, dtype=float)
        extra = extra[(extra > g.lo) & (extra < g.hi)]
        k = np.clip(np.searchsorted(g.grid, extra), 1, g.grid.size - 1)
        gap = np.minimum(extra - g.grid[k - 1], g.grid[k] - extra)
        tol = 1e-9 * (g.hi - g.lo)
        xs = np.unique(np.concatenate([g.grid, extra[gap > tol]]))
    jx = np.array([x for x, _ in g.jumps], dtype=float)
    js = np.array([s for _, s in g.jumps], dtype=float)
    shift = delta * np.abs(js) ** g.q
    cum = np.array([float(np.sum(shift[jx <= x])) for x in xs])
    y_right = xs + cum
    vals = g(xs)

    ys, xo, gap, gv = [], [], [], []
    jmap = {float(x): (s, sh) for x, s, sh in zip(jx, js, shift)}
    for x, y, v in zip(xs, y_right, vals):
        if float(x) in jmap:
            s, sh = jmap[float(x)]
            ys.append(y - sh)
            xo.append(x)
            gap.append(True)
            gv.append(v - s)
        ys.append(y)
        xo.append(x)
        gap.append(False)
        gv.append(v)
    y_nodes = np.array(ys)
    g_ext = QVarFunction(y_nodes, np.array(gv), (), g.q, f"{g.name}_ext")
    return Extension(delta, g.q, jx, js, y_nodes, np.array(xo), np.array(gap), g_ext)
