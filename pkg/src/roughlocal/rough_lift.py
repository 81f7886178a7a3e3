"""Level-2 lifts of the piecewise linear approximations of Z = (L, g).

Component 0 of Z is the local time L, component 1 is the integrand g. A lift
stores Z at its nodes together with a compensated prefix sum of the Lévy
area, so the increment (Z1, Z2) over any pair of nodes is available in O(1):

    Z2_{s,t} = ½ Z1_{s,t} ⊗ Z1_{s,t} + ½ A_{s,t} [[0, 1], [-1, 0]],

which is exact for a piecewise linear path.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .qvar_control import ControlFn, build_partition

DEFAULT_DEPTH = 10
_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class MisalignedSamplesError(ValueError):
    pass


def _kahan_cumsum(x: np.ndarray) -> np.ndarray:
    out = np.empty(x.size + 1)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for k, v in enumerate(x.tolist()):
        y = v - c
        t = s + y
        c = (t - s) - y
        s = t
        out[k + 1] = s
    return out


@dataclass(frozen=True)
class Level2Path:
    """Piecewise linear path in R² through ``Z`` at abscissae ``x``."""

    x: np.ndarray
    Z: np.ndarray
    level: Optional[int] = None
    area_prefix: np.ndarray = field(default=None, repr=False)
    centered: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != 2 or Z.shape[0] != x.size or x.size < 2:
            raise ValueError("Z must have shape (len(x), 2)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "Z", Z)
        c = Z - Z[0]
        object.__setattr__(self, "centered", c)
        if self.area_prefix is None:
            d = np.diff(Z, axis=0)
            seg = c[:-1, 0] * d[:, 1] - c[:-1, 1] * d[:, 0]
            object.__setattr__(self, "area_prefix", _kahan_cumsum(seg))

    @property
    def n_nodes(self) -> int:
        return self.x.size

    def area(self, s, t):
        """Lévy area A_{s,t} between node indices (arrays broadcast)."""
        c = self.centered
        s = np.asarray(s)
        t = np.asarray(t)
        z1 = c[t] - c[s]
        cross = c[s, 0] * z1[..., 1] - c[s, 1] * z1[..., 0]
        return self.area_prefix[t] - self.area_prefix[s] - cross

    def increment(self, s: int, t: int):
        """(Z1, Z2) over nodes s <= t."""
        z1 = self.Z[t] - self.Z[s]
        A = float(self.area(s, t))
        return z1, 0.5 * np.outer(z1, z1) + 0.5 * A * _J

    def increments_to(self, t: int):
        """Z1 (t, 2) and Lévy area (t,) for every s < t."""
        s = np.arange(t)
        return self.Z[t] - self.Z[s], self.area(s, np.full(t, t))

    def node_index(self, a: float) -> int:
        k = int(np.argmin(np.abs(self.x - a)))
        if not math.isclose(self.x[k], a, rel_tol=1e-12, abs_tol=1e-12):
            raise MisalignedSamplesError(f"{a} is not a node of the lift")
        return k

    def segments_Z2(self) -> np.ndarray:
        d = np.diff(self.Z, axis=0)
        return 0.5 * d[:, :, None] * d[:, None, :]


def lift_smooth(Zvals, w1: ControlFn, m: int, xs=None) -> Level2Path:
    """Lift of the polygon through Z at the level-m equal-w1 partition."""
    pts = build_partition(w1, m)
    Zvals = np.asarray(Zvals, dtype=float)
    if Zvals.shape != (pts.size, 2):
        raise MisalignedSamplesError(f"expected {pts.size} samples of Z at level {m}, got {Zvals.shape}")
    if xs is not None and not np.allclose(xs, pts, rtol=0, atol=1e-12):
        raise MisalignedSamplesError("samples not taken at the level-m partition points")
    return Level2Path(pts, Zvals, m)


def refine(lift: Level2Path, stride: int) -> Level2Path:
    """Same polygon with ``stride - 1`` equally spaced (in parameter) nodes added per segment."""
    if stride == 1:
        return lift
    t = np.arange(stride) / stride
    n = lift.n_nodes - 1
    Zf = np.empty((n * stride + 1, 2))
    xf = np.empty(n * stride + 1)
    d = np.diff(lift.Z, axis=0)
    dx = np.diff(lift.x)
    Zf[:-1] = (lift.Z[:-1, None, :] + t[None, :, None] * d[:, None, :]).reshape(-1, 2)
    xf[:-1] = (lift.x[:-1, None] + t[None, :] * dx[:, None]).ravel()
    Zf[-1], xf[-1] = lift.Z[-1], lift.x[-1]
    return Level2Path(xf, Zf, lift.level)


def chen_combine(A, B):
    """(Z1, Z2) over [a, c] from the pieces over [a, b] and [b, c]."""
    a1, a2 = np.asarray(A[0], float), np.asarray(A[1], float)
    b1, b2 = np.asarray(B[0], float), np.asarray(B[1], float)
    return a1 + b1, a2 + b2 + np.outer(a1, b1)


def _dp(n: int, row: Callable[[int], np.ndarray]) -> float:
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + row(j))
    return float(best[-1])


def d_theta_components(X: Level2Path, Y: Level2Path, theta: float, level1_stride: int = 1):
    """(d1, d2) over partitions drawn from the shared node set.

    ``level1_stride`` restricts the level-1 search to every k-th node; this is
    exact when both paths are linear between those nodes.
    """
    if X.n_nodes != Y.n_nodes or not np.allclose(X.x, Y.x, rtol=0, atol=1e-12):
        raise ValueError("paths must share the same node set")
    D = X.Z - Y.Z
    sub = D[::level1_stride]
    d1 = _dp(sub.shape[0], lambda j: np.hypot(*(sub[j] - sub[:j]).T) ** theta) ** (1.0 / theta)

    h = theta / 2.0

    def row2(j):
        x1, xa = X.increments_to(j)
        y1, ya = Y.increments_to(j)
        e00 = 0.5 * (x1[:, 0] ** 2 - y1[:, 0] ** 2)
        e11 = 0.5 * (x1[:, 1] ** 2 - y1[:, 1] ** 2)
        sym = 0.5 * (x1[:, 0] * x1[:, 1] - y1[:, 0] * y1[:, 1])
        da = 0.5 * (xa - ya)
        fro2 = e00 ** 2 + e11 ** 2 + (sym + da) ** 2 + (sym - da) ** 2
        return fro2 ** (h / 2.0)

    d2 = _dp(X.n_nodes, row2) ** (2.0 / theta)
    return d1, d2


def d_theta(X: Level2Path, Y: Level2Path, theta: float) -> float:
    return max(d_theta_components(X, Y, theta))


@dataclass(frozen=True)
class GeometricRoughPath:
    """Final lift on the level-M grid plus the Cauchy diagnostics that produced it.

    ``Zfine`` holds the exact Z values at the level-M partition points, so the
    lift Z(m) is available for every m <= depth.
    """

    depth: int
    theta: float
    x: np.ndarray
    Zfine: np.ndarray
    level: int
    diagnostics: tuple = ()
    non_cauchy: bool = False
    converged: bool = False

    def lift(self, m: Optional[int] = None) -> Level2Path:
        m = self.level if m is None else m
        if not 0 <= m <= self.depth:
            raise ValueError("level outside 0..depth")
        stride = 2 ** (self.depth - m)
        coarse = Level2Path(self.x[::stride], self.Zfine[::stride], m)
        # Z(m) is linear in the control between its nodes, and the level-M
        # points split each level-m cell into equal control steps
        return Level2Path(self.x, refine(coarse, stride).Z, m)

    @property
    def path(self) -> Level2Path:
        return self.lift()

    def increment(self, a: float, b: float):
        p = self.path
        return p.increment(p.node_index(a), p.node_index(b))

    def diagnostics_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "d1", "d2"])
        for m, d1, d2 in self.diagnostics:
            w.writerow([m, repr(float(d1)), repr(float(d2))])
        return buf.getvalue()

    def dump_csv(self, m: Optional[int] = None) -> str:
        """Increments over the adjacent intervals of the level-m partition."""
        m = self.level if m is None else m
        p = self.lift()
        stride = 2 ** (self.depth - m)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "b", "Z1_1", "Z1_2", "Z2_11", "Z2_12", "Z2_21", "Z2_22"])
        for s in range(0, p.n_nodes - 1, stride):
            z1, z2 = p.increment(s, s + stride)
            w.writerow([repr(float(p.x[s])), repr(float(p.x[s + stride]))]
                       + [repr(float(v)) for v in z1] + [repr(float(v)) for v in z2.ravel()])
        return buf.getvalue()


def _validate_theta(theta: float, q: float):
    if not (q < theta < 3):
        raise ValueError(f"theta={theta} must lie strictly between q={q} and 3")


def converge_lift(Zprovider: Callable, w1: ControlFn, theta: float, m_max: int = 8,
                  tol: float = 1e-10, depth: Optional[int] = None,
                  metric_depth: int = DEFAULT_DEPTH, ratio_window: int = 3) -> GeometricRoughPath:
    """Iterate the lifts Z(m), m = 1..m_max, tracking d_theta(Z(m), Z(m+1)).

    ``Zprovider(x)`` returns an (n, 2) array of (L(x), g(x)). Z is sampled on
    the level-``depth`` partition; distances use partitions drawn from the
    level-``metric_depth`` points.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    _validate_theta(theta, w1.q)
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    metric_depth = max(metric_depth, m_max + 1)
    depth = metric_depth if depth is None else depth
    if depth < metric_depth:
        raise ValueError("depth must be at least the metric depth")
    x = build_partition(w1, depth)
    Zfine = np.asarray(Zprovider(x), dtype=float)
    rp = GeometricRoughPath(depth, theta, x, Zfine, 1)
    k = 2 ** (depth - metric_depth)

    diags = []
    level = 1
    converged = False
    for m in range(1, m_max + 1):
        X, Y = rp.lift(m), rp.lift(m + 1)
        if k > 1:
            # both lifts are linear between level-(m+1) points, which are metric points
            X = Level2Path(X.x[::k], X.Z[::k], m)
            Y = Level2Path(Y.x[::k], Y.Z[::k], m + 1)
        d1, d2 = d_theta_components(X, Y, theta, level1_stride=2 ** (metric_depth - m - 1))
        diags.append((m, d1, d2))
        level = m + 1
        if max(d1, d2) < tol:
            converged = True
            break

    d = [max(a, b) for _, a, b in diags]
    non_cauchy = False
    for i in range(len(d) - ratio_window):
        if all(d[i + r + 1] >= d[i + r] > 0 for r in range(ratio_window)):
            non_cauchy = True
    if non_cauchy:
        warnings.warn("lift distances failed to decrease over consecutive levels", RuntimeWarning)
    level = depth if not converged else level
    return GeometricRoughPath(depth, theta, x, Zfine, level, tuple(diags), non_cauchy, converged)
