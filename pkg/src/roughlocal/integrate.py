"""Young and rough-path integrals of g against a local-time curve."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .qvar_control import (DEFAULT_HAT_Q, QVarFunction, build_control, build_partition,
                           default_theta, extend_cadlag, mollify)
from .rough_lift import GeometricRoughPath, Level2Path, converge_lift

TRACE_TOL = 1e-6


class YoungConditionError(ValueError):
    pass


@dataclass(frozen=True)
class IntegralResult:
    value: float
    method: str
    trace: tuple = ()
    converged: bool = True
    extras: dict = field(default_factory=dict)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "value"])
        for lvl, v in self.trace:
            w.writerow([lvl, repr(float(v))])
        return buf.getvalue()


def curve_support(L) -> tuple[float, float]:
    """Interval outside which a local-time curve vanishes (one grid step of zero padding)."""
    xg = np.asarray(L.xgrid, dtype=float)
    h = float(xg[1] - xg[0])
    return float(xg[0] - h), float(xg[-1] + h)


def _padded(L):
    """Callable that interpolates L linearly down to zero one step outside its grid."""
    if not hasattr(L, "xgrid"):
        return L
    xg = np.asarray(L.xgrid, dtype=float)
    h = float(xg[1] - xg[0])
    xs = np.concatenate([[xg[0] - h], xg, [xg[-1] + h]])
    vs = np.concatenate([[0.0], np.asarray(L.values, dtype=float), [0.0]])
    return lambda x: np.interp(x, xs, vs, left=0.0, right=0.0)


def _bounds(L, a, b):
    if a is None or b is None:
        if not hasattr(L, "xgrid"):
            raise ValueError("a and b are required for a bare callable integrator")
        lo, hi = curve_support(L)
        a = lo if a is None else a
        b = hi if b is None else b
    if not b > a:
        raise ValueError("need a < b")
    return float(a), float(b)


def _cauchy(trace, tol, scale) -> bool:
    if len(trace) < 2:
        return True
    return abs(trace[-1][1] - trace[-2][1]) <= tol * max(scale, 1e-300)


def _resolving_level(g, L, a, b) -> int:
    """Smallest dyadic level whose mesh is no coarser than the grids of g and L on [a, b]."""
    h = b - a
    for grid in (getattr(g, "grid", None), getattr(L, "xgrid", None)):
        if grid is None:
            continue
        grid = np.asarray(grid, dtype=float)
        inside = grid[(grid >= a) & (grid <= b)]
        if inside.size >= 2:
            h = min(h, float(np.min(np.diff(inside))))
    return int(np.ceil(np.log2((b - a) / h) - 1e-9))


def young_integral(g, L, p: float = DEFAULT_HAT_Q, q: Optional[float] = None,
                   a: Optional[float] = None, b: Optional[float] = None,
                   min_level: int = 8, max_level: int = 22, tol: float = TRACE_TOL) -> IntegralResult:
    """Left-point Riemann-Stieltjes sums Σ g(x_k)(L(x_{k+1}) - L(x_k)) on dyadic partitions of [a, b]."""
    q = getattr(g, "q", 1.0) if q is None else q
    if not (1.0 / p + 1.0 / q > 1.0):
        raise YoungConditionError(
            f"Young condition fails: 1/p + 1/q = 1/{p:g} + 1/{q:g} = {1 / p + 1 / q:.6g} <= 1")
    a, b = _bounds(L, a, b)
    Lf = _padded(L)
    # coarser sums cannot see the grid structure and may agree with each other by accident
    min_level = min(max(min_level, _resolving_level(g, L, a, b)), max_level)
    trace = []
    scale = None
    for n in range(1, max_level + 1):
        x = np.linspace(a, b, 2 ** n + 1)
        gv = np.asarray(g(x[:-1]), dtype=float)
        lv = np.asarray(Lf(x), dtype=float)
        trace.append((n, float(np.dot(gv, np.diff(lv)))))
        if scale is None or n == min_level:
            scale = max(float(np.max(np.abs(g(x)))) * float(np.ptp(lv)), abs(trace[-1][1]))
        if n >= min_level and _cauchy(trace, tol, scale):
            break
    return IntegralResult(trace[-1][1], "young", tuple(trace), _cauchy(trace, tol, scale),
                          {"p": p, "q": q, "a": a, "b": b, "scale": scale})


# ---------------------------------------------------------------------------
# rough route
# ---------------------------------------------------------------------------


def lift_pair(g: QVarFunction, L, theta: Optional[float] = None, depth: int = 12,
              m_max: int = 0, tol: float = 1e-12, metric_depth: int = 10) -> GeometricRoughPath:
    """Lift of Z = (L, g) on the equal-control partitions of g.

    With ``m_max`` = 0 no distances are computed: the lift Z(depth) is
    returned with every coarser level available for integration traces.
    """
    theta = default_theta(g.q) if theta is None else theta
    w1 = build_control(g)
    Lf = _padded(L)

    def provider(x):
        return np.c_[Lf(x), g(x)]

    if m_max:
        return converge_lift(provider, w1, theta, m_max=m_max, tol=tol, depth=depth,
                             metric_depth=metric_depth)
    x = build_partition(w1, depth)
    if not (w1.q < theta < 3):
        raise ValueError(f"theta={theta} must lie strictly between q={w1.q} and 3")
    return GeometricRoughPath(depth, theta, x, provider(x), depth)


def _snap(path: Level2Path, a, b):
    ia = 0 if a is None else _nearest(path.x, a)
    ib = path.n_nodes - 1 if b is None else _nearest(path.x, b)
    if not ib > ia:
        raise ValueError("need a < b on the lift grid")
    return ia, ib


def _nearest(x, v):
    return int(np.argmin(np.abs(x - v)))


def _defining_sum(lift: Level2Path, nodes: np.ndarray, row: int, col: int, integrand: int) -> float:
    """Σ ( (Z2_{x_i,x_{i+1}})_{row,col} + Z^{integrand}(x_i) ΔZ^{col} ) over consecutive nodes."""
    s, t = nodes[:-1], nodes[1:]
    z1 = lift.Z[t] - lift.Z[s]
    z2 = 0.5 * z1[:, row] * z1[:, col]
    if row != col:
        A = lift.area(s, t)
        z2 = z2 + (0.5 * A if (row, col) == (0, 1) else -0.5 * A)
    return float(np.sum(z2 + lift.Z[s, integrand] * z1[:, col]))


def _rough_trace(rp: GeometricRoughPath, a, b, row, col, integrand, tol):
    fine = rp.path
    ia, ib = _snap(fine, a, b)
    trace = []
    for m in range(1, rp.depth + 1):
        lift = rp.lift(m)
        stride = 2 ** (rp.depth - m)
        inner = np.arange(0, fine.n_nodes, stride)
        nodes = np.unique(np.concatenate([[ia], inner[(inner > ia) & (inner < ib)], [ib]]))
        trace.append((m, _defining_sum(lift, nodes, row, col, integrand)))
    Z = rp.Zfine[ia:ib + 1]
    scale = max(float(np.max(np.abs(Z[:, integrand]))) * float(np.ptp(Z[:, col])), abs(trace[-1][1]))
    return trace, scale, (float(fine.x[ia]), float(fine.x[ib]))


def rough_integral_gdL(rp: GeometricRoughPath, a=None, b=None, tol: float = TRACE_TOL) -> IntegralResult:
    """Σ (Z2)_{g,L} + g(x_i) ΔL over the level-m partitions, m = 1..depth."""
    trace, scale, (a, b) = _rough_trace(rp, a, b, row=1, col=0, integrand=1, tol=tol)
    ok = _cauchy(trace, tol, scale)
    return IntegralResult(trace[-1][1], "rough", tuple(trace), ok,
                          {"a": a, "b": b, "scale": scale, "theta": rp.theta})


def rough_integral_LdL(rp: GeometricRoughPath, a=None, b=None, tol: float = TRACE_TOL) -> IntegralResult:
    """Σ (Z2)_{L,L} + L(x_i) ΔL; equals ½(L(b)² - L(a)²) for a geometric lift."""
    if not rp.theta > 2:
        raise ValueError("the local-time lift needs theta > 2")
    trace, scale, (a, b) = _rough_trace(rp, a, b, row=0, col=0, integrand=0, tol=tol)
    ok = _cauchy(trace, tol, scale)
    return IntegralResult(trace[-1][1], "rough", tuple(trace), ok,
                          {"a": a, "b": b, "scale": scale, "theta": rp.theta})


def integral_cadlag_gdL(g: QVarFunction, L, delta: float, theta: Optional[float] = None,
                        depth: int = 12, tol: float = TRACE_TOL) -> IntegralResult:
    """∫ g dL for càdlàg g through the jump-extended continuous pair.

    ∫ L dg is evaluated on the extended pair (L held constant across each
    gap) as the defining sum over the node partition of the extended polygon,
    where it is exact; the dyadic-level sums along the extended control are
    kept as the trace. Then ∫ g dL = g L |_a^b - ∫ L dg with right values of g.
    """
    theta = default_theta(g.q) if theta is None else theta
    if not (g.q < theta < 3):
        raise ValueError(f"theta={theta} must lie strictly between q={g.q} and 3")
    Lf = _padded(L)
    extra = np.asarray(L.xgrid, dtype=float) if hasattr(L, "xgrid") else None
    ext = extend_cadlag(g, delta, extra_nodes=extra)
    y = ext.y_nodes
    Zn = np.c_[Lf(ext.x_of_node), ext.g_ext.values]
    node_path = Level2Path(y, Zn)
    all_nodes = np.arange(y.size)
    LdG = _defining_sum(node_path, all_nodes, row=0, col=1, integrand=0)

    # trace along the equal-control partitions of the extended g
    w1 = build_control(ext.g_ext)
    trace = []
    for m in range(1, depth + 1):
        pts = build_partition(w1, m)
        xs_pts = np.interp(pts, y, ext.x_of_node)
        lift = Level2Path(pts, np.c_[Lf(xs_pts), ext.g_ext(pts)], m)
        trace.append((m, _defining_sum(lift, np.arange(pts.size), 0, 1, 0)))
    trace.append((depth + 1, LdG))

    a, b = g.lo, g.hi
    boundary = float(g(b) * Lf(b) - g(a) * Lf(a))
    jumps = float(sum(Lf(x) * s for x, s in g.jumps))
    value = boundary - LdG
    return IntegralResult(value, "extended-rough", tuple(trace), True,
                          {"L_dg": LdG, "jump_contribution": jumps, "boundary": boundary,
                           "delta": delta, "extension": ext.length_added, "theta": theta})


def integral_gdL(g: QVarFunction, L, p: float = DEFAULT_HAT_Q, depth: int = 12) -> IntegralResult:
    """Young when 1/p + 1/q > 1, otherwise the rough route on the (L, g) lift."""
    if g.jumps:
        return integral_cadlag_gdL(g, L, delta=0.5, depth=depth)
    if 1.0 / p + 1.0 / g.q > 1.0:
        return young_integral(g, L, p=p)
    return rough_integral_gdL(lift_pair(g, L, depth=depth))


@dataclass(frozen=True)
class MollificationReport:
    js: tuple
    results: tuple
    direct: IntegralResult
    deviations: tuple

    @property
    def tail_max_deviation(self) -> float:
        return float(max(self.deviations[len(self.deviations) // 2:]))

    @property
    def decreasing(self) -> bool:
        d = self.deviations
        return all(d[k + 1] < d[k] for k in range(len(d) - 1))


def convergence_under_mollification(g: QVarFunction, L, j_list: Sequence[float],
                                    grid: Optional[np.ndarray] = None,
                                    p: float = DEFAULT_HAT_Q) -> MollificationReport:
    """∫ g_j dL for each j in ``j_list`` against the direct ∫ g dL."""
    direct = integral_gdL(g, L, p=p)
    results = []
    for j in j_list:
        gj = mollify(g, j, grid)
        results.append(young_integral(gj, L, p=p))
    dev = tuple(abs(r.value - direct.value) for r in results)
    return MollificationReport(tuple(j_list), tuple(results), direct, dev)
