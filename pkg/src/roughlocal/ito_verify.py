"""Numerical checks of the Itô-Tanaka formula and of the moment estimates."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as quad_mod
from scipy import stats

from .integrate import IntegralResult, curve_support, integral_gdL
from .levy_model import (CompoundPoisson, LevyModel, NoJumps, PowerSmall, check_admissibility,
                         sample_jumps)
from .local_time import (LocalTimeCurve, local_time_binning, local_time_tanaka, path_grid,
                         tanaka_local_time, tanaka_terms)
from .path_sim import SamplePath, simulate
from .qvar_control import QVarFunction, convolve

LEFT_STEP = 1e-6
DEFAULT_LT_POINTS = 1023  # padded support then holds 2^10 cells


@dataclass(frozen=True)
class PiecewiseC1Function:
    """f with a left-continuous left derivative; ``derivative_q`` is the q of ∇⁻f."""

    f: Callable
    left_derivative: Optional[Callable] = None
    derivative_q: float = 1.0
    name: str = ""

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def dleft(self, x):
        x = np.asarray(x, dtype=float)
        if self.left_derivative is not None:
            return self.left_derivative(x)
        return (self.f(x) - self.f(x - LEFT_STEP)) / LEFT_STEP


def power_function(k: int) -> PiecewiseC1Function:
    return PiecewiseC1Function(lambda x: x ** k, lambda x: k * x ** (k - 1) if k > 1 else np.ones_like(x),
                               1.0, f"x^{k}")


def hinge_function(a: float) -> PiecewiseC1Function:
    """(x - a)^+ with ∇⁻f = 1{x > a}."""
    return PiecewiseC1Function(lambda x: np.maximum(x - a, 0.0),
                               lambda x: (x > a).astype(float), 1.0, f"(x-{a:g})^+")


def abs_function() -> PiecewiseC1Function:
    return PiecewiseC1Function(np.abs, lambda x: np.where(x > 0, 1.0, -1.0), 1.0, "|x|")


def mollified(f: PiecewiseC1Function, j: float) -> PiecewiseC1Function:
    """k^j * f together with k^j * ∇⁻f as its derivative."""
    return PiecewiseC1Function(lambda x: convolve(f.f, j, x), lambda x: convolve(f.dleft, j, x),
                               1.0, f"{f.name}*k^{j:g}")


def local_time_for(path: SamplePath, estimator: str = "binning", n: int = DEFAULT_LT_POINTS) -> LocalTimeCurve:
    grid = path_grid(path, n)
    if estimator == "binning":
        return local_time_binning(path, grid)
    if estimator == "tanaka":
        return local_time_tanaka(path, grid)
    raise ValueError(f"unknown estimator {estimator!r}")


def derivative_integrand(f: PiecewiseC1Function, L: LocalTimeCurve, refine: int = 4) -> QVarFunction:
    """∇⁻f sampled on a refinement of the local-time support grid."""
    lo, hi = curve_support(L)
    n = (np.asarray(L.xgrid).size + 1) * refine + 1
    x = np.linspace(lo, hi, n)
    return QVarFunction(x, np.asarray(f.dleft(x), dtype=float), (), max(f.derivative_q, 1.0), "dleft")


@dataclass(frozen=True)
class ItoResidual:
    residual: float
    increment: float
    stochastic: float
    lt_integral: float
    jump_correction: float
    coeff: float
    integral: Optional[IntegralResult] = field(default=None, repr=False)


def ito_residual_parts(f: PiecewiseC1Function, path: SamplePath, coeff: float = 1.0,
                       L: Optional[LocalTimeCurve] = None, estimator: str = "binning") -> ItoResidual:
    x = path.values
    pre = x[:-1]
    dX = path.continuous_increments
    stoch = float(np.sum(f.dleft(pre) * dX))
    idx = np.flatnonzero(path.jump_sizes)
    corr = 0.0
    if idx.size:
        xl = path.left_limits[idx]
        xs = x[idx]
        dj = path.jump_sizes[idx]
        dl = f.dleft(xl)
        stoch += float(np.sum(dl * dj))
        corr = float(np.sum(f(xs) - f(xl) - dl * dj))
    L = local_time_for(path, estimator) if L is None else L
    res = integral_gdL(derivative_integrand(f, L), L)
    inc = float(f(x[-1]) - f(x[0]))
    resid = inc - stoch + coeff * res.value - corr
    return ItoResidual(resid, inc, stoch, res.value, corr, coeff, res)


def ito_residual(f: PiecewiseC1Function, path: SamplePath, coeff: float = 1.0,
                 L: Optional[LocalTimeCurve] = None, estimator: str = "binning") -> float:
    """f(X_t) - f(X_0) - ∫∇⁻f dX + coeff ∫∇⁻f d_x L - Σ jump corrections."""
    return ito_residual_parts(f, path, coeff, L, estimator).residual


def mollified_residuals(f: PiecewiseC1Function, path: SamplePath, js=(10, 100, 1000),
                        coeff: float = 1.0, estimator: str = "binning") -> list[tuple[float, float]]:
    L = local_time_for(path, estimator)
    return [(j, ito_residual(mollified(f, j), path, coeff, L)) for j in js]


# ---------------------------------------------------------------------------
# integrals against the Lévy measure
# ---------------------------------------------------------------------------

_SHELLS = 60


def _normal_pdf(mu, sd):
    return lambda y: math.exp(-0.5 * ((y - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))


def _cp_integral(cp: CompoundPoisson, h: Callable[[float], float], lo: float, hi: float) -> float:
    law = cp.size_law
    atoms = law.atoms
    if atoms is not None:
        return cp.rate * sum(pr * h(y) for y, pr in atoms if lo <= abs(y) < hi)
    if law.name == "normal":
        dens = _normal_pdf(*law.params)
        a, b = law.params[0] - 12 * law.params[1], law.params[0] + 12 * law.params[1]
    else:
        a, b = law.params
        dens = lambda y: 1.0 / (law.params[1] - law.params[0])  # noqa: E731
    total = 0.0
    for u, v in ((max(a, lo), min(b, hi)), (max(a, -hi), min(b, -lo))):
        if v > u:
            total += quad_mod.quad(lambda y: h(y) * dens(y), u, v, limit=200)[0]
    return cp.rate * total


def levy_integral(model: LevyModel, h: Callable[[float], float], lo: float = 0.0,
                  hi: float = math.inf) -> tuple[float, bool]:
    """(∫_{lo<=|y|<hi} h(y) n(dy), finite flag) with dyadic shells near 0 for power laws."""
    spec = model.jump_spec
    if isinstance(spec, NoJumps):
        return 0.0, True
    if isinstance(spec, CompoundPoisson):
        return _cp_integral(spec, h, lo, hi), True
    total, finite = 0.0, True

    def dens(y):
        return (spec.c_plus * h(y) + spec.c_minus * h(-y)) * y ** (-1.0 - spec.alpha)

    top = min(hi, 1.0)
    if top > lo:
        if lo > 0:
            total += quad_mod.quad(dens, lo, top, limit=200, points=None)[0]
        else:
            shells = []
            for k in range(_SHELLS):
                u, v = top * 2.0 ** -(k + 1), top * 2.0 ** -k
                shells.append(quad_mod.quad(dens, u, v, limit=200, epsabs=1e-14)[0])
            total += float(sum(shells))
            tail = np.abs(np.array(shells[_SHELLS // 2:]))
            if tail[-1] > 0 and np.max(tail[1:] / np.maximum(tail[:-1], 1e-300)) >= 1 - 1e-9:
                finite = False
            elif shells[-1] != 0 and shells[-2] != 0:
                # geometric remainder below the last shell
                r = shells[-1] / shells[-2]
                if 0 < r < 1:
                    total += shells[-1] * r / (1 - r)
    if spec.big_jump is not None:
        total += _cp_integral(spec.big_jump, h, max(lo, 1.0), hi)
    return (total if finite else math.inf), finite


@dataclass(frozen=True)
class ConditionAReport:
    xs: np.ndarray
    values: np.ndarray
    finite: bool

    @property
    def max(self) -> float:
        return float(np.max(self.values))


ROUNDING_FLOOR = 64 * np.finfo(float).eps


def _remainder_fn(f, x: float) -> Callable[[float], float]:
    """y -> |f(x+y) - f(x) - ∇⁻f(x) y|.

    Below y* = 1e-5 max(1, |x|) the direct difference drowns in rounding, so
    each side continues the power law read off at y* and y*/2.
    """
    fx, dx = float(f(x)), float(f.dleft(x))

    def direct(y):
        fy = float(f(x + y))
        r = abs(fy - fx - dx * y)
        return 0.0 if r <= ROUNDING_FLOOR * (abs(fy) + abs(fx) + abs(dx * y)) else r

    ystar = 1e-5 * max(1.0, abs(x))
    sides = {}
    for sign in (1.0, -1.0):
        r1, r2 = direct(sign * ystar), direct(sign * ystar / 2)
        order = math.log2(r1 / r2) if r1 > 0 and r2 > 0 else 0.0
        sides[sign] = (r1 if r2 > 0 else 0.0, order)

    def h(y):
        if abs(y) >= ystar:
            return direct(y)
        r, order = sides[1.0 if y > 0 else -1.0]
        return r * (abs(y) / ystar) ** order

    return h


def condition_A_check(f: PiecewiseC1Function, model: LevyModel, xs) -> ConditionAReport:
    """∫_{|y|<1} |f(x+y) - f(x) - ∇⁻f(x) y| n(dy) on the points ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    vals, ok = [], True
    for x in xs:
        v, fin = levy_integral(model, _remainder_fn(f, float(x)), 0.0, 1.0)
        vals.append(v)
        ok &= fin
    return ConditionAReport(xs, np.array(vals), bool(ok))


# ---------------------------------------------------------------------------
# Lemma-type p-moment estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PMomentReport:
    p: float
    lhs: float
    lhs_stderr: float
    rhs: float
    ratio: float
    ratio_halves: tuple
    first_moment: float
    terms: tuple

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lhs) and math.isfinite(self.rhs)


def _space_time_integral(model, kernel, t, r, eps, nodes=16):
    s, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * t * (s + 1.0)
    w = 0.5 * t * w
    total = 0.0
    for si, wi in zip(s, w):
        v, _ = levy_integral(model, lambda y: abs(float(kernel(si, y))) ** r, eps)
        total += wi * v
    return total


def pmoment_bound_check(model: LevyModel, f_kernel: Callable, p: float, t: float, n_paths: int,
                        eps: float = 0.01, seed: int = 0) -> PMomentReport:
    """E(Σ_{s<=t} |f(s, ΔX_s)|)^p against its bound with the constant set to 1.

    The jump measure is the one simulated: n restricted to |y| >= eps.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    sums = np.empty(n_paths)
    for k in range(n_paths):
        jumps = sample_jumps(model, t, eps, seed=(seed, k))
        sums[k] = sum(abs(float(f_kernel(s, y))) for s, y in jumps)
    powered = sums ** p
    lhs = float(powered.mean())
    se = float(powered.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.nan

    m = 0
    while 2 ** (m + 1) < p:
        m += 1
    terms = []
    for k in range(m + 2):
        r = 2 ** k
        terms.append(_space_time_integral(model, f_kernel, t, r, eps) ** (p / r))
    rhs = float(sum(terms))
    first = _space_time_integral(model, f_kernel, t, 1, eps)
    half = n_paths // 2
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    halves = tuple(float(powered[sl].mean()) / rhs if rhs > 0 else 0.0
                   for sl in (slice(0, half), slice(half, None)))
    return PMomentReport(p, lhs, se, rhs, ratio, halves, first, tuple(terms))


# ---------------------------------------------------------------------------
# Hölder moments of the local time
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeReport:
    slope: float
    stderr: float
    band: tuple
    spacings: np.ndarray
    moments: np.ndarray
    degenerate: bool = False

    @property
    def defined(self) -> bool:
        return not self.degenerate


def slope_from_moments(spacings, moments) -> SlopeReport:
    spacings = np.asarray(spacings, dtype=float)
    moments = np.asarray(moments, dtype=float)
    if spacings.size < 2 or np.any(moments <= 0) or not np.all(np.isfinite(moments)):
        return SlopeReport(math.nan, math.nan, (math.nan, math.nan), spacings, moments, True)
    fit = stats.linregress(np.log(spacings), np.log(moments))
    se = float(fit.stderr) if spacings.size > 2 else 0.0
    band = (float(fit.slope) - 2 * se, float(fit.slope) + 2 * se)
    return SlopeReport(float(fit.slope), se, band, spacings, moments)


def holder_slope_from_curves(curves: Sequence[Callable], p: float, base_levels, spacings) -> SlopeReport:
    if not p > 2:
        raise ValueError("p must exceed 2")
    base = np.atleast_1d(np.asarray(base_levels, dtype=float))
    spacings = np.asarray(spacings, dtype=float)
    acc = np.zeros(spacings.size)
    for c in curves:
        for k, h in enumerate(spacings):
            acc[k] += np.mean(np.abs(np.asarray(c(base + h)) - np.asarray(c(base))) ** p)
    return slope_from_moments(spacings, acc / max(len(curves), 1))


def holder_moment_check(model: LevyModel, p: float, t: float, n_paths: int, base_levels=(0.0,),
                        spacings=None, dt: float = 1e-4, eps: float = 0.01, seed: int = 0) -> SlopeReport:
    """Slope of log E|L(a+h) - L(a)|^p against log h from Tanaka local times."""
    if not p > 2:
        raise ValueError("p must exceed 2")
    spacings = 2.0 ** -np.arange(2, 7) if spacings is None else np.asarray(spacings, dtype=float)
    base = np.atleast_1d(np.asarray(base_levels, dtype=float))
    levels = np.concatenate([base, (base[:, None] + spacings[None, :]).ravel()])
    acc = np.zeros(spacings.size)
    for k in range(n_paths):
        path = simulate(model, 0.0, t, dt, eps, seed, path_id=k)
        Lv = tanaka_local_time(path, levels)
        L0 = Lv[:base.size]
        Lh = Lv[base.size:].reshape(base.size, spacings.size)
        acc += np.mean(np.abs(Lh - L0[:, None]) ** p, axis=0)
    return slope_from_moments(spacings, acc / n_paths)


# ---------------------------------------------------------------------------
# correlation of the compensated small-jump term
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class K2Report:
    widths: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    slope: float
    predicted: float
    same_interval: bool

    @property
    def identically_zero(self) -> bool:
        return bool(np.all(self.means == 0) and np.all(self.stderrs == 0))


def k2_increments(path: SamplePath, model: LevyModel, eps: float, levels) -> np.ndarray:
    return np.array([tanaka_terms(path, a, model, eps).K2 for a in levels])


def k2_correlation_check(model: LevyModel, t: float, a_i: float, a_j: float, widths, n_paths: int,
                         dt: float = 1e-3, eps: float = 0.01, seed: int = 0) -> K2Report:
    """E[ΔK2(a_i, a_i+w) ΔK2(a_j, a_j+w)] across widths w; a_i == a_j gives the second moment."""
    widths = np.asarray(widths, dtype=float)
    same = a_i == a_j
    if not same and not (a_i + widths.max() <= a_j or a_j + widths.max() <= a_i):
        raise ValueError("intervals must be disjoint")
    rep = check_admissibility(model)
    predicted = 1.0 if same else 1.0 + 2.0 * rep.xi_max
    levels = np.concatenate([[a_i], a_i + widths, [a_j], a_j + widths])
    nw = widths.size
    prods = np.empty((n_paths, nw))
    for k in range(n_paths):
        path = simulate(model, 0.0, t, dt, eps, seed, path_id=k)
        K = k2_increments(path, model, eps, levels)
        di = K[1:nw + 1] - K[0]
        dj = K[nw + 2:] - K[nw + 1]
        prods[k] = di * dj
    means = prods.mean(0)
    se = prods.std(0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros(nw)
    absm = np.abs(means)
    if np.all(absm > 0) and nw >= 2:
        slope = float(stats.linregress(np.log(widths), np.log(absm)).slope)
    else:
        slope = math.nan
    return K2Report(widths, means, se, slope, predicted, same)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def report_csv(rows: Sequence[tuple]) -> str:
    """Rows of (test, statistic, band, pass)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["test", "statistic", "band", "pass"])
    for test, stat, band, ok in rows:
        w.writerow([test, repr(float(stat)), band, "true" if ok else "false"])
    return buf.getvalue()
