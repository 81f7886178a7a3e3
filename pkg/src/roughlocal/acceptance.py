"""Acceptance criteria as callable checks.

Each check returns a ``CriterionResult``; ``run_all`` drives them for the CLI
``--check`` mode and the test suite uses the same functions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .integrate import (convergence_under_mollification, curve_support, integral_cadlag_gdL,
                        lift_pair, rough_integral_gdL, rough_integral_LdL, young_integral)
from .ito_verify import holder_moment_check, ito_residual_parts, power_function
from .levy_model import CompoundPoisson, LevyModel, PowerSmall, SizeLaw
from .local_time import (local_time_binning, local_time_tanaka, path_grid, tanaka_cell_average,
                         tanaka_local_time)
from .path_sim import simulate
from .presets import weierstrass
from .qvar_control import QVarFunction, build_control, from_callable, mollify
from .rough_lift import GeometricRoughPath, Level2Path, chen_combine, converge_lift
from .variation import pvar_bruteforce, pvar_exact, quadratic_variation_sum

BROWNIAN = LevyModel(1.0, 0.0)
LT_POINTS = 1023  # the zero-padded support then has 2^10 cells


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    statistic: float
    threshold: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.number:2d} {self.title}: statistic={self.statistic:.6g} "
                f"({self.threshold}) {self.detail}").rstrip()


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _brownian(k, dt=1e-4, seed=0, T=1.0):
    return simulate(BROWNIAN, 0.0, T, dt, 0.0, seed, path_id=k)


# ---------------------------------------------------------------------------


def criterion_1(n_paths=100) -> CriterionResult:
    errs = []
    for k in range(n_paths):
        p = _brownian(k, seed=101)
        L = local_time_binning(p, path_grid(p, LT_POINTS))
        errs.append(abs(L.mass() - 0.5) / 0.5)
    stat = float(np.mean(errs))
    return CriterionResult(1, "occupation identity", stat, "mean relative error < 0.02", stat < 0.02,
                           f"max={max(errs):.2e}")


def _sup_rel(path, bins):
    grid = path_grid(path, bins)
    B = local_time_binning(path, grid)
    T = tanaka_cell_average(path, grid)
    return float(np.max(np.abs(T.values - B.values)) / np.max(B.values))


def criterion_2(n_paths=100, dt=1e-5, bins=32) -> CriterionResult:
    bm = [_sup_rel(simulate(BROWNIAN, 0.0, 1.0, dt, 0.0, 202, k), bins) for k in range(n_paths)]
    jm_model = LevyModel(1.0, 0.0, PowerSmall(0.8, 1.0, 1.0))
    jm = [_sup_rel(simulate(jm_model, 0.0, 1.0, dt, 0.01, 203, k), bins) for k in range(n_paths)]
    ok = max(bm) < 0.05 and max(jm) < 0.08
    return CriterionResult(2, "Tanaka vs binning", max(bm), "every path: Brownian < 0.05, jump < 0.08", ok,
                           f"brownian mean={np.mean(bm):.4f} max={max(bm):.4f}; "
                           f"jump mean={np.mean(jm):.4f} max={max(jm):.4f}")


@lru_cache(maxsize=2)
def _tanaka_batch(n_paths, dt, levels):
    out = np.empty((n_paths, len(levels)))
    for k in range(n_paths):
        out[k] = tanaka_local_time(_brownian(k, dt=dt, seed=303), np.array(levels))
    return out


HOLDER_SPACINGS = tuple(2.0 ** -np.arange(3, 8))


def criterion_3(n_paths=10_000, dt=1e-4) -> CriterionResult:
    vals = _tanaka_batch(n_paths, dt, (0.0,) + HOLDER_SPACINGS)[:, 0]
    target = 0.5 * math.sqrt(2.0 / math.pi)
    m, se = _mean_se(vals)
    z = abs(m - target) / se
    return CriterionResult(3, "mean local time at 0", z, "|mean - ½√(2/π)| / stderr < 3", z < 3,
                           f"mean={m:.5f} target={target:.5f} stderr={se:.5f}")


def criterion_4(n_paths=10_000, dt=1e-4, p=4.0) -> CriterionResult:
    from .ito_verify import slope_from_moments

    vals = _tanaka_batch(n_paths, dt, (0.0,) + HOLDER_SPACINGS)
    mom = np.mean(np.abs(vals[:, 1:] - vals[:, :1]) ** p, axis=0)
    rep = slope_from_moments(np.array(HOLDER_SPACINGS), mom)
    return CriterionResult(4, "Hölder moment slope", rep.slope, "slope >= 1.7 for p = 4", rep.slope >= 1.7,
                           f"band=({rep.band[0]:.3f}, {rep.band[1]:.3f})")


def criterion_5(n_paths=100, dt=1e-4, n_points=1024) -> CriterionResult:
    ratios = []
    for k in range(n_paths):
        p = _brownian(k, dt=dt, seed=505)
        L = local_time_tanaka(p, path_grid(p, n_points))
        ratios.append(quadratic_variation_sum(L, n_points) / (2.0 * L.mass()))
    m = float(np.mean(ratios))
    return CriterionResult(5, "Bouleau-Yor statistic", m, "|mean ratio - 1| < 0.10", abs(m - 1) < 0.10,
                           f"min={min(ratios):.3f} max={max(ratios):.3f}")


def criterion_6(n_curves=1000, seed=606) -> CriterionResult:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_curves):
        n = int(rng.integers(2, 13))
        ys = rng.integers(-16, 17, size=n) / 8.0
        p = float(rng.choice([1.0, 2.0, 3.0, 4.0]))
        if pvar_exact(ys, p) != pvar_bruteforce(ys, p):
            bad += 1
    return CriterionResult(6, "p-variation oracle", bad, "mismatches == 0", bad == 0,
                           f"{n_curves} curves, dyadic values, integer p")


def criterion_7(n_paths=50, dt=1e-4, p=2.5) -> CriterionResult:
    steps = [[], []]
    for k in range(n_paths):
        path = _brownian(k, dt=dt, seed=707)
        v = [pvar_exact(local_time_tanaka(path, path_grid(path, n)), p) for n in (512, 1024, 2048)]
        steps[0].append(abs(v[1] - v[0]) / v[0])
        steps[1].append(abs(v[2] - v[1]) / v[1])
    med = [float(np.median(s)) for s in steps]
    stat = max(med)
    return CriterionResult(7, "p-variation under grid refinement", stat, "median change < 0.05 per step",
                           stat < 0.05, f"512->1024 {med[0]:.4f}, 1024->2048 {med[1]:.4f}")


# ---------------------------------------------------------------------------
# lifts shared by the identity criteria
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def suite_lifts() -> tuple:
    """A set of lifts of the kinds built elsewhere in the suite."""
    lifts = []
    for k in range(4):
        p = _brownian(k, seed=808)
        for L in (local_time_tanaka(p, path_grid(p, LT_POINTS)), local_time_binning(p, path_grid(p, LT_POINTS))):
            lo, hi = curve_support(L)
            g = from_callable(lambda x: x, lo, hi, 1025)
            lifts.append(lift_pair(g, L, theta=2.15, depth=10))
            gw = QVarFunction(np.linspace(lo, hi, 1025), weierstrass(np.linspace(lo, hi, 1025)), q=1.5)
            lifts.append(lift_pair(gw, L, depth=10))
    g = from_callable(np.cos, 0.0, 1.0, 1025)
    lifts.append(converge_lift(lambda x: np.c_[np.sin(x), np.cos(x)], build_control(g), 2.15,
                               m_max=6, tol=1e-12, depth=10))
    return tuple(lifts)


def _identity_errors(rp: GeometricRoughPath, rng) -> tuple[float, float]:
    """Max Chen and symmetric-part errors over every level of a lift.

    Each level checks all adjacent triples of its own partition and 400
    random node triples of the fine grid.
    """
    chen, sym = 0.0, 0.0
    for m in range(1, rp.depth + 1):
        P = rp.lift(m)
        n = P.n_nodes - 1
        idx = np.arange(0, n + 1, 2 ** (rp.depth - m))
        if idx.size >= 3:
            chen = max(chen, _chen_error(P, idx[:-2], idx[1:-1], idx[2:]))
        tri = np.sort(np.array([rng.choice(n + 1, 3, replace=False) for _ in range(400)]), axis=1)
        chen = max(chen, _chen_error(P, tri[:, 0], tri[:, 1], tri[:, 2]))
        sym = max(sym, _sym_error(P, tri[:, 0], tri[:, 2]), _sym_error(P, idx[:-1], idx[1:]))
    return chen, sym


def _tensor(P: Level2Path, s, t):
    z1 = P.Z[t] - P.Z[s]
    A = P.area(s, t)
    z2 = 0.5 * z1[:, :, None] * z1[:, None, :]
    z2[:, 0, 1] += 0.5 * A
    z2[:, 1, 0] -= 0.5 * A
    return z1, z2


def _chen_error(P, a, b, c) -> float:
    x1, x2 = _tensor(P, a, b)
    y1, y2 = _tensor(P, b, c)
    z1, z2 = _tensor(P, a, c)
    pred = x2 + y2 + x1[:, :, None] * y1[:, None, :]
    return float(max(np.max(np.abs(pred - z2)), np.max(np.abs(x1 + y1 - z1))))


def _sym_error(P, s, t) -> float:
    z1, z2 = _tensor(P, s, t)
    sym = 0.5 * (z2 + np.transpose(z2, (0, 2, 1)))
    return float(np.max(np.abs(sym - 0.5 * z1[:, :, None] * z1[:, None, :])))


def criterion_8() -> CriterionResult:
    rng = np.random.default_rng(808)
    chen, sym = 0.0, 0.0
    for rp in suite_lifts():
        c, s = _identity_errors(rp, rng)
        chen, sym = max(chen, c), max(sym, s)
    # Chen combination routine itself, on the rough-path increments
    rp = suite_lifts()[0]
    P = rp.path
    A, B = P.increment(0, 300), P.increment(300, P.n_nodes - 1)
    z1, z2 = chen_combine(A, B)
    ref = P.increment(0, P.n_nodes - 1)
    chen = max(chen, float(np.max(np.abs(z2 - ref[1]))))
    ok = chen < 1e-10 and sym < 1e-12
    return CriterionResult(8, "Chen and symmetric-part identities", chen, "Chen < 1e-10, symmetric < 1e-12",
                           ok, f"symmetric={sym:.2e}, {len(suite_lifts())} lifts")


def criterion_9(n_runs=100, theta=2.15, dt=1e-4) -> CriterionResult:
    good = 0
    for k in range(n_runs):
        p = _brownian(k, dt=dt, seed=909)
        L = local_time_tanaka(p, path_grid(p, LT_POINTS))
        lo, hi = curve_support(L)
        g = from_callable(lambda x: x, lo, hi, 1025)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rp = lift_pair(g, L, theta=theta, depth=10, m_max=8, tol=1e-300)
        d = [max(a, b) for m, a, b in rp.diagnostics if 2 <= m <= 8]
        good += all(d[i + 1] < d[i] for i in range(len(d) - 1))
    frac = good / n_runs
    return CriterionResult(9, "lift distances decreasing", frac, "fraction of runs >= 0.95", frac >= 0.95,
                           f"{good}/{n_runs} runs strictly decreasing over m = 2..8")


def criterion_10() -> CriterionResult:
    """Every trace level of ∫L dL against ½(L(b)² - L(a)²) of the lift at that level."""
    worst = 0.0
    for rp in suite_lifts():
        P = rp.path
        n = P.n_nodes - 1
        for ia, ib in ((0, n), (n // 7, n // 2), (n // 3, n - 5)):
            res = rough_integral_LdL(rp, P.x[ia], P.x[ib])
            for m, v in res.trace:
                Z = rp.lift(m).Z
                La, Lb = Z[ia, 0], Z[ib, 0]
                worst = max(worst, abs(v - 0.5 * (Lb ** 2 - La ** 2)) / max(1.0, La ** 2, Lb ** 2))
    return CriterionResult(10, "∫L dL identity", worst, "< 1e-6 relative on every level", worst < 1e-6)


def criterion_11(n_paths=50, depth=16) -> CriterionResult:
    rel = []
    for k in range(n_paths):
        p = _brownian(k, seed=1111)
        L = local_time_binning(p, path_grid(p, LT_POINTS))
        lo, hi = curve_support(L)
        xs = np.linspace(lo, hi, LT_POINTS + 2)
        g = QVarFunction(xs, weierstrass(xs), q=1.5)
        y = young_integral(g, L)
        r = rough_integral_gdL(lift_pair(g, L, depth=depth))
        rel.append(abs(y.value - r.value) / abs(y.value))
    stat = max(rel)
    return CriterionResult(11, "Young vs rough", stat, "every path relative difference < 1e-3", stat < 1e-3,
                           f"median={np.median(rel):.2e}")


def criterion_12() -> CriterionResult:
    g = from_callable(np.cos, 0.0, 1.0, 4097)
    rp = converge_lift(lambda x: np.c_[np.sin(x), np.cos(x)], build_control(g), 2.15,
                       m_max=9, tol=1e-12, depth=12)
    z1, z2 = rp.path.increment(0, rp.path.n_nodes - 1)
    s, c = math.sin(1.0), math.cos(1.0)
    exact = np.array([[0.5 * s * s, -(0.5 - math.sin(2.0) / 4)],
                      [0.5 + math.sin(2.0) / 4 - s, 0.5 * (c - 1) ** 2]])
    err2 = float(np.max(np.abs(z2 - exact)))
    integral = rough_integral_gdL(rp).value
    err = abs(integral - (0.5 + math.sin(2.0) / 4))
    stat = max(err, err2)
    return CriterionResult(12, "smooth pair oracle", stat, "< 1e-6", stat < 1e-6,
                           f"level-2 error={err2:.2e}, ∫cos d(sin) error={err:.2e}")


def criterion_13(n_paths=100) -> CriterionResult:
    f = power_function(2)
    one, half = [], []
    for k in range(n_paths):
        parts = ito_residual_parts(f, _brownian(k, seed=1313), coeff=1.0)
        one.append(parts.residual)
        half.append(parts.residual - 0.5 * parts.lt_integral)
    m1, s1 = _mean_se(one)
    m2, s2 = _mean_se(half)
    z1, z2 = abs(m1) / s1, abs(m2) / s2
    ok = z1 < 2 and z2 > 4
    return CriterionResult(13, "Itô coefficient discrimination", z1, "coeff 1: |z| < 2; coeff ½: |z| > 4", ok,
                           f"coeff1 mean={m1:.4f}±{s1:.4f}; coeff½ mean={m2:.4f}±{s2:.4f} (z={z2:.1f})")


def criterion_14(n_paths=100) -> CriterionResult:
    model = LevyModel(1.0, 0.0, CompoundPoisson(1.0, SizeLaw("rademacher", (0.5,))))
    f = power_function(2)
    res, inc = [], []
    for k in range(n_paths):
        parts = ito_residual_parts(f, simulate(model, 0.0, 1.0, 1e-4, 0.0, 1414, k), coeff=1.0)
        res.append(abs(parts.residual))
        inc.append(abs(parts.increment))
    stat = float(np.mean(res) / np.mean(inc))
    return CriterionResult(14, "Itô with jumps", stat, "mean|residual| / mean|Δf| < 0.05", stat < 0.05)


def criterion_15() -> CriterionResult:
    p = _brownian(0, seed=1515)
    L = local_time_binning(p, path_grid(p, LT_POINTS))
    lo, hi = curve_support(L)
    xs = np.linspace(lo, hi, 2001)
    jumps = ((xs[600], 0.7), (xs[1000], -1.2), (xs[1400], 0.4))
    vals = np.sin(3 * xs) + sum(s * (xs >= x) for x, s in jumps)
    g = QVarFunction(xs, vals, jumps, q=1.0)
    values = [integral_cadlag_gdL(g, L, d).value for d in (0.1, 0.5, 1.0)]
    spread = max(values) - min(values)
    x0 = xs[1000]
    step = QVarFunction(xs, 0.9 * (xs >= x0), ((x0, 0.9),), q=1.0)
    r = integral_cadlag_gdL(step, L, 0.5)
    step_err = abs(r.extras["L_dg"] - 0.9 * float(L(x0)))
    ok = spread < 1e-8 and step_err < 1e-8
    return CriterionResult(15, "càdlàg route", spread, "delta spread < 1e-8, step error < 1e-8", ok,
                           f"step error={step_err:.2e}")


def criterion_16(n_paths=20, js=(10, 100, 1000)) -> CriterionResult:
    # g = |x|: the one-sided kernel shifts by 1/j, so the deviation is about 2 L(0) / j
    g = from_callable(np.abs, -4.0, 4.0, 80001)
    smoothed = [mollify(g, j) for j in js]
    good = 0
    rel = []
    for k in range(n_paths):
        p = _brownian(k, seed=1616)
        L = local_time_binning(p, path_grid(p, LT_POINTS))
        direct = young_integral(g, L).value
        dev = [abs(young_integral(gj, L).value - direct) for gj in smoothed]
        good += all(dev[i + 1] < dev[i] for i in range(len(dev) - 1))
        predicted = 2.0 * float(L(0.0)) / js[-1]
        if predicted > 1e-3 / js[-1]:
            rel.append(abs(dev[-1] - predicted) / predicted)
    return CriterionResult(16, "mollification convergence", good / n_paths, "all paths decreasing in j",
                           good == n_paths,
                           f"{good}/{n_paths}; median |dev - 2L(0)/j|/(2L(0)/j) at j={js[-1]}: "
                           f"{np.median(rel):.3f}")


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
    12: criterion_12, 13: criterion_13, 14: criterion_14, 15: criterion_15, 16: criterion_16,
}


def run_criterion(number: int) -> CriterionResult:
    t0 = time.perf_counter()
    r = CRITERIA[number]()
    return CriterionResult(r.number, r.title, r.statistic, r.threshold, r.passed, r.detail,
                           time.perf_counter() - t0)


def run_all(numbers=None, echo=print) -> list[CriterionResult]:
    out = []
    for n in numbers or sorted(CRITERIA):
        r = run_criterion(n)
        if echo:
            echo(r.line())
        out.append(r)
    return out
