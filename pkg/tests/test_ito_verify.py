import math

import numpy as np
import pytest

from conftest import BROWNIAN, brownian_path
from roughlocal.ito_verify import (PiecewiseC1Function, condition_A_check, hinge_function,
                                   holder_moment_check, holder_slope_from_curves, ito_residual,
                                   ito_residual_parts, k2_correlation_check, levy_integral, local_time_for,
                                   mollified_residuals, pmoment_bound_check, power_function, report_csv,
                                   slope_from_moments, abs_function)
from roughlocal.levy_model import CompoundPoisson, LevyModel, PowerSmall, SizeLaw
from roughlocal.local_time import tanaka_local_time
from roughlocal.path_sim import simulate

JUMPS = LevyModel(1.0, 0.2, PowerSmall(0.7, 1.0, 0.4, big_jump=CompoundPoisson(1.0, SizeLaw("uniform", (-2, 2)))))
CP_UNIT = LevyModel(1.0, 0.0, CompoundPoisson(1.5, SizeLaw("constant", (1.0,))))


@pytest.mark.parametrize("coeff", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("k", range(3))
def test_identity_residual_vanishes(coeff, k):
    p = simulate(JUMPS, 0.1, 1.0, 1e-3, 0.05, seed=77, path_id=k)
    assert abs(ito_residual(power_function(1), p, coeff)) < 1e-10


def test_square_residual_small_and_half_biased():
    r1, rh, inc = [], [], []
    for k in range(100):
        parts = ito_residual_parts(power_function(2), brownian_path(k, seed=81, dt=1e-3), 1.0)
        r1.append(parts.residual)
        rh.append(parts.residual - 0.5 * parts.lt_integral)
        inc.append(parts.increment)
    assert np.mean(np.abs(r1)) < 0.05 * np.mean(np.abs(inc))
    # coefficient ½ leaves ½ · 2∫L dx = t/2 in the mean
    assert np.mean(rh) == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize("k", range(4))
@pytest.mark.parametrize("node", [200, 500, 800])
def test_hinge_collapses_onto_tanaka(k, node):
    p = brownian_path(k, seed=83)
    L = local_time_for(p, "tanaka")
    a = float(L.xgrid[node])
    r = ito_residual(hinge_function(a), p, 1.0, L=L)
    # ∇⁻f is sampled at a quarter of the L mesh, so ∫∇⁻f dL reads L within one cell of a
    tol = np.max(np.abs(np.diff(L.values[node - 2:node + 3])))
    assert abs(r) <= tol + 1e-9
    assert float(L(a)) == pytest.approx(tanaka_local_time(p, a), abs=1e-12)


def test_mollified_residuals_stable():
    js = (10, 100, 1000)
    res, inc = [], []
    for k in range(10):
        p = brownian_path(k, seed=85)
        res.append([r for _, r in mollified_residuals(abs_function(), p, js=js, estimator="tanaka")])
        inc.append(abs(p.values[-1]) - abs(p.values[0]))
    mean_abs = np.mean(np.abs(res), axis=0)
    assert np.all(mean_abs < 0.05 * np.mean(np.abs(inc)))


def test_left_derivative_fallback():
    f = PiecewiseC1Function(np.abs)
    assert float(f.dleft(0.0)) == pytest.approx(-1.0)
    assert float(f.dleft(2.0)) == pytest.approx(1.0)


def test_condition_A_linear_zero():
    rep = condition_A_check(power_function(1), LevyModel(1, 0, PowerSmall(1.5, 1, 1)), [-1.0, 0.0, 2.0])
    assert rep.finite and rep.max == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
def test_condition_A_square(alpha):
    m = LevyModel(1, 0, PowerSmall(alpha, 1.0, 2.0))
    rep = condition_A_check(power_function(2), m, [0.0, 1.3])
    assert rep.finite
    assert rep.values == pytest.approx(3.0 / (2.0 - alpha), rel=1e-6)


@pytest.mark.parametrize("alpha", [0.4, 0.8])
def test_condition_A_kink_off_zero(alpha):
    m = LevyModel(1, 0, PowerSmall(alpha, 1.0, 1.0))
    xs = np.array([-0.5, -0.1, 0.2, 0.7])
    rep = condition_A_check(abs_function(), m, xs)
    assert rep.finite
    # |f(x+y) - f(x) - f'(x) y| = 2(|y| - |x|)^+ on the side of y that crosses the kink
    expected = [2 * integrate_excess(abs(x), alpha) for x in xs]
    assert rep.values == pytest.approx(expected, rel=1e-6)


def integrate_excess(d, alpha):
    """∫_d^1 (y - d) y^(-1-alpha) dy for one side of the measure."""
    a1 = (1 - d ** (1 - alpha)) / (1 - alpha)
    a0 = (d ** -alpha - 1) / alpha
    return a1 - d * a0


def test_levy_integral_flags_divergence():
    m = LevyModel(1, 0, PowerSmall(1.2, 1, 1))
    val, finite = levy_integral(m, lambda y: abs(y), 0.0, 1.0)
    assert not finite and val == math.inf
    val, finite = levy_integral(m, lambda y: y * y, 0.0, 1.0)
    assert finite and val == pytest.approx(2 / 0.8, rel=1e-8)


def test_pmoment_zero_kernel():
    rep = pmoment_bound_check(CP_UNIT, lambda s, y: 0.0, 3.0, 1.0, 50)
    assert rep.lhs == 0.0 and rep.ratio == 0.0


def test_pmoment_first_moment_identity():
    m = LevyModel(1, 0, PowerSmall(0.8, 1.0, 1.0))
    rep = pmoment_bound_check(m, lambda s, y: y * y, 1.0, 1.0, 4000, eps=0.05, seed=3)
    assert abs(rep.lhs - rep.first_moment) < 3 * rep.lhs_stderr
    assert rep.rhs >= rep.first_moment


def test_pmoment_poisson_second_moment():
    lam, t = 1.5, 2.0
    rep = pmoment_bound_check(CP_UNIT, lambda s, y: 1.0, 2.0, t, 20_000, eps=0.01, seed=5)
    assert rep.terms == pytest.approx(((lam * t) ** 2, lam * t))
    assert rep.rhs == pytest.approx(lam * t + (lam * t) ** 2)
    assert abs(rep.lhs - rep.rhs) < 3 * rep.lhs_stderr
    assert rep.ratio == pytest.approx(1.0, abs=0.05)


def test_slope_of_linear_curve():
    rep = holder_slope_from_curves([lambda x: x], 3.0, [0.0, 0.5], 2.0 ** -np.arange(1, 6))
    assert rep.slope == pytest.approx(3.0, abs=1e-12)


@pytest.mark.parametrize("hurst,p", [(0.5, 4.0), (0.3, 6.0), (0.8, 2.5)])
def test_slope_recovers_holder_exponent(hurst, p):
    """Fractional Brownian curves: E|B(h) - B(0)|^p is exactly proportional to h^(p H)."""
    spacings = 2.0 ** -np.arange(2, 8)
    pts = np.concatenate([[0.5], 0.5 + spacings])
    s, t = np.meshgrid(pts, pts)
    cov = 0.5 * (s ** (2 * hurst) + t ** (2 * hurst) - np.abs(t - s) ** (2 * hurst))
    draws = np.random.default_rng(7).multivariate_normal(np.zeros(pts.size), cov, size=4000)
    order = np.argsort(pts)
    curves = [lambda x, d=d: np.interp(x, pts[order], d[order]) for d in draws]
    rep = holder_slope_from_curves(curves, p, [0.5], spacings)
    assert rep.slope == pytest.approx(p * hurst, abs=0.1)


def test_slope_degenerate_for_flat_curve():
    rep = holder_slope_from_curves([lambda x: 0 * x], 4.0, [0.0], [0.1, 0.2])
    assert rep.degenerate and not rep.defined
    p = simulate(LevyModel(0.0, 1.0), 0.0, 1.0, 1e-2, 0.0, 0)
    assert slope_from_moments([0.1, 0.2], [0.0, 0.0]).degenerate
    assert tanaka_local_time(p, -5.0) == 0.0


def test_brownian_holder_slope():
    rep = holder_moment_check(BROWNIAN, 4.0, 1.0, 2000, spacings=2.0 ** -np.arange(3, 7), dt=1e-3, seed=4)
    assert rep.slope >= 2.0 - 0.3


def test_k2_zero_without_small_jumps():
    for m in (BROWNIAN, LevyModel(1.0, 0.0, CompoundPoisson(2.0, SizeLaw("constant", (1.5,))))):
        rep = k2_correlation_check(m, 1.0, 0.0, 0.5, [0.1, 0.2], 20, dt=1e-2, eps=0.05)
        assert rep.identically_zero


def test_k2_same_interval_slope():
    m = LevyModel(1.0, 0.0, PowerSmall(0.8, 1.0, 1.0))
    rep = k2_correlation_check(m, 1.0, 0.0, 0.0, [0.05, 0.1, 0.2, 0.4], 400, dt=1e-3, eps=0.05, seed=3)
    assert rep.same_interval and rep.predicted == 1.0
    assert rep.slope >= 1.0 - 0.3


def test_k2_disjoint_required():
    with pytest.raises(ValueError):
        k2_correlation_check(BROWNIAN, 1.0, 0.0, 0.1, [0.2], 5)


def test_report_csv():
    text = report_csv([("a", 1.5, "< 2", True), ("b", 3.0, "< 2", False)])
    assert text.splitlines() == ["test,statistic,band,pass", "a,1.5,< 2,true", "b,3.0,< 2,false"]
