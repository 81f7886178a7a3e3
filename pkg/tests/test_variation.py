import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brownian_path
from roughlocal.local_time import LocalTimeCurve, local_time_tanaka, path_grid
from roughlocal.variation import (DiscreteCurve, pvar_bruteforce, pvar_dyadic_bound, pvar_exact,
                                  quadratic_variation_sum, turning_points)


@pytest.mark.parametrize("ys,p,expected", [((0, 1, 0), 2, 2.0), ((0, 1, 0.5, 1.5), 2, 2.25),
                                           ((0, 0.5, 2, 3), 1, 3.0), ((4, 4, 4), 3, 0.0)])
def test_examples(ys, p, expected):
    assert pvar_exact(ys, p) == pytest.approx(expected)


def test_bruteforce_agreement_exact():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(2, 13))
        ys = rng.integers(-16, 17, size=n) / 8.0
        p = float(rng.choice([1, 2, 3]))
        assert pvar_exact(ys, p) == pvar_bruteforce(ys, p)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=2, max_size=10), st.floats(1, 4))
def test_bruteforce_agreement_real(ys, p):
    assert pvar_exact(ys, p) == pytest.approx(pvar_bruteforce(ys, p), rel=1e-12, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=40))
def test_monotone_in_p_and_symmetric(ys):
    ys = np.cumsum(np.array(ys) - 0.5) / max(len(ys), 1)  # steps bounded by 1
    vals = [pvar_exact(ys, p) for p in (1.0, 1.5, 2.0, 3.0)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert pvar_exact(-ys, 2.0) == pytest.approx(vals[2])
    assert pvar_exact(ys[::-1], 2.0) == pytest.approx(vals[2])


def test_turning_points_keep_extrema():
    y = np.array([0, 1, 1, 2, 1, 1, 0, 3])
    assert list(y[turning_points(y)]) == [0, 2, 0, 3]


def test_curve_validation():
    with pytest.raises(ValueError):
        DiscreteCurve(np.arange(3), np.arange(2))
    with pytest.raises(ValueError):
        pvar_exact([0, 1], 0.5)


def test_dyadic_bound_constant():
    assert pvar_dyadic_bound(np.ones(17), 2.0) == 0.0


def _alt_bound_bruteforce(m, p, gamma):
    y = np.array([(-1.0) ** k for k in range(2 ** m + 1)])
    total = 0.0
    for n in range(1, m + 1):
        step = 2 ** (m - n)
        pts = [y[i] for i in range(0, 2 ** m + 1, step)]
        total += n ** gamma * sum(abs(b - a) ** p for a, b in zip(pts, pts[1:]))
    return total


@pytest.mark.parametrize("m", [2, 3, 5])
def test_dyadic_bound_alternating(m):
    y = np.array([(-1.0) ** k for k in range(2 ** m + 1)])
    # only the finest level sees the sign flips: 2^m flips of size 2
    closed = m ** 1.1 * 2 ** m * 2.0 ** 2
    assert pvar_dyadic_bound(y, 2.0, 1.1) == pytest.approx(closed)
    assert pvar_dyadic_bound(y, 2.0, 1.1) == pytest.approx(_alt_bound_bruteforce(m, 2.0, 1.1))


def test_dyadic_bound_monotone_under_refinement(bm_tanaka):
    x = np.linspace(bm_tanaka.xgrid[0], bm_tanaka.xgrid[-1], 1025)
    y = bm_tanaka(x)
    coarse = [pvar_dyadic_bound(y[:: 2 ** s], 2.5) for s in (4, 3, 2, 1, 0)]
    assert all(b >= a for a, b in zip(coarse, coarse[1:]))


def test_dyadic_gamma_must_exceed():
    with pytest.raises(ValueError):
        pvar_dyadic_bound(np.zeros(5), 2.0, 0.5)


def test_qv_constant_and_linear():
    x = np.linspace(0, 1, 101)
    assert quadratic_variation_sum(LocalTimeCurve(x, np.full_like(x, 3.0), 1.0), 50) == pytest.approx(0.0)
    n = 200
    lin = LocalTimeCurve(x, x.copy(), 1.0)
    assert quadratic_variation_sum(lin, n + 1) == pytest.approx(1.0 / n)


def test_bouleau_yor_one_path():
    p = brownian_path(3, seed=61)
    L = local_time_tanaka(p, path_grid(p, 1024))
    assert quadratic_variation_sum(L, 1024) / (2 * L.mass()) == pytest.approx(1.0, rel=0.25)


def test_pvar_bounded_vs_total_variation_grows():
    p = brownian_path(4, seed=71)
    tv, p25 = [], []
    for n in (1024, 2048, 4096):
        L = local_time_tanaka(p, path_grid(p, n))
        tv.append(pvar_exact(L, 1.0))
        p25.append(pvar_exact(L, 2.5))
    # per doubling: total variation grows like sqrt(2), the 2.5-variation by a few percent
    tv_growth = [b / a for a, b in zip(tv, tv[1:])]
    p_growth = [b / a for a, b in zip(p25, p25[1:])]
    assert min(tv_growth) > 1.25
    assert max(p_growth) < 1.1
