import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughlocal.qvar_control import build_control, build_partition, from_callable
from roughlocal.rough_lift import (Level2Path, MisalignedSamplesError, _kahan_cumsum,
                                   chen_combine, converge_lift, d_theta, d_theta_components, lift_smooth)

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])


def path(points):
    pts = np.asarray(points, dtype=float)
    return Level2Path(np.arange(len(pts), dtype=float), pts)


def test_single_segment():
    p = path([[0, 0], [2.0, -1.0]])
    z1, z2 = p.increment(0, 1)
    assert np.allclose(z2, 0.5 * np.outer(z1, z1), atol=1e-15)


def test_two_segments_closed_form():
    z1, z2 = path([[0, 0], [1, 0], [1, 1]]).increment(0, 2)
    assert np.allclose(z2, 0.5 * (np.outer(E1, E1) + np.outer(E2, E2)) + np.outer(E1, E2))


def test_chen_identity_element_and_tensor():
    A = (np.array([0.3, -1.0]), np.array([[0.1, 0.2], [0.3, 0.4]]))
    B = (np.zeros(2), np.zeros((2, 2)))
    z1, z2 = chen_combine(A, B)
    assert np.array_equal(z1, A[0]) and np.array_equal(z2, A[1])
    _, z2 = chen_combine((E1, np.zeros((2, 2))), (E2, np.zeros((2, 2))))
    assert np.array_equal(z2, np.outer(E1, E2))


def test_chen_associative(rng):
    pieces = [(rng.normal(size=2), rng.normal(size=(2, 2))) for _ in range(3)]
    left = chen_combine(chen_combine(pieces[0], pieces[1]), pieces[2])
    right = chen_combine(pieces[0], chen_combine(pieces[1], pieces[2]))
    assert np.allclose(left[0], right[0], atol=1e-12) and np.allclose(left[1], right[1], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=4, max_size=30), st.data())
def test_chen_and_symmetric_part(points, data):
    p = path(points)
    n = p.n_nodes
    s = data.draw(st.integers(0, n - 3))
    u = data.draw(st.integers(s + 1, n - 2))
    t = data.draw(st.integers(u + 1, n - 1))
    whole = p.increment(s, t)
    combined = chen_combine(p.increment(s, u), p.increment(u, t))
    assert np.allclose(whole[1], combined[1], atol=1e-10 * max(1, np.abs(whole[1]).max()))
    z1, z2 = whole
    assert np.allclose(0.5 * (z2 + z2.T), 0.5 * np.outer(z1, z1), atol=1e-12 * max(1, np.abs(z2).max()))


def test_area_matches_direct_sum(rng):
    pts = rng.normal(size=(200, 2))
    p = path(pts)
    d = np.diff(pts[40:151], axis=0)
    c = pts[40:150] - pts[40]
    direct = np.sum(c[:, 0] * d[:, 1] - c[:, 1] * d[:, 0])
    assert float(p.area(40, 150)) == pytest.approx(direct, rel=1e-12)


def test_kahan_prefix_beats_naive():
    x = np.full(100_000, 0.1)
    assert abs(_kahan_cumsum(x)[-1] - 10_000.0) <= abs(np.cumsum(x)[-1] - 10_000.0)


def _smooth_rp(depth=10):
    g = from_callable(np.cos, 0.0, 1.0, 4097)
    w1 = build_control(g)
    return converge_lift(lambda x: np.c_[np.sin(x), np.cos(x)], w1, 2.15, m_max=8, tol=1e-300, depth=depth)


def test_nesting_identity():
    rp = _smooth_rp()
    m, n = 3, 6
    lift = rp.lift(m)
    stride_n = 2 ** (rp.depth - n)
    stride_m = 2 ** (rp.depth - m)
    # a level-n cell inside the first level-m segment
    s = stride_n * 2
    z1, z2 = lift.increment(s, s + stride_n)
    dZ = lift.Z[stride_m] - lift.Z[0]
    assert np.allclose(z2, 2.0 ** (2 * (m - n) - 1) * np.outer(dZ, dZ), atol=1e-14)


def test_recursion_antisymmetric_sum():
    rp = _smooth_rp()
    m = 4
    fine, coarse = rp.lift(m + 1), rp.lift(m)
    st_m = 2 ** (rp.depth - m)
    for s in range(0, fine.n_nodes - 1, st_m):
        t = s + st_m
        diff = fine.increment(s, t)[1] - coarse.increment(s, t)[1]
        a = fine.Z[s + st_m // 2] - fine.Z[s]
        b = fine.Z[t] - fine.Z[s + st_m // 2]
        expected = 0.5 * (np.outer(a, b) - np.outer(b, a))
        assert np.allclose(diff, expected, atol=1e-10)


def test_lift_smooth_checks_alignment():
    g = from_callable(np.cos, 0.0, 1.0, 65)
    w1 = build_control(g)
    pts = build_partition(w1, 2)
    lift = lift_smooth(np.c_[np.sin(pts), np.cos(pts)], w1, 2, pts)
    assert lift.level == 2
    with pytest.raises(MisalignedSamplesError):
        lift_smooth(np.zeros((4, 2)), w1, 2)
    with pytest.raises(MisalignedSamplesError):
        lift_smooth(np.zeros((5, 2)), w1, 2, pts + 1e-3)


def test_d_theta_zero_and_collapse(rng):
    X = path(rng.normal(size=(30, 2)))
    assert d_theta(X, X, 2.2) == 0.0
    Y = path(np.zeros((30, 2)))
    d1, _ = d_theta_components(X, Y, 2.2)
    assert d1 == pytest.approx(_dp_norm(X.Z, 2.2), rel=1e-12)


def _dp_norm(Z, theta):
    n = Z.shape[0]
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = max(best[i] + np.linalg.norm(Z[j] - Z[i]) ** theta for i in range(j))
    return best[-1] ** (1 / theta)


def test_d_theta_homogeneity():
    X = path([[0, 0], [1, 0], [1, 1]])
    X2 = path([[0, 0], [2, 0], [2, 2]])
    Y = path(np.zeros((3, 2)))
    d1, d2 = d_theta_components(X, Y, 2.5)
    e1, e2 = d_theta_components(X2, Y, 2.5)
    assert e1 == pytest.approx(2 * d1) and e2 == pytest.approx(4 * d2)
    # level-2 distance is reported as a θ/2-variation, i.e. degree 2 in the path
    assert e2 ** 0.5 == pytest.approx(2 * d2 ** 0.5)


def test_smooth_lift_converges_and_matches_iterated_integrals():
    rp = _smooth_rp(depth=12)
    d = [max(a, b) for _, a, b in rp.diagnostics]
    assert all(b < a for a, b in zip(d, d[1:]))
    assert d[-1] / d[0] < 1e-3
    z1, z2 = rp.increment(0.0, 1.0)
    # ∫ sin d cos = -∫ sin² on [0, 1]; the reverse order follows by parts
    s1, c1 = np.sin(1.0), np.cos(1.0)
    i_sc = -(0.5 - np.sin(2.0) / 4.0)
    i_cs = (c1 - 1.0) * s1 - i_sc
    assert z2[0, 1] == pytest.approx(i_sc, abs=1e-6)
    assert z2[1, 0] == pytest.approx(i_cs, abs=1e-6)
    assert z2[0, 0] == pytest.approx(0.5 * s1 ** 2, abs=1e-12)


def test_constant_path_converges_immediately():
    g = from_callable(lambda x: 0 * x + 1.0, 0.0, 1.0, 65)
    rp = converge_lift(lambda x: np.c_[np.zeros_like(x), np.ones_like(x)], build_control(g), 2.15)
    assert rp.converged and rp.level == 2 and rp.diagnostics[0][1:] == (0.0, 0.0)


def test_theta_range_validated():
    g = from_callable(np.cos, 0.0, 1.0, 65)
    with pytest.raises(ValueError):
        converge_lift(lambda x: np.c_[x, x], build_control(g), 3.2)


def test_non_cauchy_warns():
    g = from_callable(lambda x: x, 0.0, 1.0, 4097)

    def provider(x):
        # oscillation that only shows up at finer levels
        return np.c_[np.sin(2 ** 9 * np.pi * x), x]

    with pytest.warns(RuntimeWarning):
        rp = converge_lift(provider, build_control(g), 2.15, m_max=7, tol=1e-300, depth=10)
    assert rp.non_cauchy


def test_csv_outputs():
    rp = _smooth_rp()
    rows = rp.dump_csv(3).strip().splitlines()
    assert rows[0].startswith("a,b,Z1_1") and len(rows) == 1 + 8
    assert rp.diagnostics_csv().splitlines()[0] == "m,d1,d2"
