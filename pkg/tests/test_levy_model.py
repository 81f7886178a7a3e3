import math

import numpy as np
import pytest
from scipy import stats

from roughlocal.levy_model import (CompoundPoisson, Holds, InfiniteActivityError, LevyModel, NoJumps,
                                   PowerSmall, SizeLaw, check_admissibility, compensator_drift,
                                   effective_drift, integrable, jump_rate, sample_jumps)


def power(alpha, cp=1.0, cm=1.0):
    return LevyModel(1.0, 0.0, PowerSmall(alpha, cp, cm))


def test_power_small_alpha_one_admissible():
    rep = check_admissibility(power(1.0))
    assert rep.holds_3_2 is Holds.TRUE
    assert rep.holds_4_3 is Holds.TRUE


def test_no_jumps_everything_holds():
    rep = check_admissibility(LevyModel(1.0, 0.0, NoJumps()))
    assert rep.holds_3_2 is Holds.TRUE and rep.holds_4_3 is Holds.TRUE
    assert rep.xi_max == 0.5
    assert all(h is Holds.TRUE for _, _, h in rep.q_eps_table)


def test_power_small_alpha_1_4_splits_conditions():
    rep = check_admissibility(power(1.4))
    assert rep.holds_3_2 is Holds.TRUE
    assert rep.holds_4_3 is Holds.FALSE


@pytest.mark.parametrize("alpha", np.round(np.arange(0.1, 2.0, 0.1), 1))
@pytest.mark.parametrize("beta", [0.25, 0.75, 1.0, 4 / 3, 1.5, 1.9])
def test_quadrature_route_matches_closed_form(alpha, beta):
    if abs(beta - alpha) < 0.05:
        pytest.skip("too close to the boundary for shell quadrature")
    m = power(alpha)
    assert integrable(m, beta, "quadrature") is integrable(m, beta, "closed_form")
    assert integrable(m, beta, "closed_form") is (Holds.TRUE if beta > alpha else Holds.FALSE)


def test_quadrature_boundary_diverges_and_undecidable_is_not_a_bool():
    # beta = alpha makes every dyadic shell carry the same mass
    assert integrable(power(1.0), 1.0, "quadrature") is Holds.FALSE
    with pytest.raises(ValueError):
        bool(Holds.UNDECIDABLE)


@pytest.mark.parametrize("model", [power(0.7), power(1.3, 2.0, 2.0), LevyModel(1.0, 0.0)])
def test_symmetric_compensator_vanishes(model):
    assert compensator_drift(model, 0.05) == pytest.approx(0.0, abs=1e-14)


def test_one_sided_compensator_closed_form():
    m = LevyModel(1.0, 0.0, PowerSmall(0.5, 1.0, 0.0))
    assert compensator_drift(m, 0.25) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.9, 1.6])
def test_compensator_linear_and_antisymmetric(alpha):
    eps = 0.1
    a = compensator_drift(LevyModel(1, 0, PowerSmall(alpha, 1.0, 0.0)), eps)
    b = compensator_drift(LevyModel(1, 0, PowerSmall(alpha, 0.0, 1.0)), eps)
    mix = compensator_drift(LevyModel(1, 0, PowerSmall(alpha, 2.0, 3.0)), eps)
    assert mix == pytest.approx(2 * a + 3 * b, rel=1e-12)
    swapped = compensator_drift(LevyModel(1, 0, PowerSmall(alpha, 3.0, 2.0)), eps)
    assert swapped == pytest.approx(-mix, rel=1e-12)


def test_effective_drift_folds_compensator():
    m = LevyModel(1.0, 0.3, PowerSmall(0.5, 1.0, 0.0))
    assert effective_drift(m, 0.25) == pytest.approx(0.3 - 1.0)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
def test_eps_outside_unit_interval_rejected_for_infinite_activity(eps):
    with pytest.raises(ValueError):
        compensator_drift(power(1.0), eps)


def test_no_jumps_sample_empty():
    assert sample_jumps(LevyModel(1.0, 0.0), 5.0, 0.1, seed=3) == []


def test_compound_poisson_count_mean():
    m = LevyModel(1.0, 0.0, CompoundPoisson(2.0, SizeLaw("constant", (1.0,))))
    counts = np.array([len(sample_jumps(m, 10.0, 0.0, seed=(7, k))) for k in range(10_000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 20.0) < 3 * se


def test_power_small_rate_and_count():
    m = power(1.0)
    assert jump_rate(m, 0.5) == pytest.approx(2.0)
    counts = np.array([len(sample_jumps(m, 1.0, 0.5, seed=(9, k))) for k in range(10_000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 2.0) < 3 * se


def test_infinite_activity_needs_eps():
    with pytest.raises(InfiniteActivityError):
        sample_jumps(power(1.0), 1.0, 0.0, seed=1)


def test_sampling_is_bit_identical():
    m = power(0.8)
    assert sample_jumps(m, 1.0, 0.01, seed=42) == sample_jumps(m, 1.0, 0.01, seed=42)
    assert sample_jumps(m, 1.0, 0.01, seed=42) != sample_jumps(m, 1.0, 0.01, seed=43)


def test_filtered_superset_in_distribution():
    """Jumps >= 0.1 sampled directly match jumps >= 0.1 kept from an eps=0.02 draw."""
    m = power(0.8)
    direct = np.concatenate([[abs(s) for _, s in sample_jumps(m, 1.0, 0.1, seed=(1, k))]
                             for k in range(10_000)])
    fine = np.concatenate([[abs(s) for _, s in sample_jumps(m, 1.0, 0.02, seed=(2, k)) if abs(s) >= 0.1]
                           for k in range(10_000)])
    assert stats.ks_2samp(direct, fine).pvalue > 0.01


def test_sizes_respect_truncation():
    sizes = np.array([s for k in range(200) for _, s in sample_jumps(power(1.2), 1.0, 0.05, seed=k)])
    assert np.all((np.abs(sizes) >= 0.05) & (np.abs(sizes) < 1.0))


@pytest.mark.parametrize("law,params", [("constant", (1.0, 2.0)), ("normal", (0.0, -1.0)),
                                         ("uniform", (1.0, 0.0)), ("cauchy", (0.0,))])
def test_bad_size_law(law, params):
    with pytest.raises(ValueError):
        SizeLaw(law, params)


def test_model_hash_stable_and_sensitive():
    assert power(1.0).model_hash() == power(1.0).model_hash()
    assert power(1.0).model_hash() != power(1.1).model_hash()
