import math

import numpy as np
import pytest

from src import perturb
from src.errors import DegenerateSparsity, InvalidDelta, PreconditionViolated
from src.markov import arp_closed_form_matrix, arp_series_matrix, sparsity
from src.perturb import PerturbationSpec


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------
def test_zero_delta_gives_zero_matrix():
    draw = perturb.sample_perturbation(4, PerturbationSpec(0.0), seed=0)
    np.testing.assert_array_equal(draw.matrix, np.zeros((4, 4)))
    assert draw.mean == 0.0 and draw.variance == 0.0


def test_two_point_support():
    delta = 0.2
    draw = perturb.sample_perturbation(6, PerturbationSpec(delta, "two_point"), seed=1)
    assert set(np.unique(draw.matrix).tolist()) <= {-delta, delta}


def test_uniform_variance_matches_delta():
    delta = 0.02
    draw = perturb.sample_perturbation(1000, PerturbationSpec(delta), seed=2)
    assert np.all(np.abs(draw.matrix) <= math.sqrt(3.0) * delta)
    assert draw.variance == pytest.approx(delta ** 2, rel=0.01)
    assert abs(draw.mean) < 1e-4


def test_sampling_is_seeded():
    spec = PerturbationSpec(0.1)
    a = perturb.sample_perturbation(5, spec, seed=3).matrix
    b = perturb.sample_perturbation(5, spec, seed=3).matrix
    np.testing.assert_array_equal(a, b)


def test_delta_validation():
    with pytest.raises(InvalidDelta):
        perturb.sample_perturbation(4, PerturbationSpec(0.5), seed=0)
    with pytest.raises(InvalidDelta):
        perturb.sample_perturbation(4, PerturbationSpec(-0.1), seed=0)
    with pytest.raises(ValueError):
        PerturbationSpec(0.1, distribution="gaussian").validate(4)
    with pytest.raises(ValueError):
        PerturbationSpec(0.1, mode="reflected").validate(4)


def test_projected_mode_stays_in_unit_interval():
    rng = np.random.default_rng(4)
    B = rng.random((5, 5)) * 0.2
    draw = perturb.sample_perturbation(5, PerturbationSpec(0.4, mode="projected"), seed=5, B=B)
    shifted = B + draw.matrix
    assert np.all(shifted >= 0.0) and np.all(shifted <= 1.0 + 1e-15)
    with pytest.raises(ValueError):
        perturb.sample_perturbation(5, PerturbationSpec(0.1, mode="projected"), seed=5)


# ---------------------------------------------------------------------------
# Truncation and general ARP
# ---------------------------------------------------------------------------
def test_truncation_depth():
    B = 0.5 * np.eye(2)
    # n (1/4)^r < 1e-10 first holds at r = 18
    assert perturb.truncation_depth(B, 1.0) == 18
    assert perturb.truncation_depth(np.zeros((3, 3)), 1.0) == 1
    assert perturb.truncation_depth(B, 0.2501) == perturb.TRUNCATION_CAP
    with pytest.raises(PreconditionViolated):
        perturb.truncation_depth(B, 0.25)


def test_general_arp_without_noise_matches_series():
    B = perturb.synthetic_chain(8, 4, seed=1)
    zeta = sparsity(B)
    r_max = perturb.truncation_depth(B, zeta * 8)
    zeros = [np.zeros((8, 8))] * (2 * r_max)
    value = perturb.general_arp(B, zeta, zeros, r_max)
    assert value == pytest.approx(arp_series_matrix(B, zeta * 8).value, abs=1e-9)
    assert value == pytest.approx(arp_closed_form_matrix(B, zeta * 8), abs=1e-9)


def test_general_arp_expansion_with_zero_base():
    rng = np.random.default_rng(6)
    ts = [rng.normal(scale=0.1, size=(3, 3)) for _ in range(4)]
    zeta_n = 1.5
    expected = np.trace(ts[0] @ ts[1]) / zeta_n + np.trace(ts[0] @ ts[1] @ ts[2] @ ts[3]) / zeta_n ** 2
    assert perturb.general_arp(np.zeros((3, 3)), zeta_n / 3, ts, 2) == pytest.approx(expected)


def test_general_arp_antisymmetric_pair_cancels_cross_terms():
    B = np.diag([0.3, 0.5, 0.2])
    zeta_n = 1.0
    rng = np.random.default_rng(7)
    for _ in range(20):
        t1 = rng.uniform(-0.1, 0.1, size=(3, 3))
        value = perturb.general_arp(B, zeta_n / 3, [t1, -t1], 1)
        # tr((B + T)(B - T)) = tr(B^2) - tr(T^2) since tr(TB - BT) = 0
        assert value == pytest.approx(np.trace(B @ B) - np.trace(t1 @ t1))


def test_general_arp_validation():
    B = 0.5 * np.eye(2)
    ts = [np.zeros((2, 2))] * 4
    with pytest.raises(DegenerateSparsity):
        perturb.general_arp(B, 0.0, ts, 2)
    with pytest.raises(ValueError):
        perturb.general_arp(B, 0.5, ts, 3)
    with pytest.raises(PreconditionViolated):
        perturb.general_arp(np.eye(2), 0.5, ts, 2)


def test_tail_and_variance_bounds():
    assert perturb.concentration_bound(1.0, 5.0, math.sqrt(0.05)) == pytest.approx(0.1875)
    assert perturb.variance_bound(5.0, math.sqrt(0.05)) == pytest.approx(0.1875)
    assert perturb.concentration_bound(0.5, 5.0, math.sqrt(0.05)) == pytest.approx(0.75)


# ---------------------------------------------------------------------------
# Concentration
# ---------------------------------------------------------------------------
def test_concentration_without_noise_never_deviates():
    B = perturb.synthetic_chain(10, 5, seed=0)
    result = perturb.concentration_experiment(B, 0.5, PerturbationSpec(0.0), [0.005, 0.1], 20)
    assert result.empirical_prob == [0.0, 0.0]
    assert result.violations == []
    assert result.mean_ok and result.variance_ok


def test_concentration_respects_bound():
    n = 10
    B = perturb.synthetic_chain(n, 5, seed=0)
    spec = PerturbationSpec(math.sqrt(0.5 / n))
    grid = [0.005, 0.05, 0.2, 0.5]
    result = perturb.concentration_experiment(B, 0.5, spec, grid, 300, seed=11)
    assert result.zeta_n == pytest.approx(5.0)
    assert all(0.0 <= p <= 1.0 for p in result.empirical_prob)
    assert result.theory_bound[0] > 1.0
    assert result.violations == []
    assert result.variance_ok
    assert [row["a"] for row in result.rows()] == grid
    assert result.as_dict()["trials"] == 300


def test_concentration_is_deterministic():
    B = perturb.synthetic_chain(10, 5, seed=2)
    spec = PerturbationSpec(0.1, "two_point")
    first = perturb.concentration_experiment(B, 0.5, spec, [0.01], 30, seed=4)
    again = perturb.concentration_experiment(B, 0.5, spec, [0.01], 30, seed=4)
    assert first.empirical_prob == again.empirical_prob
    assert first.mean_deviation == again.mean_deviation


def test_concentration_preconditions():
    B = perturb.synthetic_chain(10, 4, seed=0)
    with pytest.raises(PreconditionViolated) as info:
        perturb.concentration_experiment(B, 0.4, PerturbationSpec(0.1), [0.1], 10)
    assert info.value.condition == "zeta_n > 4"
    heavy = np.zeros((6, 6))
    heavy[:, 0] = 0.9
    with pytest.raises(PreconditionViolated) as info:
        perturb.concentration_experiment(heavy, 5 / 6, PerturbationSpec(0.1), [0.1], 10)
    assert info.value.condition == "sum_i B_ij^2 < 1"
    B = perturb.synthetic_chain(10, 5, seed=0)
    with pytest.raises(PreconditionViolated):
        perturb.concentration_experiment(B, 0.5, PerturbationSpec(0.1, mode="projected"), [0.1], 10)
    with pytest.raises(ValueError):
        perturb.concentration_experiment(B, 0.5, PerturbationSpec(0.1), [0.0], 10)


# ---------------------------------------------------------------------------
# Moment facts
# ---------------------------------------------------------------------------
def test_moment_check_zero_base():
    report = perturb.moment_check(np.zeros((4, 4)), PerturbationSpec(0.3), 500, seed=0)
    assert report.products["TpB"].mean == 0.0
    assert report.products["TpB"].max_variance == 0.0
    assert report.products["BTp"].max_variance == 0.0
    assert report.passed


def test_moment_check_identity_base():
    delta = 0.3
    report = perturb.moment_check(np.eye(4), PerturbationSpec(delta), 3000, seed=1)
    assert report.products["TpB"].max_variance == pytest.approx(delta ** 2, rel=0.1)
    assert report.passed


def test_moment_check_random_base():
    B = perturb.synthetic_chain(5, 3, mass=0.95, seed=9)
    for distribution in perturb.DISTRIBUTIONS:
        report = perturb.moment_check(B, PerturbationSpec(0.25, distribution), 4000, seed=2)
        assert report.passed, report.as_dict()


def test_moment_check_preconditions():
    heavy = np.zeros((3, 3))
    heavy[:, 1] = 0.9
    with pytest.raises(PreconditionViolated):
        perturb.moment_check(heavy, PerturbationSpec(0.1), 10)
    with pytest.raises(ValueError):
        perturb.moment_check(np.eye(3), PerturbationSpec(0.1), 1)


# ---------------------------------------------------------------------------
# Synthetic chains
# ---------------------------------------------------------------------------
def test_synthetic_chain_structure():
    for n, branching in ((10, 5), (12, 6), (7, 1), (5, 5)):
        B = perturb.synthetic_chain(n, branching, mass=0.8, seed=n)
        positive = B > 0
        assert np.all(positive.sum(axis=1) == branching)
        assert np.all(positive.sum(axis=0) == branching)
        np.testing.assert_allclose(B.sum(axis=1), 0.8)
        assert sparsity(B) == pytest.approx(branching / n)
        assert np.all(perturb.column_square_sums(B) < 1.0)


def test_synthetic_chain_validation():
    with pytest.raises(ValueError):
        perturb.synthetic_chain(5, 0)
    with pytest.raises(ValueError):
        perturb.synthetic_chain(5, 6)
    with pytest.raises(ValueError):
        perturb.synthetic_chain(5, 2, mass=1.5)
