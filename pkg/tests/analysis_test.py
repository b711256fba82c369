import math

import numpy as np
import pytest

from nilpotent_commutator.analysis import (
    DecayModel,
    cutoff_index,
    decay_fit,
    domination_constant,
    exponent_report,
)
from nilpotent_commutator.canonicalize import triangularize
from nilpotent_commutator.construct import (
    construct_proposition,
    construct_theorem,
)
from nilpotent_commutator.linalg import InsufficientData
from nilpotent_commutator.testgen import GenSpec, gen_nilpotent

B3 = (1 + (1 + 2**-0.25) ** 4) ** 0.25


def geometric_family(dim, rho, seed=0, n=4):
    return gen_nilpotent(
        GenSpec(jordan_sizes=(n,) * (dim // n), decay="geometric", rho=rho, conjugate=True, seed=seed)
    )


def test_geometric_fit_recovers_ratio():
    profile = decay_fit(2.0 ** -np.arange(1, 21), DecayModel.GEOMETRIC)
    assert profile.fitted_param == pytest.approx(0.5, abs=1e-12)
    assert profile.rate == pytest.approx(math.log(2), abs=1e-12)
    assert profile.fit_quality == pytest.approx(1, abs=1e-12)
    assert profile.cutoff_index == 20


def test_polynomial_fit_recovers_exponent():
    k = np.arange(1, 101, dtype=float)
    profile = decay_fit(k**-2, "polynomial")
    assert profile.model == DecayModel.POLYNOMIAL
    assert profile.fitted_param == pytest.approx(2, abs=1e-10)
    assert profile.fit_quality == pytest.approx(1, abs=1e-12)


def test_flat_sequence_fits_exactly():
    profile = decay_fit(np.ones(8), DecayModel.GEOMETRIC)
    assert profile.fitted_param == pytest.approx(1, abs=1e-12)
    assert profile.fit_quality == 1.0
    assert abs(profile.rate) <= 1e-12


def test_fit_drops_values_below_cutoff():
    values = np.array([1.0, 0.5, 0.25, 0.125, 1e-15, 0.0])
    assert cutoff_index(values, 1e-14) == 4
    profile = decay_fit(values, DecayModel.GEOMETRIC)
    assert profile.cutoff_index == 4
    assert profile.fitted_param == pytest.approx(0.5, abs=1e-12)


def test_fit_needs_three_values():
    with pytest.raises(InsufficientData):
        decay_fit([1.0, 0.5], DecayModel.GEOMETRIC)
    with pytest.raises(InsufficientData):
        decay_fit([1.0, 1e-20, 0.0, 0.0], DecayModel.GEOMETRIC)
    with pytest.raises(InsufficientData):
        decay_fit(np.zeros(5), DecayModel.POLYNOMIAL)


def test_fit_rejects_unsorted_or_negative_input():
    with pytest.raises(ValueError):
        decay_fit([0.5, 1.0, 0.25], DecayModel.GEOMETRIC)
    with pytest.raises(ValueError):
        decay_fit([1.0, 0.5, -0.25], DecayModel.GEOMETRIC)


def test_domination_constant_pairs_each_index_with_its_level():
    s_x = np.array([4.0, 2.0, 1.0, 0.5])
    s_a = np.array([4.0, 1.0])
    assert domination_constant(s_x, s_a, 2, 0.5, 1e-14) == pytest.approx(2)
    # indices whose partner in A is below the cutoff are skipped
    assert domination_constant(s_x, np.array([4.0, 0.0]), 2, 0.5, 1e-14) == pytest.approx(2)
    assert domination_constant(np.zeros(3), s_a, 2, 0.5, 1e-14) == 0.0


def test_report_on_flat_jordan_block(jordan4):
    pair, _ = construct_theorem(triangularize(jordan4))
    report = exponent_report(jordan4, pair)
    assert report.guaranteed_t == 0.5
    assert report.achieved_B == 0.0
    assert report.achieved_C == 0.0
    assert report.domination_constant == pytest.approx(B3, abs=1e-10)
    assert math.isfinite(report.domination_C)
    assert report.profile_A.cutoff_index == 3


def test_report_needs_nonzero_input():
    a = np.zeros((3, 3))
    pair, _ = construct_theorem(triangularize(a))
    with pytest.raises(InsufficientData):
        exponent_report(a, pair)


def test_theorem_halves_geometric_decay():
    a = geometric_family(16, 0.25, seed=3)
    pair, _ = construct_theorem(triangularize(a))
    report = exponent_report(a, pair)
    assert report.profile_A.fitted_param == pytest.approx(0.25, abs=0.02)
    assert report.achieved_B == pytest.approx(0.5, abs=0.15)
    assert math.isfinite(report.domination_constant)


def test_proposition_keeps_decay_in_c():
    a = geometric_family(32, 0.5, seed=1)
    report = exponent_report(a, construct_proposition(triangularize(a)))
    assert report.guaranteed_t == 1.0
    assert report.achieved_C == pytest.approx(1, abs=0.2)
    # B is a partial isometry, its singular values do not decay
    assert abs(report.achieved_B) <= 1e-6


@pytest.mark.parametrize("scale", [1e-3, 1e3])
def test_report_is_scale_invariant(scale):
    a = geometric_family(16, 0.7, seed=5)
    base = exponent_report(a, construct_theorem(triangularize(a))[0])
    scaled = exponent_report(scale * a, construct_theorem(triangularize(scale * a))[0])
    assert scaled.achieved_B == pytest.approx(base.achieved_B, abs=1e-6)
    assert scaled.achieved_C == pytest.approx(base.achieved_C, abs=1e-6)
    assert math.isfinite(scaled.domination_constant)


def test_polynomial_model_report():
    a = gen_nilpotent(
        GenSpec(jordan_sizes=(4,) * 6, decay="polynomial", alpha=2.0, conjugate=True, seed=8)
    )
    report = exponent_report(a, construct_theorem(triangularize(a))[0], DecayModel.POLYNOMIAL)
    assert report.profile_A.model == DecayModel.POLYNOMIAL
    assert report.profile_A.fitted_param == pytest.approx(2, abs=0.3)
    assert report.achieved_B > 0
