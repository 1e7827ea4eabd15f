import math

import numpy as np
import pytest

import allocatron


def test_fit_on_bundled_points():
    points = allocatron.bundled_transition_points()
    assert len(points) == 5
    fit = allocatron.weighted_linear_fit(points)
    assert fit.a == pytest.approx(5.0396668131, abs=1e-9)
    assert fit.b == pytest.approx(0.0555008070, abs=1e-9)
    assert fit.chi2_red == pytest.approx(0.8549337989, abs=1e-9)
    assert fit.dof == 3


def test_transition_size_matches_published_projection():
    n, dn = allocatron.transition_size(96, allocatron.paper_fit())
    assert n == pytest.approx(1.17e12, rel=0.03)
    assert dn == pytest.approx(2.3e11, rel=0.10)


def test_plan_and_audit():
    fit = allocatron.paper_fit()
    suggestion = allocatron.suggest_architecture(175e9, fit)
    assert suggestion.depth_opt == 81
    assert suggestion.width_from_budget == pytest.approx(
        math.sqrt(175e9 / (12 * 81)), rel=1e-9
    )

    audit = allocatron.audit_architecture(96, 12288, fit)
    assert audit.verdict == "TooDeep"
    audit = allocatron.audit_architecture(12, 768, fit)
    assert audit.verdict == "TooShallow"


def test_parameter_count():
    assert allocatron.count_nonembedding_params(96, 12288) == 173946175488


def test_bounds_and_regime():
    assert allocatron.classify_regime(2, 81) == "DepthEfficiency"
    estimate = allocatron.theorem1_bounds(2, 81, 1)
    assert estimate.log3_lower == pytest.approx(3.357762781432299, abs=1e-12)
    assert estimate.log3_upper == pytest.approx(16.04467487836565, abs=1e-12)
    with pytest.raises(allocatron.AllocatronError):
        allocatron.theorem1_bounds(5, 81, 1)


def test_forward_homogeneity():
    config = allocatron.NetworkConfig(2, 4, 2, 3)
    theta = allocatron.random_theta(config, 7)
    x = allocatron.random_input(config, 8)
    y = allocatron.network_forward(theta, x)
    y_scaled = allocatron.network_forward(theta, 1.1 * x)
    factor = 1.1 ** (3**2)
    assert np.allclose(y_scaled, factor * y, rtol=1e-9)
    assert allocatron.input_copies(2) == 4


def test_hadamard_rank_report():
    report = allocatron.verify_hadamard_rank(3, 3)
    assert report.expected_rank == 10
    assert report.measured_rank == 10
    assert report.pass_


def test_assignment_rank():
    result = allocatron.assignment_rank(3, 5, heads=1, seq_len=4)
    assert result["expected_rank"] == 4
    assert result["measured_rank"] == 4
    assert result["max_rel_deviation"] <= 1e-8
