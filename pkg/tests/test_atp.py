import math

import pytest

from ricci_engine.atp import (CausalCharacter, atp_residual, atp_scan, causal_character, constancy_scan,
                              divergence_residual, locally_metric_check, norm_derivative_residual,
                              obstruction_check, recover_sigma, recovered_gradient_residual,
                              recovered_sigma_field, ricci_degeneracy, ricci_round_trip)
from ricci_engine.errors import NullFieldError
from ricci_engine.models.chart import VectorFieldDef
from ricci_engine.models.metric import builtin_metric
from ricci_engine.sampling import sample_points


def test_example_field_is_atypical(hyperbolic_polar, example_field):
    points = sample_points(hyperbolic_polar.chart, 50)

    assert max(atp_residual(hyperbolic_polar, example_field, x) for x in points) < 1e-10


def test_cone_field_is_atypical(cone, cone_field):
    points = sample_points(cone.chart, 30)

    assert max(atp_residual(cone, cone_field, x) for x in points) < 1e-10


def test_radial_scaling_field_is_not_atypical(hyperbolic_polar):
    # Arrange
    field = VectorFieldDef(hyperbolic_polar.chart, ["rho", "0"])
    x = hyperbolic_polar.chart.point(1.0, 0.0)

    # Act
    residual = atp_residual(hyperbolic_polar, field, x)

    # Assert: (nabla_theta A)^theta = 1 where -<A,A>/2 = -1/2
    assert residual == pytest.approx(1.5)


def test_causal_character(hyperbolic_polar, example_field):
    x = hyperbolic_polar.chart.point(1.0, 0.3)
    timelike = VectorFieldDef(hyperbolic_polar.chart, ["0", "1/rho"])
    null = VectorFieldDef(hyperbolic_polar.chart, ["1", "1/rho"])
    zero = VectorFieldDef.zero(hyperbolic_polar.chart)

    assert causal_character(hyperbolic_polar, example_field, x) is CausalCharacter.SPACELIKE
    assert causal_character(hyperbolic_polar, timelike, x) is CausalCharacter.TIMELIKE
    assert causal_character(hyperbolic_polar, null, x) is CausalCharacter.NULL
    assert causal_character(hyperbolic_polar, zero, x) is CausalCharacter.ZERO


def test_constancy_scan_tallies_one_class(hyperbolic_polar, example_field):
    # Act
    report = constancy_scan(hyperbolic_polar, example_field, sample_points(hyperbolic_polar.chart, 40))

    # Assert
    assert not report.refused
    assert report.uniform
    assert report.causal_class == "spacelike"
    assert report.tally["spacelike"] == 40
    assert report.violations == []


def test_constancy_scan_refuses_fields_that_are_not_atypical(hyperbolic_polar):
    field = VectorFieldDef(hyperbolic_polar.chart, ["rho", "0"])

    report = constancy_scan(hyperbolic_polar, field, sample_points(hyperbolic_polar.chart, 5))

    assert report.refused
    assert report.causal_class is None
    assert "not atypical" in report.reason


def test_atypical_fields_are_locally_metric(cone, cone_field):
    report = locally_metric_check(cone, cone_field, sample_points(cone.chart, 20))

    assert report.precondition_met
    assert report.d_alpha_max < 1e-12


def test_recovered_sigma_is_log_of_the_norm(hyperbolic_polar, example_field):
    # Arrange
    x = hyperbolic_polar.chart.point(2.0, 0.5)

    # Act
    sigma = recover_sigma(hyperbolic_polar, example_field, x)
    field = recovered_sigma_field(hyperbolic_polar, example_field)

    # Assert
    assert sigma == pytest.approx(math.log(1.0))
    assert field.value(hyperbolic_polar.chart.point(1.0, 0.0)) == pytest.approx(math.log(4.0))
    assert recovered_gradient_residual(hyperbolic_polar, example_field, x) < 1e-12


def test_sigma_is_undefined_for_null_fields(hyperbolic_polar):
    null = VectorFieldDef(hyperbolic_polar.chart, ["1", "1/rho"])
    x = hyperbolic_polar.chart.point(1.0, 0.0)

    with pytest.raises(NullFieldError):
        recover_sigma(hyperbolic_polar, null, x)


def test_norm_derivative_and_divergence_identities(cone, cone_field):
    for x in sample_points(cone.chart, 10):
        assert norm_derivative_residual(cone, cone_field, x) < 1e-12
        assert divergence_residual(cone, cone_field, x) < 1e-12


def test_divergence_identity_fails_for_other_fields(cone):
    field = VectorFieldDef(cone.chart, ["1", "0", "0"])
    x = cone.chart.point(2.0, 0.5, 0.0)

    # div = 2/rho = 1 while (1 - 3/2) <A,A> = -1/2
    assert divergence_residual(cone, field, x) == pytest.approx(0.75)


def test_flat_metrics_carry_no_obstruction(cone, cone_field):
    curvature, ricci = obstruction_check(cone, cone_field, cone.chart.point(1.5, 0.4, 1.0))

    assert curvature < 1e-10
    assert ricci < 1e-10


def test_sphere_ricci_is_nondegenerate():
    g = builtin_metric("sphere3")

    assert ricci_degeneracy(g, g.chart.point(1.0, 1.0, 0.0)) > 0.1


def test_ricci_round_trip(cone, cone_field):
    assert ricci_round_trip(cone, cone_field, sample_points(cone.chart, 5)) < 1e-9


def test_atp_scan_collects_everything(hyperbolic_polar, example_field):
    # Act
    report = atp_scan(hyperbolic_polar, example_field, sample_points(hyperbolic_polar.chart, 25))

    # Assert
    info = report.get_report_info()
    assert report.max_residual < 1e-10
    assert report.uniform
    assert info["class"] == "spacelike"
    assert info["sigma_gradient_max"] < 1e-12
    assert max(info["obstruction_max"]) < 1e-10


def test_atp_scan_drops_sigma_for_null_samples(hyperbolic_polar):
    null = VectorFieldDef(hyperbolic_polar.chart, ["1", "1/rho"])

    report = atp_scan(hyperbolic_polar, null, sample_points(hyperbolic_polar.chart, 5))

    assert report.causal_class == "null"
    assert report.sigma_gradient_max is None
