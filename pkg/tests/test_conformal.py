import numpy as np
import pytest

from ricci_engine.conformal import (ConformalPair, conformal_connection_check, connection_difference,
                                    eetilde_residual, identity_chain_residuals, null_geodesic_check,
                                    predict_difference, q_tensor, q_trace, random_algebra_residual,
                                    ricci_difference_direct, ricci_difference_prediction,
                                    verify_main_identity)
from ricci_engine.errors import ChartMismatchError, DimensionError, PreconditionError
from ricci_engine.models.chart import ScalarFieldDef, VectorFieldDef
from ricci_engine.models.metric import builtin_metric
from ricci_engine.sampling import sample_points


@pytest.fixture
def minkowski4_pair():
    g = builtin_metric("minkowski4")
    return ConformalPair(g, sigma=ScalarFieldDef(g.chart, "0.1*(x^2 - t)"))


def test_connection_difference_formula(hyperbolic_polar, example_field):
    # Arrange
    pair = ConformalPair(hyperbolic_polar, field=example_field)
    x = hyperbolic_polar.chart.point(2.0, 0.0)

    # Act
    d_rho_rho = connection_difference(pair, [1.0, 0.0], [1.0, 0.0], x)
    d_theta_theta = connection_difference(pair, [0.0, 1.0], [0.0, 1.0], x)

    # Assert: <A,X> = -1 for X = d_rho, <d_theta, d_theta> = -4
    assert d_rho_rho == pytest.approx([-1.0, 0.0])
    assert d_theta_theta == pytest.approx([-4.0, 0.0])


def test_rescaled_connection_matches_the_difference(minkowski4_pair):
    points = sample_points(minkowski4_pair.g.chart, 10)

    worst = max(conformal_connection_check(minkowski4_pair, x) for x in points)

    assert worst < 1e-10


def test_example_pair_in_two_dimensions(hyperbolic_polar, example_field):
    # Arrange
    sigma = ScalarFieldDef(hyperbolic_polar.chart, "-2*log(rho)")
    pair = ConformalPair(hyperbolic_polar, example_field, sigma)
    points = sample_points(hyperbolic_polar.chart, 10)

    # Act / Assert
    assert max(pair.gradient_residual(x) for x in points) < 1e-12
    assert max(conformal_connection_check(pair, x) for x in points) < 1e-10
    with pytest.raises(DimensionError):
        verify_main_identity(pair, points[0])


def test_null_vectors_keep_their_direction(minkowski4_pair):
    x = minkowski4_pair.g.chart.point(0.3, -1.0, 0.5, 2.0)

    assert null_geodesic_check(minkowski4_pair, x, [1.0, 0.6, 0.8, 0.0]) < 1e-12
    with pytest.raises(PreconditionError):
        null_geodesic_check(minkowski4_pair, x, [1.0, 0.0, 0.0, 0.0])


def test_main_identity_holds_along_both_paths(minkowski4_pair):
    for x in sample_points(minkowski4_pair.g.chart, 10, seed=9):
        # Act
        report = verify_main_identity(minkowski4_pair, x)

        # Assert
        assert set(report.residuals) == {"main", "trace", "q", "Q", "two_path"}
        assert report.max_residual < 1e-9


def test_predicted_and_direct_ricci_differences_agree():
    g = builtin_metric("sphere3")
    pair = ConformalPair(g, sigma=ScalarFieldDef(g.chart, "0.2*cos(chi) + 0.1*theta"))
    x = g.chart.point(1.1, 0.9, 0.3)

    predicted = ricci_difference_prediction(pair, x).comps
    direct = ricci_difference_direct(pair, x).comps

    assert predicted == pytest.approx(direct, abs=1e-9)


def test_q_tensor_and_trace_for_a_linear_sigma():
    # sigma = 0.3 x on flat space: nabla alpha = 0, so Q = -alpha (x) alpha
    g = builtin_metric("minkowski3")
    pair = ConformalPair(g, sigma=ScalarFieldDef(g.chart, "0.3*x"))
    x = g.chart.point(0.0, 1.0, 2.0)

    Q = q_tensor(pair, x).comps

    assert Q == pytest.approx(np.diag([0.0, -0.09, 0.0]))
    assert q_trace(pair, x) == pytest.approx(-0.09)


def test_random_algebra_stays_at_rounding_level():
    assert random_algebra_residual(42, 3) < 1e-12
    assert random_algebra_residual(7, 5) < 1e-12
    with pytest.raises(DimensionError):
        random_algebra_residual(42, 2)


def test_identity_chain_flags_a_wrong_difference():
    # Arrange
    metric = np.diag([-1.0, 1.0, 1.0, 1.0])
    Q = np.diag([0.5, 0.1, -0.2, 0.3])
    E = predict_difference(Q, 0.7, metric, metric)

    # Act
    residuals = identity_chain_residuals(E + 0.1 * metric, Q, 0.7, metric, metric)

    # Assert
    assert residuals["main"] > 1e-3


def test_atypical_fields_leave_ricci_unchanged(cone, cone_field):
    sigma = ScalarFieldDef(cone.chart, "log(4/rho^2)")
    pair = ConformalPair(cone, cone_field, sigma)

    for x in sample_points(cone.chart, 5):
        assert eetilde_residual(pair, x) < 1e-9


def test_pair_parts_must_share_the_chart(hyperbolic_polar):
    minkowski = builtin_metric("minkowski2")

    with pytest.raises(ChartMismatchError):
        ConformalPair(hyperbolic_polar, field=VectorFieldDef(minkowski.chart, ["1", "0"]))
    with pytest.raises(PreconditionError):
        ConformalPair(hyperbolic_polar)
