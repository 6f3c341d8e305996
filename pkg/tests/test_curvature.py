import numpy as np
import pytest

from ricci_engine.curvature import (christoffel, covariant_derivative_vector, curvature_at, divergence,
                                    energy_tensor, first_bianchi_residual, metric_compatibility_residual,
                                    ricci, riemann, scalar_curvature, tilde, trace_mixed)
from ricci_engine.errors import VarianceError
from ricci_engine.models.metric import BUILTIN_METRICS, builtin_metric, eval_metric
from ricci_engine.sampling import sample_points


def test_christoffel_symbols_of_hyperbolic_polar(hyperbolic_polar):
    # Act
    data = christoffel(hyperbolic_polar, hyperbolic_polar.chart.point(2.0, 0.0))

    # Assert
    assert data.gamma[0, 1, 1] == pytest.approx(2.0)
    assert data.gamma[1, 0, 1] == pytest.approx(0.5)
    assert data.gamma[1, 1, 0] == pytest.approx(0.5)
    assert data.gamma[0, 0, 0] == 0.0
    # d_rho Gamma^theta_rho,theta = -1/rho^2
    assert data.dgamma[1, 0, 1, 0] == pytest.approx(-0.25)
    assert data.asymmetry() == 0.0


@pytest.mark.parametrize("name", ["minkowski4", "hyperbolic_polar2", "euclidean_polar2", "cone3"])
def test_flat_metrics_have_vanishing_riemann(name):
    g = builtin_metric(name)

    worst = max(riemann(g, x).norm() for x in sample_points(g.chart, 25))

    assert worst < 1e-9


def test_sphere_is_einstein_with_scalar_curvature_six():
    # Arrange
    g = builtin_metric("sphere3")

    for x in sample_points(g.chart, 20):
        # Act
        at = curvature_at(g, x)

        # Assert
        assert at.scalar == pytest.approx(6.0, abs=1e-9)
        assert at.ricci.comps == pytest.approx(2 * at.metric.matrix, abs=1e-9)


def test_schwarzschild_is_ricci_flat_but_curved():
    g = builtin_metric("schwarzschild")
    x = g.chart.point(0.0, 6.0, 1.2, 0.4)

    assert ricci(g, x).norm() < 1e-10
    assert scalar_curvature(g, x) == pytest.approx(0.0, abs=1e-10)
    assert riemann(g, x).norm() > 1e-3


def test_riemann_symmetries_hold_on_the_sphere():
    g = builtin_metric("sphere3")

    for x in sample_points(g.chart, 10, seed=1):
        curvature = riemann(g, x)
        assert first_bianchi_residual(curvature) < 1e-12
        assert curvature.antisymmetry() < 1e-12


def test_levi_civita_connection_is_metric_compatible():
    g = builtin_metric("schwarzschild")

    for x in sample_points(g.chart, 10):
        value = eval_metric(g, x)
        assert metric_compatibility_residual(value, christoffel(g, x).gamma) < 1e-10


def test_energy_tensor_scales_with_the_coupling():
    # Arrange
    g = builtin_metric("sphere3")
    x = g.chart.point(1.0, 1.0, 0.0)
    metric = eval_metric(g, x).matrix

    # Act
    unit = energy_tensor(g, x)
    halved = energy_tensor(g, x, four_pi_g=2.0)

    # Assert: Ric - Sc g / 2 = 2g - 3g
    assert unit.comps == pytest.approx(-metric, abs=1e-9)
    assert halved.comps == pytest.approx(-0.5 * metric, abs=1e-9)


def test_trace_of_tilde_ricci_is_the_scalar_curvature():
    g = builtin_metric("sphere3")
    x = g.chart.point(0.8, 2.0, 1.0)

    mixed = tilde(ricci(g, x), g, x)

    assert mixed.variance == "mixed"
    assert trace_mixed(mixed) == pytest.approx(scalar_curvature(g, x))


def test_trace_needs_a_mixed_tensor():
    g = builtin_metric("sphere3")
    x = g.chart.point(0.8, 2.0, 1.0)

    with pytest.raises(VarianceError):
        trace_mixed(ricci(g, x))


def test_divergence_of_the_example_field(hyperbolic_polar, example_field, cone, cone_field):
    assert divergence(hyperbolic_polar, example_field, hyperbolic_polar.chart.point(1.5, 0.2)) \
        == pytest.approx(0.0, abs=1e-12)
    assert divergence(cone, cone_field, cone.chart.point(2.0, 0.5, 0.0)) == pytest.approx(-0.5)


def test_covariant_derivative_along_theta(hyperbolic_polar, example_field):
    # (nabla_theta A)^theta = Gamma^theta_theta,rho A^rho = (1/rho)(-2/rho)
    x = hyperbolic_polar.chart.point(2.0, 0.0)

    derivative = covariant_derivative_vector(hyperbolic_polar, example_field, [0.0, 1.0], x)

    assert derivative == pytest.approx(np.array([0.0, -0.5]))


EVERY_BUILTIN = sorted(BUILTIN_METRICS) + ["euclidean2", "euclidean5"]


@pytest.mark.parametrize("name", EVERY_BUILTIN)
def test_ricci_is_symmetric_on_every_builtin(name):
    g = builtin_metric(name)

    for x in sample_points(g.chart, 10, seed=5):
        comps = ricci(g, x).comps
        assert np.max(np.abs(comps - comps.T)) < 1e-10 * (1.0 + np.max(np.abs(comps)))


@pytest.mark.parametrize("name", EVERY_BUILTIN)
def test_connection_identities_on_every_builtin(name):
    g = builtin_metric(name)

    for x in sample_points(g.chart, 10, seed=6):
        value = eval_metric(g, x)
        assert metric_compatibility_residual(value, christoffel(g, x).gamma) < 1e-10
        assert first_bianchi_residual(riemann(g, x)) < 1e-10
