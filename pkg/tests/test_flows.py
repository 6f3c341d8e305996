import math

import numpy as np
import pytest

from ricci_engine.errors import FrameError, NullFieldError, PreconditionError
from ricci_engine.flows import (coefficient_ode_timelike, comparison_solution, constant_forcing_blowup,
                                integrate_geodesic, integrate_ode, integrate_pregeodesic_A,
                                null_coefficient_ode, orthonormal_frame, positive_forcing_suite,
                                random_positive_forcings, refine_blowup, riccati_blowup,
                                transport_coefficients)
from ricci_engine.models.chart import VectorFieldDef
from ricci_engine.models.metric import builtin_metric, eval_metric
from ricci_engine.models.trajectory import StepControl, Verdict


##################### GEODESICS #####################

def test_minkowski_geodesics_are_straight_lines():
    # Arrange
    g = builtin_metric("minkowski3")
    x0 = g.chart.point(0.0, 0.0, 0.0)

    # Act
    trajectory = integrate_geodesic(g, x0, [1.0, 0.5, 0.2], 2.0)

    # Assert
    assert trajectory.verdict is Verdict.COMPLETED
    assert trajectory.t_end == 2.0
    assert trajectory.positions()[-1] == pytest.approx([2.0, 1.0, 0.4])
    assert trajectory.details["norm_drift"] < 1e-12


def test_radial_geodesic_leaves_the_hyperbolic_chart(hyperbolic_polar):
    # Act
    trajectory = integrate_geodesic(hyperbolic_polar, hyperbolic_polar.chart.point(1.0, 0.0),
                                    [-1.0, 0.0], 2.0)

    # Assert: rho = 1 - t until the chart ends at rho = 0
    assert trajectory.verdict is Verdict.LEFT_DOMAIN
    assert trajectory.t_end == pytest.approx(1.0, abs=1e-5)
    positions = trajectory.positions()
    assert positions[:, 0] + trajectory.times == pytest.approx(np.ones(len(positions)))
    assert np.all(positions[:, 1] == 0.0)


def test_circular_orbit_at_six_mass_radii():
    # Arrange
    g = builtin_metric("schwarzschild")
    x0 = g.chart.point(0.0, 6.0, math.pi / 2, 0.0)
    u_phi = math.sqrt(2.0) * math.sqrt(1.0 / 216.0)
    v0 = [math.sqrt(2.0), 0.0, 0.0, u_phi]
    period = 2 * math.pi / u_phi

    # Act
    trajectory = integrate_geodesic(g, x0, v0, period, StepControl(h0=0.1, h_max=0.5))

    # Assert
    positions = trajectory.positions()
    assert trajectory.verdict is Verdict.COMPLETED
    assert trajectory.details["initial_norm"] == pytest.approx(-1.0)
    assert np.max(np.abs(positions[:, 1] - 6.0)) < 1e-4
    assert positions[-1, 3] == pytest.approx(2 * math.pi, rel=1e-6)
    assert trajectory.details["norm_drift"] < 1e-6


def test_zero_velocity_is_refused():
    g = builtin_metric("minkowski2")

    with pytest.raises(PreconditionError):
        integrate_geodesic(g, g.chart.point(0.0, 0.0), [0.0, 0.0], 1.0)


##################### PREGEODESICS #####################

@pytest.mark.parametrize("rho0", [1.0, 2.0])
def test_pregeodesic_blows_up_at_two_over_f0(hyperbolic_polar, example_field, rho0):
    # Act
    trajectory = integrate_pregeodesic_A(hyperbolic_polar, example_field,
                                         hyperbolic_polar.chart.point(rho0, 0.0))

    # Assert: f = 2/rho, so f0 = 2/rho0 and t* = rho0
    assert trajectory.details["eps"] == 1.0
    assert trajectory.details["predicted_blowup"] == pytest.approx(rho0)
    assert trajectory.blowup_estimate == pytest.approx(rho0, abs=0.005)
    assert trajectory.details["closed_form_error"] < 1e-6
    assert trajectory.details["ratio_error"] < 1e-9
    assert trajectory.track("f")[0] == pytest.approx(2.0 / rho0)


def test_pregeodesic_needs_a_non_null_field(hyperbolic_polar):
    null = VectorFieldDef(hyperbolic_polar.chart, ["1", "1/rho"])

    with pytest.raises(NullFieldError):
        integrate_pregeodesic_A(hyperbolic_polar, null, hyperbolic_polar.chart.point(1.0, 0.0))


##################### PARALLEL FRAMES #####################

def test_gram_schmidt_follows_the_signature():
    value = eval_metric(builtin_metric("minkowski3"), builtin_metric("minkowski3").chart.point(0, 0, 0))

    frame, eps = orthonormal_frame(value, [2.0, 0.0, 0.0])

    assert frame[0] == pytest.approx([1.0, 0.0, 0.0])
    assert eps.tolist() == [-1.0, 1.0, 1.0]


def test_null_initial_velocity_has_no_frame():
    value = eval_metric(builtin_metric("minkowski2"), builtin_metric("minkowski2").chart.point(0, 0))

    with pytest.raises(FrameError):
        orthonormal_frame(value, [1.0, 1.0])


def test_transported_coefficient_along_the_radial_line(hyperbolic_polar, example_field):
    # Arrange
    trajectory = integrate_geodesic(hyperbolic_polar, hyperbolic_polar.chart.point(1.0, 0.0),
                                    [1.0, 0.0], 1.0)

    # Act
    tracks = transport_coefficients(hyperbolic_polar, example_field, trajectory)

    # Assert: rho = 1 + t and a_0 = <A, d_rho> = -2/(1 + t)
    assert tracks.eps.tolist() == [1.0, -1.0]
    assert tracks.coefficients[:, 0] == pytest.approx(-2.0 / (1.0 + tracks.times))
    assert tracks.coefficients[:, 1] == pytest.approx(np.zeros(len(tracks.times)), abs=1e-12)
    assert tracks.drift < 1e-8


def test_timelike_coefficient_equation_on_the_cone(cone, cone_field):
    # Arrange
    trajectory = integrate_geodesic(cone, cone.chart.point(1.0, 0.7, 0.0), [0.0, 1.0, 0.0], 0.6)

    # Act
    report = coefficient_ode_timelike(cone, cone_field, trajectory)

    # Assert
    assert report.eps[0] == -1.0
    assert report.residual < 1e-4
    assert report.drift < 1e-6


def test_coefficient_equation_needs_a_timelike_geodesic(hyperbolic_polar, example_field):
    trajectory = integrate_geodesic(hyperbolic_polar, hyperbolic_polar.chart.point(1.0, 0.0),
                                    [1.0, 0.0], 0.5)

    with pytest.raises(PreconditionError):
        coefficient_ode_timelike(hyperbolic_polar, example_field, trajectory)


##################### SCALAR ODES #####################

@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_null_coefficient_blows_up_at_one_over_alpha(alpha):
    trajectory = null_coefficient_ode(alpha, 1, 1.5 / alpha)

    assert trajectory.verdict is Verdict.BLOW_UP
    assert trajectory.blowup_estimate == pytest.approx(1.0 / alpha, abs=0.005)
    assert trajectory.details["closed_form_error"] < 1e-6


def test_null_coefficient_stays_zero_for_parallel_fields():
    trajectory = null_coefficient_ode(0.0, 1, 5.0)

    assert trajectory.verdict is Verdict.COMPLETED
    assert not np.any(trajectory.track("a0"))


def test_null_coefficient_decays_for_negative_start():
    trajectory = null_coefficient_ode(1.0, -1, 5.0)

    assert trajectory.verdict is Verdict.COMPLETED
    assert trajectory.track("a0")[-1] == pytest.approx(-1.0 / 6.0)
    assert trajectory.blowup_estimate is None


def test_constant_forcing_closed_form():
    assert constant_forcing_blowup(1.0, 1.0) == pytest.approx(1.35102, abs=1e-5)
    with pytest.raises(PreconditionError):
        constant_forcing_blowup(0.0, 1.0)


def test_riccati_with_constant_forcing():
    # Act
    result = riccati_blowup("1", 1.0, 3.0)

    # Assert
    assert result.t_esc == pytest.approx(1.3510, abs=0.005)
    assert result.escapes_before_bound
    assert result.dominates
    assert result.bound == 2.0


def test_riccati_oracle_with_zero_forcing():
    result = riccati_blowup("0", 1.0, 3.0, oracle=True)

    # y is phi itself, so y - phi only carries integration error up to 0.99 * bound
    assert result.t_esc == pytest.approx(2.0, abs=0.005)
    assert result.dominates
    assert abs(result.dominance) < 1e-6


def test_riccati_oracle_tracks_phi_far_from_the_pole():
    # Act
    result = riccati_blowup("0", 2.0, 1.5, oracle=True)

    # Assert
    times = result.trajectory.times
    early = times <= 0.9 * result.bound
    y = result.trajectory.track("y")[early]
    assert y == pytest.approx(comparison_solution(2.0, times[early]), rel=1e-6)
    assert result.dominates


def test_riccati_preconditions():
    with pytest.raises(PreconditionError):
        riccati_blowup("0", 1.0, 3.0)
    with pytest.raises(PreconditionError):
        riccati_blowup("1 - t", 1.0, 3.0)
    with pytest.raises(PreconditionError):
        riccati_blowup("1", 0.0, 3.0)


def test_random_forcings_are_seeded():
    assert random_positive_forcings(5, 4) == random_positive_forcings(5, 4)
    assert random_positive_forcings(5, 4) != random_positive_forcings(6, 4)


def test_positive_forcings_escape_before_the_comparison_bound():
    results = positive_forcing_suite(seed=3, count=4)

    assert len(results) == 12
    assert all(result.escapes_before_bound and result.dominates for result in results)


def test_comparison_solution():
    assert comparison_solution(1.0, [0.0, 1.0]) == pytest.approx([1.0, 2.0])


##################### INTEGRATOR #####################

def test_refine_blowup_recovers_a_simple_pole():
    times = 1.0 - np.logspace(0.0, -6.0, 200)

    assert refine_blowup(times, 1.0 / (1.0 - times)) == pytest.approx(1.0, abs=1e-9)


def test_step_budget_is_enforced():
    control = StepControl(h0=0.01, h_max=0.01, max_steps=5)

    with pytest.raises(PreconditionError):
        integrate_ode(lambda t, y: np.zeros_like(y), [1.0], 1.0, control)


def test_trajectory_table_has_a_header_and_one_row_per_sample():
    g = builtin_metric("minkowski2")
    trajectory = integrate_geodesic(g, g.chart.point(0.0, 0.0), [1.0, 0.0], 0.1)

    lines = trajectory.to_table().splitlines()

    assert lines[0].split() == ["t", "x0", "x1", "v0", "v1", "norm"]
    assert len(lines) == len(trajectory.samples) + 1
