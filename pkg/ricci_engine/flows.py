"""
Geodesic and pregeodesic integration with blow-up detection, parallel frames,
and the scalar ODEs that govern the frame coefficients of an atypical field.

The engine only ever reports blow-up of a computed curve; it never asserts
completeness or incompleteness of the manifold itself.
"""
import logging
from dataclasses import dataclass

import numpy as np

from ricci_engine.atp import NULL_TOLERANCE, norm_gradient
from ricci_engine.conformal import field_data_from_vector
from ricci_engine.curvature import christoffel_symbols
from ricci_engine.errors import (DomainViolation, FrameError, GeometryError, NullFieldError,
                                 PreconditionError)
from ricci_engine.models.expression import parse_expression
from ricci_engine.models.jet import Point
from ricci_engine.models.metric import eval_metric
from ricci_engine.models.trajectory import GeodesicState, StepControl, Trajectory, Verdict
from ricci_engine.sampling import make_rng

logger = logging.getLogger(__name__)

DOMINANCE_TOLERANCE = 1e-6
# y >= phi is only compared on t <= DOMINANCE_WINDOW * 2 / y0
DOMINANCE_WINDOW = 0.99
POSITIVITY_SAMPLES = 201


##################### INTEGRATOR #####################

def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def integrate_ode(rhs, y0, t_max, control=None, monitor=None, inside=None):
    """
    Classical 4th-order stepping with step halving: each step is taken once with h
    and twice with h/2; the difference estimates the local error (relative to
    1 + |y|, per component) and the two half steps plus the Richardson correction
    are kept. A step whose evaluation fails (domain exit, overflow) is halved until
    it drops below control.exit_tol, which localizes the exit time.

    Input: rhs(t, y) -> dy/dt, initial state, end time, StepControl,
           monitor(t, y) -> scalar compared with the escape threshold,
           inside(y) -> bool for accepted states
    Output: (times, states, verdict, rejected step count)
    """
    control = control or StepControl()
    t = 0.0
    y = np.array(y0, dtype=float)
    h = control.h0
    times, states = [t], [y.copy()]
    verdict = Verdict.COMPLETED
    rejected = 0

    while t < t_max:
        if len(times) > control.max_steps:
            raise PreconditionError(f"step budget of {control.max_steps} exhausted at t={t:.6g}")
        h = min(h, t_max - t)
        # a sliver left over from rounding is absorbed into this step
        if t_max - t - h < 1e-6 * h:
            h = t_max - t
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                coarse = _rk4_step(rhs, t, y, h)
                half = _rk4_step(rhs, t, y, 0.5 * h)
                fine = _rk4_step(rhs, t + 0.5 * h, half, 0.5 * h)
            if not (np.all(np.isfinite(coarse)) and np.all(np.isfinite(fine))):
                raise OverflowError("non-finite state")
            candidate = fine + (fine - coarse) / 15.0
            if inside is not None and not inside(candidate):
                raise DomainViolation("step leaves the chart domain")
        except (GeometryError, OverflowError, ZeroDivisionError) as error:
            if h <= control.exit_tol:
                verdict = Verdict.LEFT_DOMAIN
                logger.debug("left the domain at t=%.9g: %s", t, error)
                break
            h *= 0.5
            rejected += 1
            continue

        error = float(np.max(np.abs(fine - coarse) / (1.0 + np.abs(fine)))) / 15.0
        if error > control.tol and h > control.h_min:
            h *= 0.5
            rejected += 1
            continue

        t = t + h if t_max - t - h > 1e-6 * h else t_max
        y = candidate
        times.append(t)
        states.append(y.copy())
        if monitor is not None and monitor(t, y) > control.escape:
            verdict = Verdict.BLOW_UP
            logger.debug("escape threshold crossed at t=%.9g", t)
            break
        if error < control.tol / 32.0:
            h = min(2.0 * h, control.h_max)

    return np.array(times), np.array(states), verdict, rejected


def refine_blowup(times, values):
    """
    Fit 1/y = (t* - t)/c to the last decade of growth of the monitored scalar and
    return t*. Falls back to the last recorded time when that decade holds fewer
    than three samples or is not growing.
    """
    times = np.asarray(times, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    top = values[-1]
    start = len(values) - 1
    while start > 0 and 0.1 * top <= values[start - 1] <= values[start]:
        start -= 1
    if len(values) - start < 3:
        return float(times[-1])
    shifted = times[start:] - times[-1]
    slope, intercept = np.polyfit(shifted, 1.0 / values[start:], 1)
    if slope >= 0.0:
        return float(times[-1])
    return float(times[-1] - intercept / slope)


def _scalar_trajectory(times, states, verdict, rejected, name):
    samples = [GeodesicState(float(t), tuple(map(float, y))) for t, y in zip(times, states)]
    trajectory = Trajectory(samples, verdict, float(times[-1]), rejected_steps=rejected)
    trajectory.tracks[name] = [float(y[0]) for y in states]
    if verdict is Verdict.BLOW_UP:
        trajectory.blowup_estimate = refine_blowup(times, states[:, 0])
    return trajectory


##################### GEODESICS #####################

def _geodesic_rhs(g, transported):
    chart_id = g.chart.id
    m = g.dim

    def rhs(t, y):
        gamma = christoffel_symbols(eval_metric(g, Point(chart_id, y[:m])))
        v = y[m:2 * m]
        out = np.empty_like(y)
        out[:m] = v
        out[m:2 * m] = -np.einsum("kij,i,j->k", gamma, v, v)
        for index in range(transported):
            start = (2 + index) * m
            out[start:start + m] = -np.einsum("kij,i,j->k", gamma, v, y[start:start + m])
        return out

    return rhs


def _geodesic_run(g, x0, v0, t_max, control, frame=(), monitor=None):
    m = g.dim
    value = eval_metric(g, x0)
    v0 = np.asarray(v0, dtype=float)
    if not np.any(v0):
        raise PreconditionError("initial velocity must be nonzero")
    y0 = np.concatenate([np.asarray(x0.coords), v0] + [np.asarray(e, dtype=float) for e in frame])
    chart = g.chart

    def speed(t, y):
        return float(np.max(np.abs(y[m:2 * m])))

    times, states, verdict, rejected = integrate_ode(
        _geodesic_rhs(g, len(frame)), y0, t_max, control,
        monitor=monitor or speed,
        inside=lambda y: chart.contains(y[:m]))
    samples = [GeodesicState(float(t), tuple(map(float, y[:m])), tuple(map(float, y[m:2 * m])))
               for t, y in zip(times, states)]
    trajectory = Trajectory(samples, verdict, float(times[-1]), rejected_steps=rejected)
    trajectory.details["initial_norm"] = value.inner(v0, v0)
    return trajectory, states


def _record_norm(g, trajectory):
    norms = []
    for state in trajectory.samples:
        value = eval_metric(g, Point(g.chart.id, state.x))
        norms.append(value.inner(np.array(state.v), np.array(state.v)))
    trajectory.tracks["norm"] = norms
    initial = norms[0]
    trajectory.details["norm_drift"] = max(abs(n - initial) for n in norms) / max(1.0, abs(initial))


def integrate_geodesic(g, x0, v0, t_max, step_control=None):
    """
    Input: MetricField g, Point x0 in its domain, initial velocity, end time, StepControl
    Output: Trajectory solving dx/dt = v, dv^k/dt = -Gamma^k_ij v^i v^j; it stops at
    t_max, on leaving the domain or when |v| crosses the escape threshold
    """
    control = step_control or StepControl()
    trajectory, _ = _geodesic_run(g, x0, v0, t_max, control)
    _record_norm(g, trajectory)
    if trajectory.verdict is Verdict.BLOW_UP:
        trajectory.blowup_estimate = refine_blowup(trajectory.times,
                                                   np.max(np.abs(trajectory.velocities()), axis=1))
    return trajectory


def _norm_and_gradient(g, A, y, m):
    x = Point(g.chart.id, y[:m])
    value = eval_metric(g, x)
    data = field_data_from_vector(A, value, x)
    return data, norm_gradient(value, data)


def integrate_pregeodesic_A(g, A, x0, t_max=None, step_control=None):
    """
    Input: MetricField g, VectorFieldDef A (atypical near x0), Point x0 with <A,A>(x0) != 0
    Output: Trajectory of the unit-speed geodesic through x0 tangent to A, with tracks
      f            |<A,A>|^(1/2) along the curve
      closed_form  2 f0 / (2 - f0 t)
      ratio        U(f) / f^2, which equals eps / 2 for A = f U, <U,U> = eps
    The curve runs along eps U, so f grows and the predicted blow-up time is 2 / f0;
    without t_max the run goes a quarter past that time.
    """
    control = step_control or StepControl()
    m = g.dim
    value = eval_metric(g, x0)
    data = field_data_from_vector(A, value, x0)
    norm2 = data.norm2
    if abs(norm2) <= NULL_TOLERANCE * max(1.0, float(data.vector @ data.vector)):
        raise NullFieldError(f"A is null at {list(x0.coords)}; the factorization A = f U is undefined")
    eps = 1.0 if norm2 > 0 else -1.0
    f0 = float(np.sqrt(abs(norm2)))
    v0 = eps * data.vector / f0
    t_star = 2.0 / f0
    if t_max is None:
        t_max = 1.25 * t_star

    def f_monitor(t, y):
        field_data, _ = _norm_and_gradient(g, A, y, m)
        return max(float(np.sqrt(abs(field_data.norm2))), float(np.max(np.abs(y[m:2 * m]))))

    trajectory, states = _geodesic_run(g, x0, v0, t_max, control, monitor=f_monitor)
    _record_norm(g, trajectory)

    f_track, ratio_track = [], []
    for y in states:
        field_data, gradient = _norm_and_gradient(g, A, y, m)
        f = float(np.sqrt(abs(field_data.norm2)))
        # d_i f = eps d_i <A,A> / (2 f), U = A / f
        u_of_f = eps * float(field_data.vector @ gradient) / (2.0 * f * f)
        f_track.append(f)
        ratio_track.append(u_of_f / f ** 2)
    times = trajectory.times
    closed = np.where(times < t_star, 2.0 * f0 / np.maximum(2.0 - f0 * times, 1e-300), np.inf)
    trajectory.tracks["f"] = f_track
    trajectory.tracks["closed_form"] = [float(c) for c in closed]
    trajectory.tracks["ratio"] = ratio_track

    early = times <= 0.9 * t_star
    f_values = np.array(f_track)
    closed_error = float(np.max(np.abs(f_values[early] - closed[early]) / closed[early]))
    trajectory.details.update({
        "eps": eps,
        "f0": f0,
        "predicted_blowup": t_star,
        "closed_form_error": closed_error,
        "ratio_error": float(np.max(np.abs(np.array(ratio_track) - 0.5 * eps)))
    })
    if trajectory.verdict is Verdict.BLOW_UP or f_values[-1] >= 10.0 * f0:
        trajectory.blowup_estimate = refine_blowup(times, f_values)
    logger.debug("pregeodesic from %s: verdict %s at t=%.6g, predicted %.6g",
                 list(x0.coords), trajectory.verdict.value, trajectory.t_end, t_star)
    return trajectory


##################### PARALLEL FRAMES #####################

def orthonormal_frame(value, v0, tol=1e-10):
    """
    Gram-Schmidt with the metric's own inner product on (v0, d_1, ..., d_m).
    Candidates whose remainder is (numerically) null are skipped.
    Returns the frame as rows E_i together with eps_i = <E_i, E_i>.
    """
    m = value.matrix.shape[0]
    scale = float(np.max(np.abs(value.matrix)))
    frame, eps = [], []
    candidates = [np.asarray(v0, dtype=float)] + list(np.eye(m))
    for index, candidate in enumerate(candidates):
        w = candidate.copy()
        for e, s in zip(frame, eps):
            w = w - s * value.inner(w, e) * e
        n = value.inner(w, w)
        if abs(n) <= tol * scale * max(1.0, float(w @ w)):
            if index == 0:
                raise FrameError("initial velocity is null; a parallel frame needs a unit-speed geodesic")
            continue
        frame.append(w / np.sqrt(abs(n)))
        eps.append(1.0 if n > 0 else -1.0)
        if len(frame) == m:
            break
    if len(frame) < m:
        raise FrameError(f"only {len(frame)} of {m} frame vectors could be built")
    return np.array(frame), np.array(eps)


@dataclass
class CoefficientTracks:
    times: np.ndarray
    coefficients: np.ndarray
    eps: np.ndarray
    drift: float
    trajectory: Trajectory

    def get_tracks_info(self):
        return {
            "eps": [float(s) for s in self.eps],
            "drift": self.drift,
            "sample_count": len(self.times),
            "t_end": float(self.times[-1])
        }


def transport_coefficients(g, A, trajectory, step_control=None):
    """
    Input: MetricField g, VectorFieldDef A, a unit-speed geodesic Trajectory
    Output: CoefficientTracks with a_i(t) = <A, E_i>(t) for a frame E_i parallel
    along the curve, built by Gram-Schmidt on (gamma'(0), coordinate basis)
    """
    m = g.dim
    first = trajectory.samples[0]
    x0 = Point(g.chart.id, first.x)
    v0 = np.array(first.v)
    frame, eps = orthonormal_frame(eval_metric(g, x0), v0)
    control = step_control or StepControl()
    run, states = _geodesic_run(g, x0, v0, trajectory.t_end, control, frame=frame)

    coefficients = []
    drift = 0.0
    target = np.diag(eps)
    for y in states:
        x = Point(g.chart.id, y[:m])
        value = eval_metric(g, x)
        basis = y[2 * m:].reshape(m, m)
        vector = A.value_and_derivative(x)[0]
        coefficients.append(basis @ value.matrix @ vector)
        drift = max(drift, float(np.max(np.abs(basis @ value.matrix @ basis.T - target))))
    logger.debug("transported frame over %d samples, drift %g", len(states), drift)
    return CoefficientTracks(run.times, np.array(coefficients), eps, drift, run)


@dataclass
class CoefficientOdeReport:
    residual: float
    forcing_positive: bool
    forcing_min: float
    samples: int
    eps: list
    drift: float

    def get_report_info(self):
        return {
            "residual": self.residual,
            "forcing_positive": self.forcing_positive,
            "forcing_min": self.forcing_min,
            "samples": self.samples,
            "eps": self.eps,
            "drift": self.drift
        }


def coefficient_ode_timelike(g, A, trajectory, step_control=None):
    """
    Along a timelike unit-speed geodesic with parallel frame (E_0 = gamma', E_i) an
    atypical A has b = eps_0 <A, E_0> obeying

        db/dt = -b^2 / 2 - f(t),    f = (eps_1 a_1^2 + ... + eps_n a_n^2) / 2.

    db/dt is taken by numerical differentiation of the tracked coefficient; the
    residual is relative to 1 + max |right-hand side|. Positivity of f is reported,
    not enforced.
    """
    control = step_control or StepControl(h0=0.002, h_max=0.002)
    tracks = transport_coefficients(g, A, trajectory, control)
    eps = tracks.eps
    if eps[0] >= 0:
        raise PreconditionError("the coefficient equation needs a timelike geodesic")
    if len(tracks.times) < 3:
        raise PreconditionError("the coefficient equation needs at least three samples")
    a = tracks.coefficients
    b = eps[0] * a[:, 0]
    forcing = 0.5 * (a[:, 1:] ** 2 @ eps[1:])
    rhs = 0.5 * eps[0] * b ** 2 - forcing
    lhs = np.gradient(b, tracks.times, edge_order=2)
    residual = float(np.max(np.abs(lhs - rhs))) / (1.0 + float(np.max(np.abs(rhs))))
    return CoefficientOdeReport(residual, bool(np.all(forcing > 0.0)), float(np.min(forcing)),
                                len(tracks.times), [float(s) for s in eps], tracks.drift)


##################### SCALAR ODE ORACLES #####################

def null_coefficient_ode(alpha0, eps, t_max, step_control=None):
    """
    Input: alpha >= 0, eps = +-1, end time
    Output: Trajectory of da/dt = a^2 from a(0) = eps alpha, with the closed form
    eps alpha / (1 - eps alpha t) tracked alongside; blow-up at 1 / (eps alpha) when positive
    """
    start = eps * alpha0
    times, states, verdict, rejected = integrate_ode(
        lambda t, y: y * y, [start], t_max, step_control,
        monitor=lambda t, y: abs(float(y[0])))
    trajectory = _scalar_trajectory(times, states, verdict, rejected, "a0")
    closed = start / (1.0 - start * times)
    trajectory.tracks["closed_form"] = [float(c) for c in closed]
    early = times <= (0.9 / start if start > 0 else np.inf)
    numeric = states[early, 0]
    if start == 0.0:
        closed_error = float(np.max(np.abs(numeric)))
    else:
        closed_error = float(np.max(np.abs(numeric - closed[early]) / np.abs(closed[early])))
    trajectory.details.update({
        "alpha": alpha0,
        "eps": eps,
        "predicted_blowup": 1.0 / start if start > 0 else None,
        "closed_form_error": closed_error
    })
    return trajectory


def constant_forcing_blowup(c, y0):
    """
    For f = c > 0, y = sqrt(2c) tan(sqrt(c/2) t + atan(y0 / sqrt(2c))) escapes at
    (pi/2 - atan(y0 / sqrt(2c))) / sqrt(c/2).
    """
    if c <= 0:
        raise PreconditionError(f"constant forcing must be positive, got {c}")
    return float((0.5 * np.pi - np.arctan(y0 / np.sqrt(2.0 * c))) / np.sqrt(0.5 * c))


def comparison_solution(y0, t):
    """phi(t) = 2 y0 / (2 - y0 t), the exact solution for zero forcing."""
    return 2.0 * y0 / (2.0 - y0 * np.asarray(t, dtype=float))


@dataclass
class RiccatiResult:
    f_expr: str
    y0: float
    trajectory: Trajectory
    t_esc: float
    bound: float
    dominance: float
    f_min: float

    @property
    def escapes_before_bound(self):
        return self.trajectory.verdict is Verdict.BLOW_UP and self.t_esc < self.bound

    @property
    def dominates(self):
        return self.dominance >= -DOMINANCE_TOLERANCE

    def get_result_info(self):
        return {
            "f": self.f_expr,
            "y0": self.y0,
            "t_esc": self.t_esc,
            "bound": self.bound,
            "escapes_before_bound": self.escapes_before_bound,
            "dominance": self.dominance,
            "dominates": self.dominates,
            "f_min": self.f_min,
            "trajectory": self.trajectory.get_trajectory_info()
        }


def riccati_blowup(f_expr, y0, t_max, oracle=False, step_control=None):
    """
    Input: forcing f(t) as expression text over "t", y0 > 0, end time.
           oracle=True admits f >= 0 (f = 0 makes phi the exact solution).
    Output: RiccatiResult for dy/dt = y^2 / 2 + f(t): escape time t_esc, comparison
    bound 2 / y0 and the minimum of (y - phi) / (1 + |phi|) over recorded
    t <= DOMINANCE_WINDOW * 2 / y0
    """
    if y0 <= 0:
        raise PreconditionError(f"y0 must be positive, got {y0}")
    forcing = parse_expression(f_expr, ("t",))
    grid = np.linspace(0.0, t_max, POSITIVITY_SAMPLES)
    f_min = min(float(forcing(t)) for t in grid)
    if f_min < 0.0 or (f_min == 0.0 and not oracle):
        raise PreconditionError(f"forcing {f_expr!r} is not positive on [0, {t_max}] (min {f_min:.6g})")

    times, states, verdict, rejected = integrate_ode(
        lambda t, y: np.array([0.5 * y[0] * y[0] + forcing(t)]), [y0], t_max, step_control,
        monitor=lambda t, y: abs(float(y[0])))
    trajectory = _scalar_trajectory(times, states, verdict, rejected, "y")
    bound = 2.0 / y0
    t_esc = trajectory.blowup_estimate if trajectory.blowup_estimate is not None else trajectory.t_end

    before = times <= DOMINANCE_WINDOW * bound
    phi = comparison_solution(y0, times[before])
    dominance = float(np.min((states[before, 0] - phi) / (1.0 + np.abs(phi))))
    logger.debug("riccati f=%s y0=%g: t_esc %.6g, bound %.6g", f_expr, y0, t_esc, bound)
    return RiccatiResult(str(f_expr), float(y0), trajectory, float(t_esc), bound, dominance, f_min)


def random_positive_forcings(seed=42, count=20):
    """Seeded positive polynomials in t^2 alternating with constant-plus-exponential forms."""
    rng = make_rng(seed)
    forms = []
    for index in range(count):
        c = rng.uniform(0.1, 1.0, 3)
        if index % 2 == 0:
            forms.append(f"{c[0]:.4f} + {c[1]:.4f} * t^2 + {c[2]:.4f} * t^4")
        else:
            forms.append(f"{c[0]:.4f} + {c[1]:.4f} * exp({c[2]:.4f} * t)")
    return forms


def positive_forcing_suite(seed=42, count=20, initial_values=(0.5, 1.0, 2.0), step_control=None):
    """
    Riccati runs for every seeded forcing and initial value. Each run must escape
    before 2 / y0 and stay above phi.
    """
    results = []
    for f_expr in random_positive_forcings(seed, count):
        for y0 in initial_values:
            results.append(riccati_blowup(f_expr, y0, 2.0 / y0, step_control=step_control))
    return results
