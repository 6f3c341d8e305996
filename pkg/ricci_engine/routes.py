import json
import os
import time

import click
import numpy as np

from ricci_engine import create_app
from ricci_engine.atp import atp_scan, constancy_scan, divergence_residual, ricci_round_trip
from ricci_engine.conformal import (ConformalPair, conformal_connection_check, field_data_from_vector,
                                    random_algebra_residual, verify_main_identity)
from ricci_engine.curvature import curvature_at, first_bianchi_residual, metric_compatibility_residual
from ricci_engine.errors import ConfigError, GeometryError
from ricci_engine.flows import (coefficient_ode_timelike, constant_forcing_blowup, integrate_geodesic,
                                integrate_pregeodesic_A, null_coefficient_ode, positive_forcing_suite,
                                riccati_blowup)
from ricci_engine.models.config import RunConfig
from ricci_engine.models.expression import parse_expression
from ricci_engine.models.metric import builtin_metric, eval_metric, pullback_residual, validate_metric
from ricci_engine.models.report import Check, Report
from ricci_engine.models.trajectory import StepControl, Verdict


def run_options(command):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON run configuration."),
        click.option("--seed", type=int, help="Sampling seed (overrides the config file)."),
        click.option("--samples", type=click.IntRange(min=1), help="Number of sample points."),
        click.option("--out", type=click.Path(dir_okay=False), help="Also write the JSON report here."),
        click.option("--metric", help="Built-in metric name, with or without the builtin: prefix."),
        click.option("--fourpiG", "four_pi_g", type=float, help="The constant 4 pi G of the energy tensor."),
        click.option("--table", is_flag=True, help="Print a plain-text table instead of JSON."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.group()
@click.pass_context
def cli(ctx):
    """Sampled numerical checks of conformal connections, Ricci identities and atypical fields."""
    if ctx.obj is None:
        ctx.obj = create_app()


#######################################################
###################### COMMANDS #######################
#######################################################

@cli.command("curvature")
@run_options
@click.pass_obj
def cmd_curvature(app, **options):
    """
    Input: a metric (config file or --metric)
    Output: Ricci, scalar curvature and energy tensor at the samples, checked against
    the metric's expectations (flatness or a scalar curvature value)
    and against the Bianchi and metric-compatibility identities.
    Exit code 0 if every check passes, 1 otherwise, 2 on configuration errors.
    """
    run_command(app, "curvature", options, curvature_checks)


@cli.command("conformal")
@run_options
@click.pass_obj
def cmd_conformal(app, **options):
    """
    Input: a metric and fields.sigma (optionally fields.A, which must equal grad sigma)
    Output: the connection-difference check and, for m >= 3, the Ricci identity chain.
    """
    run_command(app, "conformal", options, conformal_checks)


@cli.command("atp")
@run_options
@click.pass_obj
def cmd_atp(app, **options):
    """
    Input: a metric and a candidate fields.A
    Output: atypical-field residual, causal class tally, locally-metric check,
    sigma recovery and the curvature obstructions.
    """
    run_command(app, "atp", options, atp_checks)


@cli.command("flow")
@run_options
@click.option("--trajectories", "table_dir", type=click.Path(file_okay=False),
              help="Write each integrated trajectory as a text table into this directory.")
@click.pass_obj
def cmd_flow(app, table_dir, **options):
    """
    Input: optional config with "flow" settings; without one, the hyperbolic polar
    example field -2/rho d/drho is used
    Output: pregeodesic blow-up, null coefficient ODE, Riccati and comparison checks.
    With --trajectories, one <name>.txt table per pregeodesic and null coefficient run.
    """
    run_command(app, "flow", options, lambda config: flow_checks(config, table_dir),
                defaults=EXAMPLE_FLOW)


@cli.command("report-all")
@run_options
@click.pass_obj
def cmd_report_all(app, **options):
    """
    Runs every acceptance group in one report; each check is prefixed with its group.
    --samples replaces the per-group sample counts.
    """
    run_command(app, "report-all", options,
                lambda config: report_all_checks(config, options["samples"]))


#######################################################
################### CHECK BUILDERS ####################
#######################################################

def curvature_checks(config):
    g = config.metric
    points = config.points()
    tol = config.tolerance("curvature")
    expect = config.expectations

    riemann_max = ricci_max = energy_max = bianchi_max = compatibility_max = 0.0
    scalars = []
    for x in points:
        at = curvature_at(g, x)
        scale = max(1.0, float(np.max(np.abs(at.metric.matrix))))
        riemann_max = max(riemann_max, float(np.max(np.abs(at.riemann.comps))) / scale)
        ricci_max = max(ricci_max, float(np.max(np.abs(at.ricci.comps))) / scale)
        energy = at.energy_tensor(config.four_pi_g).comps
        energy_max = max(energy_max, float(np.max(np.abs(energy))) / scale)
        bianchi_max = max(bianchi_max, first_bianchi_residual(at.riemann) / scale)
        compatibility_max = max(compatibility_max,
                                metric_compatibility_residual(at.metric, at.christoffel.gamma) / scale)
        scalars.append(at.scalar)

    validation = validate_metric(g, points)
    checks = [
        Check.flag("metric_valid", validation["valid"]),
        Check("first_bianchi", bianchi_max, tol),
        Check("metric_compatibility", compatibility_max, tol),
    ]
    if expect.get("riemann_flat"):
        checks.append(Check("riemann_zero", riemann_max, tol))
    if expect.get("riemann_flat") or expect.get("ricci_flat"):
        checks.append(Check("ricci_zero", ricci_max, tol))
        checks.append(Check("energy_zero", energy_max, tol))
    if "scalar_curvature" in expect:
        target = float(expect["scalar_curvature"])
        checks.append(Check("scalar_curvature", max(abs(s - target) for s in scalars), tol))
    checks.extend(pullback_checks(config))

    details = {
        "riemann_max": riemann_max,
        "ricci_max": ricci_max,
        "energy_max": energy_max,
        "scalar_min": min(scalars),
        "scalar_max": max(scalars),
        "validation": validation
    }
    return checks, details


def pullback_checks(config):
    phi = config.smooth_map()
    if phi is None:
        return []
    body = config.map_body
    reference = builtin_metric(body["reference"]) if "reference" in body else config.metric
    factor = body.get("factor", 1.0)
    residual = max(pullback_residual(phi, config.metric, reference, factor, x)
                   for x in config.points(phi.source))
    return [Check(f"pullback:{phi.id}", residual, config.tolerance("pullback"))]


def conformal_checks(config):
    g = config.metric
    sigma = config.sigma
    if sigma is None:
        raise ConfigError('the conformal command needs "fields": {"sigma": ...}')
    pair = ConformalPair(g, config.field_A, sigma)
    points = config.points()
    tol_algebraic = config.tolerance("algebraic")
    tol_curvature = config.tolerance("curvature")

    connection = max(conformal_connection_check(pair, x, seed=config.seed) for x in points)
    checks = [Check("connection_difference", connection, tol_algebraic)]
    if config.field_A is not None:
        checks.append(Check("field_is_gradient", max(pair.gradient_residual(x) for x in points),
                            tol_algebraic))
    details = {"pair": pair.get_pair_info()}

    if pair.dim < 3:
        details["note"] = "dimension 2: the Ricci comparison identities need m >= 3"
        return checks, details

    worst = {}
    for x in points:
        for name, value in verify_main_identity(pair, x).residuals.items():
            worst[name] = max(worst.get(name, 0.0), value)
    for name in ("main", "trace", "q", "Q", "two_path"):
        checks.append(Check(f"ricci_identity_{name}", worst[name], tol_curvature))
    checks.append(Check("identity_algebra", random_algebra_residual(config.seed, pair.dim),
                        min(tol_algebraic, IDENTITY_ALGEBRA_TOLERANCE)))
    details["residuals"] = worst
    return checks, details


def atp_checks(config):
    g = config.metric
    A = config.field_A
    if A is None:
        raise ConfigError('the atp command needs "fields": {"A": [...]}')
    points = config.points()
    tol_atp = config.tolerance("atp")
    tol_algebraic = config.tolerance("algebraic")
    tol_curvature = config.tolerance("curvature")
    expect = config.expect

    scan = atp_scan(g, A, points)
    checks = [
        Check("atp_residual", scan.max_residual, tol_atp),
        Check.flag("causal_class_uniform", scan.uniform),
    ]
    if "causal_class" in expect:
        checks.append(Check.flag("causal_class", scan.causal_class == expect["causal_class"]))
    if "norm2" in expect:
        norm2 = parse_expression(expect["norm2"], g.chart)
        residual = 0.0
        for x in points:
            expected = float(norm2(*x.coords))
            residual = max(residual, abs(_norm2_at(g, A, x) - expected) / (1.0 + abs(expected)))
        checks.append(Check("norm2", residual, tol_atp))
    checks += [
        Check("norm_derivative", scan.norm_derivative_max, tol_atp),
        Check("divergence_identity", max(divergence_residual(g, A, x) for x in points), tol_atp),
        Check("locally_metric", scan.d_alpha_max, tol_algebraic),
        Check("obstruction_curvature", scan.obstruction_max[0], tol_curvature),
        Check("obstruction_ricci", scan.obstruction_max[1], tol_curvature),
    ]
    # sigma = log|<A,A>| only exists for atypical fields of constant causal class
    if scan.max_residual < tol_atp and scan.sigma_gradient_max is not None and scan.uniform:
        checks.append(Check("sigma_gradient", scan.sigma_gradient_max, tol_algebraic))
        checks.append(Check("ricci_round_trip", ricci_round_trip(g, A, points), tol_curvature))
    checks.extend(pullback_checks(config))

    details = {
        "scan": scan.get_report_info(),
        "constancy": constancy_scan(g, A, points, tol_atp).get_report_info(),
    }
    return checks, details


def _norm2_at(g, A, x):
    return field_data_from_vector(A, eval_metric(g, x), x).norm2


EXAMPLE_FLOW = {
    "metric": "builtin:hyperbolic_polar2",
    "fields": {"A": ["-2/rho", "0"]},
    "flow": {"x0": [[1.0, 0.0], [2.0, 0.0]]},
}


def flow_checks(config, table_dir=None):
    checks, details, trajectories = [], {}, {}
    for build in (pregeodesic_checks, null_ode_checks):
        more_checks, more_details = build(config, trajectories)
        checks += more_checks
        details.update(more_details)
    for build in (riccati_checks, comparison_suite_checks, timelike_checks):
        more_checks, more_details = build(config)
        checks += more_checks
        details.update(more_details)
    if table_dir:
        write_trajectory_tables(table_dir, trajectories)
    return checks, details


def write_trajectory_tables(directory, trajectories):
    try:
        os.makedirs(directory, exist_ok=True)
        for name, trajectory in trajectories.items():
            with open(os.path.join(directory, f"{name}.txt"), "w") as handle:
                handle.write(trajectory.to_table() + "\n")
    except OSError as error:
        raise ConfigError(f"cannot write trajectory tables to {directory!r}: {error}") from None


def pregeodesic_checks(config, trajectories=None):
    flow = config.flow
    if config.metric_ref is None or config.field_A is None or not flow.get("x0"):
        return [], {}
    g = config.metric
    A = config.field_A
    checks, details = [], {}
    for index, start in enumerate(flow["x0"]):
        trajectory = integrate_pregeodesic_A(g, A, g.chart.point(start), flow.get("t_max"))
        name = f"pregeodesic[{index}]"
        predicted = trajectory.details["predicted_blowup"]
        checks += [
            Check(f"{name}:closed_form", trajectory.details["closed_form_error"],
                  config.tolerance("trajectory")),
            Check(f"{name}:ratio", trajectory.details["ratio_error"], config.tolerance("curvature")),
            Check(f"{name}:norm_drift", trajectory.details["norm_drift"], config.tolerance("trajectory")),
            Check(f"{name}:blowup", abs(_escape_time(trajectory) - predicted), config.tolerance("blowup")),
        ]
        details[name] = trajectory.get_trajectory_info()
        if trajectories is not None:
            trajectories[name] = trajectory
    return checks, details


def _escape_time(trajectory):
    return trajectory.blowup_estimate if trajectory.blowup_estimate is not None else trajectory.t_end


def null_ode_checks(config, trajectories=None):
    flow = config.flow
    eps = flow.get("eps", 1)
    checks, details = [], {}
    for alpha in flow.get("null_alpha", [0.0, 0.5, 1.0, 2.0]):
        rate = eps * alpha
        trajectory = null_coefficient_ode(alpha, eps, 1.5 / rate if rate > 0 else 5.0)
        name = f"null_ode[{alpha:g}]"
        if rate > 0:
            checks.append(Check(f"{name}:blowup", abs(_escape_time(trajectory) - 1.0 / rate),
                                config.tolerance("blowup")))
            checks.append(Check(f"{name}:closed_form", trajectory.details["closed_form_error"],
                                config.tolerance("trajectory")))
        elif rate == 0:
            checks.append(Check(f"{name}:parallel", trajectory.details["closed_form_error"],
                                config.tolerance("algebraic")))
        else:
            checks.append(Check.flag(f"{name}:no_blowup", trajectory.verdict is Verdict.COMPLETED))
        details[name] = trajectory.get_trajectory_info()
        if trajectories is not None:
            trajectories[name] = trajectory
    return checks, details


def riccati_checks(config):
    settings = config.flow.get("riccati", {"f": "1", "y0": 1.0})
    f_expr = str(settings.get("f", "1"))
    y0 = float(settings.get("y0", 1.0))
    oracle = bool(settings.get("oracle", False))
    t_max = float(settings.get("t_max", 3.0 / y0))
    result = riccati_blowup(f_expr, y0, t_max, oracle=oracle)
    tol = config.tolerance("blowup")

    checks = [Check.flag("riccati:dominates_phi", result.dominates)]
    if oracle:
        checks.append(Check("riccati:oracle_bound", abs(result.t_esc - result.bound), tol))
    else:
        checks.append(Check.flag("riccati:escapes_before_bound", result.escapes_before_bound))
    forcing = parse_expression(f_expr, ("t",))
    if not forcing.variables and float(forcing()) > 0:
        expected = constant_forcing_blowup(float(forcing()), y0)
        checks.append(Check("riccati:closed_form", abs(result.t_esc - expected), tol))
    halved = riccati_blowup(f_expr, y0, t_max, oracle=oracle,
                            step_control=StepControl().halved())
    checks.append(Check("riccati:step_convergence", abs(halved.t_esc - result.t_esc), 0.1 * tol))
    return checks, {"riccati": result.get_result_info()}


def comparison_suite_checks(config):
    count = int(config.flow.get("suite_count", 20))
    if count <= 0:
        return [], {}
    results = positive_forcing_suite(config.seed, count)
    failures = [r for r in results if not (r.escapes_before_bound and r.dominates)]
    details = {"comparison_suite": {"runs": len(results),
                                    "failures": [r.get_result_info() for r in failures]}}
    return [Check("comparison_suite", len(failures), 0.5)], details


def timelike_checks(config):
    settings = config.flow.get("timelike")
    if settings is None or config.field_A is None:
        return [], {}
    g = config.metric
    x0 = g.chart.point(settings["x0"])
    trajectory = integrate_geodesic(g, x0, settings["v0"], float(settings.get("t_max", 0.6)))
    report = coefficient_ode_timelike(g, config.field_A, trajectory)
    checks = [
        Check("coefficient_ode", report.residual, config.tolerance("trajectory")),
        Check("frame_drift", report.drift, config.tolerance("curvature")),
        Check("geodesic_norm_drift", trajectory.details["norm_drift"], config.tolerance("curvature")),
    ]
    return checks, {"coefficient_ode": report.get_report_info()}


IDENTITY_ALGEBRA_TOLERANCE = 1e-12
FLAT_TOLERANCES = {"curvature": 1e-9}
ATP_TOLERANCES = {"atp": 1e-10, "algebraic": 1e-12}
PULLBACK_TOLERANCES = {"pullback": 1e-9}

ACCEPTANCE_GROUPS = [
    ("flatness:minkowski2", curvature_checks,
     {"metric": "builtin:minkowski2", "tolerances": FLAT_TOLERANCES}, 200),
    ("flatness:minkowski3", curvature_checks,
     {"metric": "builtin:minkowski3", "tolerances": FLAT_TOLERANCES}, 200),
    ("flatness:minkowski4", curvature_checks,
     {"metric": "builtin:minkowski4", "tolerances": FLAT_TOLERANCES}, 200),
    ("flatness:hyperbolic_polar2", curvature_checks,
     {"metric": "builtin:hyperbolic_polar2", "tolerances": FLAT_TOLERANCES}, 200),
    ("einstein:schwarzschild", curvature_checks, {"metric": "builtin:schwarzschild"}, 100),
    ("conformal:minkowski3", conformal_checks,
     {"metric": "builtin:minkowski3", "fields": {"sigma": "0.3*x"}}, 50),
    ("conformal:minkowski4", conformal_checks,
     {"metric": "builtin:minkowski4", "fields": {"sigma": "0.1*(x^2 - t)"}}, 50),
    ("example2:atp", atp_checks,
     {"metric": "builtin:hyperbolic_polar2", "fields": {"A": ["-2/rho", "0"]},
      "expect": {"causal_class": "spacelike", "norm2": "4/rho^2"},
      "map": {"name": "builtin:inversion2", "factor": "rho^-4"},
      "tolerances": {**ATP_TOLERANCES, **PULLBACK_TOLERANCES}}, 100),
    ("example2:conformal", conformal_checks,
     {"metric": "builtin:hyperbolic_polar2",
      "fields": {"A": ["-2/rho", "0"], "sigma": "-2*log(rho)"}}, 100),
    ("example2:wedge", curvature_checks,
     {"metric": "builtin:hyperbolic_polar2",
      "map": {"name": "builtin:hyperbolic_polar_map2", "reference": "builtin:minkowski2"},
      "tolerances": {**FLAT_TOLERANCES, **PULLBACK_TOLERANCES}}, 100),
    ("cone3:curvature", curvature_checks,
     {"metric": "builtin:cone3",
      "map": {"name": "builtin:milne3", "reference": "builtin:minkowski3", "factor": -1.0},
      "tolerances": {"curvature": 1e-8, **PULLBACK_TOLERANCES}}, 100),
    ("cone3:atp", atp_checks,
     {"metric": "builtin:cone3", "fields": {"A": ["-2/rho", "0", "0"]},
      "tolerances": {**ATP_TOLERANCES, "curvature": 1e-7}}, 100),
    ("pregeodesic", pregeodesic_checks, {**EXAMPLE_FLOW, "tolerances": {"trajectory": 1e-6}}, 1),
    ("null_ode", null_ode_checks, {"flow": {"null_alpha": [0.0, 0.5, 1.0, 2.0]}}, 1),
    ("riccati", riccati_checks, {"flow": {"riccati": {"f": "1", "y0": 1.0}}}, 1),
    ("riccati_oracle", riccati_checks, {"flow": {"riccati": {"f": "0", "y0": 1.0, "oracle": True}}}, 1),
    ("comparison", comparison_suite_checks, {"flow": {"suite_count": 20}}, 1),
    ("coefficient_ode", timelike_checks,
     {"metric": "builtin:cone3", "fields": {"A": ["-2/rho", "0", "0"]},
      "flow": {"timelike": {"x0": [1.0, 0.7, 0.0], "v0": [0.0, 1.0, 0.0], "t_max": 0.6}}}, 1),
]


def report_all_checks(config, samples_override=None):
    checks, details = [], {}
    for group, build, body, samples in ACCEPTANCE_GROUPS:
        group_body = dict(body)
        group_body["seed"] = config.seed
        group_body["samples"] = samples_override if samples_override is not None else samples
        group_config = RunConfig.from_json(group_body)
        group_checks, group_details = build(group_config)
        for check in group_checks:
            check.name = f"{group}:{check.name}"
        checks += group_checks
        details[group] = {"pass": all(check.passed for check in group_checks),
                          "details": group_details}
    return checks, details


#######################################################
###################### HELPERS ########################
#######################################################

def load_run_config(app, options, defaults=None):
    if options["config_path"]:
        try:
            with open(options["config_path"]) as handle:
                body = json.load(handle)
        except json.JSONDecodeError as error:
            raise ConfigError(f"config file is not valid JSON: {error}") from None
    else:
        body = dict(defaults or {})
    config = RunConfig.from_json(body, app.config)
    return config.with_overrides(seed=options["seed"], samples=options["samples"],
                                 metric=options["metric"], four_pi_g=options["four_pi_g"],
                                 out=options["out"])


def run_command(app, command, options, build_checks, defaults=None):
    ctx = click.get_current_context()
    started = time.perf_counter()
    try:
        config = load_run_config(app, options, defaults)
        checks, details = build_checks(config)
    except GeometryError as error:
        exit_with_error(ctx, str(error))
    except (KeyError, TypeError, ValueError) as error:
        exit_with_error(ctx, f"invalid or missing config value: {error}")

    report = Report(command, config.seed, config.samples, checks,
                    config.get_config_info(), details, time.perf_counter() - started)
    emit_report(report, config.out, options["table"])
    ctx.exit(0 if report.passed else 1)


def exit_with_error(ctx, message):
    click.echo(json.dumps(detail_error(message)), err=True)
    ctx.exit(2)


def emit_report(report, out, table=False):
    text = json.dumps(report.get_report_info(), indent=2)
    if out:
        with open(out, "w") as handle:
            handle.write(text + "\n")
    click.echo(report.to_table() if table else text)


def detail_error(error):
    return {
        "errors": [error]
    }
