"""
Run configuration: the JSON config file, resolved against the built-in
registries, with command-line overrides applied on top.

Precedence: command line > config file > app settings > built-in defaults.
"""
from dataclasses import dataclass, field, replace
from functools import cached_property

from ricci_engine.errors import ConfigError
from ricci_engine.models.chart import Chart, ScalarFieldDef, VectorFieldDef
from ricci_engine.models.metric import (MetricField, builtin_expectations, builtin_map,
                                        builtin_metric)
from ricci_engine.sampling import DEFAULT_SEED, sample_points

DEFAULT_SAMPLES = 50

DEFAULT_TOLERANCES = {
    "algebraic": 1e-8,
    "curvature": 1e-6,
    "trajectory": 1e-4,
    "blowup": 0.005,
    "atp": 1e-8,
    "pullback": 1e-8,
}


def _resolve_metric(ref, chart_body):
    if isinstance(ref, str):
        return builtin_metric(ref), builtin_expectations(ref)
    if isinstance(ref, dict):
        if chart_body is None:
            raise ConfigError('an inline metric needs a "chart" entry')
        try:
            return MetricField.from_json(ref, Chart.from_json(chart_body)), {}
        except (KeyError, TypeError) as error:
            raise ConfigError(f"invalid inline metric or chart: missing {error}") from None
    raise ConfigError('"metric" must be "builtin:NAME" or an object with "components" and "signature"')


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")


def _validate_flow(flow):
    for index, start in enumerate(flow.get("x0", [])):
        if not isinstance(start, list):
            raise ConfigError(f"flow.x0[{index}] must be a list of coordinates")
    riccati = flow.get("riccati", {})
    if not isinstance(riccati, dict):
        raise ConfigError('"flow.riccati" must be an object with "f" and "y0"')
    for key in ("y0", "t_max"):
        if key in riccati:
            _number(riccati[key], f"flow.riccati.{key}")
    timelike = flow.get("timelike")
    if timelike is not None:
        if not isinstance(timelike, dict) or "x0" not in timelike or "v0" not in timelike:
            raise ConfigError('"flow.timelike" needs "x0" and "v0"')
        if "t_max" in timelike:
            _number(timelike["t_max"], "flow.timelike.t_max")
    for key in ("t_max", "eps", "suite_count"):
        if flow.get(key) is not None:
            _number(flow[key], f"flow.{key}")
    for alpha in flow.get("null_alpha", []):
        _number(alpha, "flow.null_alpha entries")


@dataclass
class RunConfig:
    metric_ref: object = None
    chart_body: dict = None
    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    box: list = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    fields: dict = field(default_factory=dict)
    map_body: dict = None
    expect: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)
    four_pi_g: float = 1.0
    out: str = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ConfigError(f"samples must be a positive integer, got {self.samples!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance(s): {', '.join(sorted(unknown))}")
        for name, tol in self.tolerances.items():
            if not isinstance(tol, (int, float)) or tol <= 0:
                raise ConfigError(f"tolerance {name!r} must be positive, got {tol!r}")
        if not isinstance(self.four_pi_g, (int, float)) or self.four_pi_g == 0:
            raise ConfigError(f"fourpiG must be a nonzero number, got {self.four_pi_g!r}")
        if self.map_body is not None and not isinstance(self.map_body, dict):
            raise ConfigError('"map" must be an object with a "name"')
        _validate_flow(self.flow)
        if self.metric_ref is not None:
            # unknown names and bad expressions surface here
            self.resolve()

    @classmethod
    def from_json(cls, body, settings=None):
        """
        Input: parsed JSON config (a dict) and optional app settings
        Output: RunConfig; raises ConfigError on malformed input
        """
        if not isinstance(body, dict):
            raise ConfigError("config file must hold a JSON object")
        settings = settings or {}
        for key in ("tolerances", "expect", "flow"):
            if not isinstance(body.get(key, {}), dict):
                raise ConfigError(f"\"{key}\" must be an object")
        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update(body.get("tolerances", {}))
        fields = body.get("fields", {})
        if not isinstance(fields, dict):
            raise ConfigError('"fields" must be an object with optional "A" and "sigma"')
        return cls(metric_ref=body.get("metric"),
                   chart_body=body.get("chart"),
                   seed=body.get("seed", settings.get("SEED", DEFAULT_SEED)),
                   samples=body.get("samples", settings.get("SAMPLES", DEFAULT_SAMPLES)),
                   box=body.get("box"),
                   tolerances=tolerances,
                   fields=dict(fields),
                   map_body=body.get("map"),
                   expect=dict(body.get("expect", {})),
                   flow=dict(body.get("flow", {})),
                   four_pi_g=body.get("four_pi_g", settings.get("FOURPIG", 1.0)))

    def with_overrides(self, seed=None, samples=None, metric=None, four_pi_g=None, out=None):
        """Command-line values win over the file; None leaves a value untouched."""
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if samples is not None:
            changes["samples"] = samples
        if metric is not None:
            changes["metric_ref"] = metric if metric.startswith("builtin:") else f"builtin:{metric}"
        if four_pi_g is not None:
            changes["four_pi_g"] = four_pi_g
        if out is not None:
            changes["out"] = out
        return replace(self, **changes)

    def resolve(self):
        return self.metric, self.field_A, self.sigma

    @cached_property
    def metric(self):
        if self.metric_ref is None:
            raise ConfigError('no metric given: set "metric" in the config file or pass --metric')
        return _resolve_metric(self.metric_ref, self.chart_body)[0]

    @property
    def expectations(self):
        expectations = {}
        if self.metric_ref is not None:
            expectations.update(_resolve_metric(self.metric_ref, self.chart_body)[1])
        expectations.update(self.expect)
        return expectations

    @cached_property
    def field_A(self):
        components = self.fields.get("A")
        if components is None or self.metric_ref is None:
            return None
        return VectorFieldDef(self.metric.chart, components)

    @cached_property
    def sigma(self):
        source = self.fields.get("sigma")
        if source is None or self.metric_ref is None:
            return None
        return ScalarFieldDef(self.metric.chart, source)

    def smooth_map(self):
        if self.map_body is None:
            return None
        try:
            return builtin_map(self.map_body["name"])
        except (KeyError, TypeError):
            raise ConfigError('"map" needs a "name" such as "builtin:milne3"') from None

    def tolerance(self, name):
        return self.tolerances[name]

    def points(self, chart=None):
        if chart is None:
            return sample_points(self.metric.chart, self.samples, self.seed, box=self.box)
        return sample_points(chart, self.samples, self.seed)

    def get_config_info(self):
        return {
            "metric": (self.metric_ref if self.metric_ref is None or isinstance(self.metric_ref, str)
                       else self.metric.get_metric_info()),
            "fields": dict(self.fields),
            "map": self.map_body,
            "expect": dict(self.expect),
            "flow": dict(self.flow),
            "box": self.box,
            "tolerances": dict(self.tolerances),
            "four_pi_g": self.four_pi_g
        }
