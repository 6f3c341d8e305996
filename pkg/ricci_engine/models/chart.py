import logging

import numpy as np

from ricci_engine.errors import ChartMismatchError, DimensionError, DomainViolation, GeometryError
from ricci_engine.models.expression import Expression, parse_expression, substitute
from ricci_engine.models.jet import Jet2, Point, lift_point

logger = logging.getLogger(__name__)


class Chart:
    """
    A coordinate chart. The validity domain is a list of expressions that must
    all be strictly positive (e.g. "rho", "r - 2").
    """

    def __init__(self, chart_id, coord_names, domain=(), box=None):
        coord_names = tuple(coord_names)
        if len(coord_names) < 2:
            raise DimensionError(f"chart {chart_id!r} needs dimension >= 2, got {len(coord_names)}")
        if len(set(coord_names)) != len(coord_names):
            raise GeometryError(f"chart {chart_id!r} repeats a coordinate name")
        self.id = chart_id
        self.coord_names = coord_names
        self.domain = tuple(d if isinstance(d, Expression) else parse_expression(d, coord_names)
                            for d in domain)
        self.box = [tuple(map(float, b)) for b in box] if box else [(-1.0, 1.0)] * len(coord_names)
        if len(self.box) != len(coord_names):
            raise GeometryError(f"chart {chart_id!r}: box has {len(self.box)} ranges for "
                                f"{len(coord_names)} coordinates")
        self.warnings = []
        if self.dim == 2:
            # Allowed for the two-dimensional example; operations needing m > 2 check for themselves.
            self.warnings.append("dimension 2")
            logger.debug("chart %s has dimension 2", chart_id)

    @property
    def dim(self):
        return len(self.coord_names)

    def contains(self, coords, margin=0.0):
        """Every domain expression exceeds margin at coords."""
        env = dict(zip(self.coord_names, map(float, coords)))
        try:
            return all(condition.evaluate(env) > margin for condition in self.domain)
        except GeometryError:
            return False

    def point(self, *coords):
        if len(coords) == 1 and np.ndim(coords[0]) == 1:
            coords = tuple(coords[0])
        x = Point(self.id, coords)
        self.check(x)
        return x

    def check(self, x):
        if x.chart_id != self.id:
            raise ChartMismatchError(f"point belongs to chart {x.chart_id!r}, not {self.id!r}")
        if x.dim != self.dim:
            raise DimensionError(f"point has {x.dim} coordinates, chart {self.id!r} has {self.dim}")
        if not self.contains(x.coords):
            raise DomainViolation(f"point {list(x.coords)} is outside the domain of chart {self.id!r}")

    def environment(self, x):
        """
        Input: a Point of this chart
        Output: mapping from coordinate name to its coordinate jet at x
        """
        self.check(x)
        return dict(zip(self.coord_names, lift_point(x)))

    def get_chart_info(self):
        return {
            "id": self.id,
            "coords": list(self.coord_names),
            "domain": [str(d) for d in self.domain],
            "box": [list(b) for b in self.box]
        }

    @classmethod
    def from_json(cls, body):
        return cls(body["id"],
                   body["coords"],
                   domain=body.get("domain", ()),
                   box=body.get("box"))


def as_jet(value, dim):
    if isinstance(value, Jet2):
        return value
    return Jet2.constant(value, dim)


def _parse_all(sources, chart):
    return [s if isinstance(s, Expression) else parse_expression(s, chart) for s in sources]


class ScalarFieldDef:
    def __init__(self, chart, expression):
        self.chart = chart
        self.expression = expression if isinstance(expression, Expression) \
            else parse_expression(expression, chart)

    @property
    def tree(self):
        return self.expression.tree

    def jet(self, x):
        return as_jet(self.expression.evaluate(self.chart.environment(x)), self.chart.dim)

    def value(self, x):
        self.chart.check(x)
        return float(self.expression.evaluate(dict(zip(self.chart.coord_names, x.coords))))

    def get_field_info(self):
        return {
            "chart": self.chart.id,
            "expression": str(self.expression)
        }


class _ComponentField:
    kind = "field"

    def __init__(self, chart, components):
        components = _parse_all(components, chart)
        if len(components) != chart.dim:
            raise DimensionError(f"{self.kind} on chart {chart.id!r} needs {chart.dim} components, "
                                 f"got {len(components)}")
        self.chart = chart
        self.components = components

    @classmethod
    def zero(cls, chart):
        return cls(chart, ["0"] * chart.dim)

    def jets(self, x):
        env = self.chart.environment(x)
        return [as_jet(c.evaluate(env), self.chart.dim) for c in self.components]

    def value_and_derivative(self, x):
        """
        Output: (values, derivatives) with derivatives[k, i] = d_i of component k
        """
        jets = self.jets(x)
        return (np.array([j.value for j in jets]),
                np.array([j.grad for j in jets]))

    def get_field_info(self):
        return {
            "chart": self.chart.id,
            "kind": self.kind,
            "components": [str(c) for c in self.components]
        }


class VectorFieldDef(_ComponentField):
    kind = "vector"


class OneFormDef(_ComponentField):
    kind = "one-form"


class SmoothMap:
    """A map between charts, given by target coordinates as expressions in source coordinates."""

    def __init__(self, map_id, source, target, components):
        components = _parse_all(components, source)
        if len(components) != target.dim:
            raise DimensionError(f"map {map_id!r} needs {target.dim} components, got {len(components)}")
        self.id = map_id
        self.source = source
        self.target = target
        self.components = components

    @classmethod
    def identity(cls, chart):
        return cls(f"id_{chart.id}", chart, chart, list(chart.coord_names))

    def jacobian(self, x):
        """
        Input: Point of the source chart
        Output: (image Point in the target chart, Jacobian J[a, i] = d phi^a / d x^i)
        """
        env = self.source.environment(x)
        jets = [as_jet(c.evaluate(env), self.source.dim) for c in self.components]
        y = Point(self.target.id, [j.value for j in jets])
        if not self.target.contains(y.coords):
            raise DomainViolation(f"map {self.id!r} sends {list(x.coords)} outside chart {self.target.id!r}")
        return y, np.array([j.grad for j in jets])

    def apply(self, x):
        return self.jacobian(x)[0]

    def compose(self, first):
        """Return self o first."""
        if first.target.id != self.source.id:
            raise ChartMismatchError(f"cannot compose {self.id!r} after {first.id!r}: "
                                     f"{first.target.id!r} is not {self.source.id!r}")
        mapping = dict(zip(self.source.coord_names, (c.tree for c in first.components)))
        trees = [Expression(substitute(c.tree, mapping), first.source.coord_names)
                 for c in self.components]
        return SmoothMap(f"{self.id}.{first.id}", first.source, self.target, trees)

    def get_map_info(self):
        return {
            "id": self.id,
            "source": self.source.id,
            "target": self.target.id,
            "components": [str(c) for c in self.components]
        }


def compose_maps(psi, phi):
    return psi.compose(phi)
