import logging
import re
from dataclasses import dataclass

import numpy as np

from ricci_engine.errors import (ChartMismatchError, DegenerateMetricError, DimensionError,
                                 GeometryError, UnknownMetricError)
from ricci_engine.models.chart import Chart, SmoothMap, as_jet
from ricci_engine.models.expression import (Expression, call, constant, multiply,
                                            parse_expression)
from ricci_engine.models.jet import Point
from ricci_engine.models.tensor import Tensor2

logger = logging.getLogger(__name__)

DEGENERACY_THRESHOLD = 1e-12

PI = "3.141592653589793"


class MetricField:
    """A chart with a symmetric m x m array of component expressions g_ij."""

    def __init__(self, name, chart, components, signature):
        m = chart.dim
        rows = [[c if isinstance(c, Expression) else parse_expression(c, chart) for c in row]
                for row in components]
        if len(rows) != m or any(len(row) != m for row in rows):
            raise DimensionError(f"metric {name!r} needs a {m}x{m} component array")
        for i in range(m):
            for j in range(i + 1, m):
                if rows[i][j].tree != rows[j][i].tree:
                    raise GeometryError(f"metric {name!r} is not symmetric in components ({i},{j})")
        if len(signature) != m or set(signature) - set("+-"):
            raise GeometryError(f"metric {name!r}: signature {signature!r} does not fit dimension {m}")
        self.name = name
        self.chart = chart
        self.components = rows
        self.signature = signature

    @property
    def dim(self):
        return self.chart.dim

    @classmethod
    def diagonal(cls, name, chart, entries, signature):
        m = len(entries)
        rows = [[entries[i] if i == j else "0" for j in range(m)] for i in range(m)]
        return cls(name, chart, rows, signature)

    def get_metric_info(self):
        return {
            "name": self.name,
            "chart": self.chart.get_chart_info(),
            "components": [[str(c) for c in row] for row in self.components],
            "signature": self.signature
        }

    @classmethod
    def from_json(cls, body, chart):
        return cls(body.get("name", "custom"),
                   chart,
                   body["components"],
                   body["signature"])


@dataclass
class MetricValue:
    """
    The metric evaluated at a point.
    d[a, b, p] = d_p g_ab and dd[a, b, p, q] = d_p d_q g_ab come from the component jets.
    """
    matrix: np.ndarray
    inverse: np.ndarray
    det: float
    jets: list
    d: np.ndarray
    dd: np.ndarray

    def inner(self, u, v):
        return float(u @ self.matrix @ v)

    def lower(self, v):
        return self.matrix @ v

    def raise_index(self, w):
        return self.inverse @ w


def eval_metric(g, x):
    """
    Input: MetricField g and a Point x in its chart
    Output: MetricValue (matrix, inverse, determinant, component jets carrying d g and d^2 g)
    """
    env = g.chart.environment(x)
    m = g.dim
    jets = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            jets[i][j] = jets[j][i] = as_jet(g.components[i][j].evaluate(env), m)
    matrix = np.array([[jet.value for jet in row] for row in jets])
    det = float(np.linalg.det(matrix))
    scale = float(np.max(np.abs(matrix))) ** m
    if scale == 0.0 or abs(det) <= DEGENERACY_THRESHOLD * scale:
        raise DegenerateMetricError(f"metric {g.name!r} is degenerate at {list(x.coords)} (det={det!r})")
    d = np.array([[jet.grad for jet in row] for row in jets])
    dd = np.array([[jet.hess for jet in row] for row in jets])
    return MetricValue(matrix, np.linalg.inv(matrix), det, jets, d, dd)


def signature_of(matrix):
    eigenvalues = np.linalg.eigvalsh(matrix)
    return "".join("-" if e < 0 else "+" for e in sorted(eigenvalues))


def signature_matches(matrix, signature):
    return signature_of(matrix).count("-") == signature.count("-")


def validate_metric(g, points):
    """
    Input: MetricField and sample points
    Output: dict with the number of samples failing symmetry, signature and invertibility
    """
    failures = {"symmetry": 0, "signature": 0, "invertibility": 0}
    for x in points:
        try:
            value = eval_metric(g, x)
        except DegenerateMetricError:
            failures["invertibility"] += 1
            continue
        if np.max(np.abs(value.matrix - value.matrix.T)) > 0.0:
            failures["symmetry"] += 1
        if not signature_matches(value.matrix, g.signature):
            failures["signature"] += 1
        residual = np.max(np.abs(value.inverse @ value.matrix - np.eye(g.dim)))
        if residual > 1e-12 * max(1.0, np.linalg.cond(value.matrix)):
            failures["invertibility"] += 1
    return {"samples": len(points), "failures": failures,
            "valid": not any(failures.values())}


def conformal_rescale(g, sigma):
    """
    Input: MetricField g and ScalarFieldDef sigma on the same chart
    Output: MetricField with components exp(2 sigma) g_ij, same signature
    """
    if sigma.chart.id != g.chart.id:
        raise ChartMismatchError(f"sigma lives on {sigma.chart.id!r}, metric on {g.chart.id!r}")
    if sigma.expression.is_zero():
        return g
    factor = call("exp", multiply(constant(2.0), sigma.tree))
    rows = [[Expression(multiply(factor, c.tree), g.chart.coord_names) for c in row]
            for row in g.components]
    return MetricField(f"exp(2*({sigma.expression}))*{g.name}", g.chart, rows, g.signature)


def pullback_metric(phi, g, x):
    """
    Input: SmoothMap phi into g's chart, MetricField g, Point x of phi's source chart
    Output: covariant Tensor2 (phi* g)_ij = g_ab(phi(x)) dphi^a/dx^i dphi^b/dx^j
    """
    if phi.target.id != g.chart.id:
        raise ChartMismatchError(f"map {phi.id!r} lands in {phi.target.id!r}, metric lives on {g.chart.id!r}")
    y, jacobian = phi.jacobian(x)
    value = eval_metric(g, y)
    return Tensor2(jacobian.T @ value.matrix @ jacobian, "covariant")


def pullback_residual(phi, g, reference, factor, x):
    """
    max |phi* g - c reference| at x, relative to 1 + max |c reference|.
    reference components are read at the same coordinate values as x; c is a
    number or an expression in the source coordinates.
    """
    pulled = pullback_metric(phi, g, x).comps
    expected = eval_metric(reference, Point(reference.chart.id, x.coords)).matrix
    if isinstance(factor, (int, float)):
        c = float(factor)
    else:
        factor = factor if isinstance(factor, Expression) else parse_expression(factor, phi.source)
        c = float(factor.evaluate(dict(zip(phi.source.coord_names, x.coords))))
    scale = 1.0 + float(np.max(np.abs(c * expected)))
    return float(np.max(np.abs(pulled - c * expected))) / scale


##################### BUILT-IN REGISTRY #####################

def _flat(name, coords, signs, box):
    chart = Chart(name, coords, box=box)
    entries = ["-1" if s == "-" else "1" for s in signs]
    return MetricField.diagonal(name, chart, entries, signs)


def _minkowski2():
    return _flat("minkowski2", ("t", "x"), "-+", [(-5, 5)] * 2)


def _minkowski3():
    return _flat("minkowski3", ("t", "x", "y"), "-++", [(-5, 5)] * 3)


def _minkowski4():
    return _flat("minkowski4", ("t", "x", "y", "z"), "-+++", [(-5, 5)] * 4)


def hyperbolic_polar_chart():
    # theta unrestricted; the wedge y > x > 0 corresponds to theta > 0
    return Chart("hyperbolic_polar2", ("rho", "theta"), domain=["rho"],
                 box=[(0.2, 5.0), (-2.0, 2.0)])


def _hyperbolic_polar2():
    return MetricField.diagonal("hyperbolic_polar2", hyperbolic_polar_chart(), ["1", "-rho^2"], "+-")


def _euclidean_polar2():
    chart = Chart("euclidean_polar2", ("rho", "theta"), domain=["rho"], box=[(0.2, 5.0), (-3.0, 3.0)])
    return MetricField.diagonal("euclidean_polar2", chart, ["1", "rho^2"], "++")


def cone_chart():
    return Chart("cone3", ("rho", "u", "v"), domain=["rho", "u"],
                 box=[(0.3, 4.0), (0.1, 2.0), (-3.0, 3.0)])


def _cone3():
    # R+ x H with h = d rho^2 - rho^2 (du^2 + sinh(u)^2 dv^2)
    return MetricField.diagonal("cone3", cone_chart(),
                                ["1", "-rho^2", "-rho^2 * sinh(u)^2"], "+--")


def _schwarzschild():
    chart = Chart("schwarzschild", ("t", "r", "theta", "phi"),
                  domain=["r - 2", "theta", f"{PI} - theta"],
                  box=[(-10.0, 10.0), (2.1, 20.0), (0.1, 3.04), (-3.0, 3.0)])
    return MetricField.diagonal("schwarzschild", chart,
                                ["-(1 - 2/r)", "1/(1 - 2/r)", "r^2", "r^2 * sin(theta)^2"], "-+++")


def _sphere3():
    chart = Chart("sphere3", ("chi", "theta", "phi"),
                  domain=["chi", f"{PI} - chi", "theta", f"{PI} - theta"],
                  box=[(0.2, 2.9), (0.2, 2.9), (-3.0, 3.0)])
    return MetricField.diagonal("sphere3", chart,
                                ["1", "sin(chi)^2", "sin(chi)^2 * sin(theta)^2"], "+++")


def _euclidean(n):
    if not 2 <= n <= 6:
        raise UnknownMetricError(f"euclidean metrics are available for dimensions 2 to 6, not {n}")
    coords = tuple(f"x{i + 1}" for i in range(n))
    return _flat(f"euclidean{n}", coords, "+" * n, [(-5, 5)] * n)


BUILTIN_METRICS = {
    "minkowski2": _minkowski2,
    "minkowski3": _minkowski3,
    "minkowski4": _minkowski4,
    "hyperbolic_polar2": _hyperbolic_polar2,
    "euclidean_polar2": _euclidean_polar2,
    "cone3": _cone3,
    "schwarzschild": _schwarzschild,
    "euclidean_n": lambda: _euclidean(3),
    "sphere3": _sphere3,
}

# What the curvature command checks by default for each built-in metric.
BUILTIN_EXPECTATIONS = {
    "minkowski2": {"riemann_flat": True},
    "minkowski3": {"riemann_flat": True},
    "minkowski4": {"riemann_flat": True},
    "hyperbolic_polar2": {"riemann_flat": True},
    "euclidean_polar2": {"riemann_flat": True},
    "cone3": {"ricci_flat": True},
    "schwarzschild": {"ricci_flat": True},
    "euclidean_n": {"riemann_flat": True},
    "sphere3": {"scalar_curvature": 6.0},
}

_EUCLIDEAN = re.compile(r"^euclidean(\d+)$")


def builtin_metric(name):
    """
    Input: registry name, optionally prefixed with "builtin:"
    Output: the registry MetricField with its chart and domain
    """
    if name.startswith("builtin:"):
        name = name[len("builtin:"):]
    if name in BUILTIN_METRICS:
        return BUILTIN_METRICS[name]()
    match = _EUCLIDEAN.match(name)
    if match:
        return _euclidean(int(match.group(1)))
    raise UnknownMetricError(f"unknown built-in metric {name!r}")


def builtin_expectations(name):
    if name.startswith("builtin:"):
        name = name[len("builtin:"):]
    if _EUCLIDEAN.match(name):
        return {"riemann_flat": True}
    return dict(BUILTIN_EXPECTATIONS.get(name, {}))


##################### BUILT-IN MAPS #####################

def inversion_map():
    """The hyperbolic inversion (rho, theta) -> (1/rho, theta); an involution."""
    chart = hyperbolic_polar_chart()
    return SmoothMap("inversion2", chart, chart, ["1/rho", "theta"])


def wedge_chart():
    return Chart("wedge2", ("x", "y"), domain=["y - x", "y + x"], box=[(-2.0, 2.0), (0.1, 4.0)])


def hyperbolic_polar_map():
    """(x, y) -> (rho, theta) with x = rho sinh(theta), y = rho cosh(theta)."""
    return SmoothMap("hyperbolic_polar_map2", wedge_chart(), hyperbolic_polar_chart(),
                     ["sqrt(y^2 - x^2)", "0.5 * log((y + x)/(y - x))"])


def future_cone_chart():
    # inside the future light cone, with x > 0 so that v = atan(y/x) is smooth
    return Chart("future_cone3", ("t", "x", "y"), domain=["t^2 - x^2 - y^2", "t", "x"],
                 box=[(2.0, 5.0), (0.1, 1.4), (-1.4, 1.4)])


def milne_map():
    """
    Phi_3: x -> (rho, u, v) with rho = sqrt(t^2 - x^2 - y^2) and x/rho on the unit
    hyperboloid written as (cosh u, sinh u cos v, sinh u sin v).
    """
    rho = "sqrt(t^2 - x^2 - y^2)"
    u = f"log(sqrt(x^2 + y^2)/{rho} + sqrt((x^2 + y^2)/(t^2 - x^2 - y^2) + 1))"
    return SmoothMap("milne3", future_cone_chart(), cone_chart(), [rho, u, "atan(y/x)"])


# h has signature "+--" while eta has "-++": the isometry holds up to this homothety
MILNE_HOMOTHETY = -1.0

BUILTIN_MAPS = {
    "inversion2": inversion_map,
    "hyperbolic_polar_map2": hyperbolic_polar_map,
    "milne3": milne_map,
}


def builtin_map(name):
    if name.startswith("builtin:"):
        name = name[len("builtin:"):]
    try:
        return BUILTIN_MAPS[name]()
    except KeyError:
        raise UnknownMetricError(f"unknown built-in map {name!r}") from None
