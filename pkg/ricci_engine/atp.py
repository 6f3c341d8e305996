"""
Atypical (ATP) fields: vector fields with

    nabla_X A = <A,X> A - <A,A> X / 2    for every X.

Candidates are verified at sample points; the engine never searches for them.
Statements that hold on all of M are checked as uniformity over the samples.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ricci_engine.conformal import field_data_from_vector
from ricci_engine.curvature import christoffel_symbols, curvature_at
from ricci_engine.errors import NullFieldError
from ricci_engine.models.chart import ScalarFieldDef
from ricci_engine.models.expression import Expression, add, call, constant, multiply
from ricci_engine.models.metric import conformal_rescale, eval_metric

logger = logging.getLogger(__name__)

ATP_TOLERANCE = 1e-8
NULL_TOLERANCE = 1e-9
ZERO_TOLERANCE = 1e-12


class CausalCharacter(str, Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    NULL = "null"
    ZERO = "zero"


def _field_at(g, A, x):
    value = eval_metric(g, x)
    return value, field_data_from_vector(A, value, x)


def _residual_matrix(value, data):
    gamma = christoffel_symbols(value)
    # nabla[k, i] = (nabla_{d_i} A)^k
    nabla = data.d_vector + np.einsum("kij,j->ki", gamma, data.vector)
    expected = np.outer(data.vector, data.alpha) - 0.5 * data.norm2 * np.eye(len(data.vector))
    return nabla - expected


def _classify(value, data, tol=None):
    size = float(np.linalg.norm(data.vector))
    if size <= (tol if tol is not None else ZERO_TOLERANCE):
        return CausalCharacter.ZERO
    norm2 = data.norm2
    if tol is None:
        tol = NULL_TOLERANCE * float(np.max(np.abs(value.matrix))) * size ** 2
    if abs(norm2) <= tol:
        return CausalCharacter.NULL
    return CausalCharacter.SPACELIKE if norm2 > 0 else CausalCharacter.TIMELIKE


def _d_alpha(data):
    """(d alpha)_ij = d_i alpha_j - d_j alpha_i"""
    return data.d_alpha.T - data.d_alpha


def norm_gradient(value, data):
    """d_i <A,A>"""
    return (np.einsum("jki,j,k->i", value.d, data.vector, data.vector)
            + 2.0 * data.alpha @ data.d_vector)


##################### OPERATIONS #####################

def atp_residual(g, A, x):
    """
    Input: MetricField g, VectorFieldDef A, Point x
    Output: max over the coordinate basis of |nabla_X A - <A,X> A + <A,A> X / 2|
    """
    value, data = _field_at(g, A, x)
    return float(np.max(np.abs(_residual_matrix(value, data))))


def causal_character(g, A, x, tol=None):
    """
    Input: MetricField g, VectorFieldDef A, Point x, optional tolerance
    Output: CausalCharacter by the sign of <A,A>(x); zero when |A| itself vanishes
    """
    value, data = _field_at(g, A, x)
    return _classify(value, data, tol)


@dataclass
class ConstancyReport:
    samples: int
    tally: dict
    refused: bool = False
    reason: str = ""
    max_residual: float = 0.0
    violations: list = field(default_factory=list)

    @property
    def uniform(self):
        return not self.refused and sum(1 for count in self.tally.values() if count) == 1

    @property
    def causal_class(self):
        if not self.tally or self.refused:
            return None
        return max(self.tally, key=lambda name: self.tally[name])

    def get_report_info(self):
        return {
            "samples": self.samples,
            "tally": dict(self.tally),
            "uniform": self.uniform,
            "class": self.causal_class,
            "refused": self.refused,
            "reason": self.reason,
            "max_residual": self.max_residual,
            "violations": self.violations
        }


def _empty_tally():
    return {c.value: 0 for c in CausalCharacter}


def constancy_scan(g, A, points, atp_tol=ATP_TOLERANCE, tol=None):
    """
    Input: MetricField, VectorFieldDef, sample points
    Output: ConstancyReport; refused when A fails the atypical residual anywhere.
    A uniform tally is consistent with a causal class that never changes.
    """
    tally = _empty_tally()
    classes = []
    worst = 0.0
    for x in points:
        value, data = _field_at(g, A, x)
        worst = max(worst, float(np.max(np.abs(_residual_matrix(value, data)))))
        classes.append((x, _classify(value, data, tol)))
    if worst >= atp_tol:
        logger.debug("constancy scan refused: atp residual %g", worst)
        return ConstancyReport(len(points), tally, refused=True,
                               reason=f"field is not atypical (residual {worst:.3g})",
                               max_residual=worst)
    for _, character in classes:
        tally[character.value] += 1
    report = ConstancyReport(len(points), tally, max_residual=worst)
    dominant = report.causal_class
    report.violations = [list(x.coords) for x, character in classes if character.value != dominant]
    return report


@dataclass
class LocallyMetricReport:
    samples: int
    d_alpha_max: float
    max_residual: float
    precondition_met: bool

    def get_report_info(self):
        return {
            "samples": self.samples,
            "d_alpha_max": self.d_alpha_max,
            "max_residual": self.max_residual,
            "precondition_met": self.precondition_met
        }


def locally_metric_check(g, A, points, atp_tol=ATP_TOLERANCE):
    """
    Input: MetricField, VectorFieldDef, sample points
    Output: LocallyMetricReport with max |d alpha| over the samples
    """
    d_alpha_max = 0.0
    worst = 0.0
    for x in points:
        value, data = _field_at(g, A, x)
        worst = max(worst, float(np.max(np.abs(_residual_matrix(value, data)))))
        d_alpha_max = max(d_alpha_max, float(np.max(np.abs(_d_alpha(data)))))
    return LocallyMetricReport(len(points), d_alpha_max, worst, worst < atp_tol)


def recover_sigma(g, A, x, tol=NULL_TOLERANCE):
    """
    Input: MetricField, VectorFieldDef, Point x with <A,A>(x) != 0
    Output: sigma(x) = log |<A,A>(x)|
    """
    value, data = _field_at(g, A, x)
    norm2 = data.norm2
    if abs(norm2) <= tol * max(1.0, float(np.linalg.norm(data.vector)) ** 2):
        raise NullFieldError(f"<A,A> vanishes at {list(x.coords)}; sigma is undefined")
    return float(np.log(abs(norm2)))


def recovered_gradient_residual(g, A, x):
    """max |grad(log|<A,A>|) - A| / (1 + |A|) at x"""
    value, data = _field_at(g, A, x)
    norm2 = data.norm2
    if norm2 == 0.0:
        raise NullFieldError(f"<A,A> vanishes at {list(x.coords)}; sigma is undefined")
    gradient = value.inverse @ (norm_gradient(value, data) / norm2)
    return float(np.max(np.abs(gradient - data.vector))) / (1.0 + float(np.max(np.abs(data.vector))))


def recovered_sigma_field(g, A, sign=1.0):
    """
    The scalar field log(sign * <A,A>) as an expression on g's chart; sign is the
    (constant) sign of <A,A> so the logarithm is defined.
    """
    m = g.dim
    norm2 = constant(0.0)
    for j in range(m):
        for k in range(m):
            term = multiply(g.components[j][k].tree,
                            multiply(A.components[j].tree, A.components[k].tree))
            norm2 = add(norm2, term)
    tree = call("log", multiply(constant(sign), norm2))
    return ScalarFieldDef(g.chart, Expression(tree, g.chart.coord_names))


def norm_derivative_residual(g, A, x):
    """max over the basis of |X<A,A> - <A,X><A,A>|, relative to 1 + |alpha| |<A,A>|"""
    value, data = _field_at(g, A, x)
    residual = norm_gradient(value, data) - data.alpha * data.norm2
    scale = 1.0 + float(np.max(np.abs(data.alpha))) * abs(data.norm2)
    return float(np.max(np.abs(residual))) / scale


def divergence_residual(g, A, x):
    """
    Tracing the defining equation gives div A = (1 - m/2) <A,A>; in dimension 2 an
    atypical field is divergence free. Returns |div A - (1 - m/2) <A,A>| / (1 + |<A,A>|).
    """
    value, data = _field_at(g, A, x)
    gamma = christoffel_symbols(value)
    div = float(np.trace(data.d_vector) + np.einsum("iik,k->", gamma, data.vector))
    m = len(data.vector)
    return abs(div - (1.0 - 0.5 * m) * data.norm2) / (1.0 + abs(data.norm2))


def obstruction_check(g, A, x):
    """
    Input: MetricField, VectorFieldDef, Point x
    Output: (max over basis pairs |R(d_i, d_j) A|, max over the basis |Ric(d_i, A)|)
    """
    curvature = curvature_at(g, x)
    vector = A.value_and_derivative(x)[0]
    rotated = curvature.riemann.apply(vector)
    contracted = curvature.ricci.comps @ vector
    return float(np.max(np.abs(rotated))), float(np.max(np.abs(contracted)))


def ricci_degeneracy(g, x):
    """Smallest singular value of the Ricci matrix relative to the largest (0 when Ric = 0)."""
    singular = np.linalg.svd(curvature_at(g, x).ricci.comps, compute_uv=False)
    top = float(np.max(singular))
    if top == 0.0:
        return 0.0
    return float(np.min(singular)) / top


def ricci_round_trip(g, A, points):
    """
    Recover sigma = log|<A,A>|, rescale g by exp(2 sigma) and compare Ricci tensors.
    Returns max |Ric(exp(2 sigma) g) - Ric(g)| relative to the Ricci scale.
    """
    _, first = _field_at(g, A, points[0])
    sigma = recovered_sigma_field(g, A, 1.0 if first.norm2 > 0 else -1.0)
    gbar = conformal_rescale(g, sigma)
    worst = 0.0
    for x in points:
        base = curvature_at(g, x).ricci.comps
        rescaled = curvature_at(gbar, x).ricci.comps
        scale = max(1.0, float(np.max(np.abs(base))))
        worst = max(worst, float(np.max(np.abs(rescaled - base))) / scale)
    return worst


@dataclass
class AtpReport:
    samples: int
    max_residual: float
    causal_tally: dict
    d_alpha_max: float
    obstruction_max: tuple
    ricci_degeneracy_max: float
    norm_derivative_max: float
    sigma_gradient_max: float = None

    @property
    def uniform(self):
        return sum(1 for count in self.causal_tally.values() if count) == 1

    @property
    def causal_class(self):
        return max(self.causal_tally, key=lambda name: self.causal_tally[name])

    def get_report_info(self):
        return {
            "samples": self.samples,
            "max_residual": self.max_residual,
            "causal_tally": dict(self.causal_tally),
            "class": self.causal_class,
            "uniform": self.uniform,
            "d_alpha_max": self.d_alpha_max,
            "obstruction_max": list(self.obstruction_max),
            "ricci_degeneracy_max": self.ricci_degeneracy_max,
            "norm_derivative_max": self.norm_derivative_max,
            "sigma_gradient_max": self.sigma_gradient_max
        }


def atp_scan(g, A, points, tol=None):
    """
    Input: MetricField, VectorFieldDef, sample points
    Output: AtpReport collecting every per-sample quantity of this module
    """
    tally = _empty_tally()
    worst = d_alpha_max = norm_derivative_max = 0.0
    curvature_max = ricci_max = degeneracy_max = 0.0
    gradient_max = 0.0
    nonnull = True
    for x in points:
        value, data = _field_at(g, A, x)
        worst = max(worst, float(np.max(np.abs(_residual_matrix(value, data)))))
        character = _classify(value, data, tol)
        tally[character.value] += 1
        d_alpha_max = max(d_alpha_max, float(np.max(np.abs(_d_alpha(data)))))
        norm_derivative_max = max(norm_derivative_max, norm_derivative_residual(g, A, x))
        curvature, ricci = obstruction_check(g, A, x)
        curvature_max = max(curvature_max, curvature)
        ricci_max = max(ricci_max, ricci)
        if character is not CausalCharacter.ZERO:
            degeneracy_max = max(degeneracy_max, ricci_degeneracy(g, x))
        if character in (CausalCharacter.SPACELIKE, CausalCharacter.TIMELIKE):
            gradient_max = max(gradient_max, recovered_gradient_residual(g, A, x))
        else:
            nonnull = False
    logger.debug("atp scan over %d samples: residual %g, tally %s", len(points), worst, tally)
    return AtpReport(len(points), worst, tally, d_alpha_max, (curvature_max, ricci_max),
                     degeneracy_max, norm_derivative_max, gradient_max if nonnull else None)
