"""
Christoffel symbols, curvature, the energy tensor, the tilde operator and
divergence of a metric at a point, assembled from the second-order jets of
the metric components (no finite differencing).
"""
import logging
from dataclasses import dataclass

import numpy as np

from ricci_engine.models.metric import eval_metric
from ricci_engine.models.tensor import ChristoffelData, Riemann, Tensor2

logger = logging.getLogger(__name__)


def _koszul(value):
    """S[i, j, l] = d_i g_jl + d_j g_il - d_l g_ij"""
    d = value.d
    return np.einsum("jli->ijl", d) + np.einsum("ilj->ijl", d) - d


def christoffel_symbols(value):
    """Gamma^k_ij only, for callers that need no curvature (geodesic right-hand sides)."""
    return 0.5 * np.einsum("kl,ijl->kij", value.inverse, _koszul(value))


def christoffel_from_value(value):
    s = _koszul(value)
    dd = value.dd
    ds = np.einsum("jlip->ijlp", dd) + np.einsum("iljp->ijlp", dd) - dd
    d_inverse = -np.einsum("ka,abp,bl->klp", value.inverse, value.d, value.inverse)
    gamma = 0.5 * np.einsum("kl,ijl->kij", value.inverse, s)
    dgamma = 0.5 * (np.einsum("klp,ijl->kijp", d_inverse, s)
                    + np.einsum("kl,ijlp->kijp", value.inverse, ds))
    return ChristoffelData(gamma, dgamma)


def riemann_from_christoffel(data):
    """R^d_cab = d_a Gamma^d_bc - d_b Gamma^d_ac + Gamma^d_ae Gamma^e_bc - Gamma^d_be Gamma^e_ac"""
    gamma, dgamma = data.gamma, data.dgamma
    comps = (np.einsum("dbca->dcab", dgamma)
             - np.einsum("dacb->dcab", dgamma)
             + np.einsum("dae,ebc->dcab", gamma, gamma)
             - np.einsum("dbe,eac->dcab", gamma, gamma))
    return Riemann(comps)


def ricci_from_riemann(riem):
    # Ric(X, Y) = trace(V -> R(V, X) Y)
    return Tensor2(np.einsum("bcba->ac", riem.comps), "covariant")


@dataclass
class CurvatureAtPoint:
    metric: object
    christoffel: ChristoffelData
    riemann: Riemann
    ricci: Tensor2

    @property
    def scalar(self):
        return float(np.einsum("ac,ac->", self.metric.inverse, self.ricci.comps))

    def energy_tensor(self, four_pi_g=1.0):
        comps = self.ricci.comps - 0.5 * self.scalar * self.metric.matrix
        return Tensor2(comps / four_pi_g, "covariant")


def curvature_at(g, x):
    value = eval_metric(g, x)
    data = christoffel_from_value(value)
    riem = riemann_from_christoffel(data)
    return CurvatureAtPoint(value, data, riem, ricci_from_riemann(riem))


##################### OPERATIONS #####################

def christoffel(g, x):
    """
    Input: MetricField g, Point x
    Output: ChristoffelData with Gamma^k_ij and d_l Gamma^k_ij
    """
    return christoffel_from_value(eval_metric(g, x))


def riemann(g, x):
    return curvature_at(g, x).riemann


def ricci(g, x):
    return curvature_at(g, x).ricci


def scalar_curvature(g, x):
    return curvature_at(g, x).scalar


def energy_tensor(g, x, four_pi_g=1.0):
    """
    Input: MetricField g, Point x, the constant 4 pi G (1 by default)
    Output: covariant Tensor2 T = (Ric - Sc g / 2) / (4 pi G)
    """
    return curvature_at(g, x).energy_tensor(four_pi_g)


def tilde_with(tensor, value):
    tensor.require("covariant")
    return Tensor2(value.inverse @ tensor.comps, "mixed")


def tilde(tensor, g, x):
    """
    Input: covariant Tensor2, MetricField g, Point x
    Output: mixed Tensor2 with T~^i_j = g^ik T_kj
    """
    return tilde_with(tensor, eval_metric(g, x))


def trace_mixed(tensor):
    tensor.require("mixed")
    return float(np.trace(tensor.comps))


def covariant_derivative_vector(g, field, direction, x):
    """
    Input: MetricField g, VectorFieldDef V, a vector X at x, Point x
    Output: (nabla_X V)^k = X^i (d_i V^k + Gamma^k_ij V^j)
    """
    gamma = christoffel_symbols(eval_metric(g, x))
    values, derivative = field.value_and_derivative(x)
    direction = np.asarray(direction, dtype=float)
    return derivative @ direction + np.einsum("kij,i,j->k", gamma, direction, values)


def divergence(g, field, x):
    """div V = d_i V^i + Gamma^i_ik V^k, the coordinate form of (1/sqrt|g|) d_i (sqrt|g| V^i)."""
    gamma = christoffel_symbols(eval_metric(g, x))
    values, derivative = field.value_and_derivative(x)
    return float(np.trace(derivative) + np.einsum("iik,k->", gamma, values))


##################### SANITY RESIDUALS #####################

def first_bianchi_residual(riem):
    r = riem.comps
    total = r + np.einsum("dabc->dcab", r) + np.einsum("dbca->dcab", r)
    return float(np.max(np.abs(total)))


def metric_compatibility_residual(value, gamma):
    """max |d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|"""
    g = value.matrix
    residual = (value.d
                - np.einsum("lki,lj->ijk", gamma, g)
                - np.einsum("lkj,il->ijk", gamma, g))
    return float(np.max(np.abs(residual)))
