"""
Comparison of the Levi-Civita connection of g with a conformal connection

    nabla'_X Y - nabla_X Y = <A,X> Y + <A,Y> X - <X,Y> A

and of their Ricci tensors. When A = grad sigma the primed connection is the
Levi-Civita connection of exp(2 sigma) g, which gives an independent second
path for every identity checked here.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from ricci_engine.curvature import christoffel_symbols, curvature_at
from ricci_engine.errors import ChartMismatchError, DimensionError, PreconditionError
from ricci_engine.models.metric import conformal_rescale, eval_metric
from ricci_engine.models.tensor import Tensor2
from ricci_engine.sampling import basis_and_random_directions, make_rng

logger = logging.getLogger(__name__)


@dataclass
class FieldData:
    """
    A vector field and its metrically equivalent one-form at a point:
    d_vector[k, i] = d_i A^k and d_alpha[j, i] = d_i alpha_j.
    """
    vector: np.ndarray
    d_vector: np.ndarray
    alpha: np.ndarray
    d_alpha: np.ndarray

    @property
    def norm2(self):
        return float(self.alpha @ self.vector)


def field_data_from_vector(field_def, value, x):
    vector, d_vector = field_def.value_and_derivative(x)
    alpha = value.matrix @ vector
    d_alpha = np.einsum("jki,k->ji", value.d, vector) + value.matrix @ d_vector
    return FieldData(vector, d_vector, alpha, d_alpha)


def field_data_from_sigma(sigma, value, x):
    jet = sigma.jet(x)
    alpha = jet.grad
    d_alpha = jet.hess
    d_inverse = -np.einsum("ka,abi,bl->kli", value.inverse, value.d, value.inverse)
    vector = value.inverse @ alpha
    d_vector = np.einsum("kli,l->ki", d_inverse, alpha) + value.inverse @ d_alpha
    return FieldData(vector, d_vector, alpha, d_alpha)


def nabla_alpha(data, gamma):
    """(nabla alpha)_ij = d_i alpha_j - Gamma^k_ij alpha_k, without assuming symmetry."""
    return data.d_alpha.T - np.einsum("kij,k->ij", gamma, data.alpha)


class ConformalPair:
    """
    Base metric g with the field A of the connection difference, given as a
    VectorFieldDef, through a generating scalar sigma (A = grad sigma), or both.
    """

    def __init__(self, g, field=None, sigma=None):
        if field is None and sigma is None:
            raise PreconditionError("a conformal pair needs a field A or a generating sigma")
        for part in (field, sigma):
            if part is not None and part.chart.id != g.chart.id:
                raise ChartMismatchError(f"field lives on {part.chart.id!r}, metric on {g.chart.id!r}")
        self.g = g
        self.field = field
        self.sigma = sigma

    @property
    def dim(self):
        return self.g.dim

    def rescaled_metric(self):
        if self.sigma is None:
            raise PreconditionError("the conformal metric needs a generating sigma")
        return conformal_rescale(self.g, self.sigma)

    def field_at(self, x, value=None):
        value = value if value is not None else eval_metric(self.g, x)
        if self.field is not None:
            return value, field_data_from_vector(self.field, value, x)
        return value, field_data_from_sigma(self.sigma, value, x)

    def gradient_residual(self, x):
        """max |A^k - g^kl d_l sigma|, the consistency of a pair given both ways."""
        if self.field is None or self.sigma is None:
            return 0.0
        value = eval_metric(self.g, x)
        given = field_data_from_vector(self.field, value, x).vector
        derived = field_data_from_sigma(self.sigma, value, x).vector
        return float(np.max(np.abs(given - derived)))

    def get_pair_info(self):
        return {
            "metric": self.g.name,
            "A": self.field.get_field_info()["components"] if self.field is not None else None,
            "sigma": str(self.sigma.expression) if self.sigma is not None else None
        }


def _difference(a_vector, alpha, metric, X, Y):
    return (alpha @ X) * Y + (alpha @ Y) * X - (X @ metric @ Y) * a_vector


##################### OPERATIONS #####################

def connection_difference(pair, X, Y, x):
    """
    Input: ConformalPair, vectors X and Y at x, Point x
    Output: D(X, Y) = <A,X> Y + <A,Y> X - <X,Y> A
    """
    value, data = pair.field_at(x)
    return _difference(data.vector, data.alpha, value.matrix,
                       np.asarray(X, dtype=float), np.asarray(Y, dtype=float))


def conformal_connection_check(pair, x, directions=None, seed=42):
    """
    Input: ConformalPair carrying sigma, Point x, optional list of sample directions
    Output: max over direction pairs of |nabla'_X Y - nabla_X Y - D(X, Y)| / (1 + |D|),
    with nabla' the Levi-Civita connection of exp(2 sigma) g
    """
    gbar = pair.rescaled_metric()
    value, data = pair.field_at(x)
    delta = christoffel_symbols(eval_metric(gbar, x)) - christoffel_symbols(value)
    if directions is None:
        directions = basis_and_random_directions(make_rng(seed), pair.dim)
    worst = 0.0
    for X in directions:
        for Y in directions:
            predicted = _difference(data.vector, data.alpha, value.matrix, X, Y)
            measured = np.einsum("kij,i,j->k", delta, X, Y)
            scale = 1.0 + float(np.max(np.abs(predicted)))
            worst = max(worst, float(np.max(np.abs(measured - predicted))) / scale)
    return worst


def null_geodesic_check(pair, x, X):
    """
    For a g-null X, nabla'_X X - nabla_X X must be proportional to X, so null
    pregeodesics of the two connections coincide. Returns the part of the
    measured difference transverse to X, relative to |X|^2.
    """
    gbar = pair.rescaled_metric()
    value = eval_metric(pair.g, x)
    X = np.asarray(X, dtype=float)
    size = float(X @ X)
    if abs(value.inner(X, X)) > 1e-10 * size * float(np.max(np.abs(value.matrix))):
        raise PreconditionError("null_geodesic_check needs a null vector")
    delta = christoffel_symbols(eval_metric(gbar, x)) - christoffel_symbols(value)
    measured = np.einsum("kij,i,j->k", delta, X, X)
    transverse = measured - (measured @ X / size) * X
    return float(np.max(np.abs(transverse))) / size


def q_tensor(pair, x):
    """
    Input: ConformalPair, Point x
    Output: covariant Tensor2 Q = nabla alpha - alpha (x) alpha
    """
    value, data = pair.field_at(x)
    return _q_from(value, data)


def _q_from(value, data):
    gamma = christoffel_symbols(value)
    return Tensor2(nabla_alpha(data, gamma) - np.outer(data.alpha, data.alpha), "covariant")


def q_trace(pair, x):
    value, data = pair.field_at(x)
    return float(np.trace(value.inverse @ _q_from(value, data).comps))


def predict_difference(Q, norm2, metric, inverse):
    """
    E = (2 - m) Q - {q + (m - 1) <A,A>} g with q = tr(Q~).
    Pure linear algebra on component arrays.
    """
    m = metric.shape[0]
    q = float(np.trace(inverse @ Q))
    return (2 - m) * Q - (q + (m - 1) * norm2) * metric


def identity_chain_residuals(E, Q, norm2, metric, inverse):
    """
    Residuals of the identity
        -E/(m-2) + tr(E~) g / (2(m-2)(m-1)) = Q + <A,A> g / 2
    and of the intermediate relations for tr(E~), q and Q, each relative to the
    scale of its inputs.
    """
    m = metric.shape[0]
    if m < 3:
        raise DimensionError(f"the Ricci comparison identities need m >= 3, got {m}")
    q = float(np.trace(inverse @ Q))
    tr_e = float(np.trace(inverse @ E))
    scale = max(1.0, float(np.max(np.abs(E))), float(np.max(np.abs(Q))),
                abs(norm2) * float(np.max(np.abs(metric))))
    main = (-E / (m - 2) + tr_e * metric / (2 * (m - 2) * (m - 1))
            - Q - 0.5 * norm2 * metric)
    q_form = Q - (E / (2 - m) + (q + (m - 1) * norm2) * metric / (2 - m))
    return {
        "main": float(np.max(np.abs(main))) / scale,
        "trace": abs(tr_e - ((2 - 2 * m) * q - (m - 1) * m * norm2)) / scale,
        "q": abs(q - (tr_e / (2 - 2 * m) - 0.5 * m * norm2)) / scale,
        "Q": float(np.max(np.abs(q_form))) / scale,
    }


def ricci_difference_prediction(pair, x):
    """
    Input: ConformalPair, Point x (m >= 3)
    Output: covariant Tensor2 E predicted from A alone
    """
    if pair.dim < 3:
        raise DimensionError(f"the Ricci difference formula needs m >= 3, got {pair.dim}")
    value, data = pair.field_at(x)
    Q = _q_from(value, data).comps
    return Tensor2(predict_difference(Q, data.norm2, value.matrix, value.inverse), "covariant")


def ricci_difference_direct(pair, x):
    """E = Ric(exp(2 sigma) g) - Ric(g), computed from both metrics' curvature."""
    return curvature_at(pair.rescaled_metric(), x).ricci - curvature_at(pair.g, x).ricci


@dataclass
class MainIdentityReport:
    point: list
    residuals: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        return max(self.residuals.values()) if self.residuals else 0.0

    def get_report_info(self):
        return {
            "point": self.point,
            "residuals": dict(self.residuals),
            "max_residual": self.max_residual
        }


def verify_main_identity(pair, x):
    """
    Input: ConformalPair carrying sigma, Point x (m >= 3)
    Output: MainIdentityReport. E is computed directly as Ric(exp(2 sigma) g) - Ric(g)
    and then checked against the identity chain and against the prediction from A.
    """
    if pair.dim < 3:
        raise DimensionError(f"the Ricci comparison identities need m >= 3, got {pair.dim}")
    E = ricci_difference_direct(pair, x).comps
    value, data = pair.field_at(x)
    Q = _q_from(value, data).comps
    norm2 = data.norm2
    residuals = identity_chain_residuals(E, Q, norm2, value.matrix, value.inverse)
    predicted = predict_difference(Q, norm2, value.matrix, value.inverse)
    scale = max(1.0, float(np.max(np.abs(E))))
    residuals["two_path"] = float(np.max(np.abs(E - predicted))) / scale
    return MainIdentityReport(list(x.coords), residuals)


def eetilde_residual(pair, x):
    """
    For an atypical A both E = tr(E~) g / (2(m-1)) and E = 0 must hold.
    Returns the larger of the two residuals.
    """
    E = ricci_difference_direct(pair, x).comps
    value = eval_metric(pair.g, x)
    m = pair.dim
    tr_e = float(np.trace(value.inverse @ E))
    proportional = float(np.max(np.abs(E - tr_e / (2 * (m - 1)) * value.matrix)))
    return max(proportional, float(np.max(np.abs(E))))


def random_algebra_residual(seed, dim, trials=20):
    """
    Feed random Q, <A,A> and nondegenerate metrics through the predicted difference
    and the identity chain; pure linear algebra, so only rounding remains.
    """
    if dim < 3:
        raise DimensionError(f"the Ricci comparison identities need m >= 3, got {dim}")
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(trials):
        signs = np.where(rng.random(dim) < 0.5, -1.0, 1.0)
        perturbation = rng.uniform(-0.2, 0.2, (dim, dim))
        metric = np.diag(signs) + 0.5 * (perturbation + perturbation.T)
        inverse = np.linalg.inv(metric)
        raw = rng.uniform(-1.0, 1.0, (dim, dim))
        Q = 0.5 * (raw + raw.T)
        norm2 = float(rng.uniform(-2.0, 2.0))
        E = predict_difference(Q, norm2, metric, inverse)
        residuals = identity_chain_residuals(E, Q, norm2, metric, inverse)
        worst = max(worst, max(residuals.values()))
    return worst
