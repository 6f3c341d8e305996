from dataclasses import dataclass

import numpy as np

from ricci_engine.errors import VarianceError

VARIANCES = ("covariant", "mixed", "contravariant")


@dataclass
class Tensor2:
    """Pointwise rank-2 tensor in the chart's coordinate frame."""
    comps: np.ndarray
    variance: str = "covariant"

    def __post_init__(self):
        self.comps = np.asarray(self.comps, dtype=float)
        if self.variance not in VARIANCES:
            raise VarianceError(f"unknown variance {self.variance!r}")

    @property
    def dim(self):
        return self.comps.shape[0]

    def require(self, variance):
        if self.variance != variance:
            raise VarianceError(f"expected a {variance} tensor, got {self.variance}")
        return self

    def asymmetry(self):
        """max |T_ij - T_ji| relative to the component scale."""
        scale = max(1.0, float(np.max(np.abs(self.comps))))
        return float(np.max(np.abs(self.comps - self.comps.T))) / scale

    def norm(self):
        return float(np.max(np.abs(self.comps))) if self.comps.size else 0.0

    def __add__(self, other):
        if self.variance != other.variance:
            raise VarianceError(f"cannot add {self.variance} and {other.variance} tensors")
        return Tensor2(self.comps + other.comps, self.variance)

    def __sub__(self, other):
        if self.variance != other.variance:
            raise VarianceError(f"cannot subtract {other.variance} from {self.variance} tensor")
        return Tensor2(self.comps - other.comps, self.variance)

    def scaled(self, factor):
        return Tensor2(factor * self.comps, self.variance)

    def get_tensor_info(self):
        return {
            "variance": self.variance,
            "comps": self.comps.tolist()
        }


@dataclass
class ChristoffelData:
    """
    gamma[k, i, j] = Gamma^k_ij
    dgamma[k, i, j, l] = d_l Gamma^k_ij
    """
    gamma: np.ndarray
    dgamma: np.ndarray

    def asymmetry(self):
        return max(float(np.max(np.abs(self.gamma - self.gamma.transpose(0, 2, 1)))),
                   float(np.max(np.abs(self.dgamma - self.dgamma.transpose(0, 2, 1, 3)))))

    def get_christoffel_info(self):
        return {
            "gamma": self.gamma.tolist(),
            "dgamma": self.dgamma.tolist()
        }


@dataclass
class Riemann:
    """comps[d, c, a, b] = R^d_cab, meaning R(d_a, d_b) d_c = R^d_cab d_d."""
    comps: np.ndarray

    def antisymmetry(self):
        return float(np.max(np.abs(self.comps + self.comps.transpose(0, 1, 3, 2))))

    def norm(self):
        return float(np.max(np.abs(self.comps)))

    def apply(self, vector):
        """out[d, a, b] = (R(d_a, d_b) V)^d"""
        return np.einsum("dcab,c->dab", self.comps, vector)

    def get_riemann_info(self):
        return {
            "comps": self.comps.tolist()
        }
