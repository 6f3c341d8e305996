import math
import numbers
from dataclasses import dataclass

import numpy as np

from ricci_engine.errors import JetDivisionError, JetDomainError

# Only a true zero is refused; charts guard the geometric singularities.
DIVISOR_TOLERANCE = 1e-300


@dataclass(frozen=True)
class Point:
    chart_id: str
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    @property
    def dim(self):
        return len(self.coords)

    def as_array(self):
        return np.array(self.coords, dtype=float)

    def get_point_info(self):
        return {
            "chart": self.chart_id,
            "coords": list(self.coords)
        }


class Jet2:
    """
    A scalar value carried with its gradient and Hessian with respect to the
    chart coordinates. Arithmetic and the elementary functions propagate all
    three exactly (second-order chain rule), and every rule produces a
    symmetric Hessian.
    """

    __slots__ = ("value", "grad", "hess")
    # numpy scalars defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, grad, hess):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, value, dim):
        return cls(value, np.zeros(dim), np.zeros((dim, dim)))

    @property
    def dim(self):
        return self.grad.shape[0]

    def is_constant(self):
        return not self.grad.any() and not self.hess.any()

    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.dim != self.dim:
                raise JetDomainError(
                    f"cannot combine jets of dimension {self.dim} and {other.dim}")
            return other
        if isinstance(other, numbers.Real):
            return Jet2.constant(other, self.dim)
        return None

    def chain(self, f0, f1, f2):
        """Apply a scalar function given its value and first two derivatives at self.value."""
        return Jet2(f0,
                    f1 * self.grad,
                    f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        cross = np.outer(self.grad, other.grad)
        return Jet2(self.value * other.value,
                    self.value * other.grad + other.value * self.grad,
                    self.value * other.hess + other.value * self.hess + cross + cross.T)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.value
        if abs(v) <= DIVISOR_TOLERANCE:
            raise JetDivisionError(f"division by near-zero value {v!r}")
        return self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.reciprocal()

    def __pow__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.is_constant():
            return self._power(other.value)
        if self.value <= 0.0:
            raise JetDomainError(f"non-constant exponent needs a positive base, got {self.value!r}")
        return (other * self.log()).exp()

    def __rpow__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other ** self

    def _power(self, n):
        a = self.value
        if n == round(n):
            if a == 0.0 and n < 0:
                raise JetDivisionError("zero raised to a negative power")
            f1 = n * a ** (n - 1) if n != 0 else 0.0
            f2 = n * (n - 1) * a ** (n - 2) if n not in (0, 1) else 0.0
            return self.chain(a ** n, f1, f2)
        if a <= 0.0:
            raise JetDomainError(f"non-integer power {n!r} of non-positive value {a!r}")
        return self.chain(a ** n, n * a ** (n - 1), n * (n - 1) * a ** (n - 2))

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self.chain(s, c, -s)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self.chain(c, -s, -c)

    def tan(self):
        if abs(math.cos(self.value)) < 1e-12:
            raise JetDomainError(f"tan evaluated at a pole ({self.value!r})")
        t = math.tan(self.value)
        d = 1.0 + t * t
        return self.chain(t, d, 2.0 * t * d)

    def sinh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self.chain(s, c, s)

    def cosh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self.chain(c, s, c)

    def exp(self):
        e = math.exp(self.value)
        return self.chain(e, e, e)

    def log(self):
        v = self.value
        if v <= 0.0:
            raise JetDomainError(f"log of non-positive value {v!r}")
        return self.chain(math.log(v), 1.0 / v, -1.0 / (v * v))

    def sqrt(self):
        v = self.value
        if v <= 0.0:
            raise JetDomainError(f"sqrt of non-positive value {v!r}")
        s = math.sqrt(v)
        return self.chain(s, 0.5 / s, -0.25 / (s * v))

    def atan(self):
        v = self.value
        d = 1.0 + v * v
        return self.chain(math.atan(v), 1.0 / d, -2.0 * v / (d * d))

    def get_jet_info(self):
        return {
            "value": self.value,
            "grad": self.grad.tolist(),
            "hess": self.hess.tolist()
        }

    def __repr__(self):
        return f"Jet2(value={self.value!r}, grad={self.grad.tolist()!r})"


def _checked(name, fn, domain_ok):
    def apply(x):
        if not domain_ok(x):
            raise JetDomainError(f"{name} evaluated outside its domain ({x!r})")
        return fn(x)
    return apply


FLOAT_FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": _checked("tan", math.tan, lambda x: abs(math.cos(x)) >= 1e-12),
    "sinh": math.sinh,
    "cosh": math.cosh,
    "exp": math.exp,
    "log": _checked("log", math.log, lambda x: x > 0.0),
    "sqrt": _checked("sqrt", math.sqrt, lambda x: x > 0.0),
    "atan": math.atan,
}

FUNCTION_NAMES = frozenset(FLOAT_FUNCTIONS)


##################### OPERATIONS #####################

def lift_coordinate(i, x):
    """
    Input: coordinate index i and a Point x
    Output: the jet of the i-th coordinate function at x (unit gradient, zero Hessian)
    """
    m = x.dim
    if not 0 <= i < m:
        raise JetDomainError(f"coordinate index {i} out of range for dimension {m}")
    grad = np.zeros(m)
    grad[i] = 1.0
    return Jet2(x.coords[i], grad, np.zeros((m, m)))


def lift_constant(value, dim):
    return Jet2.constant(value, dim)


def lift_point(x):
    return [lift_coordinate(i, x) for i in range(x.dim)]


_ARITHMETIC = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "pow": lambda a, b: a ** b,
}


def jet_arith(op, a, b):
    try:
        return _ARITHMETIC[op](a, b)
    except KeyError:
        raise JetDomainError(f"unknown arithmetic operation {op!r}") from None


def jet_func(name, a):
    """
    Apply an elementary function by name to a Jet2 or to a plain float.
    Raises JetDomainError outside the function's domain.
    """
    if name not in FUNCTION_NAMES:
        raise JetDomainError(f"unknown function {name!r}")
    if isinstance(a, Jet2):
        return getattr(a, name)()
    return FLOAT_FUNCTIONS[name](float(a))
