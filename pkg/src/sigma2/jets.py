"""Truncated Taylor jets in three variables up to total order 4.

A jet stores the Taylor coefficients ``d^(a+b+c) f / (a! b! c!)`` of a
scalar at a base point, densely, over the 35 multi-indices of total degree
at most 4.  Factorials enter only when a raw derivative is extracted.

Two layers live here:

* array kernels (``mul``, ``contract``, ``diff``, ``compose``) acting on the
  trailing axis of arrays shaped ``(..., 35)``.  The curvature engine works
  on whole tensors of jets at once through these.
* the immutable scalar :class:`Jet` with operator overloading, used by the
  expression evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, SingularInput

MAX_ORDER = 4
NVARS = 3

MULTI_INDICES: tuple[tuple[int, int, int], ...] = tuple(
    (a, b, total - a - b)
    for total in range(MAX_ORDER + 1)
    for a in range(total, -1, -1)
    for b in range(total - a, -1, -1)
)
NTERMS = len(MULTI_INDICES)
INDEX = {mi: k for k, mi in enumerate(MULTI_INDICES)}
DEGREE = np.array([sum(mi) for mi in MULTI_INDICES])
FACTORIAL = np.array(
    [math.factorial(a) * math.factorial(b) * math.factorial(c) for a, b, c in MULTI_INDICES],
    dtype=float,
)
_ORDER_MASK = [(DEGREE <= k).astype(float) for k in range(MAX_ORDER + 1)]


def _build_products():
    tables = []
    for order in range(MAX_ORDER + 1):
        left, right, out = [], [], []
        for p, mp in enumerate(MULTI_INDICES):
            for q, mq in enumerate(MULTI_INDICES):
                s = (mp[0] + mq[0], mp[1] + mq[1], mp[2] + mq[2])
                if sum(s) <= order:
                    left.append(p)
                    right.append(q)
                    out.append(INDEX[s])
        scatter = np.zeros((len(out), NTERMS))
        scatter[np.arange(len(out)), out] = 1.0
        tables.append((np.array(left), np.array(right), scatter))
    return tables


_PRODUCTS = _build_products()


def _build_shifts():
    # d/dx_v of sum c_alpha x^alpha: coefficient at alpha is (alpha_v + 1) c_{alpha + e_v}
    src = np.zeros((NVARS, NTERMS), dtype=int)
    fac = np.zeros((NVARS, NTERMS))
    for v in range(NVARS):
        for k, mi in enumerate(MULTI_INDICES):
            up = list(mi)
            up[v] += 1
            up = tuple(up)
            if sum(up) <= MAX_ORDER:
                src[v, k] = INDEX[up]
                fac[v, k] = mi[v] + 1
    return src, fac


_SHIFT_SRC, _SHIFT_FAC = _build_shifts()


def check_order(order: int) -> int:
    if not isinstance(order, (int, np.integer)) or not 0 <= order <= MAX_ORDER:
        raise InvalidArgument(f"jet order must be an integer in [0, {MAX_ORDER}], got {order!r}")
    return int(order)


def truncate(a: np.ndarray, order: int) -> np.ndarray:
    return a * _ORDER_MASK[order]


def mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Elementwise (broadcast) jet product, truncated at ``order``."""
    left, right, scatter = _PRODUCTS[order]
    return (a[..., left] * b[..., right]) @ scatter


def contract(subscripts: str, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """``np.einsum`` over tensor indices with jet multiplication of the entries.

    ``subscripts`` names only the tensor axes, e.g. ``"kl,lij->kij"``; the
    trailing jet axis is handled here.
    """
    left, right, scatter = _PRODUCTS[order]
    ins, out = subscripts.split("->")
    sa, sb = ins.split(",")
    pairs = np.einsum(f"{sa}Z,{sb}Z->{out}Z", a[..., left], b[..., right], optimize=True)
    return pairs @ scatter


def diff(a: np.ndarray, var: int) -> np.ndarray:
    """Partial derivative in variable ``var``; the result is valid to one order less."""
    return a[..., _SHIFT_SRC[var]] * _SHIFT_FAC[var]


def gradient(a: np.ndarray) -> np.ndarray:
    """Stack of the three partials along a new leading axis."""
    return np.stack([diff(a, v) for v in range(NVARS)])


def constant(value, order: int = MAX_ORDER) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    out = np.zeros(value.shape + (NTERMS,))
    out[..., 0] = value
    return out


def seed(value: float, variable: int, order: int = MAX_ORDER) -> np.ndarray:
    out = constant(value)
    if order >= 1:
        unit = [0, 0, 0]
        unit[variable] = 1
        out[INDEX[tuple(unit)]] = 1.0
    return out


def _series_coefficients(tag: str, c0: np.ndarray, order: int):
    """Taylor coefficients f^(n)(c0)/n! for n = 0..order."""
    n = np.arange(order + 1)
    fact = np.array([math.factorial(k) for k in n], dtype=float)
    c0 = np.asarray(c0, dtype=float)[..., None]
    if tag == "reciprocal":
        if np.any(c0 == 0):
            raise SingularInput(tag, "reciprocal of a jet with zero constant term")
        return (-1.0) ** n / c0 ** (n + 1)
    if tag == "sqrt":
        if np.any(c0 <= 0):
            raise SingularInput(tag, "sqrt of a jet with non-positive constant term")
        binom = np.array([_binomial(0.5, k) for k in n])
        return binom * np.sqrt(c0) / c0**n
    if tag == "exp":
        return np.exp(c0) / fact
    raise InvalidArgument(f"unknown analytic function tag {tag!r}")


def _binomial(alpha: float, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= (alpha - j) / (j + 1)
    return out


def _sin_cos_exact(tag: str, c0: np.ndarray, order: int):
    # sin/cos derivatives cycle through +-sin, +-cos; evaluating sin(c0 + n pi/2)
    # directly leaves ~1e-16 garbage where the exact value is 0 or 1.
    s, c = np.sin(c0), np.cos(c0)
    cycle = [s, c, -s, -c] if tag == "sin" else [c, -s, -c, s]
    return np.stack(
        [cycle[k % 4] / math.factorial(k) for k in range(order + 1)], axis=-1
    )


def compose(tag: str, a: np.ndarray, order: int) -> np.ndarray:
    """f(a) for an analytic f, by expanding f around the constant term of ``a``."""
    c0 = a[..., 0]
    if tag in ("sin", "cos"):
        coeffs = _sin_cos_exact(tag, c0, order)
    else:
        coeffs = _series_coefficients(tag, c0, order)
    nil = truncate(a, order).copy()
    nil[..., 0] = 0.0
    out = constant(coeffs[..., 0])
    power = constant(np.ones_like(c0))
    for k in range(1, order + 1):
        power = mul(power, nil, order)
        out = out + coeffs[..., k, None] * power
    return truncate(out, order)


def power_int(a: np.ndarray, exponent: int, order: int) -> np.ndarray:
    if exponent < 0:
        return power_int(compose("reciprocal", a, order), -exponent, order)
    result = constant(np.ones(a.shape[:-1]))
    base = truncate(a, order)
    while exponent:
        if exponent & 1:
            result = mul(result, base, order)
        exponent >>= 1
        if exponent:
            base = mul(base, base, order)
    return truncate(result, order)


def derivative_factor(multi_index) -> float:
    return float(FACTORIAL[INDEX[tuple(multi_index)]])


@dataclass(frozen=True, eq=False)
class Jet:
    """Immutable scalar jet; ``coeffs`` has length 35, entries above ``order`` are zero."""

    coeffs: np.ndarray
    order: int = MAX_ORDER

    def __post_init__(self):
        order = check_order(self.order)
        c = truncate(np.array(self.coeffs, dtype=float).reshape(NTERMS), order)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "order", order)

    @classmethod
    def const(cls, value: float, order: int = MAX_ORDER) -> "Jet":
        return cls(constant(value), order)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coefficient(self, multi_index) -> float:
        mi = tuple(multi_index)
        if sum(mi) > self.order:
            return 0.0
        return float(self.coeffs[INDEX[mi]])

    def to_dict(self) -> dict[tuple[int, int, int], float]:
        """Nonzero coefficients keyed by multi-index."""
        return {MULTI_INDICES[k]: float(v) for k, v in enumerate(self.coeffs) if v != 0.0}

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.const(float(other), self.order)

    def __add__(self, other):
        other = self._lift(other)
        return Jet(self.coeffs + other.coeffs, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.order)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.coeffs * float(other), self.order)
        order = min(self.order, other.order)
        return Jet(mul(self.coeffs, other.coeffs, order), order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * jet_unary("reciprocal", self._lift(other))

    def __rtruediv__(self, other):
        return self._lift(other) * jet_unary("reciprocal", self)

    def __pow__(self, exponent: int):
        if int(exponent) != exponent:
            raise InvalidArgument("jet powers take integer exponents only")
        return Jet(power_int(self.coeffs, int(exponent), self.order), self.order)

    def allclose(self, other: "Jet", atol: float = 1e-14) -> bool:
        return self.order == other.order and bool(
            np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol)
        )

    def __repr__(self):
        return f"Jet(order={self.order}, {self.to_dict()})"


def jet_seed(value: float, variable: int, order: int) -> Jet:
    """Jet of the coordinate function ``x_variable`` at a point where it equals ``value``."""
    order = check_order(order)
    if variable not in (0, 1, 2):
        raise InvalidArgument(f"variable index must be 0, 1 or 2, got {variable!r}")
    return Jet(seed(value, variable, order), order)


def jet_add(a: Jet, b: Jet) -> Jet:
    return a + b


def jet_sub(a: Jet, b: Jet) -> Jet:
    return a - b


def jet_mul(a: Jet, b: Jet) -> Jet:
    return a * b


def jet_scale(a: Jet, factor: float) -> Jet:
    return a * float(factor)


def jet_unary(tag: str, a: Jet, exponent: int | None = None) -> Jet:
    """Compose an analytic function with a jet.

    ``tag`` is one of reciprocal, sqrt, exp, sin, cos, pow_int (the latter
    needs ``exponent``).
    """
    if tag == "pow_int":
        if exponent is None:
            raise InvalidArgument("pow_int needs an integer exponent")
        return a**exponent
    return Jet(compose(tag, a.coeffs, a.order), a.order)


def jet_derivative(a: Jet, multi_index) -> float:
    """Raw partial derivative: Taylor coefficient times a! b! c!."""
    mi = tuple(int(v) for v in multi_index)
    if len(mi) != 3 or min(mi) < 0:
        raise InvalidArgument(f"bad multi-index {multi_index!r}")
    if sum(mi) > a.order:
        raise InvalidArgument(f"multi-index {mi} exceeds jet order {a.order}")
    return a.coefficient(mi) * derivative_factor(mi)
