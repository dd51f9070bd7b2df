"""Matrix-valued Laurent polynomials in the loop parameter lambda.

Coefficients are exact :class:`~unitonkit.exactalg.MatRF` matrices in
(z, w).  Extended solutions are stored in this form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EvalAtZeroWithNegativePowers, ParseError
from .exactalg import DEFAULT_POLE_FLOOR, GaussRational, MatRF

__all__ = [
    "LoopMat",
    "LoopSupport",
    "loop_mul",
    "loop_eval_lambda",
    "loop_star_dual",
    "loop_partial",
    "loop_lambda_derivative",
    "loop_support",
    "loop_sample",
]


@dataclass(frozen=True)
class LoopSupport:
    min_deg: int
    max_deg: int

    def contains(self, k: int) -> bool:
        return self.min_deg <= k <= self.max_deg

    def within(self, lo: int, hi: int) -> bool:
        return lo <= self.min_deg and self.max_deg <= hi

    def as_tuple(self):
        return (self.min_deg, self.max_deg)


class LoopMat:
    """``sum_k coeffs[k] * lambda**k`` with square MatRF coefficients."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: dict):
        self.n = int(n)
        clean = {}
        for k, m in coeffs.items():
            if not isinstance(m, MatRF):
                m = MatRF(m)
            if m.n != self.n:
                raise DimensionMismatch(f"coefficient of lambda^{k} has dimension {m.n}, expected {self.n}")
            if not m.is_zero():
                clean[int(k)] = m
        self.coeffs = dict(sorted(clean.items()))

    @classmethod
    def constant(cls, m: MatRF) -> "LoopMat":
        return cls(m.n, {0: m})

    @classmethod
    def identity(cls, n: int) -> "LoopMat":
        return cls(n, {0: MatRF.identity(n)})

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, k: int) -> MatRF:
        return self.coeffs.get(k, MatRF.zeros(self.n))

    def __matmul__(self, other):
        return loop_mul(self, other)

    def __add__(self, other):
        _check(self, other)
        out = dict(self.coeffs)
        for k, m in other.coeffs.items():
            out[k] = out[k] + m if k in out else m
        return LoopMat(self.n, out)

    def __neg__(self):
        return LoopMat(self.n, {k: -m for k, m in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LoopMat":
        return LoopMat(self.n, {k: m * c for k, m in self.coeffs.items()})

    def shift(self, s: int) -> "LoopMat":
        """Multiply by ``lambda**s``."""
        return LoopMat(self.n, {k + s: m for k, m in self.coeffs.items()})

    def map(self, fn) -> "LoopMat":
        return LoopMat(self.n, {k: fn(m) for k, m in self.coeffs.items()})

    def equals(self, other) -> bool:
        _check(self, other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(self.coeff(k).equals(other.coeff(k)) for k in keys)

    def __eq__(self, other):
        if not isinstance(other, LoopMat):
            return NotImplemented
        return self.n == other.n and self.equals(other)

    __hash__ = None

    def is_identity(self) -> bool:
        return self.equals(LoopMat.identity(self.n))

    def specialize(self, z0, w0) -> "LoopMat":
        """Loop with every coefficient evaluated exactly at (z0, w0)."""
        return self.map(lambda m: m.specialize(z0, w0))

    def to_json(self) -> dict:
        return {"n": self.n, "terms": [{"k": k, "matrix": m.to_json()} for k, m in self.coeffs.items()]}

    @classmethod
    def from_json(cls, obj) -> "LoopMat":
        try:
            n = int(obj["n"])
            coeffs = {}
            for t in obj["terms"]:
                k = int(t["k"])
                if k in coeffs:
                    raise ParseError(f"duplicate lambda exponent {k}")
                coeffs[k] = MatRF.from_json(t["matrix"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad LoopMat: {exc}") from exc
        try:
            return cls(n, coeffs)
        except DimensionMismatch as exc:
            raise ParseError(str(exc)) from exc

    def __repr__(self):
        s = loop_support(self)
        return f"LoopMat(n={self.n}, support={s.as_tuple()})"


def _check(a, b):
    if not isinstance(b, LoopMat):
        raise TypeError("expected LoopMat")
    if a.n != b.n:
        raise DimensionMismatch(f"dimension {a.n} vs {b.n}")


def loop_mul(E: LoopMat, F: LoopMat) -> LoopMat:
    """Cauchy product in lambda with exact coefficient arithmetic."""
    _check(E, F)
    out: dict = {}
    for k1, a in E.coeffs.items():
        for k2, b in F.coeffs.items():
            p = a @ b
            k = k1 + k2
            out[k] = out[k] + p if k in out else p
    return LoopMat(E.n, out)


def loop_eval_lambda(E: LoopMat, lam):
    """Evaluate at a fixed lambda.

    An exact ``lam`` (int, Fraction, GaussRational) gives a MatRF.  A float
    or complex ``lam`` gives an object whose ``eval(z0, w0)`` returns the
    complex matrix values.
    """
    exact = not isinstance(lam, (float, complex, np.floating, np.complexfloating))
    if exact:
        lam = GaussRational.coerce(lam)
        if lam.is_zero() and E.coeffs and min(E.coeffs) < 0:
            raise EvalAtZeroWithNegativePowers("lambda = 0 with negative powers present")
        acc = MatRF.zeros(E.n)
        for k, m in E.coeffs.items():
            acc = acc + m * (lam ** k)
        return acc
    lam = complex(lam)
    if lam == 0 and E.coeffs and min(E.coeffs) < 0:
        raise EvalAtZeroWithNegativePowers("lambda = 0 with negative powers present")
    return _FloatLambda(E, lam)


class _FloatLambda:
    """E at a floating lambda, evaluated lazily in (z, w)."""

    def __init__(self, E: LoopMat, lam: complex):
        self.E = E
        self.lam = lam
        self.n = E.n

    def eval(self, z0, w0, floor: float = DEFAULT_POLE_FLOOR):
        z0 = np.asarray(z0, dtype=complex)
        w0 = np.asarray(w0, dtype=complex)
        shape = np.broadcast_shapes(z0.shape, w0.shape)
        acc = np.zeros(shape + (self.n, self.n), dtype=complex)
        for k, m in self.E.coeffs.items():
            acc = acc + m.eval(z0, w0, floor=floor) * self.lam ** k
        return acc


def loop_star_dual(E: LoopMat) -> LoopMat:
    """``lambda -> adjoint(E(1/conj(lambda)))``: coefficient k is adjoint(coeffs[-k])."""
    return LoopMat(E.n, {-k: m.adjoint() for k, m in E.coeffs.items()})


def loop_partial(E: LoopMat, var: str) -> LoopMat:
    return E.map(lambda m: m.partial(var))


def loop_lambda_derivative(E: LoopMat) -> LoopMat:
    """Exact coefficient shift ``k A_k lambda^(k-1)``."""
    return LoopMat(E.n, {k - 1: m * k for k, m in E.coeffs.items() if k != 0})


def loop_support(E: LoopMat) -> LoopSupport:
    if not E.coeffs:
        return LoopSupport(0, -1)
    return LoopSupport(min(E.coeffs), max(E.coeffs))


def loop_sample(E: LoopMat, lam, z0, w0=None, floor: float = DEFAULT_POLE_FLOOR) -> np.ndarray:
    """Floating value at (lambda, z0, w0); ``w0`` defaults to ``conj(z0)``.

    ``lam`` and ``z0`` may be arrays; they broadcast against each other and
    the result has shape ``broadcast + (n, n)``.
    """
    z0 = np.asarray(z0, dtype=complex)
    w0 = np.conj(z0) if w0 is None else np.asarray(w0, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0) and E.coeffs and min(E.coeffs) < 0:
        raise EvalAtZeroWithNegativePowers("lambda = 0 with negative powers present")
    shape = np.broadcast_shapes(lam.shape, z0.shape, w0.shape)
    acc = np.zeros(shape + (E.n, E.n), dtype=complex)
    for k, m in E.coeffs.items():
        acc = acc + m.eval(z0, w0, floor=floor) * (lam ** k)[..., None, None]
    return acc
