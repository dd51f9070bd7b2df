"""Exact arithmetic over the Gaussian rationals.

Polynomials live in Q(i)[z, w] where ``w`` stands for the conjugate
coordinate z-bar, treated as an independent variable.  On the real locus
``w = conj(z)`` the ``bar`` involution (conjugate coefficients, swap z and
w) is complex conjugation.

Internally a :class:`BiPoly` stores Gaussian-integer numerators over one
positive integer denominator, so the hot loops run on Python ints.  Floating
point only appears in the ``eval`` methods.
"""

from __future__ import annotations

import contextlib
import contextvars
import functools
import heapq
import re
from fractions import Fraction
from math import gcd

import numpy as np

from .errors import (
    DimensionMismatch,
    DivisionByZeroFunction,
    ParseError,
    PoleAtPoint,
    SingularMatrixFunction,
)

__all__ = [
    "GaussRational",
    "BiPoly",
    "RatFunc",
    "MatRF",
    "Z",
    "W",
    "rf_arith",
    "rf_eq",
    "rf_partial",
    "rf_bar",
    "rf_eval",
    "mat_ops",
    "mat_inverse",
    "mat_adjoint",
    "size_control",
    "DEFAULT_POLE_FLOOR",
]

DEFAULT_POLE_FLOOR = 1e-13


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not np.isfinite(x):
            raise ValueError(f"non-finite coefficient {x!r}")
        return Fraction(x)
    return Fraction(x)


class GaussRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)

    @classmethod
    def coerce(cls, x) -> "GaussRational":
        if isinstance(x, GaussRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, (int, Fraction, float, str)):
            return cls(x, 0)
        raise TypeError(f"cannot make a GaussRational from {type(x).__name__}")

    def __add__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __sub__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussRational.coerce(other) - self

    def __mul__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussRational.coerce(other)
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero GaussRational")
        return self * GaussRational(o.re / n, -o.im / n)

    def __rtruediv__(self, other):
        return GaussRational.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return GaussRational(1) / (self ** (-k))
        out = GaussRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conj(self) -> "GaussRational":
        return GaussRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"GaussRational({self.re})"
        return f"GaussRational({self.re}, {self.im})"

    def to_json(self) -> dict:
        return {"re": f"{self.re.numerator}/{self.re.denominator}",
                "im": f"{self.im.numerator}/{self.im.denominator}"}

    @classmethod
    def from_json(cls, obj) -> "GaussRational":
        try:
            return cls(Fraction(str(obj["re"])), Fraction(str(obj.get("im", "0"))))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad GaussRational {obj!r}") from exc


# ---------------------------------------------------------------------------
# bivariate polynomials


def _order_key(mono):
    i, j = mono
    return (i + j, i)


def _gauss_int_parts(c: GaussRational):
    """Return (a, b, d) with c == (a + i b)/d, d > 0."""
    d = c.re.denominator * c.im.denominator // gcd(c.re.denominator, c.im.denominator)
    return c.re.numerator * (d // c.re.denominator), c.im.numerator * (d // c.im.denominator), d


def _normalized(terms: dict, d: int):
    """Drop zeros and divide out the content shared with ``d``."""
    terms = {k: v for k, v in terms.items() if v[0] or v[1]}
    if not terms:
        return {}, 1
    if d < 0:
        d = -d
        terms = {k: (-a, -b) for k, (a, b) in terms.items()}
    g = d
    for a, b in terms.values():
        if g == 1:
            break
        g = gcd(g, a, b)
    if g > 1:
        terms = {k: (a // g, b // g) for k, (a, b) in terms.items()}
        d //= g
    return terms, d


class BiPoly:
    """Polynomial in (z, w) with Gaussian-rational coefficients.

    Immutable.  ``BiPoly.z()``, ``BiPoly.w()`` and ``BiPoly.const(c)`` build
    the generators; the usual operators do the rest.
    """

    __slots__ = ("_t", "_d", "_hash", "_real", "_dense")

    def __init__(self, terms=None, *, _raw=None):
        if _raw is not None:
            self._t, self._d = _raw
        else:
            acc: dict = {}
            den = 1
            parts = []
            for mono, c in (terms or {}).items():
                i, j = int(mono[0]), int(mono[1])
                if i < 0 or j < 0:
                    raise ValueError(f"negative exponent in {mono!r}")
                a, b, dd = _gauss_int_parts(GaussRational.coerce(c))
                parts.append(((i, j), a, b, dd))
                den = den * dd // gcd(den, dd)
            for mono, a, b, dd in parts:
                s = den // dd
                pa, pb = acc.get(mono, (0, 0))
                acc[mono] = (pa + a * s, pb + b * s)
            self._t, self._d = _normalized(acc, den)
        self._hash = None
        self._real = None
        self._dense = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def _make(cls, terms, d=1):
        t, d = _normalized(terms, d)
        return cls(_raw=(t, d))

    @classmethod
    def const(cls, c=1) -> "BiPoly":
        return cls({(0, 0): c})

    @classmethod
    def zero(cls) -> "BiPoly":
        return cls(_raw=({}, 1))

    @classmethod
    def one(cls) -> "BiPoly":
        return cls(_raw=({(0, 0): (1, 0)}, 1))

    @classmethod
    def z(cls) -> "BiPoly":
        return cls(_raw=({(1, 0): (1, 0)}, 1))

    @classmethod
    def w(cls) -> "BiPoly":
        return cls(_raw=({(0, 1): (1, 0)}, 1))

    @classmethod
    def monomial(cls, i: int, j: int, c=1) -> "BiPoly":
        return cls({(i, j): c})

    @classmethod
    def parse(cls, text: str) -> "BiPoly":
        """Parse sums of terms like ``-3/2*z^2*w + 2i*z - (1+2i)``.

        Accepts ``**`` or ``^`` for powers, implicit coefficient 1, and
        parenthesised Gaussian coefficients ``(a+bi)``.
        """
        return _parse_poly(text)

    # -- accessors --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self._t

    def __bool__(self):
        return bool(self._t)

    def is_real(self) -> bool:
        if self._real is None:
            self._real = all(b == 0 for _, b in self._t.values())
        return self._real

    def __len__(self):
        return len(self._t)

    def coeff(self, i: int, j: int) -> GaussRational:
        a, b = self._t.get((i, j), (0, 0))
        return GaussRational(Fraction(a, self._d), Fraction(b, self._d))

    def terms(self):
        """``[((i, j), GaussRational), ...]`` in canonical (descending) order."""
        return [(m, self.coeff(*m)) for m in sorted(self._t, key=_order_key, reverse=True)]

    def leading_monomial(self):
        if not self._t:
            return None
        return max(self._t, key=_order_key)

    def leading_coeff(self) -> GaussRational:
        m = self.leading_monomial()
        return GaussRational(0) if m is None else self.coeff(*m)

    def degree(self):
        """``(deg_z, deg_w)``; ``(-1, -1)`` for the zero polynomial."""
        if not self._t:
            return (-1, -1)
        return (max(i for i, _ in self._t), max(j for _, j in self._t))

    def total_degree(self) -> int:
        return max((i + j for i, j in self._t), default=-1)

    def constant_value(self):
        """GaussRational if the polynomial is constant, else None."""
        if not self._t:
            return GaussRational(0)
        if list(self._t) == [(0, 0)]:
            return self.coeff(0, 0)
        return None

    # -- equality / hashing ----------------------------------------------
    def __eq__(self, other):
        if isinstance(other, BiPoly):
            return self._d == other._d and self._t == other._t
        if isinstance(other, (int, Fraction, GaussRational, complex)):
            return self == BiPoly.const(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self._t.items()), self._d))
        return self._hash

    # -- arithmetic -------------------------------------------------------
    @staticmethod
    def coerce(x) -> "BiPoly":
        if isinstance(x, BiPoly):
            return x
        return BiPoly.const(x)

    def __add__(self, other):
        o = BiPoly.coerce(other)
        if not o._t:
            return self
        if not self._t:
            return o
        d = self._d * o._d // gcd(self._d, o._d)
        s1, s2 = d // self._d, d // o._d
        acc = {k: (a * s1, b * s1) for k, (a, b) in self._t.items()}
        for k, (a, b) in o._t.items():
            pa, pb = acc.get(k, (0, 0))
            acc[k] = (pa + a * s2, pb + b * s2)
        return BiPoly._make(acc, d)

    __radd__ = __add__

    def __neg__(self):
        return BiPoly(_raw=({k: (-a, -b) for k, (a, b) in self._t.items()}, self._d))

    def __sub__(self, other):
        return self + (-BiPoly.coerce(other))

    def __rsub__(self, other):
        return BiPoly.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, BiPoly):
            if not self._t or not other._t:
                return BiPoly.zero()
            return _poly_mul(self, other)
        c = GaussRational.coerce(other)
        if c.is_zero():
            return BiPoly.zero()
        a, b, d = _gauss_int_parts(c)
        t = {k: (x * a - y * b, x * b + y * a) for k, (x, y) in self._t.items()}
        return BiPoly._make(t, self._d * d)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = BiPoly.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c) -> "BiPoly":
        return self * GaussRational.coerce(c)

    def partial(self, var: str) -> "BiPoly":
        if var == "z":
            t = {(i - 1, j): (a * i, b * i) for (i, j), (a, b) in self._t.items() if i}
        elif var == "w":
            t = {(i, j - 1): (a * j, b * j) for (i, j), (a, b) in self._t.items() if j}
        else:
            raise ValueError(f"unknown variable {var!r}")
        return BiPoly._make(t, self._d)

    def bar(self) -> "BiPoly":
        return BiPoly(_raw=({(j, i): (a, -b) for (i, j), (a, b) in self._t.items()}, self._d))

    def shift(self, di: int, dj: int) -> "BiPoly":
        """Multiply by ``z**di * w**dj`` (negative shifts must stay exact)."""
        t = {(i + di, j + dj): v for (i, j), v in self._t.items()}
        if any(i < 0 or j < 0 for i, j in t):
            raise ValueError("shift would create negative exponents")
        return BiPoly(_raw=(t, self._d))

    def reversed_vars(self, dz: int, dw: int) -> "BiPoly":
        """``z**dz * w**dw * p(1/z, 1/w)``; requires dz, dw >= the degrees."""
        t = {(dz - i, dw - j): v for (i, j), v in self._t.items()}
        if any(i < 0 or j < 0 for i, j in t):
            raise ValueError("reversal degree smaller than polynomial degree")
        return BiPoly(_raw=(t, self._d))

    def dilate(self, a) -> "BiPoly":
        """``p(a z, conj(a) w)`` for a Gaussian-rational ``a``."""
        a = GaussRational.coerce(a)
        ab = a.conj()
        terms = {}
        for (i, j), c in self.terms():
            terms[(i, j)] = c * (a ** i) * (ab ** j)
        return BiPoly(terms)

    def monomial_content(self):
        """Largest ``(a, b)`` with ``z**a w**b`` dividing the polynomial."""
        if not self._t:
            return (0, 0)
        return (min(i for i, _ in self._t), min(j for _, j in self._t))

    def exact_div(self, other: "BiPoly"):
        """Quotient if ``other`` divides ``self`` exactly, else ``None``."""
        return _exact_div(self, other)

    # -- evaluation -------------------------------------------------------
    def eval_exact(self, z0, w0) -> GaussRational:
        z0 = GaussRational.coerce(z0)
        w0 = GaussRational.coerce(w0)
        acc = GaussRational(0)
        for (i, j), c in self.terms():
            acc = acc + c * (z0 ** i) * (w0 ** j)
        return acc

    def _dense_groups(self):
        """Float coefficients grouped by z-power, for Horner evaluation."""
        if self._dense is None:
            dz, dw = self.degree()
            rows = []
            for i in range(dz + 1):
                row = np.zeros(dw + 1, dtype=complex)
                rows.append(row)
            for (i, j), (a, b) in self._t.items():
                rows[i][j] = complex(Fraction(a, self._d)) if b == 0 else complex(
                    float(Fraction(a, self._d)), float(Fraction(b, self._d)))
            # trim each row's trailing zeros so Horner in w stays short
            trimmed = []
            for row in rows:
                nz = np.nonzero(row)[0]
                trimmed.append(row[: nz[-1] + 1] if nz.size else row[:0])
            self._dense = trimmed
        return self._dense

    def eval(self, z0, w0):
        """Floating evaluation, Horner in w inside Horner in z."""
        z0 = np.asarray(z0, dtype=complex)
        w0 = np.asarray(w0, dtype=complex)
        shape = np.broadcast_shapes(z0.shape, w0.shape)
        rows = self._dense_groups()
        acc = np.zeros(shape, dtype=complex)
        for row in reversed(rows):
            acc = acc * z0
            if row.size:
                inner = np.full(shape, row[-1], dtype=complex)
                for c in row[-2::-1]:
                    inner = inner * w0 + c
                acc = acc + inner
        return acc

    def eval_abs(self, z0, w0):
        """Sum of |term| magnitudes, the scale used for pole detection."""
        az = np.abs(np.asarray(z0, dtype=complex))
        aw = np.abs(np.asarray(w0, dtype=complex))
        shape = np.broadcast_shapes(az.shape, aw.shape)
        acc = np.zeros(shape)
        for (i, j), (a, b) in self._t.items():
            acc = acc + abs(complex(a, b)) / self._d * az ** i * aw ** j
        return acc

    # -- serialisation ----------------------------------------------------
    def to_json(self) -> list:
        return [{"i": i, "j": j, "c": c.to_json()} for (i, j), c in self.terms()]

    @classmethod
    def from_json(cls, obj) -> "BiPoly":
        if not isinstance(obj, list):
            raise ParseError("BiPoly must be a list of terms")
        terms = {}
        try:
            for item in obj:
                key = (int(item["i"]), int(item["j"]))
                terms[key] = GaussRational.coerce(terms.get(key, 0)) + GaussRational.from_json(item["c"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad BiPoly term: {exc}") from exc
        return cls(terms)

    def __repr__(self):
        return f"BiPoly({str(self)!r})"

    def __str__(self):
        if not self._t:
            return "0"
        parts = []
        for (i, j), c in self.terms():
            if c.im == 0:
                cs = str(c.re)
            elif c.re == 0:
                cs = f"{c.im}i"
            else:
                cs = f"({c.re}{'+' if c.im > 0 else '-'}{abs(c.im)}i)"
            mono = "*".join(
                s for s in (
                    f"z^{i}" if i > 1 else ("z" if i == 1 else ""),
                    f"w^{j}" if j > 1 else ("w" if j == 1 else ""),
                ) if s
            )
            if mono:
                if cs == "1":
                    parts.append(mono)
                elif cs == "-1":
                    parts.append("-" + mono)
                else:
                    parts.append(f"{cs}*{mono}")
            else:
                parts.append(cs)
        out = " + ".join(parts)
        return out.replace("+ -", "- ")


@functools.lru_cache(maxsize=8192)
def _poly_mul(p: BiPoly, q: BiPoly) -> BiPoly:
    if len(p) < len(q):
        p, q = q, p
    acc: dict = {}
    if p.is_real() and q.is_real():
        for (i1, j1), (a1, _) in q._t.items():
            for (i2, j2), (a2, _) in p._t.items():
                k = (i1 + i2, j1 + j2)
                prev = acc.get(k)
                acc[k] = a1 * a2 if prev is None else prev + a1 * a2
        terms = {k: (v, 0) for k, v in acc.items()}
    else:
        for (i1, j1), (a1, b1) in q._t.items():
            for (i2, j2), (a2, b2) in p._t.items():
                k = (i1 + i2, j1 + j2)
                re_ = a1 * a2 - b1 * b2
                im_ = a1 * b2 + b1 * a2
                prev = acc.get(k)
                acc[k] = (re_, im_) if prev is None else (prev[0] + re_, prev[1] + im_)
        terms = acc
    return BiPoly._make(terms, p._d * q._d)


def _exact_div(p: BiPoly, g: BiPoly):
    if g.is_zero():
        raise DivisionByZeroFunction("division by the zero polynomial")
    if p.is_zero():
        return BiPoly.zero()
    dzp, dwp = p.degree()
    dzg, dwg = g.degree()
    if dzg > dzp or dwg > dwp or len(g) > len(p):
        return None
    lm = g.leading_monomial()
    li, lj = lm
    la, lb = g._t[lm]
    # work over Q(i) with Fraction pairs; cheap when lc(g) is a unit
    norm = la * la + lb * lb
    inv = (Fraction(la, norm), Fraction(-lb, norm))  # 1/lc numerator part
    gd = g._d
    rem = {k: (Fraction(a, p._d), Fraction(b, p._d)) for k, (a, b) in p._t.items()}
    gterms = [(k, Fraction(a, gd), Fraction(b, gd)) for k, (a, b) in g._t.items() if k != lm]
    lc_re, lc_im = Fraction(la, gd), Fraction(lb, gd)
    n2 = lc_re * lc_re + lc_im * lc_im
    inv = (lc_re / n2, -lc_im / n2)
    heap = [(-(i + j), -i, (i, j)) for (i, j) in rem]
    heapq.heapify(heap)
    quot = {}
    while heap:
        _, _, mono = heapq.heappop(heap)
        c = rem.pop(mono, None)
        if c is None or (c[0] == 0 and c[1] == 0):
            continue
        i, j = mono
        if i < li or j < lj:
            return None
        qi, qj = i - li, j - lj
        qre = c[0] * inv[0] - c[1] * inv[1]
        qim = c[0] * inv[1] + c[1] * inv[0]
        quot[(qi, qj)] = (qre, qim)
        for (gi, gj), gre, gim in gterms:
            key = (gi + qi, gj + qj)
            sre = qre * gre - qim * gim
            sim = qre * gim + qim * gre
            old = rem.get(key)
            if old is None:
                rem[key] = (-sre, -sim)
                heapq.heappush(heap, (-(key[0] + key[1]), -key[0], key))
            else:
                rem[key] = (old[0] - sre, old[1] - sim)
    return BiPoly({k: GaussRational(a, b) for k, (a, b) in quot.items()})


_TERM_RE = re.compile(r"\s*([+-])?\s*([^+-]+(?:\([^)]*\))?[^+-]*)")


def _split_terms(text: str):
    """Split on top-level + and - (not inside parentheses)."""
    terms = []
    depth = 0
    cur = ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and cur.strip() and not cur.rstrip().endswith(("*", "^")):
            terms.append(cur)
            cur = ch
        else:
            cur += ch
    if cur.strip():
        terms.append(cur)
    return terms


def _parse_coeff(tok: str) -> GaussRational:
    tok = tok.strip()
    if tok.startswith("(") and tok.endswith(")"):
        inner = tok[1:-1]
        total = GaussRational(0)
        for part in _split_terms(inner):
            total = total + _parse_coeff(part)
        return total
    sign = 1
    while tok and tok[0] in "+-":
        if tok[0] == "-":
            sign = -sign
        tok = tok[1:].strip()
    if "*" in tok:
        out = GaussRational(sign)
        for part in _split_factors(tok):
            out = out * _parse_coeff(part)
        return out
    if tok in ("i", "I", "j"):
        return GaussRational(0, sign)
    if tok.endswith(("i", "I")):
        return GaussRational(0, sign * _frac(tok[:-1]))
    return GaussRational(sign * _frac(tok))


def _parse_poly(text: str) -> BiPoly:
    text = text.replace("**", "^").replace(" ", "")
    if not text:
        raise ParseError("empty polynomial")
    result = BiPoly.zero()
    for term in _split_terms(text):
        sign = 1
        t = term
        while t and t[0] in "+-":
            if t[0] == "-":
                sign = -sign
            t = t[1:]
        coeff = GaussRational(sign)
        i = j = 0
        for factor in _split_factors(t):
            if not factor:
                continue
            base, _, exp = factor.partition("^")
            try:
                e = int(exp) if exp else 1
            except ValueError as exc:
                raise ParseError(f"bad exponent in {factor!r}") from exc
            if e < 0:
                raise ParseError(f"negative exponent in {factor!r}")
            if base == "z":
                i += e
            elif base == "w":
                j += e
            else:
                try:
                    coeff = coeff * (_parse_coeff(base) ** e)
                except (ValueError, ZeroDivisionError) as exc:
                    raise ParseError(f"bad factor {factor!r} in {text!r}") from exc
        result = result + BiPoly.monomial(i, j, coeff)
    return result


def _split_factors(t: str):
    out = []
    depth = 0
    cur = ""
    for ch in t:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "*" and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    # "2z" style implicit products are not supported; "/" only inside numbers
    return out


Z = BiPoly.z()
W = BiPoly.w()


# ---------------------------------------------------------------------------
# size control

_SIZE_CONTROL: contextvars.ContextVar = contextvars.ContextVar("unitonkit_size_control", default=None)


@contextlib.contextmanager
def size_control(factors=()):
    """Enable the cancellation pass on every new :class:`RatFunc`.

    Inside the block, common monomial content is stripped and each
    candidate factor is divided out of numerator and denominator as long
    as it divides both exactly.  Off by default.
    """
    cands = tuple(BiPoly.coerce(f) for f in factors if not BiPoly.coerce(f).is_zero())
    cands = tuple(f for f in cands if f.total_degree() > 0)
    token = _SIZE_CONTROL.set(cands)
    try:
        yield
    finally:
        _SIZE_CONTROL.reset(token)


def _reduce(num: BiPoly, den: BiPoly, factors):
    a1, b1 = num.monomial_content()
    a2, b2 = den.monomial_content()
    a, b = min(a1, a2), min(b1, b2)
    if a or b:
        num = num.shift(-a, -b)
        den = den.shift(-a, -b)
    for f in factors:
        while True:
            dzf, dwf = f.degree()
            dzd, dwd = den.degree()
            if dzf > dzd or dwf > dwd:
                break
            qd = _exact_div(den, f)
            if qd is None:
                break
            qn = _exact_div(num, f)
            if qn is None:
                break
            num, den = qn, qd
    return num, den


# ---------------------------------------------------------------------------
# rational functions


class RatFunc:
    """Quotient ``num/den`` of bivariate polynomials.

    The denominator is kept monic in the canonical term order.  No gcd is
    taken, so two equal functions can have different representations; use
    :meth:`equals` (or ``==``), which cross-multiplies.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = BiPoly.coerce(num)
        den = BiPoly.one() if den is None else BiPoly.coerce(den)
        if den.is_zero():
            raise DivisionByZeroFunction("zero denominator")
        if num.is_zero():
            self.num, self.den = num, BiPoly.one()
            return
        lc = den.leading_coeff()
        if lc != 1:
            inv = GaussRational(1) / lc
            num = num.scale(inv)
            den = den.scale(inv)
        factors = _SIZE_CONTROL.get()
        if factors is not None and den.total_degree() > 0:
            num, den = _reduce(num, den, factors)
            lc = den.leading_coeff()
            if lc != 1:
                inv = GaussRational(1) / lc
                num, den = num.scale(inv), den.scale(inv)
        self.num = num
        self.den = den

    @classmethod
    def _trusted(cls, num, den):
        obj = cls.__new__(cls)
        if num.is_zero():
            obj.num, obj.den = num, BiPoly.one()
        else:
            obj.num, obj.den = num, den
        return obj

    @staticmethod
    def coerce(x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        return RatFunc(BiPoly.coerce(x))

    @classmethod
    def parse(cls, num: str, den: str = "1") -> "RatFunc":
        return cls(BiPoly.parse(num), BiPoly.parse(den))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self):
        return not self.is_zero()

    def is_polynomial(self) -> bool:
        return self.den == BiPoly.one()

    def constant_value(self):
        if self.den.total_degree() == 0:
            c = self.num.constant_value()
            return None if c is None else c / self.den.leading_coeff()
        return None

    def size(self) -> int:
        return len(self.num) + len(self.den)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = RatFunc.coerce(other)
        if o.is_zero():
            return self
        if self.is_zero():
            return o
        if self.den == o.den:
            return RatFunc._finish(self.num + o.num, self.den)
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc._trusted(-self.num, self.den)

    def __sub__(self, other):
        return self + (-RatFunc.coerce(other))

    def __rsub__(self, other):
        return RatFunc.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, RatFunc):
            if isinstance(other, BiPoly):
                other = RatFunc(other)
            else:
                c = GaussRational.coerce(other)
                if c.is_zero():
                    return RatFunc(BiPoly.zero())
                return RatFunc._trusted(self.num.scale(c), self.den)
        if self.is_zero() or other.is_zero():
            return RatFunc(BiPoly.zero())
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = RatFunc.coerce(other)
        if o.is_zero():
            raise DivisionByZeroFunction("division by the zero function")
        if self.is_zero():
            return self
        return RatFunc(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return RatFunc.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return RatFunc(1) / (self ** (-k))
        return RatFunc(self.num ** k, self.den ** k)

    @staticmethod
    def _finish(num, den):
        if _SIZE_CONTROL.get() is not None:
            return RatFunc(num, den)
        return RatFunc._trusted(num, den)

    def partial(self, var: str) -> "RatFunc":
        dn = self.num.partial(var)
        if self.den.total_degree() == 0:
            return RatFunc._trusted(dn, self.den)
        dd = self.den.partial(var)
        if dd.is_zero():
            return RatFunc._finish(dn, self.den)
        return RatFunc(dn * self.den - self.num * dd, self.den * self.den)

    def bar(self) -> "RatFunc":
        return RatFunc(self.num.bar(), self.den.bar())

    def invert_vars(self) -> "RatFunc":
        """The function ``f(1/z, 1/w)`` as a rational function of (z, w)."""
        dzn, dwn = self.num.degree()
        dzd, dwd = self.den.degree()
        dz, dw = max(dzn, dzd, 0), max(dwn, dwd, 0)
        if self.is_zero():
            return self
        return RatFunc(self.num.reversed_vars(dz, dw), self.den.reversed_vars(dz, dw))

    def dilate(self, a) -> "RatFunc":
        return RatFunc(self.num.dilate(a), self.den.dilate(a))

    def reduce(self, factors=()) -> "RatFunc":
        num, den = _reduce(self.num, self.den, [BiPoly.coerce(f) for f in factors])
        return RatFunc(num, den)

    # -- comparison -------------------------------------------------------
    def equals(self, other) -> bool:
        o = RatFunc.coerce(other)
        if self.den == o.den:
            return self.num == o.num
        return (self.num * o.den - o.num * self.den).is_zero()

    def __eq__(self, other):
        if isinstance(other, (RatFunc, BiPoly, int, Fraction, GaussRational, complex)):
            return self.equals(other)
        return NotImplemented

    __hash__ = None

    # -- evaluation -------------------------------------------------------
    def eval_exact(self, z0, w0) -> GaussRational:
        d = self.den.eval_exact(z0, w0)
        if d.is_zero():
            raise PoleAtPoint(f"denominator vanishes at ({z0}, {w0})")
        return self.num.eval_exact(z0, w0) / d

    def eval(self, z0, w0, floor: float = DEFAULT_POLE_FLOOR):
        n = self.num.eval(z0, w0)
        if self.den.total_degree() <= 0:
            return n / complex(self.den.leading_coeff()) if not self.den.is_zero() else n
        d = self.den.eval(z0, w0)
        scale = self.den.eval_abs(z0, w0)
        bad = np.abs(d) <= floor * np.maximum(scale, 1e-300)
        if np.any(bad):
            raise PoleAtPoint(f"denominator below floor at {int(np.sum(bad))} point(s)")
        return n / d

    # -- serialisation ----------------------------------------------------
    def to_json(self) -> dict:
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def from_json(cls, obj) -> "RatFunc":
        try:
            return cls(BiPoly.from_json(obj["num"]), BiPoly.from_json(obj["den"]))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad RatFunc: {exc}") from exc
        except DivisionByZeroFunction as exc:
            raise ParseError("RatFunc with zero denominator") from exc

    def __repr__(self):
        if self.is_polynomial():
            return f"RatFunc({str(self.num)!r})"
        return f"RatFunc({str(self.num)!r}, {str(self.den)!r})"


def _sum_rf(items):
    """Sum of RatFuncs, adding numerators that share a denominator first."""
    groups: dict = {}
    for r in items:
        if r.is_zero():
            continue
        acc = groups.get(r.den)
        groups[r.den] = r.num if acc is None else acc + r.num
    total = None
    for den, num in groups.items():
        term = RatFunc._finish(num, den)
        total = term if total is None else total + term
    return RatFunc(BiPoly.zero()) if total is None else total


# ---------------------------------------------------------------------------
# matrices


class MatRF:
    """Square matrix of :class:`RatFunc` entries."""

    __slots__ = ("n", "rows")

    def __init__(self, rows):
        rows = tuple(tuple(RatFunc.coerce(e) for e in row) for row in rows)
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise DimensionMismatch("MatRF must be square with dimension >= 1")
        self.n = n
        self.rows = rows

    @classmethod
    def identity(cls, n: int) -> "MatRF":
        one, zero = RatFunc(1), RatFunc(0)
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, n: int) -> "MatRF":
        zero = RatFunc(0)
        return cls([[zero] * n for _ in range(n)])

    @classmethod
    def scalar(cls, n: int, c) -> "MatRF":
        c = RatFunc.coerce(c)
        zero = RatFunc(0)
        return cls([[c if i == j else zero for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def _check(self, other):
        if not isinstance(other, MatRF):
            raise TypeError("expected MatRF")
        if other.n != self.n:
            raise DimensionMismatch(f"dimension {self.n} vs {other.n}")

    def __add__(self, other):
        self._check(other)
        return MatRF([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other):
        self._check(other)
        return MatRF([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self):
        return MatRF([[-a for a in r] for r in self.rows])

    def __matmul__(self, other):
        self._check(other)
        n = self.n
        cols = [[other.rows[k][j] for k in range(n)] for j in range(n)]
        out = []
        for i in range(n):
            row = self.rows[i]
            out.append([
                _sum_rf(a * b for a, b in zip(row, cols[j]) if not (a.is_zero() or b.is_zero()))
                for j in range(n)
            ])
        return MatRF(out)

    def __mul__(self, other):
        if isinstance(other, MatRF):
            return self @ other
        c = RatFunc.coerce(other)
        return MatRF([[a * c for a in r] for r in self.rows])

    __rmul__ = __mul__

    def commutator(self, other) -> "MatRF":
        return self @ other - other @ self

    def map(self, fn) -> "MatRF":
        return MatRF([[fn(a) for a in r] for r in self.rows])

    def partial(self, var: str) -> "MatRF":
        return self.map(lambda a: a.partial(var))

    def bar(self) -> "MatRF":
        return self.map(RatFunc.bar)

    def transpose(self) -> "MatRF":
        return MatRF([[self.rows[j][i] for j in range(self.n)] for i in range(self.n)])

    def adjoint(self) -> "MatRF":
        return MatRF([[self.rows[j][i].bar() for j in range(self.n)] for i in range(self.n)])

    def invert_vars(self) -> "MatRF":
        return self.map(RatFunc.invert_vars)

    def dilate(self, a) -> "MatRF":
        return self.map(lambda e: e.dilate(a))

    def reduce(self, factors=()) -> "MatRF":
        return self.map(lambda e: e.reduce(factors))

    def det(self) -> RatFunc:
        return _det([list(r) for r in self.rows])

    def inverse(self) -> "MatRF":
        return mat_inverse(self)

    def trace(self) -> RatFunc:
        return _sum_rf(self.rows[i][i] for i in range(self.n))

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self.rows for e in r)

    def equals(self, other) -> bool:
        self._check(other)
        return all(a.equals(b) for r1, r2 in zip(self.rows, other.rows) for a, b in zip(r1, r2))

    def __eq__(self, other):
        if not isinstance(other, MatRF):
            return NotImplemented
        return other.n == self.n and self.equals(other)

    __hash__ = None

    def is_identity(self) -> bool:
        return self.equals(MatRF.identity(self.n))

    def denominators(self):
        seen = []
        for r in self.rows:
            for e in r:
                if e.den.total_degree() > 0 and e.den not in seen:
                    seen.append(e.den)
        return seen

    def size(self) -> int:
        return sum(e.size() for r in self.rows for e in r)

    def eval_exact(self, z0, w0):
        return [[e.eval_exact(z0, w0) for e in r] for r in self.rows]

    def specialize(self, z0, w0) -> "MatRF":
        """Constant MatRF with every entry evaluated exactly at (z0, w0)."""
        return MatRF([[RatFunc(BiPoly.const(e.eval_exact(z0, w0))) for e in r] for r in self.rows])

    def eval(self, z0, w0, floor: float = DEFAULT_POLE_FLOOR):
        """Complex array of shape ``broadcast(z0, w0).shape + (n, n)``."""
        z0 = np.asarray(z0, dtype=complex)
        w0 = np.asarray(w0, dtype=complex)
        shape = np.broadcast_shapes(z0.shape, w0.shape)
        out = np.zeros(shape + (self.n, self.n), dtype=complex)
        den_cache: dict = {}
        for i, r in enumerate(self.rows):
            for j, e in enumerate(r):
                if e.is_zero():
                    continue
                num = e.num.eval(z0, w0)
                if e.den.total_degree() <= 0:
                    out[..., i, j] = num / complex(e.den.leading_coeff())
                    continue
                d = den_cache.get(e.den)
                if d is None:
                    d = e.den.eval(z0, w0)
                    scale = e.den.eval_abs(z0, w0)
                    if np.any(np.abs(d) <= floor * np.maximum(scale, 1e-300)):
                        raise PoleAtPoint(f"entry ({i}, {j}) denominator below floor")
                    den_cache[e.den] = d
                out[..., i, j] = num / d
        return out

    def to_json(self) -> dict:
        return {"n": self.n, "rows": [[e.to_json() for e in r] for r in self.rows]}

    @classmethod
    def from_json(cls, obj) -> "MatRF":
        try:
            n = int(obj["n"])
            rows = [[RatFunc.from_json(e) for e in r] for r in obj["rows"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad MatRF: {exc}") from exc
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ParseError(f"MatRF rows do not match n={n}")
        return cls(rows)

    def __repr__(self):
        return f"MatRF(n={self.n}, size={self.size()})"


def _det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if n == 3:
        a = m
        return _sum_rf([
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]),
            -(a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])),
            a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]),
        ])
    # Laplace expansion along the row with most zeros
    best = max(range(n), key=lambda i: sum(e.is_zero() for e in m[i]))
    terms = []
    for j, e in enumerate(m[best]):
        if e.is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != best]
        sign = -1 if (best + j) % 2 else 1
        terms.append(e * _det(minor) * sign)
    return _sum_rf(terms)


def _cofactor(m, i, j):
    minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != i]
    c = _det(minor)
    return -c if (i + j) % 2 else c


# ---------------------------------------------------------------------------
# functional API mirroring the operation list


def rf_arith(a: RatFunc, b: RatFunc, op: str) -> RatFunc:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def rf_eq(a: RatFunc, b: RatFunc) -> bool:
    return RatFunc.coerce(a).equals(b)


def rf_partial(a: RatFunc, var: str) -> RatFunc:
    return RatFunc.coerce(a).partial(var)


def rf_bar(a: RatFunc) -> RatFunc:
    return RatFunc.coerce(a).bar()


def rf_eval(a: RatFunc, z0, w0, floor: float = DEFAULT_POLE_FLOOR):
    out = RatFunc.coerce(a).eval(z0, w0, floor=floor)
    return complex(out) if np.ndim(out) == 0 else out


def mat_ops(a: MatRF, b: MatRF, op: str) -> MatRF:
    if op == "add":
        return a + b
    if op == "mul":
        return a @ b
    raise ValueError(f"unknown op {op!r}")


def mat_adjoint(a: MatRF) -> MatRF:
    return a.adjoint()


def mat_inverse(a: MatRF) -> MatRF:
    """Adjugate over determinant."""
    m = [list(r) for r in a.rows]
    d = _det(m)
    if d.is_zero():
        raise SingularMatrixFunction("determinant is identically zero")
    n = a.n
    if n == 1:
        return MatRF([[RatFunc(1) / d]])
    inv_d = RatFunc(1) / d
    return MatRF([[_cofactor(m, j, i) * inv_d for j in range(n)] for i in range(n)])
