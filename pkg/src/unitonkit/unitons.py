"""Uniton equations as exact residuals, plus generators.

Everything here works on exact :class:`MatRF`/:class:`LoopMat` data.  A
residual is first built exactly and tested for being identically zero; it
is then sampled on a small polar grid so every report also carries a
floating magnitude.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import NonUnitaryLoop, PoleAtPoint, SingularMatrixFunction, ZeroVector
from .exactalg import BiPoly, GaussRational, MatRF, RatFunc, size_control
from .looplab import LoopMat, LoopSupport, loop_eval_lambda, loop_mul, loop_partial, loop_sample, loop_star_dual, loop_support

__all__ = [
    "Connection",
    "BogomolnyFields",
    "ResidualReport",
    "connection_from_map",
    "harmonic_residual",
    "flatness_residual",
    "extended_check",
    "smoothness_at_infinity",
    "bogomolny_fields",
    "bogomolny_residual",
    "uniton_number_bound",
    "one_uniton_from_holo",
    "based",
    "residual_grid",
]

HALF = GaussRational(1, 0) / 2
I_UNIT = GaussRational(0, 1)

# exact results are sampled as a sanity floor; anything above this means
# the exact zero test and the floating evaluation disagree
SAMPLE_FLOOR = 1e-9


@dataclass(frozen=True)
class Connection:
    a_z: MatRF
    a_zbar: MatRF

    @property
    def n(self) -> int:
        return self.a_z.n

    def is_antihermitian(self) -> bool:
        """``a_zbar == -adjoint(a_z)`` exactly."""
        return (self.a_zbar + self.a_z.adjoint()).is_zero()


@dataclass(frozen=True)
class BogomolnyFields:
    a_x: MatRF
    a_y: MatRF
    a_t: MatRF
    phi: MatRF


@dataclass(frozen=True)
class ResidualReport:
    kind: str
    exact_zero: bool
    max_sample_norm: float
    sample_count: int
    method: str = "exact"
    detail: str = ""

    @property
    def passed(self) -> bool:
        if self.method in ("exact", "sampled_growth"):
            return self.exact_zero
        return self.max_sample_norm <= SAMPLE_FLOOR

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def residual_grid(n_r: int = 8, n_theta: int = 8, radius: float = 2.0) -> np.ndarray:
    """Polar sample points over ``|z| <= radius`` (midpoint radii)."""
    r = radius * (np.arange(n_r) + 0.5) / n_r
    th = 2 * np.pi * np.arange(n_theta) / n_theta + 0.1
    return (r[:, None] * np.exp(1j * th)[None, :]).ravel()


def _sample_norm(m: MatRF, pts=None) -> tuple[float, int]:
    if m.is_zero():
        pts = residual_grid() if pts is None else pts
        return 0.0, len(pts)
    pts = residual_grid() if pts is None else pts
    vals = []
    for p in pts:
        try:
            vals.append(np.linalg.norm(m.eval(p, np.conj(p))))
        except PoleAtPoint:
            continue
    return (float(max(vals)) if vals else float("nan")), len(vals)


def _default_factors(S: MatRF):
    return S.denominators()


def _is_unitary_exact(S: MatRF) -> bool:
    return (S @ S.adjoint()).is_identity()


def connection_from_map(S: MatRF, factors=None) -> Connection:
    """``A_z = 1/2 S^-1 dS/dz`` and ``A_zbar = 1/2 S^-1 dS/dw``.

    When ``S`` is exactly unitary on the real locus its adjoint is used as
    the inverse, which avoids the determinant denominator.
    """
    det = S.det()
    if det.is_zero():
        raise SingularMatrixFunction("det S is identically zero", location="det")
    factors = _default_factors(S) if factors is None else factors
    with size_control(factors):
        inv = S.adjoint() if _is_unitary_exact(S) else S.inverse()
        a_z = (inv @ S.partial("z")) * HALF
        a_w = (inv @ S.partial("w")) * HALF
    return Connection(a_z, a_w)


def _connection_factors(A: Connection):
    seen = []
    for m in (A.a_z, A.a_zbar):
        for d in m.denominators():
            if d not in seen:
                seen.append(d)
    return seen


def harmonic_residual(S: MatRF, factors=None) -> ResidualReport:
    """Residual of ``d_zbar A_z + [A_zbar, A_z]``."""
    A = connection_from_map(S, factors)
    with size_control(_factors_for(A, factors)):
        res = A.a_z.partial("w") + A.a_zbar.commutator(A.a_z)
    norm, cnt = _sample_norm(res)
    return ResidualReport("harmonic", res.is_zero(), norm, cnt)


def _factors_for(A: Connection, factors):
    fs = list(factors or [])
    for d in _connection_factors(A):
        if d not in fs:
            fs.append(d)
    return fs


def flatness_residual(A: Connection, factors=None) -> ResidualReport:
    """Residual of ``d_zbar A_z - d_z A_zbar + 2[A_zbar, A_z]``."""
    with size_control(_factors_for(A, factors)):
        res = A.a_z.partial("w") - A.a_zbar.partial("z") + A.a_zbar.commutator(A.a_z) * 2
    norm, cnt = _sample_norm(res)
    return ResidualReport("flatness", res.is_zero(), norm, cnt)


def _loop_sample_norm(L: LoopMat) -> tuple[float, int]:
    pts = residual_grid()
    if L.is_zero():
        return 0.0, len(pts)
    lam = np.exp(1j * np.pi / 3)
    vals = []
    for p in pts:
        try:
            vals.append(np.linalg.norm(loop_sample(L, lam, p)))
        except PoleAtPoint:
            continue
    return (float(max(vals)) if vals else float("nan")), len(vals)


def extended_check(E: LoopMat, factors=None) -> ResidualReport:
    """Check ``E(-1) = 1`` and the two Laurent identities with ``A`` from ``E(1)``."""
    n = E.n
    base_ok = loop_eval_lambda(E, -1).is_identity()
    S = loop_eval_lambda(E, 1)
    if factors is None:
        factors = []
        for m in E.coeffs.values():
            for d in m.denominators():
                if d not in factors:
                    factors.append(d)
    A = connection_from_map(S, factors)
    with size_control(_factors_for(A, factors)):
        ea_w = loop_mul(E, LoopMat.constant(A.a_zbar))
        ea_z = loop_mul(E, LoopMat.constant(A.a_z))
        r_w = loop_partial(E, "w") - (ea_w + ea_w.shift(1))
        r_z = loop_partial(E, "z") - (ea_z + ea_z.shift(-1))
    exact = base_ok and r_w.is_zero() and r_z.is_zero()
    n1, cnt = _loop_sample_norm(r_w)
    n2, _ = _loop_sample_norm(r_z)
    detail = "" if base_ok else "E(-1) is not the identity"
    if not base_ok:
        dev = loop_eval_lambda(E, -1) - MatRF.identity(n)
        n3, _ = _sample_norm(dev)
        n1 = max(n1, n3)
    return ResidualReport("extended", exact, max(n1, n2), cnt, detail=detail)


def smoothness_at_infinity(S: MatRF, radii=(1e1, 1e2, 1e3), n_theta: int = 16, factors=None) -> ResidualReport:
    """Sample ``z^2 A_z`` on circles of growing radius along ``w = conj(z)``.

    The growth exponent ``p = log10(n(r3)/n(r2))`` between the last two
    radii decides: bounded iff ``p < 0.5``.  The report's
    ``max_sample_norm`` is the largest sampled norm.
    """
    A = connection_from_map(S, factors)
    maxima = []
    count = 0
    for r in radii:
        best = 0.0
        for k in range(n_theta):
            theta = 2 * np.pi * (k + 0.37) / n_theta
            z0 = r * np.exp(1j * theta)
            try:
                v = A.a_z.eval(z0, np.conj(z0))
            except PoleAtPoint:
                # accidental pole hit, nudge the angle
                z0 = r * np.exp(1j * (theta + 1e-3))
                v = A.a_z.eval(z0, np.conj(z0))
            best = max(best, float(np.linalg.norm(z0 * z0 * v)))
            count += 1
        maxima.append(best)
    lo, hi = maxima[-2], maxima[-1]
    if not np.isfinite(hi):
        bounded, p = False, float("inf")
    elif hi <= 1e-300:
        bounded, p = True, 0.0
    else:
        p = float(np.log10(hi / max(lo, 1e-300)) / np.log10(radii[-1] / radii[-2]))
        bounded = p < 0.5
    detail = "growth exponent %.3f; norms %s" % (p, ", ".join("%.6g" % m for m in maxima))
    return ResidualReport("infinity", bounded, float(max(maxima)), count, method="sampled_growth", detail=detail)


def bogomolny_fields(A: Connection) -> BogomolnyFields:
    a_x = A.a_z + A.a_zbar
    a_y = (A.a_z - A.a_zbar) * I_UNIT
    return BogomolnyFields(a_x=a_x, a_y=a_y, a_t=a_y * (-I_UNIT), phi=a_x * I_UNIT)


def _dx(m: MatRF) -> MatRF:
    return m.partial("z") + m.partial("w")


def _dy(m: MatRF) -> MatRF:
    return (m.partial("z") - m.partial("w")) * I_UNIT


def bogomolny_residual(B: BogomolnyFields, factors=None) -> ResidualReport:
    """Residuals of the three time-independent Bogomolny equations."""
    fs = list(factors or [])
    for m in (B.a_x, B.a_y):
        for d in m.denominators():
            if d not in fs:
                fs.append(d)
    with size_control(fs):
        r1 = B.a_t.commutator(B.phi) - (_dx(B.a_y) - _dy(B.a_x) + B.a_x.commutator(B.a_y))
        r2 = _dx(B.phi) + B.a_x.commutator(B.phi) - (_dy(B.a_t) + B.a_y.commutator(B.a_t))
        r3 = _dy(B.phi) + B.a_y.commutator(B.phi) - (-_dx(B.a_t) + B.a_t.commutator(B.a_x))
    exact = r1.is_zero() and r2.is_zero() and r3.is_zero()
    norms = [_sample_norm(r) for r in (r1, r2, r3)]
    return ResidualReport("bogomolny", exact, max(n for n, _ in norms), norms[0][1])


def uniton_number_bound(E: LoopMat) -> tuple[LoopSupport, str]:
    """Laurent support of ``(E at z=0)^-1 E`` and the one-vs-two verdict.

    A one-uniton extended solution gives support inside ``[-1, 1]``.
    """
    if not loop_mul(E, loop_star_dual(E)).is_identity():
        raise NonUnitaryLoop("E times its star dual is not the identity loop")
    E0 = E.specialize(0, 0)
    D = loop_mul(loop_star_dual(E0), E)
    sup = loop_support(D)
    verdict = "consistent_with_one_uniton" if sup.within(-1, 1) else "at_least_two"
    return sup, verdict


def _as_zpoly(p) -> BiPoly:
    if isinstance(p, str):
        p = BiPoly.parse(p)
    elif isinstance(p, (list, tuple)):
        p = sum((BiPoly.monomial(i, 0, c) for i, c in enumerate(p)), BiPoly.zero())
    else:
        p = BiPoly.coerce(p)
    if p.degree()[1] > 0:
        raise ValueError("holomorphic data must not depend on w")
    return p


def one_uniton_from_holo(f) -> tuple[MatRF, LoopMat]:
    """Projection ``pi`` onto span f, ``S = 2 pi - 1`` and ``E = pi - lambda pi_perp``.

    ``f`` entries are z-polynomials: BiPoly, parseable strings, or
    coefficient lists in ascending powers of z.
    """
    polys = [_as_zpoly(p) for p in f]
    if all(p.is_zero() for p in polys):
        raise ZeroVector("f is identically zero")
    bars = [p.bar() for p in polys]
    den = sum((p * q for p, q in zip(polys, bars)), BiPoly.zero())
    n = len(polys)
    pi = MatRF([[RatFunc(polys[i] * bars[j], den) for j in range(n)] for i in range(n)])
    ident = MatRF.identity(n)
    S = pi * 2 - ident
    E = LoopMat(n, {0: pi, 1: pi - ident})
    return S, E


def based(S: MatRF) -> MatRF:
    """Right-multiply by ``adjoint(S(infinity))`` so that ``S(infinity) = 1``.

    Raises PoleAtPoint when the limit at infinity is not a plain value of
    the inverted-coordinate expression.
    """
    at_inf = S.invert_vars().specialize(0, 0)
    return S @ at_inf.adjoint()
