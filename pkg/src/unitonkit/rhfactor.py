"""Birkhoff factorization of sampled matrix loops and Ward's reconstruction.

Convention: ``T(lam) H(lam) = Hhat(lam) Lambda(lam)`` on ``|lam| = 1`` with
``H`` analytic in the disc, ``Hhat`` analytic outside it including
infinity, and ``Lambda = diag(lam**k_i)``.  The ``k_i`` are the partial
indices.

Everything is computed from Fourier coefficients of the samples through
truncated block-Toeplitz systems.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import linalg as sla

from .errors import (
    IllConditioned,
    NonTrivialIndices,
    NonzeroIndicesWhenForbidden,
    ParseError,
    PoleAtPoint,
    PoleOnCircle,
    RankDeficient,
    ValidationFailed,
)
from .exactalg import BiPoly, GaussRational, RatFunc
from .looplab import LoopMat, loop_sample

__all__ = [
    "CircleSamples",
    "FactorConfig",
    "BirkhoffResult",
    "IndexAnalysis",
    "RationalFit",
    "circle_sample",
    "fourier_coefficients",
    "winding_number",
    "partial_indices",
    "index_analysis",
    "birkhoff_factorize",
    "ward_reconstruct",
    "fit_rational",
    "rational_reconstruct",
]


@dataclass
class CircleSamples:
    """``2**m`` matrix samples at ``exp(2 pi i j / 2**m)``."""

    n: int
    m: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (2 ** self.m, self.n, self.n):
            raise ValueError(f"values must have shape {(2 ** self.m, self.n, self.n)}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite sample")

    @property
    def count(self) -> int:
        return 2 ** self.m

    @property
    def points(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.count) / self.count)

    @classmethod
    def from_callable(cls, fn, n: int, m: int) -> "CircleSamples":
        N = 2 ** m
        lams = np.exp(2j * np.pi * np.arange(N) / N)
        return cls(n, m, np.stack([np.asarray(fn(l), dtype=complex).reshape(n, n) for l in lams]))

    def right_multiply(self, C) -> "CircleSamples":
        return CircleSamples(self.n, self.m, self.values @ np.asarray(C, dtype=complex))

    def to_json(self) -> dict:
        vals = [[[float(x.real), float(x.imag)] for x in v.ravel()] for v in self.values]
        return {"n": self.n, "m": self.m, "values": vals}

    @classmethod
    def from_json(cls, obj) -> "CircleSamples":
        try:
            n, m = int(obj["n"]), int(obj["m"])
            out = []
            for v in obj["values"]:
                arr = np.asarray(v, dtype=float)
                # accept flat [[re, im], ...] or nested rows [[[re, im], ...], ...]
                arr = arr.reshape(-1, 2)
                out.append((arr[:, 0] + 1j * arr[:, 1]).reshape(n, n))
            return cls(n, m, np.stack(out) if out else np.zeros((0, n, n)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad CircleSamples: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json())


@dataclass(frozen=True)
class FactorConfig:
    modes: int = 32
    tol: float = 1e-10
    index_tol: float = 1e-8
    cond_max: float = 1e12
    require_trivial: bool = False

    def __post_init__(self):
        if self.modes < 4:
            raise ValueError("modes must be at least 4")
        if not (self.tol > 0 and self.index_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class IndexAnalysis:
    indices: tuple
    winding: int
    kernel_dims: dict
    margin: float
    scan: tuple

    def to_json(self) -> dict:
        return {
            "indices": list(self.indices),
            "winding": self.winding,
            "kernel_dims": {str(k): v for k, v in sorted(self.kernel_dims.items())},
            "margin_log10": self.margin,
            "scan": list(self.scan),
        }


@dataclass
class BirkhoffResult:
    h_coeffs: np.ndarray       # (modes+1, n, n), powers 0..modes
    hhat_coeffs: np.ndarray    # (modes+1, n, n), powers 0, -1, ..., -modes
    indices: tuple
    residual: float
    winding: int
    analysis: IndexAnalysis | None = None
    condition: float = float("nan")
    success: bool = True

    def H(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        pw = lam[..., None] ** np.arange(self.h_coeffs.shape[0])
        return np.einsum("...k,kij->...ij", pw, self.h_coeffs)

    def Hhat(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        pw = lam[..., None] ** (-np.arange(self.hhat_coeffs.shape[0]))
        return np.einsum("...k,kij->...ij", pw, self.hhat_coeffs)

    def Lambda(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        d = lam[..., None] ** np.asarray(self.indices)
        return d[..., :, None] * np.eye(len(self.indices))

    def to_json(self) -> dict:
        def enc(a):
            return [[[float(x.real), float(x.imag)] for x in c.ravel()] for c in a]

        return {
            "indices": list(self.indices),
            "winding": self.winding,
            "residual": self.residual,
            "condition": self.condition,
            "success": self.success,
            "h_coeffs": enc(self.h_coeffs),
            "hhat_coeffs": enc(self.hhat_coeffs),
            "analysis": self.analysis.to_json() if self.analysis else None,
        }


# ---------------------------------------------------------------------------


def circle_sample(source, m: int, point=None, n: int | None = None) -> CircleSamples:
    """Sample a LoopMat at ``point`` or a callable ``lam -> matrix``.

    ``point`` is ``z0`` (then ``w0 = conj(z0)``) or a pair ``(z0, w0)``.
    """
    N = 2 ** m
    lams = np.exp(2j * np.pi * np.arange(N) / N)
    if isinstance(source, LoopMat):
        if point is None:
            point = 0.0
        if np.ndim(point) == 0:
            z0, w0 = complex(point), np.conj(complex(point))
        else:
            z0, w0 = point
        try:
            vals = loop_sample(source, lams, complex(z0), complex(w0))
        except PoleAtPoint as exc:
            raise PoleOnCircle(str(exc)) from exc
        nn = source.n
    else:
        vals = np.stack([np.asarray(source(l), dtype=complex) for l in lams])
        if vals.ndim == 1:
            vals = vals[:, None, None]
        nn = vals.shape[-1] if n is None else n
        vals = vals.reshape(N, nn, nn)
    if not np.all(np.isfinite(vals)):
        raise PoleOnCircle("non-finite sample on the unit circle")
    return CircleSamples(nn, m, vals)


def fourier_coefficients(T: CircleSamples) -> dict:
    """``{k: t_k}`` for ``k`` in ``[-N/2, N/2)``."""
    N = T.count
    F = np.fft.fft(T.values, axis=0) / N
    return {(k if k < N // 2 else k - N): F[k] for k in range(N)}


def _support(coeffs: dict, rel: float = 1e-13):
    scale = max(np.max(np.abs(c)) for c in coeffs.values())
    ks = [k for k, c in coeffs.items() if np.max(np.abs(c)) > rel * scale]
    return min(ks), max(ks)


def winding_number(T: CircleSamples) -> int:
    """Winding of ``det T`` around 0, from the unwrapped phase."""
    d = np.linalg.det(T.values)
    if np.any(np.abs(d) == 0):
        raise IllConditioned("det T vanishes on a sample")
    ph = np.unwrap(np.angle(np.append(d, d[0])))
    return int(round((ph[-1] - ph[0]) / (2 * np.pi)))


def _coef(coeffs, k, n):
    c = coeffs.get(k)
    return c if c is not None else np.zeros((n, n), dtype=complex)


def _toeplitz_rows(coeffs, n, powers, L):
    """Matrix sending ``u = (u_0..u_L)`` to ``[T u]_p`` for ``p`` in ``powers``."""
    R = np.zeros((n * len(powers), n * (L + 1)), dtype=complex)
    for r, p in enumerate(powers):
        for j in range(L + 1):
            R[r * n:(r + 1) * n, j * n:(j + 1) * n] = _coef(coeffs, p - j, n)
    return R


def _singular(coeffs, n, j, L, q):
    """Right singular vectors and padded singular values for "``T u`` has powers ``<= j``"."""
    powers = list(range(j + 1, L + q + 1))
    if not powers:
        return np.eye(n * (L + 1), dtype=complex), np.zeros(n * (L + 1))
    R = _toeplitz_rows(coeffs, n, powers, L)
    _, s, Vh = np.linalg.svd(R)
    full = np.zeros(n * (L + 1))
    full[: len(s)] = s
    # ascending singular values, matching vectors
    order = np.argsort(full, kind="stable")
    return Vh.conj().T[:, order], full[order]


def _index_length(T: CircleSamples, cfg: FactorConfig) -> int:
    return max(cfg.modes, T.count // 4)


def index_analysis(T: CircleSamples, cfg: FactorConfig | None = None) -> IndexAnalysis:
    """Partial indices from kernel growth of nested block-Toeplitz matrices.

    ``d(j)`` is the kernel dimension of "``T u`` has only powers ``<= j``"
    over polynomials ``u`` of degree ``<= L``; ``#{k_i <= j} = d(j) - d(j-1)``
    once ``L`` is large enough.  ``L`` is ``max(modes, N/4)`` so the scan
    uses most of the sampled Fourier range.  The scan starts below the
    lowest Fourier mode of ``T`` (no index can sit there) and stops once all
    ``n`` indices are found.  Decisions use ``index_tol`` relative to
    ``max |T|``; the margin is the log10 gap between the threshold and the
    nearest singular value on either side, minimised over the scan.
    """
    cfg = cfg or FactorConfig()
    n = T.n
    coeffs = fourier_coefficients(T)
    lo, hi = _support(coeffs)
    L = _index_length(T, cfg)
    q = hi
    top = T.count // 2 - 1
    scale = float(np.max(np.linalg.norm(T.values, ord=2, axis=(1, 2))))
    thresh = cfg.index_tol * scale
    dims, margin = {}, np.inf
    indices = []
    prev = 0
    j = lo - 2
    while True:
        _, full = _singular(coeffs, n, j, L, q)
        dims[j] = int(np.sum(full <= thresh))
        below = full[full <= thresh]
        above = full[full > thresh]
        gap_lo = np.log10(thresh / max(below.max(), 1e-300)) if below.size else np.inf
        gap_hi = np.log10(above.min() / thresh) if above.size else np.inf
        margin = min(margin, gap_lo, gap_hi)
        if j - 1 in dims:
            c = dims[j] - dims[j - 1]
            if c < prev or c > n:
                raise IllConditioned(f"inconsistent kernel growth at j={j}; raise modes or adjust index_tol", condition=margin)
            indices += [j] * (c - prev)
            prev = c
        elif dims[j]:
            raise IllConditioned(f"kernel below the Fourier support at j={j}", condition=margin)
        if prev == n:
            break
        j += 1
        if j > top:
            raise IllConditioned(f"found {prev} of {n} indices up to j={top}", condition=margin)
    wind = winding_number(T)
    if sum(indices) != wind:
        raise IllConditioned(f"index sum {sum(indices)} differs from winding {wind}", condition=margin)
    return IndexAnalysis(tuple(indices), wind, dims, float(margin), (lo - 1, j))


def partial_indices(T: CircleSamples, cfg: FactorConfig | None = None) -> list:
    return list(index_analysis(T, cfg).indices)


def _hhat_from(T: CircleSamples, H_vals, indices, modes):
    """Nonpositive Fourier part of ``T H Lambda^-1``."""
    lams = T.points
    lam_inv = lams[:, None] ** (-np.asarray(indices))
    prod = (T.values @ H_vals) * lam_inv[:, None, :]
    F = np.fft.fft(prod, axis=0) / T.count
    N = T.count
    return np.stack([F[(-k) % N] for k in range(modes + 1)])


def _trivial_factor(T, coeffs, n, modes, q, at_infinity=None):
    """Least squares for ``[T H]_0 = C``, ``[T H]_k = 0`` for ``k = 1..modes+q``.

    ``C`` is ``Hhat(infinity)``, the identity unless given.
    """
    R = _toeplitz_rows(coeffs, n, list(range(0, modes + q + 1)), modes)
    rhs = np.zeros((R.shape[0], n), dtype=complex)
    rhs[:n] = np.eye(n) if at_infinity is None else np.asarray(at_infinity, dtype=complex)
    cond = np.linalg.cond(R)
    sol = sla.lstsq(R, rhs, lapack_driver="gelsd")[0]
    H = sol.reshape(modes + 1, n, n)
    return H, float(cond)


def _general_factor(coeffs, n, L, indices, q, dims):
    """Columns of ``H`` chosen index by index from the nested kernels.

    For each index value ``j`` the new columns span the part of
    ``K(j) = {u : T u has powers <= j}`` not already reached by
    ``lambda K(j-1)`` and the columns chosen for smaller indices.  Kernel
    dimensions come from the index analysis, so no second threshold is
    applied here.
    """
    chosen = []
    for j in sorted(set(indices)):
        need = indices.count(j)
        V, _ = _singular(coeffs, n, j, L, q)
        K = V[:, : dims[j]]
        parts = []
        if dims.get(j - 1, 0):
            Vp, _ = _singular(coeffs, n, j - 1, L - 1, q)
            Kp = Vp[:, : dims[j - 1]]
            shifted = np.zeros((n * (L + 1), Kp.shape[1]), dtype=complex)
            shifted[n:] = Kp
            parts.append(shifted)
        if chosen:
            parts.append(np.stack(chosen, axis=1))
        if parts:
            Q, _ = np.linalg.qr(np.concatenate(parts, axis=1))
            K = K - Q @ (Q.conj().T @ K)
        U, _, _ = np.linalg.svd(K, full_matrices=False)
        chosen.extend(U[:, c] for c in range(need))
    H = np.zeros((L + 1, n, n), dtype=complex)
    for col, v in enumerate(chosen):
        H[:, :, col] = v.reshape(L + 1, n)
    return H


def birkhoff_factorize(T: CircleSamples, cfg: FactorConfig | None = None, at_infinity=None) -> BirkhoffResult:
    """Split ``T H = Hhat Lambda`` from circle samples.

    With all indices zero the splitting is normalised by ``Hhat(inf) = 1``
    (or by ``Hhat(inf) = at_infinity`` when given).
    Otherwise the columns of ``H`` come from the nested-kernel analysis and
    the only normalisation is orthonormality of the coefficient vectors.
    """
    cfg = cfg or FactorConfig()
    n = T.n
    dets = np.linalg.det(T.values)
    if np.min(np.abs(dets)) == 0:
        raise IllConditioned("det T vanishes on a sample")
    if cfg.modes + 1 > T.count // 2:
        raise ValueError(f"modes={cfg.modes} needs at least {2 * (cfg.modes + 1)} samples")
    analysis = index_analysis(T, cfg)
    indices = list(analysis.indices)
    coeffs = fourier_coefficients(T)
    if any(indices):
        if cfg.require_trivial:
            raise NonzeroIndicesWhenForbidden(f"partial indices {indices}", indices)
        _, hi = _support(coeffs)
        L = _index_length(T, cfg)
        H = _general_factor(coeffs, n, L, indices, hi, analysis.kernel_dims)[: cfg.modes + 1]
        cond = float("nan")
    else:
        _, hi = _support(coeffs)
        H, cond = _trivial_factor(T, coeffs, n, cfg.modes, max(hi, 0), at_infinity)
        if cond > cfg.cond_max:
            raise IllConditioned(f"block-Toeplitz condition {cond:.3g}", condition=cond)
    res = BirkhoffResult(H, np.zeros((cfg.modes + 1, n, n), dtype=complex), tuple(indices), 0.0, analysis.winding, analysis, cond)
    H_vals = res.H(T.points)
    res.hhat_coeffs = _hhat_from(T, H_vals, indices, cfg.modes)
    lhs = T.values @ H_vals
    rhs = res.Hhat(T.points) @ res.Lambda(T.points)
    res.residual = float(np.max(np.linalg.norm(lhs - rhs, ord=2, axis=(1, 2))))
    res.success = res.residual <= cfg.tol
    return res


@dataclass
class WardResult:
    S: np.ndarray
    result: BirkhoffResult
    hhat_minus_one_inv: np.ndarray = field(repr=False)

    def E(self, lam, frame=None) -> np.ndarray:
        """``F(lam)^-1 H(lam) Hhat(-1)^-1``; ``frame`` gives ``F`` (default 1)."""
        val = self.result.H(lam) @ self.hhat_minus_one_inv
        if frame is not None:
            val = np.linalg.solve(frame(lam), val)
        return val

    def E_samples(self, m: int = 6, frame=None) -> np.ndarray:
        N = 2 ** m
        lams = np.exp(2j * np.pi * np.arange(N) / N)
        return np.stack([self.E(l, frame) for l in lams])


def ward_reconstruct(T: CircleSamples, cfg: FactorConfig | None = None, at_infinity=None) -> WardResult:
    """``S = H(1) Hhat(-1)^-1`` from a trivial splitting of ``T``.

    The splitting is unique up to ``(H, Hhat) -> (H C, Hhat C)`` and ``S`` does
    not see ``C``; ``at_infinity`` picks ``C = Hhat(infinity)`` explicitly.
    Replacing ``T`` by ``T C`` gives ``C^-1 S``.
    """
    cfg = cfg or FactorConfig()
    try:
        res = birkhoff_factorize(T, FactorConfig(cfg.modes, cfg.tol, cfg.index_tol, cfg.cond_max, True), at_infinity)
    except NonzeroIndicesWhenForbidden as exc:
        raise NonTrivialIndices(str(exc), exc.indices) from exc
    hm = res.Hhat(-1.0)
    c = np.linalg.cond(hm)
    if c > cfg.cond_max:
        raise IllConditioned(f"Hhat(-1) condition {c:.3g}", condition=c)
    inv = np.linalg.inv(hm)
    S = res.H(1.0) @ inv
    return WardResult(S, res, inv)


# ---------------------------------------------------------------------------
# rational reconstruction


@dataclass
class RationalFit:
    func: RatFunc
    heldout_error: float
    fit_residual: float
    singular_gap: float
    unsnapped: list
    num_coeffs: dict
    den_coeffs: dict

    def to_json(self) -> dict:
        return {
            "function": self.func.to_json(),
            "heldout_error": self.heldout_error,
            "fit_residual": self.fit_residual,
            "singular_gap": self.singular_gap,
            "unsnapped": [list(m) for m in self.unsnapped],
        }


def _monos(dz, dw):
    return [(i, j) for i in range(dz + 1) for j in range(dw + 1)]


def _snap(c: complex, cap: int, tol: float):
    out = []
    ok = True
    for part in (c.real, c.imag):
        f = Fraction(part).limit_denominator(cap)
        if abs(float(f) - part) > tol * max(1.0, abs(part)):
            ok = False
        out.append(f)
    return GaussRational(*out), ok


def fit_rational(points, values, deg_num, deg_den, snap_cap: int = 10 ** 6, snap_tol: float = 1e-7,
                 tol: float = 1e-9, holdout: float = 0.25, rank_tol: float = 1e-10) -> RationalFit:
    """Least-squares ``value * den - num = 0`` on ``w = conj(z)``, then snap.

    A held-out subset (every k-th point, keeping at least twice the number
    of unknowns in the fit) validates the snapped function.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    vals = np.asarray(values, dtype=complex).ravel()
    mn, md = _monos(*deg_num), _monos(*deg_den)
    unknowns = len(mn) + len(md)
    if len(pts) < 2 * unknowns:
        raise RankDeficient(f"{len(pts)} samples for {unknowns} unknowns; need at least {2 * unknowns}")
    n_hold = min(int(len(pts) * holdout), len(pts) - 2 * unknowns)
    hold = np.zeros(len(pts), dtype=bool)
    if n_hold > 0:
        step = len(pts) / n_hold
        hold[(np.arange(n_hold) * step + step / 2).astype(int)] = True
    fp, fv = pts[~hold], vals[~hold]
    w = np.conj(fp)
    Vd = np.stack([fp ** i * w ** j for i, j in md], axis=1)
    Vn = np.stack([fp ** i * w ** j for i, j in mn], axis=1)
    A = np.concatenate([fv[:, None] * Vd, -Vn], axis=1)
    colscale = np.linalg.norm(A, axis=0)
    colscale[colscale == 0] = 1.0
    _, s, Vh = np.linalg.svd(A / colscale, full_matrices=False)
    gap = float(s[-2] / s[0]) if len(s) > 1 else 1.0
    if len(s) > 1 and s[-2] <= rank_tol * s[0]:
        raise RankDeficient(f"null space has dimension > 1 (s[-2]/s[0] = {s[-2] / s[0]:.3g}); degree bounds too generous")
    x = Vh[-1].conj() / colscale
    dcoef = dict(zip(md, x[: len(md)]))
    ncoef = dict(zip(mn, x[len(md):]))
    # monic denominator in the canonical (graded lex) order
    big = max(abs(v) for v in dcoef.values())
    lead = max((m for m, v in dcoef.items() if abs(v) > 1e-8 * big), key=lambda m: (m[0] + m[1], m[0]))
    scale = dcoef[lead]
    dcoef = {m: v / scale for m, v in dcoef.items()}
    ncoef = {m: v / scale for m, v in ncoef.items()}
    unsnapped = []
    exact_n, exact_d = {}, {}
    for tgt, src, tag in ((exact_n, ncoef, "num"), (exact_d, dcoef, "den")):
        for m, v in src.items():
            g, ok = _snap(v, snap_cap, snap_tol)
            if not ok:
                unsnapped.append((tag, m[0], m[1]))
            tgt[m] = g
    func = RatFunc(BiPoly(exact_n), BiPoly(exact_d))
    fit_res = float(np.max(np.abs(A @ (x / scale))))
    if n_hold > 0:
        hp, hv = pts[hold], vals[hold]
        pred = func.eval(hp, np.conj(hp))
        err = float(np.max(np.abs(pred - hv) / np.maximum(1.0, np.abs(hv))))
    else:
        err = 0.0
    if unsnapped:
        raise ValidationFailed(f"{len(unsnapped)} coefficients did not snap to small rationals", err)
    if err > tol:
        raise ValidationFailed(f"held-out error {err:.3g} above {tol:g}", err)
    return RationalFit(func, err, fit_res, gap, unsnapped, ncoef, dcoef)


def rational_reconstruct(points, values, deg_num, deg_den, **kw) -> RatFunc:
    """Recover one matrix entry as an exact RatFunc; see :func:`fit_rational`."""
    return fit_rational(points, values, deg_num, deg_den, **kw).func
