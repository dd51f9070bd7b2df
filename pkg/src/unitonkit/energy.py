"""Energy quadrature on the sphere and the related integral identities.

The sphere is covered by two charts, ``|z| <= R`` and ``|zhat| <= 1/R``
with ``zhat = 1/z``.  Each disc is integrated in polar coordinates:
``r`` by the midpoint or Gauss-Legendre rule, ``theta`` by the uniform
(trapezoidal) rule, which is spectrally accurate for periodic integrands.

Chart 2 quantities come from the exact substitution ``z -> 1/zhat``,
``w -> 1/what``; the connection of the substituted map is exactly
``A_zhat = -z^2 A_z``.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NonUnitarySample, PoleAtPoint, UnboundedDensity
from .exactalg import MatRF
from .looplab import LoopMat, loop_eval_lambda, loop_partial
from .unitons import connection_from_map, smoothness_at_infinity

__all__ = [
    "GridSpec",
    "EnergyReport",
    "energy_quadrature",
    "energy_density",
    "lemma111_check",
    "cs_energy",
    "write_density_csv",
    "polar_nodes",
]

EXCLUSION_EPS = 1e-6
CHUNK = 16384


def default_workers() -> int:
    env = os.environ.get("UNITONKIT_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 512
    rule: str = "gauss_legendre"
    radius: float = 1.0
    workers: int | None = None

    def __post_init__(self):
        if self.resolution < 16:
            raise ValueError("resolution must be at least 16")
        if self.rule not in ("midpoint", "gauss_legendre"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass
class EnergyReport:
    energy: float
    c2_estimate: float
    nearest_integer: int
    deviation: float
    chart_split: tuple
    parity: str = ""
    excluded_mass: float = 0.0
    grid: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["chart_split"] = list(self.chart_split)
        return d


def polar_nodes(resolution: int, rule: str, radius: float):
    """Points and weights for ``int_{|z|<=radius} f dx dy``."""
    if rule == "midpoint":
        r = radius * (np.arange(resolution) + 0.5) / resolution
        wr = np.full(resolution, radius / resolution)
    else:
        x, wx = np.polynomial.legendre.leggauss(resolution)
        r = radius * (x + 1) / 2
        wr = wx * radius / 2
    th = 2 * np.pi * np.arange(resolution) / resolution
    wt = 2 * np.pi / resolution
    pts = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    wts = (wr * r)[:, None].repeat(resolution, axis=1).ravel() * wt
    return pts, wts


def _map_chunks(fn, pts, workers):
    """Apply ``fn`` to consecutive chunks; results come back in order."""
    chunks = [pts[i:i + CHUNK] for i in range(0, len(pts), CHUNK)]
    workers = workers or default_workers()
    if workers <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, chunks))


def _safe_eval(fn, pts):
    """``fn(pts)`` with pointwise fallback; failing points are dropped.

    Returns values and a boolean mask of the points that were kept.
    """
    try:
        return fn(pts), np.ones(len(pts), dtype=bool)
    except PoleAtPoint:
        keep = np.ones(len(pts), dtype=bool)
        vals = []
        for idx, p in enumerate(pts):
            try:
                vals.append(fn(np.array([p]))[0])
            except PoleAtPoint:
                keep[idx] = False
        if not vals:
            return np.zeros((0,)), keep
        return np.stack(vals), keep


def _frob2(m):
    return np.einsum("...ij,...ij->...", m, m.conj()).real


def energy_density(a_z: np.ndarray, a_zbar: np.ndarray) -> np.ndarray:
    """``1/2 (|S^-1 S_x|^2 + |S^-1 S_y|^2)`` from sampled ``A_z, A_zbar``."""
    a_x = a_z + a_zbar
    a_y = 1j * (a_z - a_zbar)
    return 2.0 * (_frob2(a_x) + _frob2(a_y))


def _check_unitary(S: MatRF, pts, tol=1e-8):
    vals = S.eval(pts, np.conj(pts))
    dev = vals @ np.swapaxes(vals.conj(), -1, -2) - np.eye(S.n)
    worst = float(np.max(np.abs(dev)))
    if worst > tol:
        raise NonUnitarySample(f"S deviates from unitary by {worst:.3g} on the real locus")


def _chart_integral(conn, pts, wts, workers):
    def work(chunk):
        def f(p):
            w = np.conj(p)
            return energy_density(conn.a_z.eval(p, w), conn.a_zbar.eval(p, w))
        vals, keep = _safe_eval(f, chunk)
        return vals, keep

    vals, keep = [], []
    for v, k in _map_chunks(work, pts, workers):
        vals.append(v)
        keep.append(k)
    keep = np.concatenate(keep)
    dens = np.concatenate(vals) if vals else np.zeros(0)
    if dens.size and not np.all(np.isfinite(dens)):
        raise UnboundedDensity("non-finite energy density sample")
    total = float(np.sum(dens * wts[keep]))
    excluded = float(np.sum(wts[~keep]))
    return total, excluded, dens, keep


def _charts(S: MatRF, grid: GridSpec):
    conn1 = connection_from_map(S)
    conn2 = connection_from_map(S.invert_vars())
    p1, w1 = polar_nodes(grid.resolution, grid.rule, grid.radius)
    p2, w2 = polar_nodes(grid.resolution, grid.rule, 1.0 / grid.radius)
    return (conn1, p1, w1), (conn2, p2, w2)


def energy_quadrature(S: MatRF, grid: GridSpec | None = None, check: bool = True, keep_density: bool = False):
    """Energy of ``S`` over the sphere, split between the two charts.

    With ``keep_density`` a second value is returned: per-chart
    ``(points, density)`` arrays for dumping.
    """
    grid = grid or GridSpec()
    if check:
        _check_unitary(S, np.array([0.3 + 0.2j, -0.7 + 0.1j, 1.3 - 0.4j, 2.5j]))
        inf = smoothness_at_infinity(S)
        if not inf.exact_zero:
            raise UnboundedDensity(f"map is not smooth at infinity ({inf.detail})")
    halves, excl, dumps = [], 0.0, []
    for conn, pts, wts in _charts(S, grid):
        total, ex, dens, keep = _chart_integral(conn, pts, wts, grid.workers)
        halves.append(total)
        excl += ex
        if keep_density:
            dumps.append((pts[keep], dens))
    energy = halves[0] + halves[1]
    if energy < 0:
        raise UnboundedDensity("negative energy from quadrature")
    c2 = energy / (4 * np.pi)
    k = int(round(c2))
    report = EnergyReport(
        energy=energy,
        c2_estimate=c2,
        nearest_integer=k,
        deviation=abs(c2 - k),
        chart_split=(halves[0], halves[1]),
        parity="even" if k % 2 == 0 else "odd",
        excluded_mass=excl,
        grid={"resolution": grid.resolution, "rule": grid.rule, "radius": grid.radius},
    )
    if keep_density:
        return report, dumps
    return report


def write_density_csv(path, dumps) -> None:
    """CSV with header ``x,y,re,im``.

    Chart 1 rows carry z; chart 2 rows carry z = 1/zhat, so every row sits
    at its point on the plane.  ``re`` is the density in the row's own
    chart measure and ``im`` is 0.
    """
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "re", "im"])
        for chart, (pts, dens) in enumerate(dumps):
            zs = pts if chart == 0 else 1.0 / pts
            for z0, d in zip(zs, dens):
                wr.writerow([repr(float(z0.real)), repr(float(z0.imag)), repr(float(d)), "0.0"])


# -- loop-based integrals ----------------------------------------------------


class _LoopValues:
    """Coefficient values of a loop and its z/w derivatives at points."""

    def __init__(self, E: LoopMat, need_partials: bool):
        self.ks = sorted(E.coeffs)
        self.E = E
        self.Ez = loop_partial(E, "z") if need_partials else None
        self.Ew = loop_partial(E, "w") if need_partials else None

    def at(self, pts):
        w = np.conj(pts)
        C = np.stack([self.E.coeffs[k].eval(pts, w) for k in self.ks])
        if self.Ez is None:
            return C, None, None
        Cz = np.stack([self.Ez.coeff(k).eval(pts, w) for k in self.ks])
        Cw = np.stack([self.Ew.coeff(k).eval(pts, w) for k in self.ks])
        return C, Cz, Cw

    def combine(self, C, lam):
        """``sum_k C_k lam^k`` and ``sum_k k C_k lam^(k-1)``."""
        val = sum(C[i] * lam ** k for i, k in enumerate(self.ks))
        dval = sum(C[i] * (k * lam ** (k - 1)) for i, k in enumerate(self.ks) if k)
        if not isinstance(dval, np.ndarray):
            dval = np.zeros_like(val)
        return val, dval

    def inverse(self, C, lam):
        """``E(lam)^-1`` through the star dual: ``sum_k C_k^H lam^(-k)``."""
        CH = np.conj(np.swapaxes(C, -1, -2))
        return sum(CH[i] * lam ** (-k) for i, k in enumerate(self.ks))


def _inverted_loop(E: LoopMat) -> LoopMat:
    return E.map(MatRF.invert_vars)


def lemma111_check(E: LoopMat, lam0, grid: GridSpec | None = None):
    """Both sides of ``int tr(d_zbar A_z B) = lam^-1 int tr(A_z A_zbar)``.

    ``B = E^-1 dE/dlambda`` at ``lam0``.  Both integrands are taken against
    the same ``dx dy`` measure in each chart.  Returns ``(lhs, rhs, gap)``.
    """
    grid = grid or GridSpec()
    lam0 = complex(lam0)
    if lam0 == 0 or lam0 == -1 or abs(abs(lam0) - 1) < 1e-12:
        raise ValueError("lambda must be off the unit circle and not 0 or -1")
    lhs = rhs = 0.0 + 0.0j
    for chart in (0, 1):
        L = E if chart == 0 else _inverted_loop(E)
        S = loop_eval_lambda(L, 1)
        conn = connection_from_map(S)
        dA = conn.a_z.partial("w")
        vals = _LoopValues(L, need_partials=False)
        radius = grid.radius if chart == 0 else 1.0 / grid.radius
        pts, wts = polar_nodes(grid.resolution, grid.rule, radius)

        def work(chunk, conn=conn, dA=dA, vals=vals):
            w = np.conj(chunk)
            az, aw, da = conn.a_z.eval(chunk, w), conn.a_zbar.eval(chunk, w), dA.eval(chunk, w)
            C, _, _ = vals.at(chunk)
            _, dE = vals.combine(C, lam0)
            B = vals.inverse(C, lam0) @ dE
            left = np.einsum("...ij,...ji->...", da, B)
            right = np.einsum("...ij,...ji->...", az, aw)
            return left, right

        parts = _map_chunks(work, pts, grid.workers)
        left = np.concatenate([p[0] for p in parts])
        right = np.concatenate([p[1] for p in parts])
        lhs += np.sum(left * wts)
        rhs += np.sum(right * wts) / lam0
    return complex(lhs), complex(rhs), float(abs(lhs - rhs))


def cs_energy(E: LoopMat, grid: GridSpec | None = None, circle_resolution: int = 32, energy_report=None):
    """Chern-Simons value of ``B = E^-1 dE`` over sphere x circle.

    ``value = int_0^1 (t^2 - t) dt * int tr(B^B^B)``.  With
    ``B = B_z dz + B_zbar dzbar + B_theta dtheta`` and ``B_theta = i lam B_lam``
    the triple wedge reduces to ``i tr([B_z, B_zbar] B_theta) dx dy dtheta``
    after the ``-1/6`` factor.  Returns ``(value, ratio_to_c2)``; the ratio is
    ``nan`` when c2 is zero.
    """
    grid = grid or GridSpec()
    thetas = 2 * np.pi * np.arange(circle_resolution) / circle_resolution
    lams = np.exp(1j * thetas)
    total = 0.0 + 0.0j
    for chart in (0, 1):
        L = E if chart == 0 else _inverted_loop(E)
        vals = _LoopValues(L, need_partials=True)
        radius = grid.radius if chart == 0 else 1.0 / grid.radius
        pts, wts = polar_nodes(grid.resolution, grid.rule, radius)

        def work(chunk, vals=vals):
            C, Cz, Cw = vals.at(chunk)
            acc = np.zeros(len(chunk), dtype=complex)
            for lam in lams:
                Einv = vals.inverse(C, lam)
                _, dE = vals.combine(C, lam)
                Ez, _ = vals.combine(Cz, lam)
                Ew, _ = vals.combine(Cw, lam)
                Bz, Bw = Einv @ Ez, Einv @ Ew
                Bt = 1j * lam * (Einv @ dE)
                comm = Bz @ Bw - Bw @ Bz
                acc += np.einsum("...ij,...ji->...", comm, Bt)
            return acc

        parts = _map_chunks(work, pts, grid.workers)
        dens = np.concatenate(parts)
        total += np.sum(dens * wts) * (2 * np.pi / circle_resolution)
    value = float((1j * total).real)
    if energy_report is None:
        energy_report = energy_quadrature(loop_eval_lambda(E, 1), grid, check=False)
    c2 = energy_report.c2_estimate
    ratio = value / c2 if abs(c2) > 1e-12 else float("nan")
    return value, ratio



