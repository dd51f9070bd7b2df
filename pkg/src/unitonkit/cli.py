"""Command-line interface.

Exit codes: 0 success, 2 a check ran and failed, 1 error (bad input,
singular data, I/O).  Every JSON report embeds the effective config and
the sha256 of the input file, and is written with sorted keys so that
identical inputs give byte-identical reports.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .energy import GridSpec, energy_quadrature, write_density_csv
from .errors import (
    NonUnitaryLoop,
    NonUnitarySample,
    ParseError,
    RankDeficient,
    UnboundedDensity,
    UnitonError,
    ValidationFailed,
)
from .exactalg import BiPoly, MatRF
from .goldens import golden_transition, golden_u3
from .looplab import LoopMat, loop_eval_lambda
from .rhfactor import CircleSamples, FactorConfig, birkhoff_factorize, fit_rational, index_analysis
from .unitons import (
    bogomolny_fields,
    bogomolny_residual,
    connection_from_map,
    extended_check,
    flatness_residual,
    harmonic_residual,
    smoothness_at_infinity,
    uniton_number_bound,
)

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
WORKERS_ENV = "UNITONKIT_WORKERS"


def _pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class RunConfig:
    grid: int = 512
    rule: str = "gauss_legendre"
    modes: int = 32
    tol: float = 1e-10
    index_tol: float = 1e-8
    eval_floor: float = 1e-13
    residual_tol: float = 1e-9
    energy_tol: float = 1e-3
    snap_cap: int = 10 ** 6
    workers: int = 1

    def __post_init__(self):
        for name in ("tol", "index_tol", "eval_floor", "residual_tol", "energy_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (_pow2(self.grid) and _pow2(self.modes)):
            raise ValueError("grid and modes must be powers of two")
        if self.snap_cap < 1 or self.workers < 1:
            raise ValueError("snap_cap and workers must be at least 1")

    @classmethod
    def build(cls, config_path=None, **overrides) -> "RunConfig":
        base = {"workers": int(os.environ.get(WORKERS_ENV, os.cpu_count() or 1))}
        if config_path:
            with open(config_path) as fh:
                data = json.load(fh)
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ParseError(f"unknown config keys: {sorted(unknown)}")
            base.update(data)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.grid, self.rule, 1.0, self.workers)

    def factor_config(self) -> FactorConfig:
        return FactorConfig(self.modes, self.tol, self.index_tol)


# -- io helpers --------------------------------------------------------------


def _read_json(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return json.loads(raw), hashlib.sha256(raw).hexdigest()
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _sha(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _load_map_or_loop(obj):
    if isinstance(obj, dict) and "terms" in obj:
        return LoopMat.from_json(obj)
    if isinstance(obj, dict) and "rows" in obj:
        return MatRF.from_json(obj)
    raise ParseError("input is neither a MatRF ({n, rows}) nor a LoopMat ({n, terms})")


def _emit(report: dict, out):
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _envelope(cmd, cfg, digest, **body):
    return {"command": cmd, "version": __version__, "config": asdict(cfg), "input_sha256": digest, **body}


def _parse_scalar(text: str) -> complex:
    """``"3/10+1/10i"``, ``"0.3+0.1i"`` or python complex syntax."""
    text = text.strip().replace(" ", "")
    try:
        return complex(text.replace("i", "j"))
    except ValueError:
        pass
    g = BiPoly.parse(text)
    if g.total_degree() > 0:
        raise ParseError(f"not a constant: {text!r}")
    c = g.constant_value()
    return complex(float(c.re), float(c.im))


# -- commands ----------------------------------------------------------------


def cmd_verify(args, cfg) -> int:
    obj, digest = _read_json(args.input)
    data = _load_map_or_loop(obj)
    checks = []
    verdict = None
    if isinstance(data, LoopMat):
        E = data
        checks.append(extended_check(E))
        S = loop_eval_lambda(E, 1)
    else:
        E = None
        S = data
    A = connection_from_map(S)
    checks.append(harmonic_residual(S))
    checks.append(flatness_residual(A))
    checks.append(bogomolny_residual(bogomolny_fields(A)))
    checks.append(smoothness_at_infinity(S))
    energy, energy_error = None, None
    try:
        energy = energy_quadrature(S, cfg.grid_spec())
    except (NonUnitarySample, UnboundedDensity) as exc:
        energy_error = f"{type(exc).__name__}: {exc}"
    if E is not None:
        try:
            sup, verdict = uniton_number_bound(E)
            verdict = {"support": list(sup.as_tuple()), "verdict": verdict}
        except NonUnitaryLoop as exc:
            verdict = {"error": str(exc)}
    ok = all(c.passed for c in checks)
    ok = ok and energy is not None and energy.deviation <= cfg.energy_tol
    report = _envelope(
        "verify", cfg, digest,
        kind="LoopMat" if E is not None else "MatRF",
        checks=[c.to_json() for c in checks],
        energy=energy.to_json() if energy else {"error": energy_error},
        uniton_number=verdict,
        overall_pass=bool(ok),
    )
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_energy(args, cfg) -> int:
    obj, digest = _read_json(args.input)
    data = _load_map_or_loop(obj)
    S = loop_eval_lambda(data, 1) if isinstance(data, LoopMat) else data
    want = bool(args.density_csv)
    out = energy_quadrature(S, cfg.grid_spec(), keep_density=want)
    rep, dumps = out if want else (out, None)
    if want:
        write_density_csv(args.density_csv, dumps)
    ok = rep.deviation <= cfg.energy_tol
    _emit(_envelope("energy", cfg, digest, energy=rep.to_json(), integral=bool(ok)), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_number(args, cfg) -> int:
    obj, digest = _read_json(args.input)
    E = _load_map_or_loop(obj)
    if not isinstance(E, LoopMat):
        raise ParseError("number needs a LoopMat (extended solution)")
    sup, verdict = uniton_number_bound(E)
    _emit(_envelope("number", cfg, digest, support=list(sup.as_tuple()), verdict=verdict), args.out)
    return EXIT_OK


def cmd_factorize(args, cfg) -> int:
    obj, digest = _read_json(args.samples)
    T = CircleSamples.from_json(obj)
    res = birkhoff_factorize(T, cfg.factor_config())
    _emit(_envelope("factorize", cfg, digest, result=res.to_json()), args.out)
    return EXIT_OK if res.success else EXIT_FAIL


def cmd_indices(args, cfg) -> int:
    obj, digest = _read_json(args.samples)
    T = CircleSamples.from_json(obj)
    an = index_analysis(T, cfg.factor_config())
    _emit(_envelope("indices", cfg, digest, **an.to_json()), args.out)
    return EXIT_OK


def _read_grid_csv(path):
    pts, vals = [], []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        need = {"x", "y", "re", "im"}
        if rd.fieldnames is None or not need <= set(rd.fieldnames):
            raise ParseError(f"{path}: header must be x,y,re,im")
        for row in rd:
            try:
                pts.append(complex(float(row["x"]), float(row["y"])))
                vals.append(complex(float(row["re"]), float(row["im"])))
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}") from exc
    return np.array(pts), np.array(vals)


def cmd_reconstruct(args, cfg) -> int:
    pts, vals = _read_grid_csv(args.grid)
    digest = _sha(args.grid)
    deg_num = (args.degz, args.degw)
    deg_den = (args.den_degz if args.den_degz is not None else args.degz,
               args.den_degw if args.den_degw is not None else args.degw)
    try:
        fit = fit_rational(pts, vals, deg_num, deg_den, snap_cap=cfg.snap_cap, tol=cfg.residual_tol)
    except (RankDeficient, ValidationFailed) as exc:
        _emit(_envelope("reconstruct", cfg, digest, error=f"{type(exc).__name__}: {exc}", success=False), args.out)
        return EXIT_FAIL
    _emit(_envelope("reconstruct", cfg, digest, result=fit.to_json(), success=True), args.out)
    return EXIT_OK


def cmd_golden(args, cfg) -> int:
    if args.which != "u3":
        raise ParseError(f"unknown golden {args.which!r}")
    if args.transition:
        z0, w0 = (_parse_scalar(t) for t in args.transition)
        T = golden_transition(z0, w0, m=args.m)
        payload = T.to_json()
    else:
        payload = golden_u3().extended.to_json()
    text = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="unitonkit", description="Construct, verify and measure unitons.")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file merged into the run config")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--workers", type=int, help=f"parallel workers (default ${WORKERS_ENV} or cores)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", parents=[common], help="run every applicable check on a map or extended solution")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--grid", type=int)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("energy", parents=[common], help="two-chart energy quadrature")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--grid", type=int)
    s.add_argument("--rule", choices=["midpoint", "gauss_legendre"])
    s.add_argument("--density-csv", dest="density_csv")
    s.set_defaults(func=cmd_energy)

    s = sub.add_parser("number", parents=[common], help="one-vs-two uniton test")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_number)

    s = sub.add_parser("factorize", parents=[common], help="Birkhoff factorization of circle samples")
    s.add_argument("--samples", required=True)
    s.add_argument("--modes", type=int)
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_factorize)

    s = sub.add_parser("indices", parents=[common], help="partial indices of circle samples")
    s.add_argument("--samples", required=True)
    s.add_argument("--modes", type=int)
    s.add_argument("--index-tol", dest="index_tol", type=float)
    s.set_defaults(func=cmd_indices)

    s = sub.add_parser("reconstruct", parents=[common], help="rational reconstruction from an x,y,re,im grid")
    s.add_argument("--grid", required=True, dest="grid")
    s.add_argument("--degz", type=int, required=True)
    s.add_argument("--degw", type=int, required=True)
    s.add_argument("--den-degz", dest="den_degz", type=int)
    s.add_argument("--den-degw", dest="den_degw", type=int)
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("golden", parents=[common], help="dump golden data")
    s.add_argument("which", choices=["u3"])
    s.add_argument("--transition", nargs=2, metavar=("Z0", "W0"))
    s.add_argument("--m", type=int, default=7, help="log2 of the circle sample count")
    s.set_defaults(func=cmd_golden)
    return p


_CFG_KEYS = ("grid", "rule", "modes", "tol", "index_tol", "workers")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in _CFG_KEYS}
    if args.command == "reconstruct":
        overrides["grid"] = None  # --grid is a CSV path here
    try:
        cfg = RunConfig.build(args.config, **overrides)
        return args.func(args, cfg)
    except (UnitonError, ValueError, OSError) as exc:
        loc = getattr(exc, "location", None)
        where = f" (at {loc})" if loc else ""
        print(f"error: {type(exc).__name__}: {exc}{where}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
