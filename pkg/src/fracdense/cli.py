"""Command-line entry point: ``fracdense <subcommand> [options]``.

Every subcommand writes its outputs into ``--out-dir`` and prints the paths
it wrote.  Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .density_engine import (approximate, blowup_l1_error, boundary_growth_constant,
                             build_dictionary, fit_boundary_growth, growth_function,
                             span_solve)
from .errors import FracDenseError, InputError, NonConvergence, NumericalError
from .fraclap import residual_report
from .kernel_extension import FracParams, SHarmonicFn, extend, reference_bump
from .polyapprox import DEFAULT_MU, Polynomial, weierstrass_approx
from .quadrature import QuadSettings
from .serialization import atomic_write, csv_text, dumps

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

GROWTH_EPS = tuple(2.0 ** -i for i in range(4, 10))
DEFAULT_JS = (1, 4, 8, 16, 32, 64)


@dataclass(frozen=True)
class RunConfig:
    s: float = 0.5
    seed: int = 0
    quad_tol: float = 1e-10
    grid: int = 201
    out_dir: str = "."
    method: str = "taylor-rescale"

    def __post_init__(self):
        FracParams(self.s)
        QuadSettings(abs_tol=self.quad_tol, rel_tol=self.quad_tol)
        if int(self.grid) != self.grid or self.grid < 3:
            raise InputError("grid must be an integer >= 3")
        if self.method not in ("taylor-rescale", "global-lsq"):
            raise InputError(f"unknown method {self.method!r}")

    @property
    def params(self) -> FracParams:
        return FracParams(self.s)

    @property
    def quad(self) -> QuadSettings:
        return QuadSettings(abs_tol=self.quad_tol, rel_tol=self.quad_tol)

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        data = {}
        if path:
            data = _read_json(path)
            if not isinstance(data, dict):
                raise InputError("config file must hold a JSON object")
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise InputError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def _load_extension(path: str, cfg: RunConfig, s_given: bool) -> SHarmonicFn:
    data = _read_json(path)
    try:
        if s_given:
            data = {**data, "s": cfg.s}
        return SHarmonicFn.from_dict(data, cfg.quad)
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"bad exterior data file {path}: {exc!r}") from exc


def _runge(x):
    return 1.0 / (1.0 + 25.0 * np.asarray(x, dtype=float) ** 2)


def _gaussian_bump(x):
    return np.exp(-4.0 * np.asarray(x, dtype=float) ** 2)


BUILTIN_TARGETS: dict[str, Callable | Polynomial] = {
    "zero": Polynomial({}),
    "square": Polynomial({2: 1.0}),
    "cosine": np.cos,
    "gaussian-bump": _gaussian_bump,
    "runge": _runge,
}


def resolve_target(name: str):
    """Builtin name or path to a polynomial JSON file."""
    if name in BUILTIN_TARGETS:
        return BUILTIN_TARGETS[name]
    if name.endswith(".json"):
        data = _read_json(name)
        try:
            return Polynomial.from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad polynomial file {name}: {exc!r}") from exc
    raise InputError(f"unknown target {name!r}; builtins: {sorted(BUILTIN_TARGETS)}")


# --------------------------------------------------------------------------
# subcommands


def cmd_extend(args, cfg: RunConfig) -> list[Path]:
    fn = _load_extension(args.exterior, cfg, args.s is not None)
    if args.points:
        xs = np.asarray(_floats(args.points))
    else:
        half = fn.support_radius + 1.0 if fn.support_radius > 0 else fn.ball.radius + 1.0
        xs = np.linspace(fn.ball.center - half, fn.ball.center + half, cfg.grid)
    vals = np.asarray(extend(fn, xs), dtype=float)
    out = Path(cfg.out_dir) / "extend.csv"
    return [atomic_write(out, csv_text(["x", "u"], zip(xs.tolist(), vals.tolist())))]


def cmd_growth(args, cfg: RunConfig) -> list[Path]:
    params, quad = cfg.params, cfg.quad
    profile = reference_bump(amplitude=args.amplitude)
    fn = growth_function(params, profile, quad)
    kappa = boundary_growth_constant(profile, params, quad)
    fit = fit_boundary_growth(fn, GROWTH_EPS, full_output=True)
    report = {"s": params.s, "amplitude": args.amplitude, "kappa_direct": kappa,
              "kappa_fit": fit.kappa, "s_fit": fit.s,
              "kappa_ratio": fit.kappa / kappa}
    out = Path(cfg.out_dir)
    return [atomic_write(out / "growth.json", dumps(report)),
            atomic_write(out / "growth_profile.csv",
                         csv_text(["eps", "psi"], zip(fit.eps, fit.values)))]


def cmd_blowup(args, cfg: RunConfig) -> list[Path]:
    params, quad = cfg.params, cfg.quad
    js = [int(j) for j in _floats(args.j)] if args.j else list(DEFAULT_JS)
    base = growth_function(params, quad=quad)
    kappa = boundary_growth_constant(reference_bump(), params, quad)
    rows = [(j, blowup_l1_error(args.e, j, kappa, base)) for j in js]
    out = Path(cfg.out_dir) / "blowup.csv"
    return [atomic_write(out, csv_text(["j", "l1_error"], rows))]


def cmd_span(args, cfg: RunConfig) -> list[Path]:
    beta = args.beta
    count = args.count if args.count is not None else 2 * (beta + 1) + 4
    dictionary = build_dictionary(cfg.params, count, cfg.seed, mirror=args.mirror,
                                  quad=cfg.quad)
    sol = span_solve(dictionary, (beta,))
    res = residual_report(sol.v, quad=cfg.quad)
    out = Path(cfg.out_dir)
    return [atomic_write(out / "span.json", dumps(sol.to_dict())),
            atomic_write(out / "span_residual.csv", res.to_csv())]


def cmd_approx(args, cfg: RunConfig) -> list[Path]:
    target = resolve_target(args.target)
    u, report = approximate(target, args.k, args.eps, cfg.method, params=cfg.params,
                            quad=cfg.quad, seed=cfg.seed, mu=args.mu, grid=cfg.grid)
    xs = np.linspace(-1.0, 1.0, cfg.grid)
    uv = np.asarray(u(xs), dtype=float)
    fv = np.asarray(target(xs), dtype=float) * np.ones_like(xs)
    out = Path(cfg.out_dir)
    # timing lives in its own file so the report itself is reproducible byte for byte
    data = report.to_dict()
    timing = {"wall_time": data.pop("wall_time")}
    paths = [atomic_write(out / "approx.json", dumps(data)),
             atomic_write(out / "approx_timing.json", dumps(timing)),
             atomic_write(out / "approx_profile.csv",
                          csv_text(["x", "u", "f", "u_minus_f"],
                                   zip(xs.tolist(), uv.tolist(), fv.tolist(),
                                       (uv - fv).tolist())))]
    if args.save_function:
        paths.append(atomic_write(out / "approx_function.json", dumps(u.to_dict())))
    if not report.converged:
        raise NonConvergence(f"C^{args.k} error {report.error:.3e} exceeds eps={args.eps}")
    res = report.residual
    if res and res["relative_max"] > 1e-3:
        raise NonConvergence(f"relative residual {res['relative_max']:.3e} exceeds 1e-3")
    return paths


def cmd_residual(args, cfg: RunConfig) -> list[Path]:
    fn = _load_extension(args.exterior, cfg, args.s is not None)
    grid = _floats(args.points) if args.points else None
    rep = residual_report(fn, grid, quad=cfg.quad)
    out = Path(cfg.out_dir)
    return [atomic_write(out / "residual.json", rep.to_json()),
            atomic_write(out / "residual.csv", rep.to_csv())]


def cmd_mollify(args, cfg: RunConfig) -> list[Path]:
    target = resolve_target(args.target)
    res = weierstrass_approx(target, args.k, args.eps, mu=args.mu, quad=cfg.quad,
                             grid=cfg.grid, full_output=True)
    out = Path(cfg.out_dir)
    meta = {"plan": res.plan.to_dict(), "error": res.error,
            "history": [list(h) for h in res.history]}
    return [atomic_write(out / "polynomial.json", res.polynomial.to_json()),
            atomic_write(out / "mollify.json", dumps(meta))]


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--s", type=float, default=None, help="fractional order in (0, 1)")
    common.add_argument("--seed", type=int, default=None, help="dictionary jitter seed")
    common.add_argument("--out-dir", default=None, help="directory for outputs")
    common.add_argument("--config", default=None, help="JSON config; flags override it")
    common.add_argument("--quad-tol", type=float, default=None,
                        help="absolute and relative quadrature tolerance")
    common.add_argument("--grid", type=int, default=None, help="sample grid size")

    parser = argparse.ArgumentParser(prog="fracdense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extend", parents=[common], help="evaluate an extension")
    p.add_argument("--exterior", required=True, help="exterior data JSON")
    p.add_argument("--points", help="comma-separated evaluation points")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("growth", parents=[common], help="boundary growth constant and fit")
    p.add_argument("--amplitude", type=float, default=1.0, help="amplitude of the radial profile")
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("blowup", parents=[common], help="L1 blow-up errors")
    p.add_argument("--e", type=int, choices=(1, -1), default=1, help="direction of the shift")
    p.add_argument("--j", help="comma-separated blow-up factors")
    p.set_defaults(func=cmd_blowup)

    p = sub.add_parser("span", parents=[common], help="match a unit derivative vector")
    p.add_argument("--beta", type=int, required=True, help="derivative order to match")
    p.add_argument("--count", type=int, default=None, help="dictionary size")
    p.add_argument("--mirror", action="store_true", help="mirror-pair dictionary")
    p.set_defaults(func=cmd_span)

    p = sub.add_parser("approx", parents=[common], help="approximate a target in C^k")
    p.add_argument("--target", required=True, help="builtin name or polynomial JSON")
    p.add_argument("--k", type=int, default=0, help="smoothness order of the error norm")
    p.add_argument("--eps", type=float, default=0.1, help="target accuracy")
    p.add_argument("--method", default=None, choices=("taylor-rescale", "global-lsq"))
    p.add_argument("--mu", type=float, default=0.9, help="target extension margin")
    p.add_argument("--save-function", action="store_true",
                   help="also write the approximant as JSON")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("residual", parents=[common], help="fractional-Laplacian residuals")
    p.add_argument("--exterior", required=True, help="exterior data JSON")
    p.add_argument("--points", help="comma-separated points inside B_0.9")
    p.set_defaults(func=cmd_residual)

    p = sub.add_parser("mollify", parents=[common], help="polynomial approximation of a target")
    p.add_argument("--target", required=True, help="builtin name or polynomial JSON")
    p.add_argument("--k", type=int, default=0, help="smoothness order of the error norm")
    p.add_argument("--eps", type=float, default=0.05, help="target accuracy")
    p.add_argument("--mu", type=float, default=DEFAULT_MU, help="target extension margin")
    p.set_defaults(func=cmd_mollify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    overrides = {"s": args.s, "seed": args.seed, "quad_tol": args.quad_tol,
                 "grid": args.grid, "out_dir": args.out_dir,
                 "method": getattr(args, "method", None)}
    try:
        cfg = RunConfig.load(args.config, overrides)
        paths = args.func(args, cfg)
    except (InputError, ValueError, TypeError) as exc:
        print(f"fracdense: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, FracDenseError, ArithmeticError) as exc:
        print(f"fracdense: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
