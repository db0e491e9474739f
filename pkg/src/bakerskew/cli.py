"""Command-line front end.

Exit codes: 0 = success / certificate passed, 1 = certificate or
construction failure, 2 = usage or configuration error.  All randomness is
seeded (--seed, default 42); outputs are deterministic byte-for-byte for a
given command line and seed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bulging, dynamics, nonbulging
from .render import RenderJob, image_text, render as render_grid, write_image
from .core import (
    STANDARD,
    PrecisionConfig,
    RangeOverflowError,
    SkewProduct,
    dump_json,
    skew_from_config,
)
from .runge import (
    CompactSet,
    CompactSetUnion,
    ConditioningError,
    TargetSpec,
    fit,
    fit_auto,
)

BULGE_EXAMPLE = {
    "fatou": {"a": [1.0, 0.0]},
    "g": {"variant": "linear", "lambda": [0.5, 0.0], "delta_g": 1.0},
    "h": {"variant": "poly_z", "coeffs": [[0, 0], [0, 0], [0, 0], [1, 0]]},
}


def _parse_complex(s: str) -> complex:
    try:
        return complex(s.replace(" ", ""))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {s!r}") from exc


def _parse_precision(s: str) -> PrecisionConfig:
    try:
        return PrecisionConfig.parse(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _load_skew(path: str | None) -> SkewProduct:
    doc = BULGE_EXAMPLE if path is None else _load_json(path)
    return skew_from_config(doc)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_orbit(args) -> int:
    F = _load_skew(args.config)
    trace = dynamics.iterate(
        F, (args.z0, args.w0), args.steps, args.escape_re, args.return_radius,
        prec=args.precision,
    )
    _emit(trace.to_csv(), args.out)
    return 0


def _cmd_onedim(args) -> int:
    x0 = args.x0 if args.x0 is not None else dynamics.choose_x0(args.delta)
    cert = dynamics.verify_onedim(x0, args.delta, args.steps,
                                  pairs_per_disk=args.pairs, seed=args.seed)
    _emit(dump_json(cert.to_dict()), args.out)
    return 0 if cert.passed else 1


def _cmd_bulge(args) -> int:
    F = _load_skew(args.config)
    a = complex(F.f.a)
    alpha = args.alpha if args.alpha is not None else F.g.alpha
    if not 0 < alpha < 1:
        raise ValueError("base map contraction alpha not in (0, 1); pass --alpha")
    delta_g = F.g.delta_g

    if args.epsilon is not None:
        N, eps = 0, args.epsilon
        rho_tau = args.rho_tau if args.rho_tau is not None else float("nan")
    else:
        if args.rho_tau is not None:
            rho_tau = args.rho_tau
        else:
            sigma_hi = args.R + 2 * args.K * abs(a)
            try:
                rho_tau = bulging.calibrate_growth_exponent(
                    F.h, r2=1.0, sigma_lo=max(args.r, 2.0), sigma_hi=sigma_hi
                )
            except ValueError as exc:
                raise ValueError(
                    f"growth calibration failed ({exc}); pass --rho-tau or --epsilon"
                ) from exc
        N, eps = bulging.find_epsilon(a, alpha, rho_tau, args.R, delta_g)

    cert = bulging.BulgeCertificate(
        a=a, alpha=alpha, rho_plus_tau=rho_tau, L=args.L, r=args.r, R=args.R,
        N=N, epsilon=eps, K_steps=args.K, sample_count=args.samples,
    )
    cert = bulging.verify_bulge_bounds(F, cert, seed=args.seed)
    _emit(dump_json(cert.to_dict()), args.out)
    return 0 if cert.passed else 1


def _cmd_order(args) -> int:
    doc = _load_json(args.h)
    h = skew_from_config({"fatou": {"a": [1.0, 0.0]}, "h": doc}).h
    grid = list(np.geomspace(args.grid_lo, args.grid_hi, args.grid_n))
    est = bulging.estimate_order(h, args.r2, grid, boundary_samples=args.samples)
    _emit(dump_json(est.to_dict()), args.out)
    return 0


def _set_from_doc(sd: dict) -> CompactSet:
    if sd["variant"] == "disk":
        c = sd["center"]
        center = complex(c[0], c[1]) if isinstance(c, list) else complex(c)
        return CompactSet.disk(center, sd["radius"])
    if sd["variant"] == "rect":
        return CompactSet.rect(sd["x_min"], sd["x_max"], sd["y_abs"])
    raise ValueError(f"unknown set variant {sd['variant']!r}")


def _target_from_doc(td: dict) -> TargetSpec:
    if td["variant"] == "const":
        v = td["value"]
        return TargetSpec.const(complex(v[0], v[1]) if isinstance(v, list) else complex(v))
    if td["variant"] == "poly":
        coeffs = [complex(c[0], c[1]) if isinstance(c, list) else complex(c)
                  for c in td["coeffs"]]
        cen = td.get("center", [0.0, 0.0])
        center = complex(cen[0], cen[1]) if isinstance(cen, list) else complex(cen)
        return TargetSpec.poly(coeffs, center, td.get("scale", 1.0))
    raise ValueError(f"unknown target variant {td['variant']!r}")


def _cmd_runge(args) -> int:
    doc = _load_json(args.union)
    union = CompactSetUnion(
        sets=tuple(_set_from_doc(sd) for sd in doc["sets"]),
        targets=tuple(_target_from_doc(td) for td in doc["targets"]),
    )
    try:
        prec = args.precision or STANDARD
        if args.auto:
            approx, achieved = fit_auto(union, tol=args.tol, max_degree=args.max_degree,
                                        prec=prec)
            _emit(dump_json(approx.to_dict()), args.out)
            return 0 if achieved else 1
        approx = fit(union, args.degree, fit_samples=args.samples, prec=prec)
    except ConditioningError as exc:
        sys.stderr.write(f"fit failed: {exc}\n")
        return 1
    _emit(dump_json(approx.to_dict()), args.out)
    return 0


def _cmd_construct(args) -> int:
    g = None
    if args.g_config is not None:
        doc = _load_json(args.g_config)
        g = skew_from_config({"fatou": {"a": [1.0, 0.0]}, "g": doc}).g
    try:
        result = nonbulging.run_construction(
            K=args.stages, delta=args.delta, g=g, keep_going=args.keep_going,
            prec=args.precision or STANDARD, max_degree=args.max_degree, seed=args.seed,
            out_dir=args.out_dir,
        )
    except nonbulging.StageFailure as exc:
        sys.stderr.write(f"construction failed at stage {exc.k}: {exc.diagnostic}\n")
        return 1
    _emit(dump_json(result.to_dict()), args.out)
    return 0 if result.passed else 1


def _cmd_nonbulge_verify(args) -> int:
    stages = nonbulging.load_stages(args.dir, args.stages, delta=args.delta)
    rep = nonbulging.verify_return(stages, args.stages, seed=args.seed)
    _emit(dump_json(rep.to_dict()), args.out)
    return 0 if rep.passed else 1


def _cmd_render(args) -> int:
    F = _load_skew(args.config)
    job = RenderJob(
        F=F, plane=args.plane, fixed=args.fixed, center=args.center,
        width=args.width, height=args.height, px_w=args.px_w, px_h=args.px_h,
        max_iter=args.max_iter, escape_re=args.escape_re,
        return_radius=args.return_radius,
    )
    grid = render_grid(job)
    if args.out is None:
        sys.stdout.write(image_text(grid, args.format or "pgm"))
    else:
        write_image(grid, args.out, args.format)
    return 0


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="bakerskew",
        description="Orbit certificates and renders for transcendental skew products",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True, out=True, precision=False):
        if seed:
            p.add_argument("--seed", type=int, default=42)
        if out:
            p.add_argument("--out", default=None, help="output file (default stdout)")
        if precision:
            p.add_argument("--precision", type=_parse_precision, default=None,
                           help="standard or extended:<digits>")

    p = sub.add_parser("orbit", help="iterate one point, emit the trace as CSV")
    p.add_argument("--config", default=None, help="skew product JSON (default: cubic example)")
    p.add_argument("--z0", type=_parse_complex, required=True)
    p.add_argument("--w0", type=_parse_complex, required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--escape-re", type=float, default=50.0)
    p.add_argument("--return-radius", type=float, default=3.0)
    add_common(p, seed=False, precision=True)
    p.set_defaults(func=_cmd_orbit)

    p = sub.add_parser("onedim-verify", help="fiber orbit tracking certificate")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--x0", type=float, default=None, help="override choose_x0")
    p.add_argument("--pairs", type=int, default=100, help="disk sample pairs per step")
    add_common(p)
    p.set_defaults(func=_cmd_onedim)

    p = sub.add_parser("bulge-test", help="epsilon search plus sampled orbit bounds")
    p.add_argument("--config", default=None, help="skew product JSON (default: cubic example)")
    p.add_argument("--r", type=float, default=10.0)
    p.add_argument("--L", type=float, default=10.0)
    p.add_argument("--R", type=float, default=20.0)
    p.add_argument("-K", "--K", type=int, default=200, dest="K")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--rho-tau", type=float, default=None,
                   help="growth exponent override (else calibrated on the orbit range)")
    p.add_argument("--alpha", type=float, default=None,
                   help="base contraction override (else from the g config)")
    p.add_argument("--epsilon", type=float, default=None,
                   help="skip the budget scan and verify with this epsilon")
    add_common(p)
    p.set_defaults(func=_cmd_bulge)

    p = sub.add_parser("order-estimate", help="order-of-growth slope of a perturbation")
    p.add_argument("--h", required=True, help="perturbation JSON file")
    p.add_argument("--r2", type=float, default=1.0)
    p.add_argument("--grid-lo", type=float, default=1e2)
    p.add_argument("--grid-hi", type=float, default=1e4)
    p.add_argument("--grid-n", type=int, default=9)
    p.add_argument("--samples", type=int, default=2048)
    add_common(p, seed=False)
    p.set_defaults(func=_cmd_order)

    p = sub.add_parser("runge-fit", help="piecewise-target polynomial approximation")
    p.add_argument("--union", required=True, help="union JSON: {sets: [...], targets: [...]}")
    p.add_argument("--degree", type=int, default=40)
    p.add_argument("--samples", type=int, default=None, help="fit samples per set")
    p.add_argument("--auto", action="store_true", help="double degree until --tol")
    p.add_argument("--tol", type=float, default=1e-2)
    p.add_argument("--max-degree", type=int, default=256)
    add_common(p, seed=False, precision=True)
    p.set_defaults(func=_cmd_runge)

    p = sub.add_parser("nonbulge-construct", help="run the stage pipeline")
    p.add_argument("--stages", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--g-config", default=None, help="base map JSON (default w/2, delta_g 0.9)")
    p.add_argument("--keep-going", action="store_true",
                   help="record stage failures and continue with best-effort fits")
    p.add_argument("--max-degree", type=int, default=256)
    p.add_argument("--out-dir", default=None, help="directory for stage_k.json files")
    add_common(p, precision=True)
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("nonbulge-verify", help="replay verify_return from stage files")
    p.add_argument("--dir", required=True)
    p.add_argument("--stages", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.1)
    add_common(p)
    p.set_defaults(func=_cmd_nonbulge_verify)

    p = sub.add_parser("render", help="escape-time raster of a fiber slice")
    p.add_argument("--config", default=None, help="skew product JSON (default: cubic example)")
    p.add_argument("--plane", choices=("z", "w"), default="z")
    p.add_argument("--fixed", type=_parse_complex, default=0j,
                   help="the coordinate held constant")
    p.add_argument("--center", type=_parse_complex, default=5 + 0j)
    p.add_argument("--width", type=float, default=8.0)
    p.add_argument("--height", type=float, default=8.0)
    p.add_argument("--px-w", type=int, default=64)
    p.add_argument("--px-h", type=int, default=64)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--escape-re", type=float, default=50.0)
    p.add_argument("--return-radius", type=float, default=3.0)
    p.add_argument("--format", choices=("pgm", "ppm"), default=None)
    add_common(p, seed=False)
    p.set_defaults(func=_cmd_render)

    return top


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; pass both through
        return int(exc.code or 0)
    try:
        return args.func(args)
    except RangeOverflowError as exc:
        sys.stderr.write(f"range error: {exc}\n")
        return 2
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(cli_main())
