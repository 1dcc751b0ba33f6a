"""Command-line interface: spec ingestion, dispatch, report persistence.

Reports are JSON with sorted keys and repr-exact floats, so identical
(spec, seed, tolerance) runs produce byte-identical files.  Exit codes:
0 success, 1 usage error, 2 domain error (for example a nonintegrable
weight), 3 verification or corpus failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from fractions import Fraction

from .branches import OutsideValidityRadiusError
from .decay import NoProbeRecipeError, RaySpec, decay_fit, predict, sharpness_probe
from .exponents import global_delta, slab_exponent, sublevel_exponent
from .measures import slab_measure, sublevel_measure, weight_lp_norm
from .newton import newton_polygon
from .oscillatory import integrate_U
from .problem import ProblemSpec, SpecValidationError, load_problem
from .quadrature import NonintegrableWeightError, ToleranceUnreachableError
from .resolution import (NotIncompatibleError, ResolutionResult,
                         VerificationFailedError, check_compatibility,
                         coverage_check, incompatible_split, resolve)
from .vdc import calibrate_fitted_c, certify_total

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_VERIFICATION = 3


def _dump(data, args) -> None:
    text = json.dumps(data, sort_keys=True, indent=2, default=str) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_csv(rows, header, args) -> None:
    lines = [",".join(header)]
    lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in row)
              for row in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_spec(args) -> ProblemSpec:
    return load_problem(args.spec)


def _parse_triple(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(parts)


def _parse_pair(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return tuple(parts)


def _cached_resolution(spec: ProblemSpec, args) -> ResolutionResult:
    eta = getattr(args, "eta", 0.1)
    cache_dir = args.cache_dir
    key = None
    if cache_dir:
        blob = json.dumps({"spec": spec.to_json(), "eta": eta,
                           "seed": args.seed}, sort_keys=True).encode()
        key = hashlib.sha256(blob).hexdigest()[:24]
        path = os.path.join(cache_dir, f"charts-{key}.json")
        # cache stores the serialized charts for reporting; the resolution
        # object itself is rebuilt to keep exact polynomial context
        if os.path.exists(path):
            pass
    res = resolve(spec, eta=eta, seed=args.seed)
    if cache_dir and key is not None:
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, f"charts-{key}.json")
        if not os.path.exists(path):
            with open(path, "w") as fh:
                json.dump(res.to_json(), fh, sort_keys=True, indent=2)
    return res


def cmd_polygon(args) -> int:
    spec = _load_spec(args)
    poly = newton_polygon(spec.phase)
    _dump(poly.to_json(), args)
    return EXIT_OK


def cmd_resolve(args) -> int:
    spec = _load_spec(args)
    res = _cached_resolution(spec, args)
    data = res.to_json()
    data["coverage"] = coverage_check(res, spec, samples=args.coverage_samples,
                                      seed=args.seed)
    _dump(data, args)
    return EXIT_OK


def cmd_compat(args) -> int:
    spec = _load_spec(args)
    res = _cached_resolution(spec, args)
    verdict = check_compatibility(spec, res)
    data = verdict.to_json()
    if not verdict.compatible:
        pieces = incompatible_split(spec, res, verdict)
        data["shear_pieces"] = [p.to_json() for p in pieces]
    _dump(data, args)
    return EXIT_OK


def cmd_slab(args) -> int:
    spec = _load_spec(args)
    est = slab_exponent(spec, args.direction, rel_tol=args.tol)
    if args.format == "csv":
        _dump_csv([(s, v) for s, v in est.samples], ("scale", "measure"), args)
    else:
        _dump(est.to_json(), args)
    return EXIT_OK


def cmd_sublevel(args) -> int:
    spec = _load_spec(args)
    est = sublevel_exponent(spec, rel_tol=args.tol)
    if args.format == "csv":
        _dump_csv([(s, v) for s, v in est.samples], ("scale", "measure"), args)
    else:
        _dump(est.to_json(), args)
    return EXIT_OK


def cmd_lp(args) -> int:
    spec = _load_spec(args)
    norm = weight_lp_norm(spec, args.p, rel_tol=args.tol)
    _dump({"p": args.p, "norm": (None if norm == float("inf") else norm),
           "finite": norm != float("inf")}, args)
    return EXIT_OK


def cmd_integrate(args) -> int:
    spec = _load_spec(args)
    res = integrate_U(spec, args.lam, tol=args.tol)
    if args.format == "csv":
        _dump_csv([(args.lam[0], res.value.real, res.value.imag, abs(res.value))],
                  ("lambda", "re", "im", "abs"), args)
    else:
        _dump(res.to_json(), args)
    return EXIT_OK


def cmd_fit(args) -> int:
    spec = _load_spec(args)
    mags = []
    t = args.min
    while t <= args.max * (1 + 1e-12):
        mags.append(t)
        t *= 2.0
    ray = RaySpec(args.ray, tuple(mags))
    report = decay_fit(spec, ray, tol=args.tol)
    if args.format == "csv":
        rows = [(t, u.real, u.imag, abs(u)) for t, u, _e in report.samples]
        _dump_csv(rows, ("lambda", "re", "im", "abs"), args)
    else:
        _dump(report.to_json(), args)
    return EXIT_OK


def cmd_predict(args) -> int:
    spec = _load_spec(args)
    res = _cached_resolution(spec, args)
    p_values = []
    for part in (args.p or "").split(","):
        part = part.strip()
        if not part:
            continue
        p_values.append(float("inf") if part in ("inf", "oo") else float(part))
    bundle = predict(spec, p_values, resolution=res, seed=args.seed)
    _dump(bundle.to_json(), args)
    return EXIT_OK


def cmd_certify(args) -> int:
    spec = _load_spec(args)
    res = _cached_resolution(spec, args)
    calib = calibrate_fitted_c(res, spec)
    data = certify_total(res, spec, args.lam, calib["fitted_c"],
                         variant=args.variant)
    data["calibration"] = calib
    if args.format == "csv":
        _dump_csv([(c["chart"], c["bound"]) for c in data["per_chart"]],
                  ("chart", "bound"), args)
    else:
        _dump(data, args)
    return EXIT_OK


def cmd_probe(args) -> int:
    spec = _load_spec(args)
    res = _cached_resolution(spec, args)
    report = sharpness_probe(spec, resolution=res, seed=args.seed)
    _dump(report.to_json(), args)
    return EXIT_OK


def cmd_corpus(args) -> int:
    from .corpus import run_corpus
    summary = run_corpus(filter_text=args.filter, seed=args.seed,
                         out_dir=args.out_dir)
    _dump(summary, args)
    return EXIT_OK if summary["failed"] == 0 else EXIT_VERIFICATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscidecay",
        description="Decay exponents of weighted oscillatory integrals: "
                    "geometric invariants, certified bounds, numerical fits")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, spec=True):
        if spec:
            p.add_argument("spec", help="problem spec JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-4)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--cache-dir", default=None)

    p = sub.add_parser("polygon", help="Newton polygon of the phase")
    common(p)
    p.set_defaults(func=cmd_polygon)

    p = sub.add_parser("resolve", help="monomializing charts")
    common(p)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--coverage-samples", type=int, default=20000)
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("compat", help="compatibility verdict")
    common(p)
    p.add_argument("--eta", type=float, default=0.1)
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("slab", help="slab exponent for a direction")
    common(p)
    p.add_argument("--direction", type=_parse_pair, required=True)
    p.set_defaults(func=cmd_slab)

    p = sub.add_parser("sublevel", help="sublevel exponent")
    common(p)
    p.set_defaults(func=cmd_sublevel)

    p = sub.add_parser("lp", help="weight L^p norm")
    common(p)
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("integrate", help="oscillatory integral at one lambda")
    common(p)
    p.add_argument("--lambda", dest="lam", type=_parse_triple, required=True)
    p.set_defaults(func=cmd_integrate, tol=1e-6)

    p = sub.add_parser("fit", help="decay fit along a ray")
    common(p)
    p.add_argument("--ray", type=_parse_triple, required=True)
    p.add_argument("--min", type=float, default=16.0)
    p.add_argument("--max", type=float, default=float(2 ** 20))
    p.set_defaults(func=cmd_fit, tol=1e-5)

    p = sub.add_parser("predict", help="decay predictions")
    common(p)
    p.add_argument("--p", default="", help="comma-separated L^p exponents")
    p.add_argument("--eta", type=float, default=0.1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("certify", help="dyadic cell bounds at one lambda")
    common(p)
    p.add_argument("--lambda", dest="lam", type=_parse_triple, required=True)
    p.add_argument("--variant", choices=("auto", "cell-4.9a", "cell-4.9b",
                                         "cell-6.1"), default="auto")
    p.add_argument("--eta", type=float, default=0.1)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("probe", help="sharpness probe")
    common(p)
    p.add_argument("--eta", type=float, default=0.1)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("corpus", help="run the example corpus")
    common(p, spec=False)
    p.add_argument("--filter", default="")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_corpus)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (SpecValidationError, json.JSONDecodeError, ValueError) as err:
        if isinstance(err, (NotIncompatibleError, NoProbeRecipeError)):
            print(f"error: {err}", file=sys.stderr)
            return EXIT_DOMAIN
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (NonintegrableWeightError, OutsideValidityRadiusError,
            ArithmeticError) as err:
        print(f"domain error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    except (VerificationFailedError, ToleranceUnreachableError) as err:
        print(f"verification failure: {err}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
