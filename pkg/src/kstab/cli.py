"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 computational failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import List, Optional

from ._exact import fmt
from .errors import ComputationError, ValidationError
from .invariants import (
    continuous_projection,
    df,
    df_relative,
    infimum_norm,
    norm_p,
    reduced_norm,
)
from .io import Document, InputError, parse_config, parse_corpus, parse_torus
from .lab import (
    convergence_csv,
    default_k_list,
    moment_convergence,
    product_detector,
    scan_csv,
    stability_scan,
)
from .quantize import ehrhart_fit, export_spectrum_csv, limit_projection_coefficients, weight_spectrum

COMMANDS = (
    "ehrhart",
    "weights",
    "df",
    "norm",
    "reduced-norm",
    "inf-norm",
    "project",
    "moments",
    "detect-product",
    "scan",
)


def _p_value(text: str):
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid p: {text!r}") from None
    if q < 1:
        raise argparse.ArgumentTypeError("p must be >= 1")
    return int(q) if q.denominator == 1 else float(q)


def _int_p(text: str) -> int:
    p = _p_value(text)
    if not isinstance(p, int):
        raise argparse.ArgumentTypeError("this command needs an integer p")
    return p


def _k_list(text: str) -> List[int]:
    try:
        ks = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid k list: {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("k values must be positive integers")
    return ks


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kstab", description="K-stability invariants of toric test configurations")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, torus=False, p=None, k=None):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--input", required=True, help="JSON input file")
        sp.add_argument("--output", help="write results here instead of stdout")
        if torus:
            sp.add_argument("--torus", default="full", help="'full', 'none' or a JSON basis matrix")
        if p is not None:
            sp.add_argument("--p", type=p, default=2)
        if k == "single":
            sp.add_argument("--k", type=int, required=True)
        elif k == "list":
            sp.add_argument("--k", type=_k_list, default=None, help="comma-separated levels")
        return sp

    add("ehrhart", "fit N_k and w_k, print F0 and F1")
    add("weights", "export the weight spectrum at level k as CSV", k="single")
    sp = add("df", "Donaldson-Futaki invariant")
    sp.add_argument("--torus", default=None, help="also print the relative invariant DF_T")
    add("norm", "L^p norm", p=_p_value)
    add("reduced-norm", "reduced L^p norm", torus=True, p=_p_value)
    sp = add("inf-norm", "infimum of twisted norms", torus=True, p=_p_value)
    sp.add_argument("--tol", type=float, default=1e-10)
    add("project", "continuous (and level-k) projection coefficients", torus=True, k="list")
    sp = add("moments", "trace moments versus their continuous limit", torus=True, p=_int_p, k="list")
    sp.add_argument("--mode", choices=("projected", "raw"), default="projected")
    add("detect-product", "exact product-configuration test", torus=True)
    add("scan", "relative stability scan over a corpus", torus=True)
    return parser


def _torus(args, n):
    return parse_torus(args.torus, n)


def _run(args) -> str:
    doc = Document.load(args.input)
    cmd = args.command
    if cmd == "scan":
        corpus = parse_corpus(doc)
        W = _torus(args, corpus[0][1].dim)
        summary = stability_scan(corpus, W)
        tail = "" if summary.delta is None else f"# delta = {fmt(summary.delta)}\n"
        if summary.unstable:
            tail += "# DF_T < 0: " + ", ".join(summary.unstable) + "\n"
        return scan_csv(summary) + tail

    tc = parse_config(doc, doc.data)
    n = tc.dim
    if cmd == "ehrhart":
        fit = ehrhart_fit(tc)
        lines = [
            f"D = {tc.D}",
            f"period = {fit.period}",
            "N(k) = [" + ", ".join(fmt(c) for c in fit.N_poly) + "]",
            "w(k) = [" + ", ".join(fmt(c) for c in fit.w_poly) + "]",
            f"F0 = {fmt(fit.F0)}",
            f"F1 = {fmt(fit.F1)}",
        ]
        return "\n".join(lines) + "\n"
    if cmd == "weights":
        if args.k < 1:
            raise ValidationError("k must be positive")
        return export_spectrum_csv(weight_spectrum(tc, args.k))
    if cmd == "df":
        out = f"DF = {fmt(df(tc))}\n"
        if args.torus is not None:
            out += f"DF_T = {fmt(df_relative(tc, parse_torus(args.torus, n)))}\n"
        return out
    if cmd == "norm":
        return json.dumps(norm_p(tc, args.p).to_json(), indent=2) + "\n"
    if cmd == "reduced-norm":
        return json.dumps(reduced_norm(tc, _torus(args, n), args.p).to_json(), indent=2) + "\n"
    if cmd == "inf-norm":
        report, ell = infimum_norm(tc, _torus(args, n), args.p, tol=args.tol)
        payload = report.to_json()
        if report.exact_inner is None:
            # found by the float search: a real, not a meaningful rational
            payload["argmin"] = {
                "slope": [format(float(x), ".15g") for x in ell.slope],
                "constant": format(float(ell.constant), ".15g"),
            }
        else:
            payload["argmin"] = ell.to_json()
        return json.dumps(payload, indent=2) + "\n"
    if cmd == "project":
        W = _torus(args, n)
        payload = continuous_projection(tc.function, tc.polytope, W).to_json()
        if args.k:
            seq = limit_projection_coefficients(tc, W, args.k)
            payload["levels"] = [
                {"k": k, "coefficients": [fmt(c) for c in coeffs]} for k, coeffs in zip(args.k, seq)
            ]
        return json.dumps(payload, indent=2) + "\n"
    if cmd == "moments":
        W = _torus(args, n)
        ks = args.k or default_k_list(tc)
        return convergence_csv(moment_convergence(tc, W, args.p, ks, args.mode))
    if cmd == "detect-product":
        result = product_detector(tc, _torus(args, n))
        if result.is_product:
            return "product: true, direction = (" + ", ".join(fmt(c) for c in result.direction) + ")\n"
        return f"product: false, residual inner = {fmt(result.residual_inner)}\n"
    raise AssertionError(cmd)  # pragma: no cover


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    source = getattr(args, "input", "<input>")
    try:
        text = _run(args)
    except InputError as exc:
        print(exc.describe(source), file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{source}:1: cannot read input: {exc.strerror}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"error in {exc.operation}: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"{source}:1: {exc}", file=sys.stderr)
        return 2
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
