"""Command-line front end.

Exit codes: 0 when every checked inequality holds, 1 on input errors, 2 when
an inequality is violated.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from numbers import Real

from . import __version__
from .certificate import SLACK_RTOL, build_certificate
from .constants import (
    c_np, constant_table, envelope, gordon_pi_p, psumming_upper, sphere_moment, table_to_csv,
)
from .core import (
    DiscreteVectorLaw, DirectionSet, MomentInstance, canonical_instance, summarize,
)
from .errors import MomentForgeError
from .search import SearchConfig, default_threads, search_extremal
from .zp import ZpBodySpec, tail_bound_check, zp_norm, zp_pth_moment

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2


class InputError(Exception):
    """Malformed command-line input or instance file."""


# -- instance files --------------------------------------------------------------

def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, Real):
        raise InputError(f"{path}: expected a number, got {json.dumps(value)}")
    if not math.isfinite(value):
        raise InputError(f"{path}: expected a finite number")
    return float(value)


def _vector(value, path, length):
    if not isinstance(value, list):
        raise InputError(f"{path}: expected a list of {length} numbers")
    if len(value) != length:
        raise InputError(f"{path}: expected {length} entries, got {len(value)}")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _vectors(value, path, length):
    if not isinstance(value, list) or not value:
        raise InputError(f"{path}: expected a nonempty list of vectors")
    return [_vector(v, f"{path}[{i}]", length) for i, v in enumerate(value)]


def instance_from_obj(obj) -> MomentInstance:
    """Validate a decoded instance object and build the instance."""
    if not isinstance(obj, dict):
        raise InputError("$: expected a JSON object")
    for key in ("n", "p", "points", "probs", "directions"):
        if key not in obj:
            raise InputError(f"$.{key}: missing field")
    n = obj["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError(f"$.n: expected a positive integer, got {json.dumps(n)}")
    p = _number(obj["p"], "$.p")
    points = _vectors(obj["points"], "$.points", n)
    if not isinstance(obj["probs"], list):
        raise InputError("$.probs: expected a list of numbers")
    probs = _vector(obj["probs"], "$.probs", len(points))
    directions = _vectors(obj["directions"], "$.directions", n)
    try:
        return MomentInstance(DiscreteVectorLaw(points, probs), DirectionSet(directions), p)
    except MomentForgeError as exc:
        raise InputError(str(exc)) from exc


def instance_from_json(text: str) -> MomentInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_obj(obj)


def instance_to_obj(inst: MomentInstance) -> dict:
    return {
        "n": inst.dimension,
        "p": inst.p,
        "points": inst.law.points.tolist(),
        "probs": inst.law.probs.tolist(),
        "directions": inst.directions.directions.tolist(),
    }


def instance_to_json(inst: MomentInstance, indent=None) -> str:
    # json writes floats with repr, the shortest text that round-trips exactly
    return json.dumps(instance_to_obj(inst), indent=indent)


def load_instance(path: str) -> MomentInstance:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    return instance_from_json(text)


# -- output helpers ----------------------------------------------------------------

def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _emit_json(obj, out):
    out.write(json.dumps(_json_safe(obj), indent=2) + "\n")


def _fmt(value):
    if isinstance(value, float):
        return "inf" if math.isinf(value) else f"{value:.12g}"
    return str(value)


def _emit_table(rows, out, header=None):
    rows = [[_fmt(c) for c in r] for r in rows]
    if header:
        rows.insert(0, list(header))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        out.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")


def _parse_floats(text, flag):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"{flag}: expected comma-separated numbers, got {text!r}") from exc


# -- subcommands ---------------------------------------------------------------------

def cmd_verify(args, out):
    inst = load_instance(args.file)
    s = summarize(inst)
    bound = min(c_np(inst.dimension, inst.p), envelope(inst.dimension, inst.p))
    ok = s.ratio <= bound * (1 + args.tolerance)
    result = {
        "n": inst.dimension, "p": inst.p,
        "weak_moment": s.weak, "strong_moment": s.strong, "ratio": s.ratio,
        "degenerate": s.degenerate,
        "c_np": c_np(inst.dimension, inst.p), "envelope": envelope(inst.dimension, inst.p),
        "bound": bound, "verdict": "pass" if ok else "fail",
    }
    if args.json:
        _emit_json(result, out)
    else:
        _emit_table(list(result.items()), out)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_certificate(args, out):
    inst = load_instance(args.file)
    report = build_certificate(inst, tolerance=args.tolerance)
    if args.json:
        _emit_json(report.to_dict(), out)
    else:
        rows = [(s.name, s.relation, s.lhs, s.rhs, s.constant_used, s.slack,
                 "ok" if s.passed else "FAIL") for s in report.steps]
        _emit_table(rows, out, ("step", "rel", "lhs", "rhs", "constant", "slack", ""))
        out.write(f"final_ratio {_fmt(report.final_ratio)}  final_bound {_fmt(report.final_bound)}"
                  f"  envelope {_fmt(report.envelope)}  verdict {report.verdict}\n")
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_zp(args, out):
    inst = load_instance(args.file)
    s = _parse_floats(args.s, "--s")
    if len(s) != inst.dimension:
        raise InputError(f"--s: expected {inst.dimension} entries, got {len(s)}")
    spec = ZpBodySpec(inst.law, inst.p)
    value = zp_norm(spec, s)
    result = {"n": inst.dimension, "p": inst.p, "s": s, "zp_norm": value,
              "infinite": math.isinf(value), "span_dim": spec.span_dim}
    if args.json:
        _emit_json(result, out)
    else:
        out.write(_fmt(value) + "\n")
    return EXIT_OK


def cmd_constants(args, out):
    grid = _parse_floats(args.p_grid, "--p-grid")
    out.write(table_to_csv(constant_table(args.n, grid)))
    return EXIT_OK


def cmd_sphere(args, out):
    result = {"n": args.n, "p": args.p, "sphere_moment": sphere_moment(args.n, args.p),
              "gordon_pi_p": gordon_pi_p(args.n, args.p),
              "sqrt_n_plus_p_over_p": math.sqrt((args.n + args.p) / args.p)}
    if args.json:
        _emit_json(result, out)
    else:
        _emit_table(list(result.items()), out)
    return EXIT_OK


def cmd_psumming(args, out):
    b = psumming_upper(args.dim, args.p, args.rank, args.opnorm)
    result = {
        "dim": b.dim, "p": b.p,
        "identity_bound_2sqrt_e": b.identity_bound,
        "identity_bound_2sqrt_2": b.identity_bound_printed,
        "euclidean_pi_p": b.euclidean_value,
    }
    if b.operator_bound is not None:
        result.update(rank=b.rank, opnorm=b.opnorm, operator_bound=b.operator_bound)
    if args.json:
        _emit_json(result, out)
    else:
        _emit_table(list(result.items()), out)
    return EXIT_OK


def cmd_search(args, out):
    cfg = SearchConfig(n=args.n, k=args.k, l=args.l, p=args.p, restarts=args.restarts,
                       max_iters=args.max_iters, seed=args.seed, threads=default_threads())
    result = search_extremal(cfg)
    if args.trace_csv:
        with open(args.trace_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["restart", "ratio"])
            writer.writerows((i, repr(r)) for i, r in enumerate(result.trace))
    if args.json:
        _emit_json(result.to_dict(), out)
    else:
        _emit_table([
            ("best_ratio", result.best_ratio), ("best_restart", result.best_restart),
            ("bound", result.bound), ("sphere_reference", result.sphere_reference),
            ("gap_to_bound", result.bound - result.best_ratio),
            ("gap_to_sphere", result.sphere_reference - result.best_ratio),
        ], out)
    return EXIT_OK if result.within_bound else EXIT_VIOLATION


def canonical_report(n: int, p: float) -> dict:
    """Every exact quantity of the +-e_i example next to its closed form."""
    inst = canonical_instance(n, p)
    s = summarize(inst)
    spec = ZpBodySpec(inst.law, inst.p)
    tail = tail_bound_check(spec)
    cert = build_certificate(inst)
    q = spec.hoelder_dual
    probe = [1.0] + [0.0] * (n - 1)
    return {
        "instance": "canonical", "n": n, "p": inst.p, "hoelder_dual": q,
        "weak_moment": s.weak, "weak_closed_form": n ** (-1.0 / inst.p),
        "strong_moment": s.strong, "strong_closed_form": 1.0,
        "moment_ratio": s.ratio, "ratio_closed_form": n ** (1.0 / inst.p),
        "zp_norm_e1": zp_norm(spec, probe), "zp_norm_e1_closed_form": n ** (1.0 / inst.p),
        "zp_pth_moment": zp_pth_moment(spec), "zp_pth_moment_closed_form": n ** (1.0 / inst.p),
        "c_np": c_np(n, inst.p), "envelope": envelope(n, inst.p),
        "gordon_pi_p": gordon_pi_p(n, inst.p),
        "tail_threshold": tail.threshold, "tail_prob": tail.tail_prob, "tail_bound": tail.bound,
        "certificate_verdict": cert.verdict,
    }


def cmd_examples(args, out):
    result = canonical_report(args.n, args.p)
    if args.json:
        _emit_json(result, out)
    else:
        pairs = [("weak_moment", "weak_closed_form"), ("strong_moment", "strong_closed_form"),
                 ("moment_ratio", "ratio_closed_form"), ("zp_norm_e1", "zp_norm_e1_closed_form"),
                 ("zp_pth_moment", "zp_pth_moment_closed_form")]
        out.write(f"canonical instance: uniform on +-e_i, T = {{e_i}}, n = {args.n}, p = {_fmt(result['p'])}\n")
        _emit_table([(a, result[a], result[b]) for a, b in pairs], out,
                    ("quantity", "computed", "closed_form"))
        _emit_table([(k, result[k]) for k in ("c_np", "envelope", "gordon_pi_p", "tail_threshold",
                                              "tail_prob", "tail_bound", "certificate_verdict")], out)
    ok = result["certificate_verdict"] == "pass" and result["tail_prob"] <= result["tail_bound"]
    return EXIT_OK if ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momentforge", description="Weak versus strong moments of random vectors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_json(p):
        p.add_argument("--json", action="store_true", help="emit JSON")
        return p

    p = with_json(sub.add_parser("verify", help="strong/weak ratio of an instance against the bound"))
    p.add_argument("file")
    p.add_argument("--tolerance", type=float, default=SLACK_RTOL)
    p.set_defaults(func=cmd_verify)

    p = with_json(sub.add_parser("certificate", help="step-by-step certificate for an instance"))
    p.add_argument("file")
    p.add_argument("--tolerance", type=float, default=SLACK_RTOL)
    p.set_defaults(func=cmd_certificate)

    p = with_json(sub.add_parser("zp", help="Z_p norm of a vector for the law in FILE"))
    p.add_argument("file")
    p.add_argument("--s", required=True, help="comma-separated vector")
    p.set_defaults(func=cmd_zp)

    p = sub.add_parser("constants", help="constant table as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p-grid", required=True, help="comma-separated exponents")
    p.set_defaults(func=cmd_constants)

    p = with_json(sub.add_parser("sphere", help="coordinate moment of the uniform sphere"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=cmd_sphere)

    p = with_json(sub.add_parser("psumming", help="p-summing norm bounds"))
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--rank", type=int)
    p.add_argument("--opnorm", type=float)
    p.set_defaults(func=cmd_psumming)

    p = with_json(sub.add_parser("search", help="extremal ratio search"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--l", type=int, default=8)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trace-csv", help="write per-restart ratios to this CSV file")
    p.set_defaults(func=cmd_search)

    p = with_json(sub.add_parser("examples", help="worked examples with closed forms"))
    p.add_argument("name", choices=["canonical"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=cmd_examples)
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except (InputError, MomentForgeError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
