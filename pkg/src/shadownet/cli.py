"""Command-line front end.

Subcommands: ``expand``, ``verify``, ``learn``, ``expand-poly``, ``bounds``.
A ``--config`` JSON file may supply any option (keys are option names with
underscores); explicit flags win over the file.

Exit codes: 0 success or all checks passed, 1 a bound was violated,
2 usage error, 3 resource guard tripped.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds as B
from .activations import BUILTIN_ACTIVATIONS, erf_sigmoid_derivative, expand, gaussian_integrate, make_activation
from .errors import CombinatorialBlowup, FeatureBlowup, TruncationTooCoarse
from .harness import (
    McConfig,
    clip_probability_sweep,
    estimate_clip_probability,
    verify_adding_layer_normalized,
    verify_contraction,
    verify_main_lemma,
    verify_projecting_dont_hurt,
    verify_single_layer,
    verify_single_layer_identity,
    verify_theorem_main,
)
from .learners import evaluate, fit_poly_regression, fit_sgd_relu, generate_dataset
from .network import Architecture, sample_sphere, sample_weights, shadow_forward
from .polyexpand import coefficient_sum_check, expand_shadow
from .reporting import dump_json, reports_csv, reports_jsonl, table_csv, write_text

log = logging.getLogger("shadownet")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3

LEMMAS = (
    "single-layer",
    "single-layer-identity",
    "adding-layer",
    "projecting",
    "main-lemma",
    "theorem",
    "contraction",
    "clip-probability",
)

QUICK_FACTOR = 0.1


class UsageError(Exception):
    pass


def _int_list(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        out = [int(v) for v in value]
    else:
        out = [int(v) for v in str(value).replace("x", ",").split(",") if v.strip()]
    if not out:
        raise UsageError(f"empty integer list: {value!r}")
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the generated_at header")
    p.add_argument("--quick", action="store_true", help="shrink Monte Carlo sizes tenfold")
    p.add_argument("--activation", default="erf_sigmoid", choices=BUILTIN_ACTIVATIONS)
    p.add_argument("--max-degree", type=int, default=20, help="Hermite expansion degree")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="shadownet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)
    table = {}

    p = subs.add_parser("expand", help="Hermite expansion and truncation errors of an activation")
    _common(p)
    p.add_argument("--degree", type=int, default=12, help="highest Hermite degree to report")
    table["expand"] = p

    p = subs.add_parser("verify", help="Monte Carlo check of one lemma or theorem")
    _common(p)
    p.add_argument("lemma", choices=LEMMAS)
    p.add_argument("--n", type=int, default=4, help="truncation degree")
    p.add_argument("--d", type=int, default=64, help="input dimension")
    p.add_argument("--d1", type=int, default=256, help="hidden width")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--dims", help="explicit widths, e.g. 64,256,256,1")
    p.add_argument("--widths", help="hidden widths to sweep (clip-probability)")
    p.add_argument("--seeds", type=int, help="weight samples")
    p.add_argument("--samples", type=int, help="input points")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--eps", type=float, default=0.05, help="perturbation size")
    p.add_argument("--delta", type=float, help="norm tolerance")
    p.add_argument("--csv", help="also write a CSV summary here")
    table["verify"] = p

    p = subs.add_parser("learn", help="fit learners to random teachers")
    _common(p)
    p.add_argument("--dims", default="8,256,1", help="teacher widths")
    p.add_argument("--teachers", type=int, default=10, help="number of teacher seeds")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--learner", choices=("poly", "sgd", "both"), default="poly")
    p.add_argument("--degrees", default="1,3,5", help="regression degrees")
    p.add_argument("--shadow-n", type=int, help="label with the degree-n shadow network instead")
    p.add_argument("--samples", type=int, default=20000, help="training examples")
    p.add_argument("--test-samples", type=int, default=5000)
    p.add_argument("--ridge", type=float, default=1e-8)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch", type=int, default=32)
    table["learn"] = p

    p = subs.add_parser("expand-poly", help="symbolically expand a shadow network")
    _common(p)
    p.add_argument("--dims", default="2,3,1")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--seed", type=int, default=0, help="teacher seed")
    p.add_argument("--checks", type=int, default=20, help="spot-check points")
    table["expand-poly"] = p

    p = subs.add_parser("bounds", help="evaluate the closed-form bounds")
    _common(p)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--L", type=float, help="Lipschitz constant (default: the activation's)")
    p.add_argument("--eps-n", type=float, help="truncation error (default: the activation's)")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.01)
    table["bounds"] = p
    return parser, table


def parse_args(argv=None) -> argparse.Namespace:
    parser, table = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config:
        sub = table[args.command]
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            sub.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            sub.error("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        known = {a.dest for a in sub._actions} - {"help", "config"}
        unknown = sorted(set(cfg) - known)
        if unknown:
            sub.error(f"unknown config keys: {', '.join(unknown)}")
        cfg.pop("command", None)
        positional = {a.dest for a in sub._actions if not a.option_strings}
        for dest in positional & set(cfg):
            if getattr(args, dest) != cfg[dest]:
                sub.error(f"config sets {dest}={cfg[dest]!r} but the command line says {getattr(args, dest)!r}")
            cfg.pop(dest)
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _mc(args, weight_default: int, input_default: int) -> McConfig:
    cfg = McConfig(
        num_weight_samples=args.seeds or weight_default,
        num_input_samples=args.samples or input_default,
        base_seed=args.seed,
    )
    return cfg.scaled(QUICK_FACTOR) if args.quick else cfg


def _expansion(args):
    act = make_activation(args.activation)
    return act, expand(act, args.max_degree)


def cmd_expand(args) -> int:
    if not 0 <= args.degree <= args.max_degree:
        raise UsageError("--degree must lie between 0 and --max-degree")
    act, exp = _expansion(args)
    L = act.lipschitz_L
    rows = []
    for n in range(args.degree + 1):
        row = {"n": n, "a_n": float(exp.coeffs[n]), "eps": float(exp.eps[n])}
        row["sigmoid_bound"] = B.eps_bound_sigmoid(n)
        row["lipschitz_bound"] = B.eps_bound_lipschitz(n, L) if n >= 1 else None
        if act.name == "erf_sigmoid":
            k = -(-(n + 1) // 2)
            norm_k = gaussian_integrate(lambda x: erf_sigmoid_derivative(act, k, x) ** 2, degree=k)
            row["derivative_k"] = k
            row["derivative_bound"] = B.eps_bound_derivative(n, k, norm_k)
        else:
            row["derivative_k"] = 1
            row["derivative_bound"] = B.eps_bound_derivative(n, 1, L * L)
        rows.append(row)
    out = {
        "activation": act.name,
        "lipschitz_L": L,
        "normalization_factor": act.normalization_factor,
        "coeffs": [float(a) for a in exp.coeffs[: args.degree + 1]],
        "eps": [float(e) for e in exp.eps[: args.degree + 1]],
        "table": rows,
    }
    dump_json(out, args.out, not args.no_timestamp)
    return EXIT_OK


def _verify_reports(args):
    act, exp = _expansion(args)
    lemma = args.lemma
    if lemma in ("single-layer", "single-layer-identity", "adding-layer", "projecting", "main-lemma"):
        mc = _mc(args, 500, 20)
        if lemma == "single-layer":
            return [verify_single_layer(exp, args.n, args.d, args.d1, mc)]
        if lemma == "single-layer-identity":
            return [verify_single_layer_identity(exp, args.n, args.d, args.d1, mc)]
        if lemma == "adding-layer":
            return [verify_adding_layer_normalized(exp, args.n, args.eps, args.d, args.d1, mc)]
        if lemma == "projecting":
            return list(verify_projecting_dont_hurt(exp, args.n, args.eps, args.d, args.d1, mc))
        delta = 0.02 if args.delta is None else args.delta
        return [verify_main_lemma(exp, args.n, args.eps, delta, args.d, args.d1, mc)]

    if args.dims:
        dims = _int_list(args.dims)
    elif lemma == "contraction":
        dims = [args.d] + [args.d1] * args.depth
    else:
        dims = [args.d] + [args.d1] * (args.depth - 1) + [1]
    depth = len(dims) - 1
    mc = _mc(args, 500 if depth <= 2 else 200, 20 if depth <= 2 else 10)
    if lemma == "theorem":
        return [verify_theorem_main(exp, args.n, dims, mc)]
    if lemma == "contraction":
        return [verify_contraction(exp, args.n, dims, mc, delta=args.delta)]
    delta = 0.25 if args.delta is None else args.delta
    if args.widths:
        sweep = [[dims[0]] + [w] * (depth - 1) + [dims[-1]] for w in _int_list(args.widths)]
        reps, monotone = clip_probability_sweep(exp, args.n, sweep, delta, mc)
        for r in reps:
            r.metadata["sweep_non_increasing"] = monotone
        return reps
    return [estimate_clip_probability(exp, args.n, dims, delta, mc)]


def cmd_verify(args) -> int:
    reports = _verify_reports(args)
    ts = not args.no_timestamp
    write_text(reports_jsonl(reports, ts), args.out)
    if args.csv:
        write_text(reports_csv(reports, ts), args.csv)
    for r in reports:
        log.info("%s measured=%.6g se=%.2g bound=%.6g %s", r.name, r.measured, r.std_error, r.bound,
                 "PASS" if r.passed else "FAIL")
    ok = all(r.passed for r in reports)
    if args.lemma == "clip-probability" and args.widths:
        ok = ok and all(r.metadata["sweep_non_increasing"] for r in reports)
    return EXIT_OK if ok else EXIT_VIOLATION


LEARN_COLUMNS = ("teacher_seed", "learner", "setting", "train_err", "test_err", "test_se", "bound")


def cmd_learn(args) -> int:
    dims = _int_list(args.dims)
    if dims[-1] < 1:
        raise UsageError("output width must be positive")
    degrees = _int_list(args.degrees)
    teachers, samples, test_samples, steps = args.teachers, args.samples, args.test_samples, args.steps
    if args.quick:
        teachers = max(1, teachers // 10)
        samples, test_samples, steps = max(50, samples // 10), max(20, test_samples // 10), max(1, steps // 10)
    act, exp = _expansion(args)
    arch = Architecture(tuple(dims))
    i = arch.depth
    rows, violated = [], False
    for t in range(teachers):
        teacher_seed = args.seed * 100_003 + t
        w = sample_weights(arch, teacher_seed)
        src = exp if args.shadow_n is not None else act
        train = generate_dataset(w, src, samples, 2 * teacher_seed + 1, shadow_degree=args.shadow_n)
        test = generate_dataset(w, src, test_samples, 2 * teacher_seed + 2, shadow_degree=args.shadow_n)
        if args.learner in ("poly", "both"):
            for N in degrees:
                model = fit_poly_regression(train, N, args.ridge)
                tr, te = evaluate(model, train), evaluate(model, test)
                bound = _poly_bound(exp, act, i, N)
                if bound is not None and te.mean_error > bound + 1e-6:
                    violated = True
                rows.append((teacher_seed, "poly_regression", f"degree={N}", tr.mean_error, te.mean_error, te.se,
                             "" if bound is None else bound))
        if args.learner in ("sgd", "both"):
            model = fit_sgd_relu(train, args.width, steps, args.lr, args.batch, seed=teacher_seed)
            tr, te = evaluate(model, train), evaluate(model, test)
            rows.append((teacher_seed, "sgd_relu", f"width={args.width}", tr.mean_error, te.mean_error, te.se, ""))
    write_text(table_csv(LEARN_COLUMNS, rows, not args.no_timestamp), args.out)
    return EXIT_VIOLATION if violated else EXIT_OK


def _poly_bound(exp, act, depth: int, N: int):
    """Theorem bound for degree-N features when N = n^(depth-1) for an integer n."""
    if depth < 2:
        return None
    n = round(N ** (1.0 / (depth - 1)))
    if n < 1 or n ** (depth - 1) != N or n > exp.max_degree or exp.eps[n] > 0.5:
        return None
    return B.bound_theorem_intro(depth, n, act.lipschitz_L, float(exp.eps[n]))


def cmd_expand_poly(args) -> int:
    dims = _int_list(args.dims)
    act, exp = _expansion(args)
    w = sample_weights(dims, args.seed)
    polys = expand_shadow(w, exp, args.n)
    report = coefficient_sum_check(w, exp, args.n)
    rng = np.random.default_rng(args.seed)
    X = sample_sphere(dims[0], max(1, args.checks), rng)
    ref = shadow_forward(w, exp, args.n, X)[0][-1]
    got = np.column_stack([p.evaluate(X) for p in polys])
    rel = float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300)))
    out = {
        "teacher": w.to_dict(),
        "activation": act.name,
        "n": args.n,
        "degree_bound": args.n ** (len(dims) - 2),
        "polynomials": [p.to_dict() for p in polys],
        "coefficient_sum": report.to_dict(),
        "log_space_comparison": f"log(sum|c|) = {report.measured:.6f} <= {report.bound:.6f} = 4 n^(i-1) log(2 d_bar)",
        "spot_check": {"points": int(len(X)), "max_relative_error": rel},
    }
    dump_json(out, args.out, not args.no_timestamp)
    return EXIT_OK if report.passed and rel <= 1e-8 else EXIT_VIOLATION


def cmd_bounds(args) -> int:
    act, exp = _expansion(args)
    L = act.lipschitz_L if args.L is None else args.L
    n, i = args.n, args.depth
    eps_n = float(exp.eps[n]) if args.eps_n is None else args.eps_n
    out = {
        "activation": act.name,
        "n": n,
        "depth": i,
        "L": L,
        "eps_n": eps_n,
        "lambda_n": B.lambda_n(n),
        "theorem_main": B.bound_theorem_main(i, n, L, eps_n),
        "theorem_intro": B.bound_theorem_intro(i, n, L, eps_n),
        "theorem_intro_chained": B.bound_theorem_intro_chained(i, n, L),
        "single_layer": B.bound_single_layer(eps_n),
        "single_layer_exact": B.single_layer_exact(eps_n),
        "adding_layer_normalized": B.bound_adding_layer_normalized(n, L, args.eps, eps_n),
        "main_lemma": B.bound_main_lemma(n, L, args.eps, args.delta, eps_n),
        "main_lemma_terms": B.main_lemma_terms(n, L, args.eps, args.delta, eps_n),
        "contraction": B.bound_contraction(i, n, L, eps_n),
        "contraction_delta_max": B.contraction_delta_max(n, L, eps_n),
        "eps_bound_lipschitz": B.eps_bound_lipschitz(n, L),
        "eps_bound_sigmoid": B.eps_bound_sigmoid(n),
        "eps_bound_sigmoid_binomial": B.eps_bound_sigmoid_binomial(n),
    }
    dump_json(out, args.out, not args.no_timestamp)
    return EXIT_OK


COMMANDS = {
    "expand": cmd_expand,
    "verify": cmd_verify,
    "learn": cmd_learn,
    "expand-poly": cmd_expand_poly,
    "bounds": cmd_bounds,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except CombinatorialBlowup as exc:
        print(f"CombinatorialBlowup: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except FeatureBlowup as exc:
        print(f"FeatureBlowup: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, TruncationTooCoarse, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
