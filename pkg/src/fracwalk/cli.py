"""Command-line surface tying the modules into reproducible experiments.

Every output file starts with a provenance header (config echo, artifact
version, seed), and re-running with the same config is byte-identical,
including multi-threaded runs (per-prime results are sorted by p).

Exit codes: 0 success, 1 usage or config error, 2 a mathematical invariant
failed (the witness is printed to stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import __version__
from .backend import backend_name
from .comparison import verify_comparison
from .ffield import Modulus, generator_set, is_prime
from .hyperbola import Interval, admissible_delta, count_solutions, scan_max_ratio
from .kernels import (
    STEP_PRESETS,
    StepDist,
    WalkParams,
    build_cayley,
    sl2_order,
    uniform_step,
    walk_decomposition,
)
from .mixing import mixing_curve, mixing_time
from .spectral import DENSE_STATE_CAP, eigen_sym

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

# breadth-first enumeration of the group walk is refused beyond this order
CAYLEY_ORDER_CAP = 200_000


class UsageError(Exception):
    pass


class ViolationError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers


def parse_mu(spec: str) -> StepDist:
    """A preset name ('u01', 'u-101') or comma-separated 'value:prob' pairs;
    probabilities may be decimals or fractions like 1/3."""
    spec = spec.strip()
    if spec in STEP_PRESETS:
        return STEP_PRESETS[spec]
    values = []
    probs = []
    try:
        for part in spec.split(","):
            v, q = part.split(":")
            values.append(int(v))
            probs.append(Fraction(q))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse step law {spec!r}: {exc}") from exc
    try:
        return StepDist(tuple(values), tuple(probs))
    except ValueError as exc:
        raise UsageError(f"invalid step law {spec!r}: {exc}") from exc


def parse_prime_range(spec: str) -> tuple[list[int], int]:
    """'101' for a single prime, 'a..b' for every prime in [a, b].

    Composites inside a range are skipped silently; the skip count is
    returned for the summary.  A single composite value is an error.
    """
    spec = spec.strip()
    if ".." in spec:
        lo_s, hi_s = spec.split("..", 1)
        try:
            lo, hi = int(lo_s), int(hi_s)
        except ValueError as exc:
            raise UsageError(f"bad prime range {spec!r}") from exc
        if lo > hi:
            raise UsageError(f"empty prime range {spec!r}")
        primes = [n for n in range(max(lo, 5), hi + 1) if is_prime(n)]
        skipped = (hi - lo + 1) - len(primes)
        if not primes:
            raise UsageError(f"no primes >= 5 in range {spec!r}")
        return primes, skipped
    try:
        p = int(spec)
    except ValueError as exc:
        raise UsageError(f"bad prime {spec!r}") from exc
    try:
        Modulus(p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return [p], 0


def resolve_params(mu: StepDist, a1: int | None, a2: int | None) -> WalkParams:
    if (a1 is None) != (a2 is None):
        raise UsageError("give both --a1 and --a2 or neither")
    if a1 is None:
        return WalkParams.from_step_dist(mu)
    if a1 not in mu.support or a2 not in mu.support:
        raise UsageError("--a1/--a2 must lie in the support of the step law")
    if a1 == a2:
        raise UsageError("--a1 and --a2 must differ")
    return WalkParams(a1, a2)


def require_two_steps(mu: StepDist, p: int) -> None:
    folded = {v % p for v in mu.support}
    if len(folded) < 2:
        raise UsageError(
            "the step law must cover at least two residues mod p for the "
            "spectral upper bound"
        )


def default_threads() -> int:
    return int(os.environ.get("FRACWALK_THREADS", "1"))


def run_over_primes(primes, fn, threads: int):
    """Apply fn to each prime, possibly in a worker pool; results come back
    sorted by prime regardless of completion order."""
    if threads <= 1 or len(primes) <= 1:
        results = [fn(p) for p in primes]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, primes))
    return [r for _, r in sorted(zip(primes, results), key=lambda t: t[0])]


# ---------------------------------------------------------------------------
# output plumbing


def _config_echo(args: argparse.Namespace) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _header_lines(args: argparse.Namespace) -> list[str]:
    cfg = json.dumps(_config_echo(args), sort_keys=True)
    return [
        f"# fracwalk {__version__}",
        f"# config: {cfg}",
        f"# seed: {getattr(args, 'seed', 0)}",
    ]


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def write_csv(args, columns, rows, extra_comments=()):
    out, close = _open_out(args.out)
    try:
        for line in _header_lines(args):
            out.write(line + "\n")
        for line in extra_comments:
            out.write(f"# {line}\n")
        out.write(",".join(columns) + "\n")
        for row in rows:
            out.write(",".join("" if v is None else _fmt(v) for v in row) + "\n")
    finally:
        if close:
            out.close()


def write_json(args, payload):
    doc = {
        "provenance": {
            "artifact": "fracwalk",
            "version": __version__,
            "config": _config_echo(args),
            "seed": getattr(args, "seed", 0),
        },
    }
    doc.update(payload)
    out, close = _open_out(args.out)
    try:
        out.write(json.dumps(doc, sort_keys=True, indent=2))
        out.write("\n")
    finally:
        if close:
            out.close()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# subcommands


def cmd_mix(args) -> int:
    primes, _ = parse_prime_range(args.p)
    if len(primes) != 1:
        raise UsageError("mix takes a single prime")
    p = Modulus(primes[0])
    mu = parse_mu(args.mu)
    require_two_steps(mu, p.p)
    if not 0.0 < args.eps < 1.0:
        raise UsageError("--eps must be in (0, 1)")
    if not 0 <= args.start < p.p:
        raise UsageError("--start out of range")

    params = resolve_params(mu, args.a1, args.a2)
    bundle = walk_decomposition(mu, p, params=params)
    mode = "dense" if p.p <= DENSE_STATE_CAP else "iterative"
    lam2 = eigen_sym(bundle.Q, mode=mode, seed=args.seed).lambda2

    tmix = mixing_time(bundle.K, args.eps, worst_case=True)
    n_max = min(max(tmix.steps + 2, 8), tmix.cap)
    curve = mixing_curve(bundle.K, mu, p, args.start, lam2, n_max)

    violation = None
    upper = dict(curve.upper_bound)
    for (n, tv), (_, lo) in zip(curve.points, curve.lower_bound):
        if tv < lo - 1e-9:
            violation = f"step {n}: tv {tv} below lower bound {lo}"
            break
        up = upper.get(n)
        if up is not None and tv > up + 1e-9:
            violation = f"step {n}: tv {tv} above upper bound {up}"
            break

    summary = {
        "p": p.p,
        "lambda2_Q": lam2,
        "u": bundle.params.u,
        "t_mix": tmix.steps,
        "t_mix_converged": tmix.converged,
        "eps": args.eps,
        "sandwich_ok": violation is None,
    }
    if args.format == "csv":
        comments = [f"{k}: {_fmt(v)}" for k, v in summary.items()]
        write_csv(args, ["n", "tv", "lower_bound", "upper_bound"],
                  curve.csv_rows(), extra_comments=comments)
    else:
        write_json(args, {"curve": curve.to_json_dict(), "summary": summary})
    if violation is not None:
        raise ViolationError(violation)
    return EXIT_OK


_SPECTRUM_KERNELS = ("Q", "L0", "L", "cayley")


def cmd_spectrum(args) -> int:
    primes, skipped = parse_prime_range(args.p)
    mu = parse_mu(args.mu)
    names = [k.strip() for k in args.kernels.split(",") if k.strip()]
    for name in names:
        if name not in _SPECTRUM_KERNELS:
            raise UsageError(f"unknown kernel {name!r}; pick from {_SPECTRUM_KERNELS}")
    for p in primes:
        require_two_steps(mu, p)
    params0 = resolve_params(mu, args.a1, args.a2)
    if args.dump_kernel and len(primes) != 1:
        raise UsageError("--dump-kernel needs a single prime")

    def one(pp: int):
        p = Modulus(pp)
        bundle = walk_decomposition(mu, p, params=WalkParams(params0.a1, params0.a2))
        built = {"Q": bundle.Q, "L0": bundle.L0, "L": bundle.L}
        rows = []
        kernels_json = {}
        for name in names:
            if name == "cayley":
                if sl2_order(pp) > CAYLEY_ORDER_CAP:
                    rows.append({
                        "p": pp, "kernel": name, "n_states": sl2_order(pp),
                        "error": f"group order beyond the {CAYLEY_ORDER_CAP} "
                                 f"enumeration cap",
                    })
                    continue
                gens = generator_set(bundle.params.a1, bundle.params.b, p)
                kern = build_cayley(gens, p)
            else:
                kern = built[name]
            if args.dump_kernel:
                kernels_json[name] = kern.to_json_dict()
            mode = args.mode
            if mode == "auto":
                if kern.n <= DENSE_STATE_CAP:
                    mode = "dense"
                elif name == "cayley":
                    # the group walk's top spectrum is densely packed, so
                    # block power iteration must be asked for explicitly
                    rows.append({
                        "p": pp, "kernel": name, "n_states": kern.n,
                        "error": "state count above the dense cap; pass "
                                 "--mode iterative to force the slow solve",
                    })
                    continue
                else:
                    mode = "iterative"
            try:
                rep = eigen_sym(kern, mode=mode, kcount=args.k, seed=args.seed)
            except ValueError as exc:
                rows.append({
                    "p": pp, "kernel": name, "n_states": kern.n, "error": str(exc),
                })
                continue
            row = {
                "p": pp, "kernel": name, "n_states": kern.n,
                "lambda2": rep.lambda2, "gap": rep.gap, "method": rep.method,
                "residual": rep.residual,
            }
            if name == "cayley":
                row["group_order"] = kern.n
                row["full_group_order"] = sl2_order(pp)
            rows.append(row)
        return rows, kernels_json

    results = run_over_primes(primes, one, args.threads)
    rows = [r for chunk, _ in results for r in chunk]

    if args.dump_kernel:
        with open(args.dump_kernel, "w", encoding="utf-8", newline="\n") as fh:
            json.dump({"p": primes[0], "kernels": results[0][1]}, fh, sort_keys=True)
            fh.write("\n")

    comments = [f"primes: {len(primes)}", f"skipped_composites: {skipped}"]
    if args.format == "csv":
        cols = ["p", "kernel", "n_states", "lambda2", "gap", "method", "residual",
                "group_order", "error"]
        write_csv(args, cols, ([r.get(c) for c in cols] for r in rows),
                  extra_comments=comments)
    else:
        write_json(args, {"rows": rows, "primes": len(primes),
                          "skipped_composites": skipped})
    return EXIT_OK


def cmd_compare(args) -> int:
    primes, skipped = parse_prime_range(args.p)
    mu = parse_mu(args.mu)
    params0 = resolve_params(mu, args.a1, args.a2)
    for p in primes:
        require_two_steps(mu, p)
        if p <= abs(params0.b):
            raise UsageError(f"need p > |b| = {abs(params0.b)}, got p = {p}")

    def one(pp: int):
        return verify_comparison(
            WalkParams(params0.a1, params0.a2), Modulus(pp),
            trials=args.trials, mu=mu, seed=args.seed + pp,
        )

    reports = run_over_primes(primes, one, args.threads)
    comments = [f"primes: {len(primes)}", f"skipped_composites: {skipped}"]
    if args.format == "csv":
        cols = ["p", "C", "A", "u", "gap_Q", "gap_L0", "gap_L", "links_ok"]
        rows = [
            [r.p, r.c_const, r.a_const, r.u, r.gap_q, r.gap_l0, r.gap_l, r.links_ok]
            for r in reports
        ]
        write_csv(args, cols, rows, extra_comments=comments)
    else:
        write_json(args, {"reports": [r.to_json_dict() for r in reports],
                          "skipped_composites": skipped})
    bad = [r for r in reports if not r.links_ok]
    if bad:
        r = bad[0]
        raise ViolationError(
            f"p = {r.p}: comparison links failed "
            f"(forms_ok={r.forms_ok}, witness_trial={r.witness_trial}, "
            f"gaps Q/L0/L = {r.gap_q}/{r.gap_l0}/{r.gap_l})"
        )
    return EXIT_OK


def cmd_hyperbola(args) -> int:
    primes, _ = parse_prime_range(args.p)
    if len(primes) != 1:
        raise UsageError("hyperbola takes a single prime")
    p = Modulus(primes[0])
    if args.m > p.p // 2:
        raise UsageError(f"need m <= p/2, got m = {args.m}, p = {p.p}")

    if args.i is not None or args.j is not None:
        if args.i is None or args.j is None:
            raise UsageError("give both --i and --j or neither")
        iv = Interval(args.i, args.m, p)
        jv = Interval(args.j, args.m, p)
        count = count_solutions(iv, jv, p)
        if args.format == "csv":
            write_csv(args, ["p", "m", "i_start", "j_start", "count", "ratio"],
                      [[p.p, args.m, iv.start, jv.start, count, count / args.m]])
        else:
            write_json(args, {"p": p.p, "m": args.m, "i_start": iv.start,
                              "j_start": jv.start, "count": count,
                              "ratio": count / args.m})
        return EXIT_OK

    report = scan_max_ratio(p, args.m, args.stride)
    summary = report.to_json_dict()
    if args.gap_delta:
        from .kernels import build_Q

        gap = eigen_sym(build_Q(uniform_step((-1, 0, 1)), p), mode="dense").gap
        gamma_prime = gap / 2.0
        summary["gamma"] = gap
        summary["gamma_prime"] = gamma_prime
        summary["admissible_delta"] = admissible_delta(gamma_prime)
    if args.format == "csv":
        from .hyperbola import count_surface

        surface = count_surface(p, args.m)
        comments = [f"{k}: {_fmt(v)}" for k, v in summary.items()]

        def rows():
            for i in range(0, p.p, args.stride):
                for j in range(0, p.p, args.stride):
                    c = int(surface[i, j])
                    yield [p.p, args.m, i, j, c, c / args.m]

        write_csv(args, ["p", "m", "i_start", "j_start", "count", "ratio"],
                  rows(), extra_comments=comments)
    else:
        write_json(args, {"summary": summary})
    return EXIT_OK


def cmd_generate(args) -> int:
    primes, _ = parse_prime_range(args.p)
    if len(primes) != 1:
        raise UsageError("generate takes a single prime")
    p = Modulus(primes[0])
    if args.b % p.p == 0:
        raise UsageError(f"b = {args.b} vanishes mod {p.p}")
    gens = generator_set(args.a1, args.b, p)
    kern = build_cayley(gens, p)
    full = sl2_order(p.p)
    generates = kern.n == full
    guaranteed = p.p > abs(args.b)
    payload = {
        "p": p.p, "a1": args.a1, "b": args.b,
        "closure_order": kern.n, "full_group_order": full,
        "generates": generates, "guaranteed_regime": guaranteed,
    }
    if args.format == "csv":
        cols = list(payload)
        write_csv(args, cols, [[payload[c] for c in cols]])
    else:
        write_json(args, payload)
    if guaranteed and not generates:
        raise ViolationError(
            f"closure order {kern.n} != {full} although p > |b|"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="fracwalk",
        description="Exact kernels, spectra, and mixing bounds for the "
                    "inverse-step random walk on F_p "
                    f"(backend: {backend_name()})",
    )
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="subcommand", required=True)

    def common(sp, mu_default="u01"):
        sp.add_argument("--p", required=True, help="prime, or range like 5..199")
        sp.add_argument("--mu", default=mu_default,
                        help="step law: preset u01 / u-101, or 'v:prob,...'")
        sp.add_argument("--a1", type=int, default=None,
                        help="override the first comparison step value")
        sp.add_argument("--a2", type=int, default=None,
                        help="override the second comparison step value")
        out(sp)

    def out(sp):
        sp.add_argument("--out", default="-", help="output path, or - for stdout")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=default_threads(),
                        help="worker pool size for prime ranges "
                             "(default: FRACWALK_THREADS or 1)")

    mix = sub.add_parser("mix", help="exact TV curve with both bounds")
    common(mix)
    mix.add_argument("--eps", type=float, default=0.25)
    mix.add_argument("--start", type=int, default=0)
    mix.set_defaults(func=cmd_mix)

    spec = sub.add_parser("spectrum", help="second eigenvalues and gaps")
    common(spec)
    spec.add_argument("--kernels", default="Q,L0,L",
                      help="comma list from Q,L0,L,cayley")
    spec.add_argument("--mode", choices=("auto", "dense", "iterative"),
                      default="auto")
    spec.add_argument("--k", type=int, default=6,
                      help="eigenvalue count in iterative mode")
    spec.add_argument("--dump-kernel", default=None,
                      help="write the built kernels as JSON to this path")
    spec.set_defaults(func=cmd_spectrum)

    cmp_ = sub.add_parser("compare", help="gap transfer constants and links")
    common(cmp_)
    cmp_.add_argument("--trials", type=int, default=200)
    cmp_.set_defaults(func=cmd_compare)

    hyp = sub.add_parser("hyperbola", help="solution counts of xy = 1 in boxes")
    hyp.add_argument("--p", required=True)
    hyp.add_argument("--m", type=int, required=True, help="interval length")
    hyp.add_argument("--stride", type=int, default=1)
    hyp.add_argument("--i", type=int, default=None, help="single I start")
    hyp.add_argument("--j", type=int, default=None, help="single J start")
    hyp.add_argument("--gap-delta", action="store_true",
                     help="attach the measured-gap admissible deficiency")
    out(hyp)
    hyp.set_defaults(func=cmd_hyperbola)

    gen = sub.add_parser("generate", help="breadth-first closure of the "
                                          "generator set in SL2")
    gen.add_argument("--p", required=True)
    gen.add_argument("--a1", type=int, required=True)
    gen.add_argument("--b", type=int, required=True)
    out(gen)
    gen.set_defaults(func=cmd_generate)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ViolationError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


def entrypoint() -> None:
    sys.exit(main())
