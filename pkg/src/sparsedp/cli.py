"""Command-line entry point.

Subcommands: ``release`` (run a private release), ``fsd`` (shattering
dimension search), ``attack`` (reconstruction experiment), ``verify-privacy``
(brute-force ratio certificate), and ``oracle`` (closed-form distribution and
best-surrogate dumps).  Every run prints one JSON document to stdout that
embeds the resolved configuration and the library version; ``--out DIR``
additionally writes the same document (plus per-trial / per-query CSV tables
where applicable) to disk.  Identical configuration and seed give
byte-identical outputs.

Exit codes: 0 success, 1 validation error (bad flags or malformed files),
2 enumeration-budget refusal.
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import __version__
from .attack import FamilySearchError, attack_experiment, build_family
from .core import DomainTooLargeError, load_database, load_query_class
from .fsd import SearchBudgetExceeded, choose_m, fsd
from .mechanisms import (
    ExponentRule,
    PrivacyParams,
    exponential_release_exact,
    exponential_release_mcmc,
    laplace_release,
)
from .oracle import (
    best_sparse_db,
    exact_output_distribution,
    postprocessing_certificate,
    privacy_ratio_certificate,
)
from .rng import make_rng


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); budget owns code 2
        raise _CliError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsedp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", type=Path, default=None, help="directory for JSON/CSV artifacts")

    p_release = sub.add_parser("release", help="privately release a synthetic database")
    p_release.add_argument("--db", required=True, type=Path)
    p_release.add_argument("--class", dest="query_class", required=True, type=Path)
    p_release.add_argument("--alpha", required=True, type=float)
    p_release.add_argument("--eta", type=float, default=None)
    p_release.add_argument("--gamma", type=float, default=None)
    p_release.add_argument("--m", type=int, default=None, help="override the derived surrogate size")
    p_release.add_argument("--sampler", choices=["exact", "mcmc"], default="exact")
    p_release.add_argument("--exponent", choices=["paper", "tight"], default="paper")
    p_release.add_argument("--l1", default="public", help="public, private, or a number")
    p_release.add_argument("--steps", type=int, default=10_000, help="MCMC steps")
    p_release.add_argument("--seed", type=int, default=0)
    common(p_release)

    p_fsd = sub.add_parser("fsd", help="gamma-fat-shattering dimension of a class")
    p_fsd.add_argument("--class", dest="query_class", required=True, type=Path)
    p_fsd.add_argument("--gamma", required=True, type=float)
    p_fsd.add_argument("--dmax", required=True, type=int)
    p_fsd.add_argument("--budget", type=int, default=None)
    common(p_fsd)

    p_attack = sub.add_parser("attack", help="reconstruction experiment against a mechanism")
    p_attack.add_argument("--class", dest="query_class", required=True, type=Path)
    p_attack.add_argument("--gamma", required=True, type=float)
    p_attack.add_argument("--alpha", required=True, type=float)
    p_attack.add_argument(
        "--mechanism", choices=["exact", "mcmc", "laplace", "identity"], required=True
    )
    p_attack.add_argument("--trials", required=True, type=int)
    p_attack.add_argument("--seed", type=int, default=0)
    p_attack.add_argument("--m", type=int, default=None, help="surrogate size (default d/2)")
    p_attack.add_argument("--dmax", type=int, default=None)
    p_attack.add_argument("--steps", type=int, default=2_000, help="MCMC steps per call")
    p_attack.add_argument("--exponent", choices=["paper", "tight"], default="paper")
    common(p_attack)

    p_verify = sub.add_parser("verify-privacy", help="brute-force privacy ratio certificate")
    p_verify.add_argument("--n", required=True, type=int)
    p_verify.add_argument("--entry-cap", required=True, type=int)
    p_verify.add_argument("--class", dest="query_class", required=True, type=Path)
    p_verify.add_argument("--alpha", required=True, type=float)
    p_verify.add_argument("--m", required=True, type=int)
    p_verify.add_argument("--exponent", choices=["paper", "tight"], default="paper")
    p_verify.add_argument(
        "--postprocess",
        choices=["none", "first-coordinate", "constant"],
        default="none",
        help="also certify the pushed-forward distributions",
    )
    p_verify.add_argument("--probes", type=int, default=0, help="random real-neighbor probes")
    p_verify.add_argument("--seed", type=int, default=0)
    common(p_verify)

    p_oracle = sub.add_parser("oracle", help="closed-form distribution / best surrogate")
    p_oracle.add_argument("--db", required=True, type=Path)
    p_oracle.add_argument("--class", dest="query_class", required=True, type=Path)
    p_oracle.add_argument("--alpha", required=True, type=float)
    p_oracle.add_argument("--m", required=True, type=int)
    p_oracle.add_argument("--exponent", choices=["paper", "tight"], default="paper")
    p_oracle.add_argument("--best-sparse", action="store_true")
    common(p_oracle)

    return parser


def _resolved_config(args: argparse.Namespace) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key == "out":
            value = str(value) if value is not None else None
        elif isinstance(value, Path):
            value = str(value)
        out[key] = value
    return out


def _payload(args, result: dict) -> dict:
    return {"version": __version__, "config": _resolved_config(args), "result": result}


def _emit(args, payload: dict, tables: dict[str, list] | None = None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{args.command}.json").write_text(text + "\n")
        for name, rows in (tables or {}).items():
            with (args.out / name).open("w", newline="") as fh:
                csv.writer(fh).writerows(rows)


def _parse_l1(raw: str):
    if raw in ("public", "private"):
        return raw
    try:
        return float(raw)
    except ValueError:
        raise _CliError(f"--l1 must be 'public', 'private', or a number, got {raw!r}")


def _derive_m(args, cls) -> int:
    if args.m is not None:
        if args.m < 1:
            raise _CliError("--m must be at least 1")
        return args.m
    if args.eta is None or args.gamma is None:
        raise _CliError("either --m or both --eta and --gamma are required")
    d_max = max(1, int(math.log2(cls.k)))
    dimension = fsd(cls, args.gamma, d_max).d
    return choose_m(args.eta, dimension)


def _cmd_release(args) -> int:
    db = load_database(args.db)
    cls = load_query_class(args.query_class)
    p = PrivacyParams(alpha=args.alpha)
    rule = ExponentRule.parse(args.exponent)
    l1 = _parse_l1(args.l1)
    m = _derive_m(args, cls)
    rng = make_rng(args.seed)
    if args.sampler == "exact":
        out = exponential_release_exact(db, cls, p, m, rng, rule, l1=l1)
    else:
        out = exponential_release_mcmc(db, cls, p, m, args.steps, rng, rule, l1=l1)
    true_answers = cls.matrix @ db.entries
    released = out.answers(cls)
    result = {
        "d_out": [float(x) for x in out.d_out.entries],
        "d_prime": [int(x) for x in out.d_prime.counts],
        "score": out.score,
        "m": out.m,
        "exponent_rule": out.exponent_rule.value,
        "l1_estimate": out.l1_estimate,
        "approximate": out.approximate,
        "answers": [float(x) for x in released],
    }
    rows = [["query_index", "true_answer", "released_answer", "abs_error"]]
    rows += [
        [i, repr(float(t)), repr(float(r)), repr(abs(float(t) - float(r)))]
        for i, (t, r) in enumerate(zip(true_answers, released))
    ]
    _emit(args, _payload(args, result), {"per_query.csv": rows})
    return 0


def _cmd_fsd(args) -> int:
    cls = load_query_class(args.query_class)
    result = fsd(cls, args.gamma, args.dmax, budget=args.budget)
    _emit(args, _payload(args, result.to_dict()))
    return 0


def _cmd_attack(args) -> int:
    cls = load_query_class(args.query_class)
    p = PrivacyParams(alpha=args.alpha)
    rule = ExponentRule.parse(args.exponent)
    d_max = args.dmax if args.dmax is not None else max(2, int(math.log2(cls.k)))
    family = build_family(cls, args.gamma, d_max)
    m = args.m if args.m is not None else family.d // 2

    if args.mechanism == "identity":
        mechanism = lambda db, rng: db
    elif args.mechanism == "exact":
        mechanism = lambda db, rng: exponential_release_exact(db, cls, p, m, rng, rule)
    elif args.mechanism == "mcmc":
        mechanism = lambda db, rng: exponential_release_mcmc(db, cls, p, m, args.steps, rng, rule)
    else:
        mechanism = lambda db, rng: laplace_release(db, cls, p, rng)

    report = attack_experiment(mechanism, family, args.trials, make_rng(args.seed), alpha=args.alpha)
    result = report.to_dict()
    result["family"] = {
        "bucket": list(family.bucket),
        "d": family.d,
        "gamma": family.gamma,
        "bucket_number": family.j_star,
        "m": m,
    }
    rows = [["trial", "epsilon_hat", "symdiff"]]
    rows += [[i, repr(e), s] for i, (e, s) in enumerate(report.per_trial)]
    _emit(args, _payload(args, result), {"per_trial.csv": rows})
    return 0


def _cmd_verify_privacy(args) -> int:
    cls = load_query_class(args.query_class)
    p = PrivacyParams(alpha=args.alpha)
    rule = ExponentRule.parse(args.exponent)
    rng = make_rng(args.seed) if args.probes else None
    if args.postprocess == "none":
        cert = privacy_ratio_certificate(
            args.n, args.entry_cap, cls, p, args.m, rule, real_probes=args.probes, rng=rng
        )
    else:
        if args.postprocess == "first-coordinate":
            g = lambda dp: int(dp.counts[0])
        else:
            g = lambda dp: 0
        cert = postprocessing_certificate(
            g, args.n, args.entry_cap, cls, p, args.m, rule, real_probes=args.probes, rng=rng
        )
    _emit(args, _payload(args, cert.to_dict()))
    return 0


def _cmd_oracle(args) -> int:
    db = load_database(args.db)
    cls = load_query_class(args.query_class)
    p = PrivacyParams(alpha=args.alpha)
    rule = ExponentRule.parse(args.exponent)
    distribution = exact_output_distribution(db, cls, p, args.m, rule)
    result = {
        "distribution": [
            {"counts": [int(x) for x in element.counts], "probability": prob}
            for element, prob in distribution
        ]
    }
    if args.best_sparse:
        best, relative_error = best_sparse_db(db, cls, args.m)
        result["best_sparse"] = {
            "counts": [int(x) for x in best.counts],
            "relative_error": relative_error,
        }
    _emit(args, _payload(args, result))
    return 0


_COMMANDS = {
    "release": _cmd_release,
    "fsd": _cmd_fsd,
    "attack": _cmd_attack,
    "verify-privacy": _cmd_verify_privacy,
    "oracle": _cmd_oracle,
}


def run(argv) -> int:
    """Parse and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DomainTooLargeError as e:
        print(f"budget refusal: {e}", file=sys.stderr)
        return 2
    except SearchBudgetExceeded as e:
        print(f"budget refusal: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError, FamilySearchError, KeyError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
