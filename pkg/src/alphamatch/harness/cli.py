"""Command line entry point: ``alphamatch run | verify | gen-data``.

Exit codes: 0 success, 1 invalid spec or arguments, 2 a verification suite
failed, 3 every run aborted.
"""

import argparse
import json
import os
import sys
from importlib import resources

from .. import verification
from ..data import write_csv
from ..errors import DomainError, SpecError
from .config import apply_overrides, build_spec, load_raw
from .emit import emit_all
from .runner import load_split, run_experiment

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_ABORTED = 0, 1, 2, 3


def bundled_spec(name):
    """Path of a spec shipped with the package, or ``None``."""
    path = resources.files("alphamatch").joinpath("specs", f"{name}.yaml")
    return str(path) if path.is_file() else None


def _spec_path(name):
    if os.path.exists(name):
        return name
    return bundled_spec(name) or name


def _load(args):
    raw = load_raw(_spec_path(args.spec))
    raw = apply_overrides(
        raw,
        alpha=getattr(args, "alpha", None),
        beta=getattr(args, "beta", None),
        n_aug=getattr(args, "n_aug", None),
        tau=getattr(args, "tau", None),
        method=getattr(args, "method", None),
        epochs=getattr(args, "epochs", None),
        seeds=args.seed,
        output=args.out,
        **({"lambda": args.lam} if getattr(args, "lam", None) is not None else {}),
    )
    return build_spec(raw)


def cmd_run(args):
    spec = _load(args)
    results = run_experiment(spec, jobs=args.jobs)
    rows = emit_all(spec, results, spec.output)
    for row in rows:
        mean = "-" if row.mean is None else f"{row.mean:.4f}"
        std = "-" if row.std is None else f"{row.std:.4f}"
        print(f"{row.name:24s} mean={mean} std={std} runs={row.runs} aborted={row.aborted}")
    print(f"wrote {spec.output}")
    if results and all(r.metrics.aborted for r in results):
        return EXIT_ABORTED
    return EXIT_OK


def cmd_verify(args):
    names = verification.SUITES if args.suite == "all" else (args.suite,)
    reports = [verification.run_suite(n) for n in names]
    text = json.dumps(reports if len(reports) > 1 else reports[0], indent=2, sort_keys=True)
    print(text)
    if args.out:
        os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_VERIFY


def cmd_gen_data(args):
    spec = _load(args)
    data_seeds = sorted({spec.dataset.data_seed(s) for s in spec.seeds})
    for s in data_seeds:
        labeled, unlabeled, test = load_split(spec.dataset, s)
        d = os.path.join(spec.output, "data", f"seed_{s}")
        os.makedirs(d, exist_ok=True)
        write_csv(os.path.join(d, "labeled.csv"), labeled.xs, labeled.ys)
        write_csv(os.path.join(d, "unlabeled.csv"), unlabeled.xs)
        write_csv(os.path.join(d, "test.csv"), test.xs, test.ys)
        print(f"seed {s}: {len(labeled)} labeled, {len(unlabeled)} unlabeled, {len(test)} test -> {d}")
    return EXIT_OK


def _add_common(p):
    p.add_argument("spec", help="path to a YAML spec, or the name of a bundled one (default, desk_moons, instability)")
    p.add_argument("--seed", type=int, action="append", help="run seed (repeatable); replaces the spec's seeds")
    p.add_argument("--out", help="output directory (overrides the spec and $ALPHAMATCH_OUT)")


def build_parser():
    parser = argparse.ArgumentParser(prog="alphamatch", description="AlphaMatch experiments and self-checks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train every trainer in a spec over its seeds")
    _add_common(run)
    run.add_argument("--alpha", type=float)
    run.add_argument("--beta", type=float)
    run.add_argument("--lambda", dest="lam", type=float)
    run.add_argument("--n-aug", dest="n_aug", type=int)
    run.add_argument("--tau", type=float)
    run.add_argument("--method")
    run.add_argument("--epochs", type=int)
    run.add_argument("--jobs", type=int, default=None, help="worker processes (default: one per run, capped at CPU count)")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run a numerical self-check suite")
    ver.add_argument("suite", choices=verification.SUITES + ("all",))
    ver.add_argument("--out", help="also write the JSON report here")
    ver.set_defaults(func=cmd_verify)

    gen = sub.add_parser("gen-data", help="write the labeled/unlabeled/test CSVs a spec would use")
    _add_common(gen)
    gen.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except (SpecError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
