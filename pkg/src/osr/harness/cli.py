"""Command line entry point: ``osr {regret,distinguish,gen-instance,verify-instance}``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from osr.distinguisher import (
    DistinguisherConfig,
    algorithm1_factory,
    run_distinguisher,
    separation_experiment,
    write_report_csv,
)
from osr.harness.baselines import CheatOracle, ZeroLearner
from osr.harness.experiment import (
    LEARNERS,
    STREAMS,
    ExperimentConfig,
    default_output_path,
    mean_and_stderr,
    run_experiment,
)
from osr.learner import OsrConfig
from osr.streams import (
    gen_planted_exact_cover,
    gen_uncoverable,
    pad_zero_columns,
    read_instance,
    verify_exact_cover,
    verify_no_cover,
    write_instance,
)


def read_config_file(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Keys use flag names (``kprime``, ``eta-sgd``)."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected 'key = value', got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _config_defaults(parser: argparse.ArgumentParser, path: str) -> dict:
    """File values converted with each flag's own type, for use as parser defaults."""
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, raw in read_config_file(path).items():
        if key not in actions or key in ("config", "help"):
            raise ValueError(f"{path}: unknown key {key!r}")
        action = actions[key]
        if action.type is not None:
            defaults[key] = action.type(raw)
        elif action.const is True:
            defaults[key] = raw.lower() in ("1", "true", "yes")
        else:
            defaults[key] = raw
    return defaults


# flags that must come from the command line or the config file
REQUIRED = {
    "regret": ("d", "k", "kprime", "T"),
    "distinguish": ("instance", "T"),
}


def _osr_config(args, d: int, k: int, k_prime: int, seed: int) -> OsrConfig:
    cfg = OsrConfig.with_rates(d, k, k_prime, args.T, seed, args.rates)
    overrides = {}
    if args.eta_hedge is not None:
        overrides["eta_hedge_override"] = args.eta_hedge
    if args.eta_sgd is not None:
        overrides["eta_sgd_override"] = args.eta_sgd
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _add_rate_flags(p):
    p.add_argument("--rates", choices=("scaled", "unit"), default="scaled",
                   help="step-size preset (default: scaled)")
    p.add_argument("--eta-hedge", type=float, default=None, dest="eta_hedge")
    p.add_argument("--eta-sgd", type=float, default=None, dest="eta_sgd")


def cmd_regret(args) -> int:
    regrets = []
    for r in range(args.repeat):
        seed = args.seed + r
        osr = _osr_config(args, args.d, args.k, args.kprime, seed)
        if args.out is None:
            out = default_output_path(osr)
        elif args.repeat > 1:
            p = Path(args.out)
            out = p.with_name(f"{p.stem}_s{seed}{p.suffix or '.csv'}")
        else:
            out = Path(args.out)
        cfg = ExperimentConfig(
            osr=osr, stream=args.stream, learner=args.learner, noise=args.noise,
            instance_path=args.instance, out=str(out),
        )
        rep = run_experiment(cfg)
        regrets.append(rep.regret)
        print(f"seed={seed} total_loss={rep.total_loss:.6g} comparator_loss={rep.comparator_loss:.6g} "
              f"regret={rep.regret:.6g} max_revealed={rep.max_revealed} csv={out}")
    if args.repeat > 1:
        mean, se = mean_and_stderr(regrets)
        print(f"regret mean={mean:.6g} stderr={se:.3g} over {args.repeat} seeds")
    return 0


def _learner_factory(name: str):
    if name == "algorithm1":
        return algorithm1_factory
    if name == "zero":
        return lambda cfg, rng: ZeroLearner(cfg.instance.d)
    if name == "cheat-oracle":
        return lambda cfg, rng: CheatOracle(cfg.instance.d)
    raise ValueError(f"learner {name!r} is not supported by distinguish")


def cmd_distinguish(args) -> int:
    inst, witness = read_instance(args.instance)
    k = args.k if args.k is not None else (len(witness) if witness is not None else None)
    if k is None:
        raise ValueError("instance file has no witness line; pass --k")
    k_prime = args.kprime if args.kprime is not None else min(inst.d, k + 2)
    osr = _osr_config(args, inst.d, k, k_prime, args.seed)
    cfg = DistinguisherConfig(inst, osr, seed=args.seed, threshold=args.threshold)
    factory = _learner_factory(args.learner)
    if args.uncoverable is None:
        v = run_distinguisher(cfg, factory)
        print(f"verdict: {v.label} total_loss={v.total_loss:.6g} threshold={v.threshold:.6g}")
        return 0
    other, _ = read_instance(args.uncoverable)
    report = separation_experiment(inst, other, cfg, args.trials, factory)
    print(report.summary())
    if args.report is not None:
        write_report_csv(report, args.report)
    return 0


def cmd_gen_instance(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "planted":
        inst, cert = gen_planted_exact_cover(args.m, args.k, args.extra, rng, args.zero_columns)
    else:
        if args.d is None or args.kprime is None:
            raise ValueError("--kind uncoverable requires --d and --kprime")
        inst, cert = gen_uncoverable(args.m, args.d, args.kprime, rng, args.max_tries)
    if args.pad:
        inst = pad_zero_columns(inst, args.pad)
    write_instance(args.out, inst, cert.witness.members if cert.witness is not None else None)
    print(f"wrote {args.kind} instance m={inst.m} d={inst.d} to {args.out}")
    return 0


def cmd_verify_instance(args) -> int:
    inst, witness = read_instance(args.path)
    if args.exact_cover:
        if witness is None:
            print("no witness line in instance file", file=sys.stderr)
            return 1
        ok = verify_exact_cover(inst, witness.members)
        print(f"exact cover by {list(witness.members)}: {'yes' if ok else 'no'}")
    else:
        if args.kprime is None:
            raise ValueError("--no-cover requires --kprime")
        ok = verify_no_cover(inst, args.kprime)
        print(f"no {args.kprime} sets cover all {inst.m} elements: {'yes' if ok else 'no'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regret", help="measure realized regret against the best k-sparse vector")
    p.add_argument("--config", help="key = value file; explicit flags override it")
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--kprime", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--stream", choices=STREAMS, default="stochastic")
    p.add_argument("--learner", choices=LEARNERS, default="algorithm1")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--instance", help="instance file (hardness stream)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--out", help="per-round CSV; summary goes next to it")
    _add_rate_flags(p)
    p.set_defaults(func=cmd_regret)

    p = sub.add_parser("distinguish", help="threshold a learner's loss on a hardness stream")
    p.add_argument("--config")
    p.add_argument("--instance")
    p.add_argument("--uncoverable", help="second instance; runs the separation experiment")
    p.add_argument("--T", type=int)
    p.add_argument("--k", type=int, default=None, help="default: witness size")
    p.add_argument("--kprime", type=int, default=None, help="default: k + 2")
    p.add_argument("--threshold", type=float, default=None, help="default: T / (2 m d k)")
    p.add_argument("--learner", choices=("algorithm1", "zero", "cheat-oracle"), default="algorithm1")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--report", help="CSV report for the separation experiment")
    p.add_argument("--seed", type=int, default=0)
    _add_rate_flags(p)
    p.set_defaults(func=cmd_distinguish)

    p = sub.add_parser("gen-instance", help="generate a certified set-cover instance")
    p.add_argument("--kind", choices=("planted", "uncoverable"), required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=2, help="planted cover size")
    p.add_argument("--extra", type=int, default=0, help="planted: decoy columns")
    p.add_argument("--zero-columns", type=int, default=0, dest="zero_columns")
    p.add_argument("--d", type=int, help="uncoverable: number of sets")
    p.add_argument("--kprime", type=int, help="uncoverable: cover size ruled out")
    p.add_argument("--max-tries", type=int, default=1000, dest="max_tries")
    p.add_argument("--pad", type=int, default=0, help="append all-zero columns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser("verify-instance", help="check a cover property by brute force")
    p.add_argument("path")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--exact-cover", action="store_true", dest="exact_cover")
    g.add_argument("--no-cover", action="store_true", dest="no_cover")
    p.add_argument("--kprime", type=int)
    p.set_defaults(func=cmd_verify_instance)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    subparsers = parser._subparsers._group_actions[0].choices
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    early, _ = pre.parse_known_args(argv)
    if early.config and early.command in subparsers:
        try:
            subparsers[early.command].set_defaults(
                **_config_defaults(subparsers[early.command], early.config)
            )
        except (ValueError, OSError) as err:
            print(f"osr {early.command}: error: {err}", file=sys.stderr)
            return 1

    args = parser.parse_args(argv)
    missing = [f"--{name}" for name in REQUIRED.get(args.command, ()) if getattr(args, name) is None]
    if missing:
        subparsers[args.command].error(f"missing required option(s): {', '.join(missing)}")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as err:
        print(f"osr {args.command}: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
