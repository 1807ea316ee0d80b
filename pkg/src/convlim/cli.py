"""Command-line front end.

    convlim check --family unit_center_power --c 1 --alpha 2 --horizon 100 --p inf
    convlim check --family constant --mask 1,1 --horizon 50
    convlim experiment --config cfg.json
    convlim verify
    convlim repr-test --seed 3

Exit codes: 0 on success (criterion satisfied, checks passed), 1 when a
verdict is not ``satisfied`` or a check fails, 2 on usage errors.
"""

import argparse
import sys

import numpy as np

from . import criteria
from .decay import DecayDeclaration
from .experiment import ExperimentConfig, run_depth_experiment
from .families import FAMILIES, family_decays, generate_family
from .verify import random_network, representation_error, run_all


def _family_spec(args):
    spec = {"name": args.family}
    if args.family == "unit_center_power":
        spec.update(c=args.c, alpha=args.alpha)
    elif args.family == "scaled_center":
        spec.update(lam_c=args.lam_c, lam_alpha=args.lam_alpha, tail_c=args.c,
                    tail_alpha=args.alpha, bias_c=args.bias_c, bias_alpha=args.bias_alpha)
    elif args.family == "constant":
        if args.mask is None:
            raise ValueError("--family constant needs --mask")
        spec["mask"] = [float(t) for t in args.mask.split(",")]
    elif args.family == "custom_file":
        if args.masks_file is None:
            raise ValueError("--family custom_file needs --masks-file")
        spec["path"] = args.masks_file
    return spec


def _cmd_check(args):
    spec = _family_spec(args)
    masks, biases = generate_family(spec, args.d, args.horizon)
    decays = {dec.applies_to: dec for dec in family_decays(spec)}
    for target, text in (("perturbation_norms", args.decay), ("bias_norms", args.bias_decay),
                         ("lambda", args.lambda_decay)):
        if text is not None:
            decays[target] = DecayDeclaration.parse(text, target)
    decays = list(decays.values())

    if args.criterion == "unit_center":
        report = criteria.check_cnn_unit_center(masks, biases, args.p, decays)
    elif args.criterion == "dnn":
        from .conv import toeplitz
        widths = [args.d]
        layers = []
        for w, b in zip(masks, biases):
            layers.append((toeplitz(w, widths[-1]), b))
            widths.append(widths[-1] + w.size - 1)
        report = criteria.check_dnn_sufficient(layers, args.p, decays)
    else:
        report = criteria.check_cnn_general(masks, biases, args.p, decays)
    print(report.to_json(indent=2))
    return 0 if report.satisfied else 1


def _cmd_experiment(args):
    config = ExperimentConfig.from_json(args.config)
    if args.output is not None:
        config.output = args.output
    rows = run_depth_experiment(config)
    print(f"wrote {len(rows)} rows to {config.output}")
    return 0


def _cmd_verify(args):
    results = run_all(seed=args.seed, scale=args.scale)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return 0 if ok else 1


def _cmd_repr_test(args):
    rng = np.random.default_rng(args.seed)
    net = random_network(rng, d=args.d, depth=args.depth, max_width=args.max_width)
    err = representation_error(net, rng.random((net.d, args.points)))
    print(f"widths {net.widths(net.horizon)}  max representation error {err:.3e}")
    return 0 if err <= args.tol else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="convlim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    chk = sub.add_parser("check", help="run a convergence criterion on a mask family")
    chk.add_argument("--family", choices=FAMILIES, required=True)
    chk.add_argument("--c", type=float, default=1.0, help="tail coefficient")
    chk.add_argument("--alpha", type=float, default=2.0, help="tail decay exponent")
    chk.add_argument("--lam-c", type=float, default=0.5)
    chk.add_argument("--lam-alpha", type=float, default=2.0)
    chk.add_argument("--bias-c", type=float, default=0.0)
    chk.add_argument("--bias-alpha", type=float, default=2.0)
    chk.add_argument("--mask", help="comma-separated mask for --family constant")
    chk.add_argument("--masks-file", help="mask-sequence JSON for --family custom_file")
    chk.add_argument("--horizon", type=int, default=100)
    chk.add_argument("--d", type=int, default=1)
    chk.add_argument("--p", default="inf")
    chk.add_argument("--criterion", choices=("general", "unit_center", "dnn"), default="general")
    chk.add_argument("--decay", help="perturbation tail law, e.g. power:1:2 or none")
    chk.add_argument("--bias-decay")
    chk.add_argument("--lambda-decay")
    chk.set_defaults(func=_cmd_check)

    exp = sub.add_parser("experiment", help="run a depth-growth experiment to CSV")
    exp.add_argument("--config", required=True)
    exp.add_argument("--output", help="override the configured CSV path")
    exp.set_defaults(func=_cmd_experiment)

    ver = sub.add_parser("verify", help="run the randomized property checks")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--scale", type=float, default=1.0, help="multiplier on case counts")
    ver.set_defaults(func=_cmd_verify)

    rep = sub.add_parser("repr-test", help="representation error of one random network")
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--d", type=int, default=3)
    rep.add_argument("--depth", type=int, default=6)
    rep.add_argument("--max-width", type=int, default=8)
    rep.add_argument("--points", type=int, default=100)
    rep.add_argument("--tol", type=float, default=1e-9)
    rep.set_defaults(func=_cmd_repr_test)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"convlim {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
