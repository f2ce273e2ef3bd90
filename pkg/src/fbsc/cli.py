"""Command line: ``fbsc train|score|eval|gen``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline, synthgen
from .config import RunConfig
from .evaluation import format_sweep


def _alphas(text: str) -> list[int]:
    try:
        return [int(a) for a in text.split(",") if a.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"alphas must be comma separated integers: {text!r}") from exc


def cmd_train(args) -> int:
    if args.resume:
        path = pipeline.resume_train(args.resume, steps=args.steps)
    else:
        cfg = RunConfig.load(args.config)
        if args.data:
            cfg.data_root = args.data
        if args.out:
            cfg.out_dir = args.out
        if args.steps is not None:
            cfg.optim.steps = args.steps
        path = pipeline.run_train(cfg)
    print(path)
    return 0


def cmd_score(args) -> int:
    modes = ["fonly"] if args.f_only else ["fb"]
    if args.both:
        modes = ["fb", "fonly"]
    out = args.out or str(Path(args.ckpt).with_name("scores"))
    path = pipeline.score_dataset(args.ckpt, args.data, args.alphas, out, modes=modes, normalize=args.normalize)
    print(path)
    return 0


def cmd_eval(args) -> int:
    names = args.names or [Path(d).name for d in args.dumps]
    if len(names) != len(args.dumps) or len(set(names)) != len(names):
        raise SystemExit("--names needs one distinct name per --dumps directory")
    if len(args.dumps) == 1:
        print(format_sweep(pipeline.evaluate_dumps(args.dumps[0], args.data, out_dir=args.out)))
        return 0
    # several checkpoints side by side, e.g. two gamma settings
    paired = {}
    for name, dumps in zip(names, args.dumps):
        out = None if args.out is None else Path(args.out) / name
        for scorer, table in pipeline.evaluate_dumps(dumps, args.data, out_dir=out).items():
            paired[f"{name} {scorer}"] = table
    print(format_sweep(paired))
    if args.out is not None:
        Path(args.out, "sweep.txt").write_text(format_sweep(paired) + "\n")
    return 0


def cmd_gen(args) -> int:
    spec = synthgen.benchmark(args.benchmark)
    if args.seed is not None:
        spec.seed = args.seed
    synthgen.generate(spec, args.out)
    print(synthgen.tree_checksum(args.out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbsc", description="object-centric video anomaly detection and anticipation")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train the scene encoder and both predictors")
    t.add_argument("--config", help="run.toml")
    t.add_argument("--data", help="override data_root")
    t.add_argument("--out", help="override out_dir")
    t.add_argument("--steps", type=int, help="override the number of predictor steps")
    t.add_argument("--resume", help="continue from a checkpoint")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("score", help="write per-frame score dumps for the test split")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--alphas", type=_alphas, default=[1, 2, 3, 4, 5, 6])
    s.add_argument("--f-only", action="store_true", help="forward-only anticipation scorer")
    s.add_argument("--both", action="store_true", help="write both scorers")
    s.add_argument("--normalize", action="store_true", help="per-video min-max normalisation")
    s.add_argument("--out")
    s.set_defaults(func=cmd_score)

    e = sub.add_parser("eval", help="frame-level AUC of score dumps")
    e.add_argument("--dumps", required=True, nargs="+", help="one or more score dump directories")
    e.add_argument("--names", nargs="+", help="row labels for several dump directories")
    e.add_argument("--data", required=True)
    e.add_argument("--out", help="directory for JSON reports and plots")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("gen", help="generate a synthetic benchmark")
    g.add_argument("--benchmark", required=True, choices=["basic", "scenedep", "anticipate"])
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "train" and not (args.config or args.resume):
        parser.error("train needs --config or --resume")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
