"""Command-line interface.

Exit status: 0 on success, 1 for usage or configuration errors, 2 when the
run itself fails (I/O, numerical failure).

Experiment settings resolve in this order, later winning: built-in desk
defaults, ``--paper-scale``, the ``--config`` file, explicit flags.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import calibrate_dataset
from .experiments import (
    QQ_DEFAULTS,
    BiasStudyConfig,
    ConfigError,
    SweepConfig,
    config_dict,
    prevalence_sweep,
    qq_experiment,
    tree_bias_study,
)
from .resampling import SamplingSpec, undersample
from .synthetic_data import generate_dataset, read_dataset_csv, write_dataset_csv
from .tree_learning import fit_forest, load_forest, predict_forest, save_forest

log = logging.getLogger("imbtrees")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# config file ----------------------------------------------------------------

def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _convert(field: dataclasses.Field, text: str):
    kind = str(field.type)
    try:
        if kind.startswith("tuple[int"):
            return tuple(int(v) for v in text.split(",") if v.strip())
        if kind.startswith("tuple[float"):
            return tuple(float(v) for v in text.split(",") if v.strip())
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError([f"{field.name}: cannot parse {text!r}"]) from exc
    raise ConfigError([f"{field.name}: unsupported field type {kind}"])


def resolve_config(cls, base, file_values: dict[str, str], flag_values: dict[str, object]):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(file_values) - set(fields))
    if unknown:
        raise ConfigError([f"{k}: unknown configuration key" for k in unknown])
    updates = {k: _convert(fields[k], v) for k, v in file_values.items()}
    updates.update({k: v for k, v in flag_values.items() if v is not None})
    cfg = dataclasses.replace(base, **updates)
    return cfg.validate()


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write_meta(out: Path, command: str, payload: dict) -> None:
    doc = {"command": command, "imbtrees_version": __version__, **payload}
    Path(f"{out}.meta.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# commands -------------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.n is None or args.k is None or args.seed is None or args.out is None:
        raise UsageError("generate requires --n, --k, --seed and --out")
    if args.n < 0:
        raise UsageError("--n must be >= 0")
    log.info("generate n=%d k=%r seed=%d", args.n, args.k, args.seed)
    data = generate_dataset(args.n, args.k, args.seed)
    write_dataset_csv(data, args.out)
    prevalence = data.n_pos / data.n if data.n else float("nan")
    print(f"n={data.n} positives={data.n_pos} prevalence={prevalence:.6g}")
    return 0


def cmd_fit(args) -> int:
    if args.data is None or args.out is None or args.mtry is None:
        raise UsageError("fit requires --data, --mtry and --out")
    seed = 0 if args.seed is None else args.seed
    data = read_dataset_csv(args.data)
    realized = None
    if args.beta is not None:
        data = undersample(data, SamplingSpec(args.beta, seed))
        realized = data.realized_beta
    log.info("fit mtry=%d n_trees=%d bootstrap=%s beta=%s seed=%d rows=%d",
             args.mtry, args.n_trees, not args.no_bootstrap, args.beta, seed, data.n)
    forest = fit_forest(data, args.mtry, args.n_trees, not args.no_bootstrap, seed, args.threads)
    save_forest(forest, args.out)
    meta = {"data": str(args.data), "mtry": args.mtry, "n_trees": args.n_trees,
            "bootstrap": not args.no_bootstrap, "seed": seed, "beta": args.beta,
            "realized_beta": realized, "training_rows": data.n}
    _write_meta(args.out, "fit", meta)
    print(f"trees={forest.n_trees} training_rows={data.n}"
          + ("" if realized is None else f" realized_beta={realized!r}"))
    return 0


def cmd_predict(args) -> int:
    if args.model is None or args.data is None or args.out is None:
        raise UsageError("predict requires --model, --data and --out")
    forest = load_forest(args.model)
    data = read_dataset_csv(args.data)
    scores = predict_forest(forest, data.features, args.threads) if data.n else np.empty(0)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["score", "label"] + (["true_prob"] if data.true_probs is not None else [])
        writer.writerow(header)
        for i in range(data.n):
            row = [repr(float(scores[i])), int(data.labels[i])]
            if data.true_probs is not None:
                row.append(repr(float(data.true_probs[i])))
            writer.writerow(row)
    if data.n:
        print(f"rows={data.n} mean_score={scores.mean():.6g}")
    return 0


def cmd_calibrate(args) -> int:
    if args.input is None or args.beta is None or args.out is None:
        raise UsageError("calibrate requires --in, --beta and --out")
    with open(args.input, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "score" not in header:
            raise UsageError(f"{args.input}: missing 'score' column")
        col = header.index("score")
        records, scores = [], []
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(header):
                raise UsageError(f"{args.input}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                value = float(rec[col])
            except ValueError:
                raise UsageError(f"{args.input}:{lineno}: score {rec[col]!r} is not a number")
            if not 0 <= value <= 1:
                raise UsageError(f"{args.input}:{lineno}: score {value!r} outside [0, 1]")
            records.append(rec)
            scores.append(value)
    if not records:
        raise UsageError(f"{args.input}: no data rows")
    calibrated, estimate = calibrate_dataset(scores, args.beta)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header + ["calibrated"])
        for rec, value in zip(records, calibrated):
            writer.writerow(rec + [repr(float(value))])
    print(f"prevalence_estimate={estimate!r}")
    return 0


def _experiment(args, cls, base, flags: dict, command: str, run) -> int:
    if args.out is None:
        raise UsageError(f"{command} requires --out")
    if args.paper_scale:
        base = base.paper_scale()
    file_values = read_config_file(args.config) if args.config else {}
    flags = dict(flags, seed=args.seed)
    cfg = resolve_config(cls, base, file_values, flags)
    log.info("%s config %s", command, json.dumps(config_dict(cfg), sort_keys=True))
    table = run(cfg)
    table.write_csv(args.out)
    _write_meta(args.out, command, {"config": config_dict(cfg), "results": table.meta})
    print(f"wrote {len(table)} rows to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    flags = dict(n_train=args.n_train, n_test=args.n_test, k=args.k, betas=args.betas,
                 mtry_values=args.mtry, n_trees=args.n_trees, n_mc=args.n_mc)
    return _experiment(args, SweepConfig, SweepConfig(), flags, "sweep",
                       lambda cfg: prevalence_sweep(cfg, args.threads))


def cmd_qq(args) -> int:
    betas = None if args.beta is None else (args.beta,)
    flags = dict(n_train=args.n_train, n_test=args.n_test, k=args.k, betas=betas,
                 mtry_values=args.mtry, n_trees=args.n_trees)
    base = SweepConfig(n_trees=500, **QQ_DEFAULTS)
    return _experiment(args, SweepConfig, base, flags, "qq",
                       lambda cfg: qq_experiment(cfg, args.levels, args.threads))


def cmd_bias(args) -> int:
    flags = dict(prevalence_targets=args.targets, n_train=args.n_train, n_test=args.n_test,
                 n_replicates=args.replicates, n_mc=args.n_mc)
    return _experiment(args, BiasStudyConfig, BiasStudyConfig(), flags, "bias",
                       lambda cfg: tree_bias_study(cfg, args.threads))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="imbtrees", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def shared(p, *, experiment=False):
        p.add_argument("--seed", type=int, default=None if not experiment else 0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", type=Path)
        p.add_argument("--config", type=Path, help="key = value file; flags override it")
        p.add_argument("--paper-scale", action="store_true",
                       help="1e6 rows per dataset and 500 trees")
        return p

    p = shared(sub.add_parser("generate", help="simulate a dataset"))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=float)
    p.set_defaults(func=cmd_generate)

    p = shared(sub.add_parser("fit", help="fit a random forest to a dataset CSV"))
    p.add_argument("--data", type=Path)
    p.add_argument("--mtry", type=int)
    p.add_argument("--n-trees", type=int, default=500)
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--beta", type=float, help="undersample negatives at this rate first")
    p.set_defaults(func=cmd_fit)

    p = shared(sub.add_parser("predict", help="score a dataset CSV with a saved forest"))
    p.add_argument("--model", type=Path)
    p.add_argument("--data", type=Path)
    p.set_defaults(func=cmd_predict)

    p = shared(sub.add_parser("calibrate", help="add a calibrated column to a score CSV"))
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--beta", type=float)
    p.set_defaults(func=cmd_calibrate)

    p = shared(sub.add_parser("sweep", help="prevalence estimate over sampling rates and mtry"), experiment=True)
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--betas", type=_float_list)
    p.add_argument("--mtry", type=_int_list)
    p.add_argument("--n-trees", type=int)
    p.add_argument("--n-mc", type=int)
    p.set_defaults(func=cmd_sweep)

    p = shared(sub.add_parser("qq", help="prediction quantiles of two forests before/after calibration"),
               experiment=True)
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--mtry", type=_int_list)
    p.add_argument("--n-trees", type=int)
    p.add_argument("--levels", type=int, default=1000)
    p.set_defaults(func=cmd_qq)

    p = shared(sub.add_parser("bias", help="single-tree overprediction across imbalance levels"),
               experiment=True)
    p.add_argument("--targets", type=_float_list)
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--n-mc", type=int)
    p.set_defaults(func=cmd_bias)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
        stream=sys.stderr,
    )
    if args.threads < 1:
        print("imbtrees: error: --threads must be >= 1", file=sys.stderr)
        return 1
    log.info("imbtrees %s %s threads=%d", __version__, args.command, args.threads)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"imbtrees {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"imbtrees {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
