"""Command-line entry point: ``hotspot-topics <subcommand> ...``.

Exit status is 0 on success, 1 on bad input and 2 on internal errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import evaluation as ev
from .data import records_of
from .errors import InputError
from .grid import GridConfig
from .io import (load_counts_csv, load_latlon_csv, load_model, save_model, write_counts_csv,
                 write_field_csv, write_hotspots_csv, write_json, write_pr_csv)
from .prediction import assign_test_topics, extract_hotspots, median_smooth, predict_target_field
from .synthetic import SynthSpec, generate_synthetic, standard_spec
from .topic_model import Hyperparameters, TrainedModel, batch_train

log = logging.getLogger("hotspot_topics")

SEED_ENV = "HOTSPOT_SEED"


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _load_dataset(args):
    if getattr(args, "latlon", False):
        return load_latlon_csv(args.input, args.ref_lat)
    return load_counts_csv(args.input)


def _add_input(p):
    p.add_argument("--input", required=True, help="per-sample counts CSV")
    p.add_argument("--latlon", action="store_true", help="input uses lat_deg,lon_deg instead of meters")
    p.add_argument("--ref-lat", type=float, default=None, help="projection reference latitude (degrees)")


def _add_grid(p):
    p.add_argument("--cell-size", type=float, default=5000.0, help="spatial cell edge in meters")
    p.add_argument("--time-cell", type=float, default=0.0, help="temporal cell length in seconds (0 = none)")
    p.add_argument("--depth", type=int, default=1, help="neighborhood depth")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hotspot-topics", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="train a topic model on the training split")
    _add_input(p)
    p.add_argument("--regime", default="interleaved", choices=["interleaved", "halves", "split", "all"])
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=1e-5)
    _add_grid(p)
    p.add_argument("--sweeps", type=int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-model", required=True)

    p = sub.add_parser("predict", help="predict a target-taxon field and hotspots")
    p.add_argument("--model", required=True)
    _add_input(p)
    p.add_argument("--target-taxon", type=int, required=True)
    p.add_argument("--sigma", type=float, default=25000.0)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--test-sweeps", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-field", required=True)
    p.add_argument("--out-hotspots", required=True)

    p = sub.add_parser("evaluate", help="precision-recall curves of one strategy")
    _add_input(p)
    p.add_argument("--regime", default="interleaved", choices=["interleaved", "halves", "split"])
    p.add_argument("--strategy", required=True, choices=list(ev.STRATEGIES))
    p.add_argument("--model", help="trained model (topic strategy; k-means takes K from it)")
    p.add_argument("--k", type=int, default=None, help="k-means centroids when no model is given")
    p.add_argument("--targets", default=None, help="comma-separated taxon ids (default: 8 most frequent)")
    p.add_argument("--n-hotspots", type=int, default=50)
    p.add_argument("--sigma", type=float, default=25000.0)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=1e-5)
    _add_grid(p)
    p.add_argument("--sweeps", type=int, default=50)
    p.add_argument("--test-sweeps", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-pr", required=True)
    p.add_argument("--out-report", default=None, help="optional JSON summary")

    p = sub.add_parser("sweep", help="hyperparameter grid search")
    _add_input(p)
    p.add_argument("--regime", default="interleaved", choices=["interleaved", "halves", "split"])
    p.add_argument("--grid-file", default=None, help="JSON with alphas/betas/gammas/sigmas/...")
    p.add_argument("--budget", type=int, default=None, help="maximum number of configurations")
    _add_grid(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-report", required=True)

    p = sub.add_parser("synth", help="write a synthetic survey CSV")
    p.add_argument("--spec-file", default=None, help="JSON synthetic spec (default: standard fixture)")
    p.add_argument("--seed", type=int, default=None, help="override the generator seed")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-truth", default=None, help="optional JSON with the generating phi/theta")
    return parser


def _grid(args) -> GridConfig:
    return GridConfig(args.cell_size, args.time_cell, args.depth)


def _seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _targets(args, dataset):
    if not args.targets:
        return dataset.most_frequent_taxa(8)
    try:
        return [int(t) for t in args.targets.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"--targets must be comma-separated integers, got {args.targets!r}") from None


def cmd_train(args):
    ds = _load_dataset(args)
    seed = _seed(args)
    if args.regime == "all":
        train = ds.samples
    else:
        train, _ = ev.split_samples(ds.samples, args.regime)
    h = Hyperparameters(args.alpha, args.beta, args.gamma)
    state, _, _ = batch_train(records_of(train), h, _grid(args), np.random.default_rng(seed), args.sweeps,
                              vocab_size=ds.vocab_size, rng_seed=seed)
    model = TrainedModel.from_state(state, h, ds.vocab_names)
    save_model(model, args.out_model)
    print(f"trained on {len(train)} samples / {model.n_observations} observations: K={model.n_topics}")


def cmd_predict(args):
    model = load_model(args.model)
    v = args.target_taxon
    if not 0 <= v < model.vocab_size:
        raise InputError(f"taxon id out of range: {v} not in [0, {model.vocab_size})")
    if not 0.0 <= args.tau <= 1.0:
        raise InputError("--tau must lie in [0, 1]")
    if args.sigma < 0:
        raise InputError("--sigma must be >= 0")
    ds = _load_dataset(args)
    if ds.vocab_size != model.vocab_size:
        raise InputError(f"input has {ds.vocab_size} taxa but the model has {model.vocab_size}")
    recs = records_of(ds.samples, exclude_taxon=v)
    theta = assign_test_topics(model, recs, v, np.random.default_rng(_seed(args)), args.test_sweeps)
    field = median_smooth(predict_target_field(theta, model.phi(), v), args.sigma, model.grid)
    hot = extract_hotspots(field, args.tau)
    write_field_csv(field, args.out_field)
    write_hotspots_csv(hot, args.out_hotspots)
    print(f"{len(field)} cells, {len(hot)} hotspots")


def cmd_evaluate(args):
    ds = _load_dataset(args)
    seed = _seed(args)
    train, test = ev.split_samples(ds.samples, args.regime)
    targets = _targets(args, ds)
    model = load_model(args.model) if args.model else None
    if model is not None and model.vocab_size != ds.vocab_size:
        raise InputError(f"input has {ds.vocab_size} taxa but the model has {model.vocab_size}")
    grid = model.grid if model is not None else _grid(args)
    report = {"strategy": args.strategy, "regime": ev.SplitRegime.parse(args.regime).value,
              "targets": targets, "n_hotspots": args.n_hotspots, "sigma": args.sigma}
    if args.strategy == "topic":
        if model is None:
            h = Hyperparameters(args.alpha, args.beta, args.gamma)
            state, _, _ = batch_train(records_of(train), h, grid, np.random.default_rng(seed), args.sweeps,
                                      vocab_size=ds.vocab_size, rng_seed=seed)
            model = TrainedModel.from_state(state, h, ds.vocab_names)
        (res,) = ev.evaluate_topic(model, test, targets, [args.sigma], args.n_hotspots, seed, args.test_sweeps)
        report["K"] = model.n_topics
    elif args.strategy == "nn":
        (res,) = ev.evaluate_nn(train, test, targets, [args.sigma], args.n_hotspots, grid)
    else:
        if model is not None:
            k, source = model.n_topics, "model"
        elif args.k is not None:
            k, source = args.k, "--k"
        else:
            raise InputError("k-means needs --model or --k")
        (res,) = ev.evaluate_kmeans(train, test, targets, [args.sigma], args.n_hotspots, grid, k, seed)
        report["K"] = k
        report["K_source"] = source
        print(f"k-means with K={k} (from {source})")
    rows = [(args.strategy, v, p) for v, pts in res.per_taxon.items() for p in pts]
    rows += [(args.strategy, "all", p) for p in res.aggregated]
    write_pr_csv(rows, args.out_pr)
    report["auc"] = res.auc
    report["per_taxon_auc"] = {str(k): a for k, a in res.per_taxon_auc.items()}
    if args.out_report:
        write_json(report, args.out_report)
    print(f"{args.strategy}: aggregated AUC-PR {res.auc:.4f}")


def cmd_sweep(args):
    ds = _load_dataset(args)
    if args.grid_file:
        try:
            with open(args.grid_file) as f:
                spec = json.load(f)
        except OSError as e:
            raise InputError(f"cannot open {args.grid_file}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise InputError(f"{args.grid_file}: invalid JSON ({e})") from None
        sweep = ev.SweepConfig.from_dict(spec)
    else:
        sweep = ev.SweepConfig()
    report = ev.run_sweep(ds, args.regime, sweep, rng=np.random.default_rng(_seed(args)),
                          grid=_grid(args), budget=args.budget)
    write_json(report, args.out_report)
    best = report["best"]
    print(f"best: alpha={best['alpha']} beta={best['beta']} gamma={best['gamma']} "
          f"sigma={best['sigma']} K={best['K_learned']} AUC={best['auc']:.4f}")


def cmd_synth(args):
    if args.spec_file:
        try:
            with open(args.spec_file) as f:
                d = json.load(f)
        except OSError as e:
            raise InputError(f"cannot open {args.spec_file}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise InputError(f"{args.spec_file}: invalid JSON ({e})") from None
        spec = SynthSpec.from_dict(d)
    else:
        spec = standard_spec()
    if args.seed is not None:
        spec = SynthSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    ds, truth = generate_synthetic(spec)
    write_counts_csv(ds, args.out_csv)
    if args.out_truth:
        write_json({"spec": spec.to_dict(), "phi": truth.phi.tolist(), "theta": truth.theta.tolist()},
                   args.out_truth)
    print(f"wrote {len(ds.samples)} samples")


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate,
            "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("missing subcommand")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
