"""Command-line interface: ``nsdpp {train,eval,generate,diagnose}``.

Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure, 4 diagnostic failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, data, diagnostics, evaluation, experiments, synthetic, trainer
from .errors import CapabilityError, ConfigurationError, DataError, NumericalError
from .kernel import DEFAULT_EPSILON, assemble_L, marginal_kernel, pair_correlations, pair_volumes

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL, EXIT_DIAGNOSTIC = 0, 1, 2, 3, 4

log = logging.getLogger("nsdpp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def artifact_version() -> str:
    """Package version plus a short hash of the package sources."""
    h = hashlib.sha256()
    for src in sorted(Path(__file__).parent.glob("*.py")):
        h.update(src.name.encode())
        h.update(src.read_bytes())
    return f"{__version__}+{h.hexdigest()[:12]}"


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    return value


def write_manifest(args, config: dict, inputs: list, outputs: list, elapsed: float) -> None:
    """Record everything needed to rerun the command; ``timings`` is the only volatile field."""
    body = dict(
        command=args.command,
        config={k: _jsonable(v) for k, v in sorted(config.items())},
        seed=getattr(args, "seed", None),
        inputs={str(p): _sha256(p) for p in inputs if p is not None},
        outputs=[str(p) for p in outputs],
        version=artifact_version(),
    )
    body["run_hash"] = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
    body["timings"] = {"wall_seconds": round(elapsed, 6)}
    text = json.dumps(body, indent=2, sort_keys=True) + "\n"
    if args.manifest is not None:
        Path(args.manifest).write_text(text, encoding="utf-8")
    else:
        sys.stderr.write(text)


def _split(args):
    ds = data.load(args.data, args.max_basket_size)
    return data.split(ds, train_frac=args.train_frac, seed=args.seed)


# ---- train -------------------------------------------------------------------------------

_TRAIN_FLAGS = dict(rank_sym="D", rank_nonsym="D_prime", alpha="alpha", beta="beta",
                    gamma="gamma", epsilon="epsilon", lr="learning_rate",
                    max_epochs="max_epochs", tol="convergence_rel_tol", init_scale="init_scale")


def train_config(args) -> trainer.TrainConfig:
    """Preset (if any) overridden by explicitly given flags."""
    cfg = experiments.preset(args.preset) if args.preset else trainer.TrainConfig()
    overrides = {field: getattr(args, flag) for flag, field in _TRAIN_FLAGS.items()
                 if getattr(args, flag) is not None}
    overrides.update(seed=args.seed, symmetric_only=args.symmetric_only,
                     mean_mode=not args.sum_objective)
    return replace(cfg, **overrides)


def cmd_train(args) -> int:
    cfg = train_config(args)
    ds = _split(args)
    trace = trainer.fit(cfg, ds)
    out = Path(args.out)
    trainer.save_checkpoint(trace.final_params, out)
    trace.to_tsv(f"{out}.trace.tsv")
    data.write_split_manifest(ds, f"{out}.splits.tsv")
    print(f"epochs={trace.epochs_run}")
    print(f"converged={trace.converged}")
    print(f"final_validation_loglik={trace.epochs[-1].validation_loglik!r}")
    args._outputs = [out, f"{out}.trace.tsv", f"{out}.splits.tsv"]
    args._config = asdict(cfg.resolve_rank(ds))
    args._inputs = [args.data]
    return EXIT_OK


# ---- eval --------------------------------------------------------------------------------

def _label_rows(path, ds):
    rows, missing = [], 0
    for a, b, positive in synthetic.read_labels(path):
        try:
            rows.append((ds.index_of(a), ds.index_of(b), positive))
        except KeyError:
            missing += 1
    if missing:
        log.warning("%d labelled pairs mention items absent from the data; skipped", missing)
    if not rows:
        raise DataError(f"{path}: no labelled pair refers to items in the data")
    return np.array(rows, dtype=np.int64)


def evaluate(args, params, ds) -> evaluation.EvalReport:
    L = assemble_L(params).entries
    K = marginal_kernel(L).entries
    test = ds.test
    report = evaluation.EvalReport(n_test=len(test))
    if args.metric in ("mpr", "both"):
        ranks, skipped = evaluation.percentile_ranks(L, test, args.seed, args.epsilon)
        if ranks.size == 0:
            raise DataError("no test basket could be scored")
        report.n_skipped = skipped
        report.mpr = float(ranks.mean())
        report.mpr_ci = evaluation.bootstrap_ci(np.mean, ranks, args.boot, args.seed)
    if args.metric in ("auc", "both"):
        if args.labels:
            rows = _label_rows(args.labels, ds)
            G = pair_volumes(K)
            scores = np.column_stack([G[rows[:, 0], rows[:, 1]], rows[:, 2]])
        else:
            neg = evaluation.random_negatives(test, ds.M, args.seed)
            pos_s = evaluation.subset_scores(L, test, epsilon=args.epsilon)
            neg_s = evaluation.subset_scores(L, neg, epsilon=args.epsilon)
            # each row: one positive and one negative score
            scores = np.column_stack([pos_s, neg_s])
        metric = _labelled_auc if args.labels else evaluation.paired_auc
        report.auc = metric(scores)
        report.auc_ci = evaluation.bootstrap_ci(metric, scores, args.boot, args.seed)
    if args.categories:
        cats = data.read_categories(args.categories, ds)
        report.correlation_summary = evaluation.correlation_summary(K, cats)
    if args.grid_dir:
        grid = Path(args.grid_dir)
        grid.mkdir(parents=True, exist_ok=True)
        evaluation.write_grid(pair_volumes(K), grid / "pair_volumes.tsv")
        evaluation.write_grid(pair_correlations(K), grid / "pair_correlations.tsv")
        if args.oracle_volumes:
            evaluation.write_grid(evaluation.volume_error_grid(K, _oracle_grid(args.oracle_volumes, ds)),
                                  grid / "volume_error.tsv")
        if report.correlation_summary is not None:
            names, frac = report.correlation_summary
            with (grid / "correlation_summary.tsv").open("w", encoding="utf-8") as fh:
                fh.write("\t" + "\t".join(names) + "\n")
                for name, row in zip(names, frac):
                    fh.write(name + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")
    return report


def _oracle_grid(path, ds):
    """Oracle volumes are indexed by generator item number; map them onto dataset indices."""
    G = evaluation.read_grid(path)
    try:
        idx = np.array([int(ds.item_id(i)) for i in range(ds.M)])
    except ValueError:
        raise DataError("oracle volume grids need integer item IDs") from None
    if idx.max() >= G.shape[0] or G.shape[0] != G.shape[1]:
        raise DataError(f"{path}: grid of shape {G.shape} does not cover the data's items")
    return G[np.ix_(idx, idx)]


def _labelled_auc(rows) -> float:
    labels = rows[:, 1].astype(bool)
    if labels.all() or not labels.any():
        return float("nan")
    return evaluation.auc_from_scores(rows[labels, 0], rows[~labels, 0])


def cmd_eval(args) -> int:
    params = trainer.load_checkpoint(args.model)
    ds = _split(args)
    if params.M != ds.M:
        raise DataError(f"model has M={params.M} items but the data has {ds.M}")
    text = evaluate(args, params, ds).to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    args._outputs = [p for p in (args.out, args.grid_dir) if p]
    args._config = {k: v for k, v in vars(args).items() if not k.startswith("_") and k != "func"}
    args._inputs = [args.model, args.data, args.labels, args.categories, args.oracle_volumes]
    return EXIT_OK


# ---- generate ----------------------------------------------------------------------------

_GEN_FLAGS = dict(groups="n_groups", items="M", baskets="n_baskets", basket_size="basket_size",
                  min_basket_size="min_basket_size", popularity="popularity",
                  auc_threshold="auc_threshold")


def oracle_spec(args) -> synthetic.OracleSpec:
    overrides = {field: getattr(args, flag) for flag, field in _GEN_FLAGS.items()
                 if getattr(args, flag) is not None}
    overrides["seed"] = args.seed
    if args.regime is not None:
        return synthetic.regime(args.regime, **overrides)
    return synthetic.OracleSpec(**overrides)


def cmd_generate(args) -> int:
    spec = oracle_spec(args)
    ds, labels = synthetic.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data.write(ds, out / "baskets.txt")
    with (out / "negatives.txt").open("w", encoding="utf-8") as fh:
        for b in labels.negatives:
            fh.write(",".join(map(str, b)) + "\n")
    synthetic.write_labels(labels, out / "labels.tsv")
    synthetic.write_groups(spec, out / "groups.tsv")
    evaluation.write_grid(labels.ground_truth_volume, out / "pair_volumes.tsv")
    print(f"baskets={len(ds.baskets)}")
    print(f"positive_pairs={int(labels.pair_labels.sum())}")
    print(f"negative_pairs={int((~labels.pair_labels).sum())}")
    args._outputs = [out / n for n in ("baskets.txt", "negatives.txt", "labels.tsv",
                                       "groups.tsv", "pair_volumes.tsv")]
    args._config = asdict(spec)
    args._inputs = []
    return EXIT_OK


# ---- diagnose ----------------------------------------------------------------------------

def cmd_diagnose(args) -> int:
    names = list(diagnostics.CHECKS) if args.check == "all" else [args.check]
    results = [r for name in names for r in diagnostics.CHECKS[name](args.m, args.seed)]
    text = "".join(r.to_text() + "\n" for r in results)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    args._outputs = [args.out] if args.out else []
    args._config = dict(check=args.check, m=args.m)
    args._inputs = []
    return EXIT_OK if all(r.passed for r in results) else EXIT_DIAGNOSTIC


# ---- parser ------------------------------------------------------------------------------

def _data_flags(p):
    p.add_argument("--data", type=Path, required=True, help="basket file, one comma-separated basket per line")
    p.add_argument("--seed", type=int, default=0, help="split, initialization and evaluation seed")
    p.add_argument("--max-basket-size", type=int, default=None, help="drop larger baskets")
    p.add_argument("--train-frac", type=float, default=0.8)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nsdpp", description="Learn and evaluate low-rank nonsymmetric DPPs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {artifact_version()}")
    parser.add_argument("--log-level", default="WARNING")
    parser.add_argument("--manifest", type=Path, default=None,
                        help="where to write the run manifest (default: stderr)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="fit a kernel and write a checkpoint")
    _data_flags(t)
    t.add_argument("--preset", choices=sorted(experiments.PRESETS))
    t.add_argument("--rank-sym", type=int, help="D, rank of the symmetric part")
    t.add_argument("--rank-nonsym", type=int, help="D', rank of the skew part")
    t.add_argument("--alpha", type=float)
    t.add_argument("--beta", type=float)
    t.add_argument("--gamma", type=float)
    t.add_argument("--epsilon", type=float, help=f"minor stabilizer (default {DEFAULT_EPSILON})")
    t.add_argument("--lr", type=float)
    t.add_argument("--max-epochs", type=int)
    t.add_argument("--tol", type=float, help="relative validation-change stopping tolerance")
    t.add_argument("--init-scale", type=float)
    t.add_argument("--symmetric-only", action="store_true", help="train the symmetric baseline")
    t.add_argument("--sum-objective", action="store_true",
                   help="optimize the summed rather than the per-basket mean log-likelihood")
    t.add_argument("--out", type=Path, required=True, help="checkpoint path")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score a checkpoint on the held-out split")
    _data_flags(e)
    e.add_argument("--model", type=Path, required=True)
    e.add_argument("--metric", choices=("mpr", "auc", "both"), default="both")
    e.add_argument("--labels", type=Path, help="pair-label sidecar: i<TAB>j<TAB>+/-")
    e.add_argument("--categories", type=Path, help="category sidecar: item<TAB>category")
    e.add_argument("--boot", type=int, default=1000, help="bootstrap resamples")
    e.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    e.add_argument("--grid-dir", type=Path, help="write pair grids for plotting")
    e.add_argument("--oracle-volumes", type=Path,
                   help="generator pair-volume grid; adds a model-vs-oracle error grid")
    e.add_argument("--out", type=Path, help="metrics file (default: stdout)")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("generate", help="write a synthetic dataset with pair labels")
    g.add_argument("--regime", type=int, choices=sorted(synthetic.REGIMES))
    g.add_argument("--groups", type=int)
    g.add_argument("--items", type=int)
    g.add_argument("--baskets", type=int)
    g.add_argument("--basket-size", type=int)
    g.add_argument("--min-basket-size", type=int)
    g.add_argument("--popularity", choices=("zipf", "uniform"))
    g.add_argument("--auc-threshold", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("diagnose", help="run the built-in numerical self-checks")
    d.add_argument("--check", choices=sorted(diagnostics.CHECKS) + ["all"], default="all")
    d.add_argument("--m", type=int, default=None, help="largest matrix size in sweeps")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", type=Path)
    d.set_defaults(func=cmd_diagnose)
    return parser


def _thread_limit():
    raw = os.environ.get("NSDPP_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"NSDPP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"NSDPP_THREADS must be a positive integer, got {raw!r}")
    return n


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        with threadpool_limits(limits=_thread_limit()):
            code = args.func(args)
        write_manifest(args, args._config, args._inputs, args._outputs,
                       time.perf_counter() - start)
        return code
    except (UsageError, ConfigurationError, CapabilityError) as exc:
        print(f"nsdpp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"nsdpp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"nsdpp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
