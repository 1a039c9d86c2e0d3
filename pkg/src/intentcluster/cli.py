"""Command-line front end: end-to-end runs, stage commands, estimation, and evaluation.

Summary and trace files are byte-stable for a fixed flag set and seed: they
echo every effective parameter and never embed timing, which goes to stdout.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .data import load_corpus, make_semi_split
from .encoder import load_checkpoint, save_checkpoint
from .errors import ConfigError
from .estimation import estimate_k_semi, estimate_k_unsup
from .metrics import ari, clustering_accuracy, nmi
from .pipeline import (RunConfig, RunReport, encode_corpus, pretrain_semi,
                       pretrain_unsup, run_experiment)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run_cli(argv) -> int:
    """Programmatic entry point; returns the process exit status."""
    return main(argv)


def emit_report(report: RunReport, out_dir) -> dict:
    """Write summary.txt, trace.csv, and assignment.tsv under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "summary": out / "summary.txt",
        "trace": out / "trace.csv",
        "assignment": out / "assignment.tsv",
    }
    lines = [f"mode={report.mode}", f"seed={report.seed}"]
    lines += [f"{key}={value!r}" for key, value in report.config.items()]
    lines += [
        f"n_train={report.n_train}",
        f"n_test={report.n_test}",
        f"k_used={report.k_used}",
        f"estimated_k={report.estimated_k}",
        f"iterations={report.iterations}",
        f"converged={report.converged}",
        f"final_delta={report.delta_trace[-1]!r}" if report.records else "final_delta=None",
        f"align_identity_fraction={report.align_identity_fraction!r}",
        f"nmi={report.metrics['nmi']:.2f}",
        f"ari={report.metrics['ari']:.2f}",
        f"acc={report.metrics['acc']:.2f}",
    ]
    paths["summary"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    rows = ["iteration,delta,objective,align_identity"]
    rows += [f"{r.iteration},{r.delta!r},{r.objective!r},{int(r.align_identity)}"
             for r in report.records]
    paths["trace"].write_text("\n".join(rows) + "\n", encoding="utf-8")

    body = "".join(f"{i}\t{c}\n" for i, c in enumerate(report.final_assignment))
    paths["assignment"].write_text(body, encoding="utf-8")
    return paths


def _cmd_run(args) -> int:
    seeds = _parse_seeds(args.seed)
    base_train = load_corpus(args.train)
    test = _load_eval_corpus(args, base_train)
    out_root = Path(args.out)
    per_seed = []
    for seed in seeds:
        config = _config_from_args(args, seed)
        rng = np.random.default_rng(seed)
        train = base_train
        if args.mode == "semi":
            train = make_semi_split(train, args.kcr, args.labeled_ratio, rng)
        report = run_experiment(train, test, config, args.mode, rng)
        target = out_root / f"seed-{seed}" if len(seeds) > 1 else out_root
        emit_report(report, target)
        per_seed.append(report)
        print(f"seed={seed} nmi={report.metrics['nmi']:.2f} ari={report.metrics['ari']:.2f} "
              f"acc={report.metrics['acc']:.2f} iterations={report.iterations} "
              f"wall={report.wall_clock_s:.1f}s")
    if len(per_seed) > 1:
        _write_aggregate(per_seed, out_root / "aggregate.txt")
        for name in ("nmi", "ari", "acc"):
            vals = [r.metrics[name] for r in per_seed]
            print(f"{name} mean={np.mean(vals):.4f} std={np.std(vals):.4f}")
    return 0


def _cmd_pretrain(args) -> int:
    seeds = _parse_seeds(args.seed)
    if len(seeds) != 1:
        raise ConfigError("pretrain takes a single seed")
    config = _config_from_args(args, seeds[0])
    rng = np.random.default_rng(seeds[0])
    train = load_corpus(args.train)
    if args.mode == "semi":
        train = make_semi_split(train, args.kcr, args.labeled_ratio, rng)
        params = pretrain_semi(train, config, rng)
    else:
        params = pretrain_unsup(train, config, rng)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(params, out)
    print(f"checkpoint written to {out}")
    return 0


def _cmd_train(args) -> int:
    seeds = _parse_seeds(args.seed)
    if len(seeds) != 1:
        raise ConfigError("train takes a single seed")
    config = _config_from_args(args, seeds[0])
    rng = np.random.default_rng(seeds[0])
    train = load_corpus(args.train)
    test = _load_eval_corpus(args, train)
    if args.mode == "semi":
        train = make_semi_split(train, args.kcr, args.labeled_ratio, rng)
    params = load_checkpoint(args.params)
    report = run_experiment(train, test, config, args.mode, rng, params=params)
    emit_report(report, Path(args.out))
    print(f"nmi={report.metrics['nmi']:.2f} ari={report.metrics['ari']:.2f} "
          f"acc={report.metrics['acc']:.2f} iterations={report.iterations} "
          f"wall={report.wall_clock_s:.1f}s")
    return 0


def _cmd_estimate_k(args) -> int:
    seeds = _parse_seeds(args.seed)
    if len(seeds) != 1:
        raise ConfigError("estimate-k takes a single seed")
    config = _config_from_args(args, seeds[0])
    rng = np.random.default_rng(seeds[0])
    train = load_corpus(args.train)
    if args.mode == "semi":
        train = make_semi_split(train, args.kcr, args.labeled_ratio, rng)
    if args.params:
        params = load_checkpoint(args.params)
    elif args.mode == "semi":
        params = pretrain_semi(train, config, rng)
    else:
        params = pretrain_unsup(train, config, rng)
    feats = encode_corpus(params, train)
    labeled = np.asarray(train.labeled_indices, dtype=np.int64)
    if args.mode == "semi" and labeled.size:
        known = train.known_label_array()
        estimate = estimate_k_semi(feats, feats[labeled], known[labeled], config.k_prime, rng,
                                   max_iter=config.kmeans_max_iter, tol=config.kmeans_tol)
    else:
        estimate = estimate_k_unsup(feats, config.k_prime, rng,
                                    max_iter=config.kmeans_max_iter, tol=config.kmeans_tol)
    print(f"estimated_k={estimate.k_total}")
    print(f"k_known={estimate.k_known}")
    print(f"k_new={estimate.k_new}")
    print(f"threshold={estimate.threshold!r}")
    print("cluster-size histogram (size count):")
    sizes, counts = np.unique(estimate.sizes, return_counts=True)
    for size, count in zip(sizes, counts):
        print(f"{size} {count}")
    return 0


def _cmd_evaluate(args) -> int:
    y_gt = _read_assignment(args.gt)
    y_pred = _read_assignment(args.pred)
    if y_gt.shape != y_pred.shape:
        raise ConfigError("gt and pred assignments have different lengths")
    print(f"nmi={nmi(y_gt, y_pred):.2f}")
    print(f"ari={ari(y_gt, y_pred):.2f}")
    print(f"acc={clustering_accuracy(y_gt, y_pred):.2f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intentcluster",
                                     description="Intent clustering: contrastive pre-training plus "
                                                 "centroid-guided K-Means.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full pipeline: pre-train, train, infer, evaluate")
    _add_corpus_flags(run, test=True)
    _add_config_flags(run, require_k=True)
    run.add_argument("--out", required=True, help="output directory for reports")
    run.set_defaults(handler=_cmd_run)

    pre = sub.add_parser("pretrain", help="pre-train the encoder and save a checkpoint")
    _add_corpus_flags(pre, test=False)
    _add_config_flags(pre, require_k=True)
    pre.add_argument("--out", required=True, help="checkpoint file path")
    pre.set_defaults(handler=_cmd_pretrain)

    train = sub.add_parser("train", help="training loop from an existing checkpoint")
    _add_corpus_flags(train, test=True)
    _add_config_flags(train, require_k=True)
    train.add_argument("--params", required=True, help="encoder checkpoint from 'pretrain'")
    train.add_argument("--out", required=True, help="output directory for reports")
    train.set_defaults(handler=_cmd_train)

    est = sub.add_parser("estimate-k", help="estimate the cluster count by over-clustering")
    _add_corpus_flags(est, test=False)
    _add_config_flags(est, require_k=False)
    est.add_argument("--params", help="optional encoder checkpoint; otherwise pre-trains first")
    est.set_defaults(handler=_cmd_estimate_k)

    ev = sub.add_parser("evaluate", help="score a predicted assignment against a reference")
    ev.add_argument("--gt", required=True, help="reference assignment file (index<TAB>cluster)")
    ev.add_argument("--pred", required=True, help="predicted assignment file (index<TAB>cluster)")
    ev.set_defaults(handler=_cmd_evaluate)
    return parser


def _add_corpus_flags(p, test: bool) -> None:
    p.add_argument("--train", required=True, help="corpus file (text TSV or embedding matrix)")
    if test:
        p.add_argument("--test", help="held-out corpus; defaults to evaluating on --train")
    p.add_argument("--mode", choices=("unsup", "semi"), default="unsup")
    p.add_argument("--kcr", type=float, default=0.5, help="known class ratio for semi mode")
    p.add_argument("--labeled-ratio", type=float, default=0.1,
                   help="labeled fraction within known classes")


def _add_config_flags(p, require_k: bool) -> None:
    p.add_argument("--tau", type=float, default=0.07, help="contrastive temperature")
    p.add_argument("--erase", type=float, default=0.5, help="random-erase fraction")
    p.add_argument("--dropout", type=float, default=0.1, help="feature-dropout probability")
    p.add_argument("--delta-th", type=float, default=5e-4, help="stopping threshold on assignment change")
    p.add_argument("--batch", type=int, default=128, help="pairs per batch")
    p.add_argument("--pretrain-epochs", type=int, default=10)
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--feature-dim", type=int, default=64)
    p.add_argument("--kmeans-tol", type=float, default=1e-6)
    p.add_argument("--kmeans-max-iter", type=int, default=300)
    p.add_argument("--seed", default="0", help="single seed or inclusive range like 0..9")
    if require_k:
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--k", type=int, help="cluster count, when known")
        group.add_argument("--k-prime", type=int, help="over-clustering count; estimates k")
    else:
        p.add_argument("--k-prime", type=int, required=True,
                       help="over-clustering count for estimation")


def _config_from_args(args, seed: int) -> RunConfig:
    config = RunConfig(
        tau=args.tau,
        erase_frac=args.erase,
        dropout_p=args.dropout,
        delta_threshold=args.delta_th,
        batch_pairs=args.batch,
        pretrain_epochs=args.pretrain_epochs,
        max_train_iterations=args.max_iterations,
        k=getattr(args, "k", None),
        k_prime=args.k_prime,
        hidden_dim=args.hidden_dim,
        feature_dim=args.feature_dim,
        learning_rate=args.lr,
        kmeans_tol=args.kmeans_tol,
        kmeans_max_iter=args.kmeans_max_iter,
        seed=seed,
    )
    config.validate()
    return config


def _load_eval_corpus(args, train):
    """Held-out corpus under the training vocabulary, or None to reuse --train."""
    if not getattr(args, "test", None):
        return None
    return load_corpus(args.test, vocab=train.vocab if train.vocab else None)


def _parse_seeds(spec: str) -> list:
    text = str(spec)
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = list(range(int(lo), int(hi) + 1))
        if not seeds:
            raise ConfigError(f"empty seed range {text!r}")
        return seeds
    return [int(text)]


def _read_assignment(path) -> np.ndarray:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            index, label = line.split("\t")
            pairs.append((int(index), int(label)))
    pairs.sort()
    return np.array([label for _, label in pairs], dtype=np.int64)


def _write_aggregate(reports, path: Path) -> None:
    lines = [f"seeds={','.join(str(r.seed) for r in reports)}"]
    for name in ("nmi", "ari", "acc"):
        vals = np.array([r.metrics[name] for r in reports])
        lines.append(f"{name}_mean={vals.mean():.6f}")
        lines.append(f"{name}_std={vals.std():.6f}")
    vals = np.array([r.iterations for r in reports], dtype=np.float64)
    lines.append(f"iterations_mean={vals.mean():.6f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    raise SystemExit(main())
