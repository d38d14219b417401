"""Command line entry point: ``specgcf {split,train,evaluate,analyze,response,sweep}``."""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .config import RunConfig, load_config, write_config
from .dataset import load_interactions, load_split_dir, save_split_dir, split_dataset
from .evaluation import evaluate
from .graph import build_adjacency, normalize_adjacency
from .polybasis import FilterParams, filter_response
from .propagation import forward
from .seeding import rng_stream
from .spectral import analyze, band_correlations, parse_bases, write_correlations, write_scatter
from .synthetic import load_toy
from .training import fit, load_checkpoint, save_checkpoint

logger = logging.getLogger("specgcf")


class CLIError(Exception):
    pass


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _require(path: Path, kind="file"):
    if not path.exists():
        raise CLIError(f"{kind} not found: {path}")
    return path


def _write_args(out_dir: Path, args) -> None:
    keys = sorted(k for k in vars(args) if k not in ("func", "command", "verbose"))
    text = "".join(f"{k} = {getattr(args, k)}\n" for k in keys)
    (out_dir / "config.txt").write_text(text)


def load_data(data: str, cfg: RunConfig):
    """Splits from a `split` directory, a raw pair file, or the bundled ``toy`` set."""
    if data == "toy":
        return split_dataset(load_toy(), cfg.train_frac, cfg.valid_frac, cfg.seed)
    path = Path(data)
    if path.is_dir():
        return load_split_dir(path)
    _require(path, "data")
    return split_dataset(load_interactions(path), cfg.train_frac, cfg.valid_frac, cfg.seed)


# -- subcommands -----------------------------------------------------------

def cmd_split(args):
    ds = load_interactions(_require(Path(args.input)))
    train, valid, test = split_dataset(ds, args.train_frac, args.valid_frac, args.seed)
    out = Path(args.out)
    save_split_dir(out, train, valid, test)
    _write_args(out, args)
    print(f"users={ds.num_users} items={ds.num_items} interactions={len(ds)} "
          f"train={len(train)} valid={len(valid)} test={len(test)}")


def train_run(cfg: RunConfig, splits, out: Path) -> dict:
    """Train one configuration, writing checkpoint, history, config and test metrics to ``out``."""
    train, valid, test = splits
    out.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out / "config.txt")
    fp = cfg.filter_params()
    adj = normalize_adjacency(build_adjacency(train))
    with (out / "history.jsonl").open("w") as hist:
        def on_epoch(rec):
            hist.write(json.dumps(rec, sort_keys=True) + "\n")
            hist.flush()
        result = fit(train, valid, adj, fp, cfg.train_config(), on_epoch=on_epoch)
    save_checkpoint(out / "checkpoint.bin", result.E0, adj.num_users, fp)
    final = forward(adj, result.E0, fp).final
    report = evaluate(final, adj.num_users, test, [train, valid], cfg.eval_ks)
    summary = {"best_epoch": result.best_epoch, "epochs_run": len(result.history), "test": report.to_dict()}
    best = [r for r in result.history if r["epoch"] == result.best_epoch]
    if best:
        summary["best_valid"] = {k: v for k, v in best[0].items() if k.startswith("valid_")}
    (out / "metrics.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _resolved_config(args) -> RunConfig:
    cfg = load_config(_require(Path(args.config), "config")) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in ("max_epochs", "seed") if getattr(args, k, None) is not None}
    return cfg.replace(**overrides)


def cmd_train(args):
    cfg = _resolved_config(args)
    splits = load_data(args.data, cfg)
    summary = train_run(cfg, splits, Path(args.out))
    print(json.dumps(summary["test"]["metrics"], sort_keys=True))


def cmd_evaluate(args):
    ckpt = _require(Path(args.checkpoint), "checkpoint")
    E0, header = load_checkpoint(ckpt)
    cfg_path = Path(args.config) if args.config else ckpt.parent / "config.txt"
    cfg = load_config(cfg_path) if cfg_path.exists() else RunConfig(basis="jacobi")
    fp = FilterParams(basis=cfg.basis, order=header["order"], a=header["a"], b=header["b"],
                      alpha=header["alpha"], discount=cfg.discount)
    train, valid, test = load_data(args.data, cfg)
    adj = normalize_adjacency(build_adjacency(train))
    if adj.n != header["n"] or adj.num_users != header["num_users"]:
        raise CLIError(f"checkpoint is for {header['n']} nodes / {header['num_users']} users, "
                       f"data has {adj.n} / {adj.num_users}")
    final = forward(adj, E0, fp).final
    split = {"test": test, "valid": valid}[args.split]
    mask = [train, valid] if args.split == "test" else [train]
    report = evaluate(final, adj.num_users, split, mask, _int_list(args.ks))
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")


def cmd_analyze(args):
    base = RunConfig(seed=args.seed)
    train, valid, test = load_data(args.data, base)
    bases = parse_bases(args.bases, args.order)
    an = analyze(train, test, bases, max_nodes=args.max_nodes, seeds=args.seeds,
                 rng=rng_stream(args.seed, "bfs"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_scatter(out / "scatter.csv", an)
    write_correlations(out / "correlations.csv", an.correlations)
    bands = band_correlations(an.decomposition.Lambda, an.target)
    bands = {k: (None if np.isnan(v) else v) for k, v in bands.items()}
    (out / "bands.json").write_text(json.dumps(bands, indent=2, sort_keys=True) + "\n")
    _write_args(out, args)
    print(f"nodes={len(an.decomposition.Lambda)}")
    for label, r in an.correlations:
        print(f"{label}\t{r:.4f}")


def cmd_response(args):
    fp = FilterParams(basis=args.basis, order=args.order, a=args.a, b=args.b, alpha=args.alpha)
    grid = np.linspace(-1.0, 1.0, args.grid_points)
    curve = filter_response(fp, args.mode, grid)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["x", "response"])
        for x, r in curve.tolist():
            w.writerow([repr(x), repr(r)])
    finally:
        if args.out:
            fh.close()


def sweep_grid(a_values, b_values, alphas, orders, tie_ab=False):
    ab = [(a, a) for a in a_values] if tie_ab else list(itertools.product(a_values, b_values))
    return [(a, b, alpha, k) for (a, b), alpha, k in itertools.product(ab, alphas, orders)]


def cmd_sweep(args):
    cfg = _resolved_config(args)
    splits = load_data(args.data, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out / "config.txt")
    grid = sweep_grid(_float_list(args.a), _float_list(args.b), _float_list(args.alpha),
                      _int_list(args.orders), args.tie_ab)
    rows = []
    for idx, (a, b, alpha, k) in enumerate(grid):
        run_cfg = cfg.replace(a=a, b=b, alpha=alpha, order=k)
        summary = train_run(run_cfg, splits, out / f"run_{idx:03d}")
        recall = summary.get("best_valid", {}).get("valid_recall@20", float("nan"))
        rows.append({"run": idx, "a": a, "b": b, "alpha": alpha, "order": k, "valid_recall@20": recall})
        logger.info("run %d a=%g b=%g alpha=%g K=%d valid_recall@20=%.4f", idx, a, b, alpha, k, recall)
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    scored = [r for r in rows if not np.isnan(r["valid_recall@20"])]
    best = max(scored, key=lambda r: r["valid_recall@20"]) if scored else None
    (out / "best.json").write_text(json.dumps(best, indent=2) + "\n")
    print(f"runs={len(rows)} best={json.dumps(best)}")


# -- parser ----------------------------------------------------------------

DEFAULT_AB = "-0.5,0.0,0.5,1.0,1.5,2.0"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="specgcf", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("split", help="split a pair file into train/valid/test")
    s.add_argument("--input", required=True)
    s.add_argument("--train-frac", type=float, default=0.8)
    s.add_argument("--valid-frac", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_split)

    for name, func, helptext in (("train", cmd_train, "train one configuration"),
                                 ("sweep", cmd_sweep, "grid search over a, b, alpha, K")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config")
        s.add_argument("--data", required=True, help="split directory, pair file, or `toy`")
        s.add_argument("--out", required=True)
        s.add_argument("--max-epochs", type=int)
        s.add_argument("--seed", type=int)
        s.set_defaults(func=func)
        if name == "sweep":
            s.add_argument("--a", default=DEFAULT_AB)
            s.add_argument("--b", default=DEFAULT_AB)
            s.add_argument("--alpha", default="0.1")
            s.add_argument("--orders", default="1,2,3,4")
            s.add_argument("--tie-ab", action="store_true", help="sweep a = b over the --a values")

    s = sub.add_parser("evaluate", help="full-ranking metrics for a checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--config")
    s.add_argument("--ks", default="10,20,50")
    s.add_argument("--split", choices=("test", "valid"), default="test")
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("analyze", help="spectral correlation analysis")
    s.add_argument("--data", required=True)
    s.add_argument("--bases", default="jacobi:1.0:1.0,monomial,chebyshev,legendre,bernstein")
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--max-nodes", type=int, default=3000)
    s.add_argument("--seeds", type=int, default=4)
    s.add_argument("--seed", type=int, default=17)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("response", help="sample a filter response curve")
    s.add_argument("--basis", default="jacobi")
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--b", type=float, default=1.0)
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--alpha", type=float, default=0.1)
    s.add_argument("--mode", choices=("band_stop", "band_pass"), default="band_stop")
    s.add_argument("--grid-points", type=int, default=401)
    s.add_argument("--out")
    s.set_defaults(func=cmd_response)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    logger.debug("kernel backend: %s", kernels.BACKEND)
    try:
        args.func(args)
    except (CLIError, FileNotFoundError, ValueError) as exc:
        print(f"specgcf {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
