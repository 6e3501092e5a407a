"""Command-line interface.

Exit codes: 0 success, 1 internal error, 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .clustering import clustering_error, dumps_clustering, kmeans, load_clustering
from .errors import ExchmineError, SessionComplete
from .matrix import FORMATS, load_dataset, save_dataset
from .nullmodels import ChainConfig, NullModel, resolve_swaps
from .patterns import ItemsetFamily, dumps_family, load_family, mine_frequent
from .rng import fresh_seed
from .session import (SessionConfig, SessionState, iterate_smallest_p, read_session,
                      write_session)
from .significance import (SignificanceReport, TestStatistic, contingency, format_contingency,
                           holdout_split, support_statistics, test_patterns)

log = logging.getLogger("exchmine")


class InputError(Exception):
    pass


def _version() -> str:
    try:
        return version("exchmine")
    except PackageNotFoundError:
        return "0+unknown"


def _swaps(text: str):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer or 'auto'") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _seed(args) -> int:
    if args.seed is None:
        args.seed = fresh_seed()
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _load(args):
    return load_dataset(args.input, args.format)


def _patterns(args, D) -> ItemsetFamily:
    if getattr(args, "patterns", None):
        return load_family(args.patterns, D.col_names()).with_targets(D)
    return mine_frequent(D, args.min_support, args.max_size)


def _report_paths(path: str) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix == ".json":
        return p.with_suffix(".tsv"), p
    if p.suffix == ".tsv":
        return p, p.with_suffix(".json")
    return p, p.with_name(p.name + ".json")


def cmd_mine(args):
    D = _load(args)
    F = mine_frequent(D, args.min_support, args.max_size)
    text = dumps_family(F, D.col_names())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_test(args):
    D = _load(args)
    seed = _seed(args)
    if args.samples < 1:
        raise InputError("--samples must be >= 1")
    if args.model == "itemset-soft":
        if not args.itemsets:
            raise InputError("--model itemset-soft requires --itemsets")
        F = load_family(args.itemsets, D.col_names())
        if F.target_freqs is None:
            F = F.with_targets(D)
        model = NullModel.itemset_soft(F, args.w)
    elif args.model == "cluster-margins":
        if not args.clustering:
            raise InputError("--model cluster-margins requires --clustering")
        model = NullModel.cluster_margins(load_clustering(args.clustering, D.row_names()))
    else:
        model = NullModel.margins()

    if args.stat == "support":
        stats = support_statistics(_patterns(args, D), args.tail or "greater")
    elif args.stat == "clustering-error":
        stats = [TestStatistic.clustering_error(args.k, args.restarts, args.tail or "less")]
    else:
        stats = [TestStatistic.num_frequent(args.min_support, args.max_size, args.tail or "greater")]

    cfg = ChainConfig(args.samples, args.swaps, seed)
    K = resolve_swaps(D, model, cfg)
    if args.swaps == "auto":
        print(f"K: {K}", file=sys.stderr)
    report = test_patterns(D, stats, model, ChainConfig(args.samples, K, seed),
                           alpha=args.alpha, adjust=args.fdr)
    if args.report:
        tsv, js = _report_paths(args.report)
        tsv.write_text(report.to_tsv(), encoding="utf-8")
        js.write_text(report.to_json(), encoding="utf-8")
    else:
        sys.stdout.write(report.to_tsv())


def cmd_iterate(args):
    session_path = Path(args.session) if args.session else None
    if session_path and session_path.exists():
        state = read_session(session_path)
        runs = args.iterations
    else:
        if not args.input:
            raise InputError("--input is required when starting a new session")
        D = _load(args)
        seed = _seed(args)
        mined = (load_family(args.itemsets, D.col_names()).with_targets(D) if args.itemsets
                 else mine_frequent(D, args.min_support, args.max_size))
        cfg = SessionConfig(args.samples, args.swaps, seed, args.alpha, args.w, args.fdr)
        state = SessionState(D, mined, config=cfg, dataset_path=args.input)
        runs = args.iterations + 1  # the initial margins-only round plus the iterations
    names = state.dataset.col_names()
    print("iteration\tmodel\tsignificant\tchosen")
    for _ in range(runs):
        try:
            state = iterate_smallest_p(state)
        except SessionComplete:
            print("no unconstrained itemsets left", file=sys.stderr)
            break
        rec = state.history[-1]
        chosen = "" if rec.chosen_constraint is None else " ".join(names[i] for i in rec.chosen_constraint)
        print(f"{rec.index}\t{rec.model['kind']}\t{rec.significant_count}\t{chosen}", flush=True)
        if session_path:
            write_session(state, session_path)


def cmd_split(args):
    D = _load(args)
    seed = _seed(args)
    mining, testing = holdout_split(D, seed)
    save_dataset(mining, args.mining_out, args.format)
    save_dataset(testing, args.testing_out, args.format)
    print(f"mining rows: {mining.n_rows}, testing rows: {testing.n_rows}")


def cmd_cluster(args):
    D = _load(args)
    seed = _seed(args)
    C = kmeans(D, args.k, args.restarts, seed)
    text = dumps_clustering(C, D.row_names())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"clustering error: {clustering_error(D, C)!r}", file=sys.stderr)


def cmd_contingency(args):
    A = SignificanceReport.from_json(Path(args.a).read_text(encoding="utf-8"))
    B = SignificanceReport.from_json(Path(args.b).read_text(encoding="utf-8"))
    table = contingency(A, B)
    text = format_contingency(table, args.name_a, args.name_b)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_serve(args):
    import uvicorn

    from .service import create_app
    app = create_app(args.session, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="dataset path")
    p.add_argument("--format", choices=FORMATS, default="dense")


def _add_mining(p, min_support=1, max_size=3):
    p.add_argument("--min-support", type=int, default=min_support)
    p.add_argument("--max-size", type=int, default=max_size)


def _add_chain(p):
    p.add_argument("--w", type=float, default=4.0, help="soft-constraint weight")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--swaps", type=_swaps, default="auto", help="swap attempts K, or 'auto'")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--fdr", action=argparse.BooleanOptionalAction, default=True,
                   help="Benjamini-Hochberg adjustment")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exchmine", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"exchmine {_version()}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="frequent itemsets to an itemset file")
    _add_input(p)
    _add_mining(p, max_size=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("test", help="empirical p-values under a null model")
    _add_input(p)
    p.add_argument("--model", choices=("margins", "cluster-margins", "itemset-soft"), default="margins")
    p.add_argument("--itemsets", help="constraint itemsets for itemset-soft")
    p.add_argument("--clustering", help="clustering file for cluster-margins")
    p.add_argument("--patterns", help="itemsets to test (default: mine them)")
    _add_mining(p)
    _add_chain(p)
    p.add_argument("--tail", choices=("greater", "less", "two-sided"))
    p.add_argument("--stat", choices=("support", "clustering-error", "count"), default="support")
    p.add_argument("--k", type=int, default=2, help="clusters for clustering-error")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--report", help="TSV path; JSON is written next to it")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("iterate", help="iteratively constrain the smallest-p itemset")
    _add_input(p, required=False)
    p.add_argument("--itemsets", help="itemsets to test (default: mine them)")
    _add_mining(p)
    p.add_argument("--iterations", type=int, default=10)
    _add_chain(p)
    p.add_argument("--session", help="session file to create or extend")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("split", help="random half split of rows (mining / testing)")
    _add_input(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mining-out", required=True)
    p.add_argument("--testing-out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("cluster", help="k-means clustering of rows")
    _add_input(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("contingency", help="2x2 significance table of two JSON reports")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--name-a", default="A")
    p.add_argument("--name-b", default="B")
    p.add_argument("--out")
    p.set_defaults(func=cmd_contingency)

    p = sub.add_parser("serve", help="HTTP API for the browser UI")
    p.add_argument("--session", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", help="directory of UI files served at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (InputError, ExchmineError, ValueError, IndexError, KeyError,
            FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        if isinstance(exc, SessionComplete):
            print(str(exc), file=sys.stderr)
            return 0
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
