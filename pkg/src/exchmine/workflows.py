"""End-to-end analysis pipelines built from the library pieces.

``compare_null_models`` mines on one random half of the rows and tests on
the other, under four nulls: margins (M), soft constraints on the top-n
itemsets of M (IM), cluster margins (CM), and soft constraints on the
itemsets whose p-value grows most from M to CM (ICM). ``iterative_loop``
runs the smallest-p constraint loop on the testing half.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict, dataclass

from .clustering import kmeans
from .matrix import BinaryDataset
from .nullmodels import ChainConfig, NullModel
from .patterns import ItemsetFamily, mine_frequent
from .session import (SessionConfig, SessionState, iterate_smallest_p, select_by_p_delta,
                      select_top_significant)
from .significance import SignificanceReport, contingency, holdout_split, support_statistics, test_patterns

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WorkflowConfig:
    min_support: int = 2
    min_size: int = 2
    max_size: int = 3
    top_n: int = 40
    clusters: int = 2
    samples: int = 99
    swap_attempts: int | str = "auto"
    iterations: int = 10
    seed: int = 0
    alpha: float = 0.05


def _digest(report: SignificanceReport) -> str:
    return hashlib.sha256(report.to_json().encode("utf-8")).hexdigest()


def mine_sized(D: BinaryDataset, cfg: WorkflowConfig) -> ItemsetFamily:
    F = mine_frequent(D, cfg.min_support, cfg.max_size)
    keep = [(X, f) for X, f in F.items() if len(X) >= cfg.min_size]
    return ItemsetFamily([X for X, _ in keep], [f for _, f in keep])


def compare_null_models(D: BinaryDataset, cfg: WorkflowConfig) -> dict:
    mining, testing = holdout_split(D, cfg.seed)
    F = mine_sized(mining, cfg).with_targets(testing)
    stats = support_statistics(F)
    chain = ChainConfig(cfg.samples, cfg.swap_attempts, cfg.seed)

    def run(model):
        return test_patterns(testing, stats, model, chain, alpha=cfg.alpha)

    reports = {"M": run(NullModel.margins())}
    top = select_top_significant(reports["M"], cfg.top_n)
    reports["IM"] = run(NullModel.itemset_soft(top))
    C = kmeans(testing, cfg.clusters, seed=cfg.seed)
    reports["CM"] = run(NullModel.cluster_margins(C))
    delta = select_by_p_delta(reports["M"], reports["CM"], cfg.top_n)
    reports["ICM"] = run(NullModel.itemset_soft(delta))
    pairs = [("M", "IM"), ("M", "CM"), ("M", "ICM"), ("CM", "ICM")]
    return {
        "config": asdict(cfg),
        "rows": {"mining": mining.n_rows, "testing": testing.n_rows},
        "itemsets": len(F),
        "significant": {k: r.significant_count for k, r in reports.items()},
        "digests": {k: _digest(r) for k, r in reports.items()},
        "contingency": {f"{a}/{b}": contingency(reports[a], reports[b]) for a, b in pairs},
        "clustering": list(C.assignment),
    }, reports


def iterative_loop(D: BinaryDataset, cfg: WorkflowConfig) -> tuple[dict, SessionState]:
    _, testing = holdout_split(D, cfg.seed)
    mined = mine_sized(testing, cfg)
    state = SessionState(testing, mined, config=SessionConfig(cfg.samples, cfg.swap_attempts, cfg.seed,
                                                              cfg.alpha))
    for _ in range(cfg.iterations + 1):
        state = iterate_smallest_p(state)
    names = testing.col_names()
    return {
        "significant_counts": [r.significant_count for r in state.history],
        "chosen": [" ".join(names[i] for i in r.chosen_constraint) for r in state.history],
        "digests": [_digest(r.report) for r in state.history],
    }, state


def presets() -> dict[str, tuple[BinaryDataset, WorkflowConfig]]:
    """Bundled datasets with the settings the experiment scripts and golden files use."""
    from .datasets import planted_dataset, toy_dataset
    return {
        "toy": (toy_dataset(), WorkflowConfig(min_support=1, top_n=5)),
        "planted": (planted_dataset(), WorkflowConfig(min_support=10, top_n=40, clusters=4)),
    }


def run_preset(name: str) -> dict:
    D, cfg = presets()[name]
    compare, _ = compare_null_models(D, cfg)
    loop, _ = iterative_loop(D, cfg)
    return {"compare": compare, "iterations": loop}
