"""Iterative significance testing: constraints grow one accepted pattern at a time."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .clustering import RowClustering
from .errors import MigrationError, SessionComplete, SessionFormatError, UsageError
from .matrix import BinaryDataset, dumps_dataset
from .nullmodels import DEFAULT_W, ChainConfig, NullModel
from .patterns import Itemset, ItemsetFamily, as_itemset, frequency
from .significance import (DEFAULT_ALPHA, PatternResult, SignificanceReport,
                           support_statistics, test_patterns)

log = logging.getLogger(__name__)

SESSION_SCHEMA = "exchmine.session"
SESSION_VERSION = 1
_ITERATION_KEY = 4


@dataclass(frozen=True)
class SessionConfig:
    samples: int = 1000
    swap_attempts: int | Literal["auto"] = "auto"
    seed: int = 0
    alpha: float = DEFAULT_ALPHA
    w: float = DEFAULT_W
    adjust: bool = True


@dataclass
class IterationRecord:
    index: int
    model: dict
    seed: int
    report: SignificanceReport
    chosen_constraint: tuple[int, ...] | None = None
    significant_count: int = 0

    def to_dict(self) -> dict:
        return {"index": self.index, "model": self.model, "seed": self.seed,
                "report": self.report.to_dict(),
                "chosen_constraint": None if self.chosen_constraint is None else list(self.chosen_constraint),
                "significant_count": self.significant_count}

    @classmethod
    def from_dict(cls, d: dict) -> IterationRecord:
        chosen = d.get("chosen_constraint")
        return cls(d["index"], d["model"], d["seed"], SignificanceReport.from_dict(d["report"]),
                   None if chosen is None else tuple(chosen), d["significant_count"])


@dataclass
class SessionState:
    dataset: BinaryDataset
    mined: ItemsetFamily
    constraints: ItemsetFamily = field(default_factory=lambda: ItemsetFamily([], []))
    clustering: RowClustering | None = None
    history: list[IterationRecord] = field(default_factory=list)
    config: SessionConfig = field(default_factory=SessionConfig)
    dataset_path: str | None = None

    def __post_init__(self):
        if self.mined.target_freqs is None:
            self.mined = self.mined.with_targets(self.dataset)
        if self.constraints.target_freqs is None:
            self.constraints = self.constraints.with_targets(self.dataset)

    def candidates(self) -> list[Itemset]:
        return [X for X in self.mined if X not in self.constraints]

    def model(self) -> NullModel:
        """Margins until the first constraint exists, then margins plus soft itemset constraints."""
        if len(self.constraints) == 0:
            return NullModel.margins()
        return NullModel.itemset_soft(self.constraints, self.config.w)


def iteration_seed(base_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(_ITERATION_KEY, int(index)))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _rank_key(p: PatternResult):
    items = p.itemset or ()
    return (p.raw_p, len(items), items)


def run_report(state: SessionState, model: NullModel, seed: int, progress=None) -> SignificanceReport:
    cfg = state.config
    return test_patterns(state.dataset, support_statistics(state.mined), model,
                         ChainConfig(cfg.samples, cfg.swap_attempts, seed),
                         alpha=cfg.alpha, adjust=cfg.adjust, progress=progress)


def _record(state: SessionState, chosen: Itemset | None, report, model, seed) -> SessionState:
    rec = IterationRecord(len(state.history), model.to_dict(), seed, report,
                          None if chosen is None else chosen.items, report.significant_count)
    constraints = state.constraints
    if chosen is not None:
        # targets always come from the original dataset
        constraints = constraints.added(chosen, state.mined.target(chosen))
    return dataclasses.replace(state, constraints=constraints, history=state.history + [rec])


def iterate_smallest_p(state: SessionState, progress=None) -> SessionState:
    """Test all mined itemsets under the current model and constrain the smallest-p candidate.

    Ties go to the smaller itemset, then the lexicographically smaller one.
    """
    candidates = set(state.candidates())
    if not candidates:
        raise SessionComplete("every mined itemset is already a constraint")
    model = state.model()
    seed = iteration_seed(state.config.seed, len(state.history))
    report = run_report(state, model, seed, progress)
    ranked = sorted((p for p in report.patterns if Itemset(p.itemset) in candidates), key=_rank_key)
    return _record(state, Itemset(ranked[0].itemset), report, model, seed)


def iterate_manual(state: SessionState, progress=None) -> SessionState:
    """Test under the current constraints without choosing a new one."""
    model = state.model()
    seed = iteration_seed(state.config.seed, len(state.history))
    return _record(state, None, run_report(state, model, seed, progress), model, seed)


def replay_iteration(state: SessionState, index: int) -> IterationRecord:
    """Recompute history record ``index`` from its stored model and seed."""
    rec = state.history[index]
    report = run_report(state, NullModel.from_dict(rec.model), rec.seed)
    return IterationRecord(rec.index, rec.model, rec.seed, report, rec.chosen_constraint,
                           report.significant_count)


def add_constraints(state: SessionState, itemsets: Sequence) -> SessionState:
    F = state.constraints
    for X in itemsets:
        X = as_itemset(X)
        if X not in F:
            F = F.added(X, _original_freq(state, X))
    return dataclasses.replace(state, constraints=F)


def remove_constraints(state: SessionState, itemsets: Sequence) -> SessionState:
    F = state.constraints
    for X in itemsets:
        X = as_itemset(X)
        if X not in F:
            raise KeyError(X)
        F = F.removed(X)
    return dataclasses.replace(state, constraints=F)


def _original_freq(state: SessionState, X: Itemset) -> int:
    return frequency(state.dataset, X)


def select_top_significant(report: SignificanceReport, n: int) -> ItemsetFamily:
    """The n smallest-p itemsets, targeted at their frequency in the tested dataset."""
    pats = [p for p in report.patterns if p.itemset is not None]
    if not pats:
        raise UsageError("report has no itemset patterns")
    if n > len(pats):
        log.warning("asked for %d itemsets, report has %d", n, len(pats))
    chosen = sorted(pats, key=_rank_key)[:n]
    return ItemsetFamily([p.itemset for p in chosen], [int(p.value) for p in chosen])


def select_by_p_delta(A: SignificanceReport, B: SignificanceReport, n: int) -> ItemsetFamily:
    """The n itemsets whose p-value grows most from report A to report B."""
    a, b = A.by_name(), B.by_name()
    if set(a) != set(b):
        raise UsageError("reports cover different pattern collections")
    pats = [p for p in A.patterns if p.itemset is not None]

    def key(p):
        items = p.itemset
        return (-(b[p.name].raw_p - p.raw_p), len(items), items)

    chosen = sorted(pats, key=key)[:n]
    return ItemsetFamily([p.itemset for p in chosen], [int(p.value) for p in chosen])


# -- persistence ----------------------------------------------------------------

def dataset_hash(D: BinaryDataset) -> str:
    return hashlib.sha256(dumps_dataset(D, "dense").encode("utf-8")).hexdigest()


def _family_dict(F: ItemsetFamily) -> dict:
    return {"itemsets": [list(X.items) for X in F], "targets": list(F.target_freqs or [])}


def _family_from(d: dict) -> ItemsetFamily:
    return ItemsetFamily(d["itemsets"], d["targets"])


def session_to_dict(state: SessionState) -> dict:
    D = state.dataset
    return {
        "schema": SESSION_SCHEMA,
        "version": SESSION_VERSION,
        "dataset": {
            "path": state.dataset_path,
            "sha256": dataset_hash(D),
            "shape": list(D.shape),
            "rows": ["".join(str(int(v)) for v in row) for row in D.cells],
            "row_labels": None if D.row_labels is None else list(D.row_labels),
            "col_labels": None if D.col_labels is None else list(D.col_labels),
        },
        "config": dataclasses.asdict(state.config),
        "mined": _family_dict(state.mined),
        "constraints": _family_dict(state.constraints),
        "clustering": None if state.clustering is None else list(state.clustering.assignment),
        "history": [rec.to_dict() for rec in state.history],
    }


def save_session(state: SessionState) -> str:
    return json.dumps(session_to_dict(state), indent=2, sort_keys=True) + "\n"


def load_session(source) -> SessionState:
    """Parse a session document (text, bytes or a readable stream)."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        d = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SessionFormatError(f"corrupt session file: {exc}") from None
    if not isinstance(d, dict) or d.get("schema") != SESSION_SCHEMA:
        raise SessionFormatError("not a session document")
    if d.get("version") != SESSION_VERSION:
        raise MigrationError(d.get("version"), SESSION_VERSION)
    try:
        ds = d["dataset"]
        m, n = ds["shape"]
        cells = np.array([[int(ch) for ch in row] for row in ds["rows"]], dtype=np.uint8).reshape(m, n)
        D = BinaryDataset(cells, ds["row_labels"], ds["col_labels"])
        if dataset_hash(D) != ds["sha256"]:
            raise SessionFormatError("dataset content hash mismatch")
        cfg = d["config"]
        C = None if d["clustering"] is None else RowClustering.from_labels(d["clustering"])
        return SessionState(D, _family_from(d["mined"]), _family_from(d["constraints"]), C,
                            [IterationRecord.from_dict(r) for r in d["history"]],
                            SessionConfig(**cfg), ds["path"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SessionFormatError):
            raise
        raise SessionFormatError(f"corrupt session file: {exc!r}") from None


def write_session(state: SessionState, path) -> None:
    """Write atomically: a temporary file in the same directory, then rename."""
    path = Path(path)
    text = save_session(state)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_session(path) -> SessionState:
    return load_session(Path(path).read_text(encoding="utf-8"))
