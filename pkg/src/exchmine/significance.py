"""Empirical p-values, BH adjustment, test statistics and reports."""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .clustering import kmeans_error
from .errors import UsageError
from .kernels import support_counts
from .matrix import BinaryDataset
from .nullmodels import ChainConfig, NullModel, SampleSet, sample
from .patterns import Itemset, ItemsetFamily, as_itemset, mine_frequent

Tail = Literal["greater", "less", "two-sided"]
TAILS = ("greater", "less", "two-sided")
REPORT_SCHEMA = "exchmine.report/1"
DEFAULT_ALPHA = 0.05

_KMEANS_KEY = 3


@dataclass(frozen=True)
class TestStatistic:
    """A structural measure S(D) and the direction in which it is extreme."""

    __test__ = False  # not a pytest class

    kind: Literal["support", "clustering-error", "count", "custom"]
    tail: Tail = "greater"
    itemset: Itemset | None = None
    k: int = 2
    restarts: int = 10
    min_support: int = 1
    max_size: int = 3
    name: str = ""
    evaluator: Callable[[np.ndarray], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.tail not in TAILS:
            raise UsageError(f"tail must be one of {TAILS}")

    @classmethod
    def support(cls, X, tail: Tail = "greater") -> TestStatistic:
        return cls("support", tail, itemset=as_itemset(X))

    @classmethod
    def clustering_error(cls, k: int, restarts: int = 10, tail: Tail = "less") -> TestStatistic:
        return cls("clustering-error", tail, k=k, restarts=restarts)

    @classmethod
    def num_frequent(cls, min_support: int, max_size: int, tail: Tail = "greater") -> TestStatistic:
        return cls("count", tail, min_support=min_support, max_size=max_size)

    @classmethod
    def custom(cls, name: str, fn: Callable[[np.ndarray], float], tail: Tail = "greater") -> TestStatistic:
        return cls("custom", tail, name=name, evaluator=fn)

    def label(self, col_names: Sequence[str] | None = None) -> str:
        if self.kind == "support":
            return self.itemset.label(col_names)
        if self.kind == "clustering-error":
            return f"clustering-error(k={self.k})"
        if self.kind == "count":
            return f"frequent-count(min_support={self.min_support},max_size={self.max_size})"
        return self.name

    def evaluate(self, cells: np.ndarray, seed: int = 0, index: int = 0) -> float:
        return float(self.evaluate_many(cells[None], seed, index)[0])

    def evaluate_many(self, stack: np.ndarray, seed: int = 0, first_index: int = 0) -> np.ndarray:
        """Statistic for every matrix of a (k, m, n) stack.

        k-means restarts for matrix i are seeded from (seed, i + first_index).
        """
        if self.kind == "support":
            items = np.array(self.itemset.items, dtype=np.int64)
            return support_counts(stack, items).astype(np.float64)
        if self.kind == "clustering-error":
            return np.array([
                kmeans_error(c, self.k, self.restarts,
                             np.random.SeedSequence(seed, spawn_key=(_KMEANS_KEY, first_index + i)))
                for i, c in enumerate(stack)])
        if self.kind == "count":
            return np.array([float(len(mine_frequent(BinaryDataset(c), self.min_support, self.max_size)))
                             for c in stack])
        return np.array([float(self.evaluator(c)) for c in stack])


def empirical_p(original: float, randomized, tail: Tail = "greater") -> float:
    """(number of randomized values at least as extreme + 1) / (k + 1).

    The two-sided value doubles the smaller one-sided value, capped at 1.
    """
    r = np.asarray(randomized, dtype=np.float64)
    if r.size == 0:
        raise UsageError("empirical_p needs at least one randomized value")
    k = r.size
    if tail == "greater":
        return (int((r >= original).sum()) + 1) / (k + 1)
    if tail == "less":
        return (int((r <= original).sum()) + 1) / (k + 1)
    if tail == "two-sided":
        return min(1.0, 2 * min(empirical_p(original, r, "greater"), empirical_p(original, r, "less")))
    raise UsageError(f"tail must be one of {TAILS}")


def bh_adjust(raw_ps, alpha: float = DEFAULT_ALPHA) -> tuple[np.ndarray, np.ndarray]:
    """Benjamini-Hochberg step-up adjusted p-values and significance flags."""
    p = np.asarray(raw_ps, dtype=np.float64)
    if p.size and (np.any(p <= 0) or np.any(p > 1) or np.any(np.isnan(p))):
        raise ValueError("p-values must lie in (0, 1]")
    m = p.size
    if m == 0:
        return p.copy(), np.zeros(0, dtype=bool)
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    q = np.minimum.accumulate(scaled[::-1])[::-1]
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(q, 1.0)
    return adjusted, adjusted <= alpha


@dataclass
class PatternResult:
    name: str
    kind: str
    value: float
    raw_p: float
    adjusted_p: float
    significant: bool
    itemset: tuple[int, ...] | None = None


@dataclass
class SignificanceReport:
    patterns: list[PatternResult]
    provenance: dict

    def __len__(self):
        return len(self.patterns)

    @property
    def alpha(self) -> float:
        return self.provenance["alpha"]

    def by_name(self) -> dict[str, PatternResult]:
        return {p.name: p for p in self.patterns}

    def significant_names(self) -> list[str]:
        return [p.name for p in self.patterns if p.significant]

    @property
    def significant_count(self) -> int:
        return sum(p.significant for p in self.patterns)

    def to_dict(self) -> dict:
        return {"schema": REPORT_SCHEMA, "provenance": self.provenance,
                "patterns": [asdict(p) for p in self.patterns]}

    @classmethod
    def from_dict(cls, d: dict) -> SignificanceReport:
        if d.get("schema") != REPORT_SCHEMA:
            raise UsageError(f"not a report document (schema {d.get('schema')!r})")
        pats = []
        for p in d["patterns"]:
            p = dict(p)
            if p.get("itemset") is not None:
                p["itemset"] = tuple(p["itemset"])
            pats.append(PatternResult(**p))
        return cls(pats, d["provenance"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> SignificanceReport:
        return cls.from_dict(json.loads(text))

    def to_tsv(self) -> str:
        out = io.StringIO()
        out.write("pattern\tstatistic\traw_p\tadjusted_p\tsignificant\n")
        for p in self.patterns:
            out.write(f"{p.name}\t{p.value!r}\t{p.raw_p!r}\t{p.adjusted_p!r}\t{int(p.significant)}\n")
        return out.getvalue()

    def __eq__(self, other):
        if not isinstance(other, SignificanceReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def test_patterns(D: BinaryDataset, stats: Sequence[TestStatistic], model: NullModel,
                  cfg: ChainConfig, alpha: float = DEFAULT_ALPHA, adjust: bool = True,
                  samples: SampleSet | None = None, progress=None) -> SignificanceReport:
    """Evaluate every statistic on D and on one shared Besag-Clifford sample set."""
    if samples is None:
        samples = sample(D, model, cfg, progress=progress)
    names = D.col_labels
    raw, values, rows = [], [], []
    for st in stats:
        s0 = float(st.evaluate_many(D.cells[None], cfg.seed, 0)[0])
        rnd = st.evaluate_many(samples.cells, cfg.seed, 1)
        raw.append(empirical_p(s0, rnd, st.tail))
        values.append(s0)
        rows.append(st)
    if adjust:
        adjusted, flags = bh_adjust(raw, alpha)
    else:
        adjusted, flags = np.array(raw, dtype=np.float64), np.array(raw) <= alpha
    pats = [PatternResult(st.label(names), st.kind, v, float(p), float(q), bool(f),
                          st.itemset.items if st.itemset is not None else None)
            for st, v, p, q, f in zip(rows, values, raw, adjusted, flags)]
    prov = {"model": model.to_dict(), "samples": len(samples), "swap_attempts": samples.swap_attempts,
            "seed": cfg.seed, "alpha": alpha, "adjust": adjust,
            "tails": sorted({st.tail for st in stats})}
    return SignificanceReport(pats, prov)


test_patterns.__test__ = False  # keep pytest from collecting it


def support_statistics(F: ItemsetFamily, tail: Tail = "greater") -> list[TestStatistic]:
    return [TestStatistic.support(X, tail) for X in F]


def contingency(A: SignificanceReport, B: SignificanceReport) -> list[list[int]]:
    """2x2 counts ``table[a][b]``: a = significant in A, b = significant in B (0 = N, 1 = S)."""
    a, b = A.by_name(), B.by_name()
    if set(a) != set(b) or len(a) != len(A.patterns) or len(b) != len(B.patterns):
        raise UsageError("reports cover different pattern collections")
    table = [[0, 0], [0, 0]]
    for name, pa in a.items():
        table[int(pa.significant)][int(b[name].significant)] += 1
    return table


def format_contingency(table, name_a: str = "A", name_b: str = "B") -> str:
    return (f"{name_a}\\{name_b}\tN\tS\n"
            f"N\t{table[0][0]}\t{table[0][1]}\n"
            f"S\t{table[1][0]}\t{table[1][1]}\n")


def holdout_rows(m: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if m < 2:
        raise UsageError("holdout split needs at least two rows")
    perm = np.random.default_rng(seed).permutation(m)
    half = (m + 1) // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def holdout_split(D: BinaryDataset, seed: int) -> tuple[BinaryDataset, BinaryDataset]:
    """Random row halves (ceil, floor): one for mining, one for testing."""
    mine_rows, test_rows = holdout_rows(D.n_rows, seed)
    return D.take_rows(mine_rows), D.take_rows(test_rows)
