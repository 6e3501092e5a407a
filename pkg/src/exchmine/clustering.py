"""k-means over binary rows and the clustering-error statistic."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError, UsageError
from .matrix import BinaryDataset

MAX_ITER = 100


@dataclass(frozen=True)
class RowClustering:
    assignment: tuple[int, ...]
    k: int

    def __post_init__(self):
        a = tuple(int(c) for c in self.assignment)
        object.__setattr__(self, "assignment", a)
        if a and (min(a) < 0 or max(a) >= self.k):
            raise ValueError("cluster id out of range")
        if len(set(a)) != self.k and not (self.k == 0 and not a):
            raise ValueError(f"clustering uses {len(set(a))} of {self.k} cluster ids")

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> RowClustering:
        """Renumber arbitrary ids to 0..k-1 in order of first appearance."""
        ids: dict[int, int] = {}
        out = [ids.setdefault(int(c), len(ids)) for c in labels]
        return cls(tuple(out), len(ids))

    def members(self) -> list[np.ndarray]:
        a = np.asarray(self.assignment, dtype=np.int64)
        return [np.flatnonzero(a == c) for c in range(self.k)]


def clustering_error(D: BinaryDataset, C: RowClustering) -> float:
    """Sum of squared distances from rows to their cluster's column means.

    For 0-1 data a cluster with size n_c and column sums c_x contributes
    sum_x c_x (n_c - c_x) / n_c. Numerators are integers, and clusters are
    summed in id order, so the value is reproducible bit for bit and depends
    only on per-cluster column sums.
    """
    if len(C.assignment) != D.n_rows:
        raise UsageError(f"clustering covers {len(C.assignment)} rows, dataset has {D.n_rows}")
    return _error_from_cells(D.cells, np.asarray(C.assignment, dtype=np.int64), C.k)


def _error_from_cells(cells: np.ndarray, assignment: np.ndarray, k: int) -> float:
    total = 0.0
    for c in range(k):
        rows = cells[assignment == c]
        n_c = rows.shape[0]
        if n_c == 0:
            continue
        sums = rows.sum(axis=0, dtype=np.int64)
        total += int((sums * (n_c - sums)).sum()) / n_c
    return total


def _lloyd(X: np.ndarray, init_rows: np.ndarray, trace: list | None = None) -> np.ndarray:
    k = init_rows.size
    centroids = X[init_rows].copy()
    assign = None
    for _ in range(MAX_ITER):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)  # first minimum: ties go to the lowest id
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        counts = np.bincount(assign, minlength=k)
        for c in range(k):
            if counts[c]:
                centroids[c] = X[assign == c].mean(axis=0)
        for c in np.flatnonzero(counts == 0):
            # reseed at the row farthest from its centroid
            dist = ((X - centroids[assign]) ** 2).sum(axis=1)
            far = int(dist.argmax())
            if dist[far] <= 0 or counts[assign[far]] < 2:
                continue
            counts[assign[far]] -= 1
            old = assign[far]
            assign[far] = c
            counts[c] = 1
            centroids[c] = X[far]
            centroids[old] = X[assign == old].mean(axis=0)
        if trace is not None:
            trace.append(_error_from_cells(X, assign, k))
    return assign


def kmeans(D: BinaryDataset, k: int, restarts: int = 10, seed: int = 0,
           trace: list | None = None) -> RowClustering:
    """Best of ``restarts`` Lloyd runs, each started from k distinct random rows.

    Empty clusters that cannot be reseeded are dropped, so the returned k may
    be smaller than requested when D has fewer than k distinct rows.
    ``trace``, if given, collects one list of per-iteration errors per run.
    """
    if k < 1 or k > D.n_rows:
        raise UsageError(f"k={k} must be between 1 and the number of rows ({D.n_rows})")
    if restarts < 1:
        raise UsageError("restarts must be >= 1")
    X = D.cells.astype(np.float64)
    rng = np.random.default_rng(seed)
    best, best_err = None, np.inf
    for _ in range(restarts):
        init = rng.choice(D.n_rows, size=k, replace=False)
        run_trace = [] if trace is not None else None
        assign = _lloyd(X, init, run_trace)
        if trace is not None:
            trace.append(run_trace)
        err = _error_from_cells(D.cells, assign, k)
        if err < best_err:
            best, best_err = assign, err
    return RowClustering.from_labels(best)


def kmeans_error(cells: np.ndarray, k: int, restarts: int, seed: int) -> float:
    """Clustering error of the best k-means clustering of a raw cell matrix."""
    D = BinaryDataset(cells)
    return clustering_error(D, kmeans(D, k, restarts, seed))


# -- clustering files ---------------------------------------------------------

def parse_clustering(text: str, row_labels: Sequence[str]) -> RowClustering:
    """Lines of ``row_label<TAB>cluster_id``; every row must appear exactly once."""
    lookup = {lab: i for i, lab in enumerate(row_labels)}
    ids: dict[int, int] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        parts = raw.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise ParseError("expected row_label<TAB>cluster_id", no)
        label, cid = parts[0].strip(), parts[1].strip()
        if label not in lookup:
            raise ParseError(f"unknown row label {label!r}", no)
        if lookup[label] in ids:
            raise ParseError(f"row {label!r} listed twice", no)
        try:
            ids[lookup[label]] = int(cid)
        except ValueError:
            raise ParseError(f"bad cluster id {cid!r}", no) from None
    if len(ids) != len(row_labels):
        missing = [row_labels[i] for i in range(len(row_labels)) if i not in ids]
        raise ParseError(f"rows without a cluster: {', '.join(missing[:5])}")
    return RowClustering.from_labels([ids[i] for i in range(len(row_labels))])


def load_clustering(source, row_labels: Sequence[str]) -> RowClustering:
    if isinstance(source, (str, os.PathLike)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
        text = text.decode("utf-8") if isinstance(text, bytes) else text
    return parse_clustering(text, row_labels)


def dumps_clustering(C: RowClustering, row_labels: Sequence[str]) -> str:
    return "".join(f"{lab}\t{c}\n" for lab, c in zip(row_labels, C.assignment))
