"""Binary datasets, margins, swaps and dataset file formats."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ShapeError, SwapError

# When set, every apply_swap recomputes margins and the 1-cell index.
DEBUG_CHECKS = bool(os.environ.get("EXCHMINE_DEBUG"))

FORMATS = ("dense", "transactions")


class BinaryDataset:
    """A 0-1 matrix with cached margins and an index of its 1-cells.

    The index is a flat list of 1-positions (``_one_rows``, ``_one_cols``)
    plus an inverse map ``_slot[r, c]`` giving each 1-cell's position in that
    list (-1 for zeros), so a swap rewrites two slots and four cells.
    """

    def __init__(self, cells, row_labels: Sequence[str] | None = None,
                 col_labels: Sequence[str] | None = None):
        arr = np.asarray(cells)
        if arr.size == 0 and arr.ndim < 2:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-d matrix, got {arr.ndim} dimensions")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("cells must be 0 or 1")
        self.cells = np.ascontiguousarray(arr, dtype=np.uint8)
        m, n = self.cells.shape
        self.row_labels = _check_labels(row_labels, m, "row")
        self.col_labels = _check_labels(col_labels, n, "column")
        self._rebuild_index()

    def _rebuild_index(self):
        rows, cols = np.nonzero(self.cells)
        self._one_rows = rows.astype(np.int64)
        self._one_cols = cols.astype(np.int64)
        self._slot = np.full(self.cells.shape, -1, dtype=np.int64)
        self._slot[rows, cols] = np.arange(rows.size)
        self._row_margins = self.cells.sum(axis=1, dtype=np.int64)
        self._col_margins = self.cells.sum(axis=0, dtype=np.int64)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cells.shape[1]

    @property
    def n_ones(self) -> int:
        return int(self._one_rows.size)

    @property
    def row_margins(self) -> np.ndarray:
        return self._row_margins.copy()

    @property
    def col_margins(self) -> np.ndarray:
        return self._col_margins.copy()

    @property
    def ones_index(self) -> np.ndarray:
        """(n_ones, 2) array of (row, col) positions in slot order."""
        return np.column_stack((self._one_rows, self._one_cols))

    def one_at(self, slot: int) -> tuple[int, int]:
        return int(self._one_rows[slot]), int(self._one_cols[slot])

    def row_names(self) -> list[str]:
        return list(self.row_labels) if self.row_labels else [str(i) for i in range(self.n_rows)]

    def col_names(self) -> list[str]:
        return list(self.col_labels) if self.col_labels else [str(i) for i in range(self.n_cols)]

    def copy(self) -> BinaryDataset:
        return BinaryDataset(self.cells.copy(), self.row_labels, self.col_labels)

    def with_cells(self, cells) -> BinaryDataset:
        """A dataset with new cells and this dataset's labels."""
        return BinaryDataset(cells, self.row_labels, self.col_labels)

    def take_rows(self, rows: Sequence[int]) -> BinaryDataset:
        rows = np.asarray(rows, dtype=np.int64)
        labels = [self.row_labels[r] for r in rows] if self.row_labels else None
        return BinaryDataset(self.cells[rows], labels, self.col_labels)

    def check_invariants(self):
        if not np.isin(self.cells, (0, 1)).all():
            raise AssertionError("non-binary cell")
        if not np.array_equal(self._row_margins, self.cells.sum(axis=1)):
            raise AssertionError("row margins out of date")
        if not np.array_equal(self._col_margins, self.cells.sum(axis=0)):
            raise AssertionError("column margins out of date")
        if self._one_rows.size != int(self.cells.sum()):
            raise AssertionError("ones index has wrong size")
        if self._one_rows.size and not self.cells[self._one_rows, self._one_cols].all():
            raise AssertionError("ones index points at a zero")
        if not np.array_equal(self._slot[self._one_rows, self._one_cols], np.arange(self._one_rows.size)):
            raise AssertionError("inverse slot map inconsistent")
        if int((self._slot >= 0).sum()) != self._one_rows.size:
            raise AssertionError("stale slot entries")

    def __eq__(self, other):
        if not isinstance(other, BinaryDataset):
            return NotImplemented
        return (self.cells.shape == other.cells.shape
                and np.array_equal(self.cells, other.cells)
                and self.row_labels == other.row_labels
                and self.col_labels == other.col_labels)

    __hash__ = None

    def __repr__(self):
        return f"BinaryDataset({self.n_rows}x{self.n_cols}, ones={self.n_ones})"


def _check_labels(labels, size, what):
    if labels is None:
        return None
    labels = tuple(str(x) for x in labels)
    if len(labels) != size:
        raise ShapeError(f"{len(labels)} {what} labels for {size} {what}s")
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate {what} labels")
    return labels


@dataclass(frozen=True)
class Swap:
    """Rows s, t and columns x, y; turns D[s,x]=D[t,y]=1, D[s,y]=D[t,x]=0 around."""

    s: int
    t: int
    x: int
    y: int

    def __post_init__(self):
        if self.s == self.t or self.x == self.y:
            raise SwapError(f"degenerate swap {self}")

    @property
    def inverse(self) -> Swap:
        return Swap(self.s, self.t, self.y, self.x)


def margins(D: BinaryDataset) -> tuple[list[int], list[int]]:
    return D._row_margins.tolist(), D._col_margins.tolist()


def frobenius_sq_distance(A: BinaryDataset, B: BinaryDataset) -> int:
    """Number of cells where A and B differ."""
    a = A.cells if isinstance(A, BinaryDataset) else np.asarray(A)
    b = B.cells if isinstance(B, BinaryDataset) else np.asarray(B)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def is_applicable(D: BinaryDataset, sw: Swap) -> bool:
    c = D.cells
    m, n = c.shape
    if not (0 <= sw.s < m and 0 <= sw.t < m and 0 <= sw.x < n and 0 <= sw.y < n):
        return False
    return bool(c[sw.s, sw.x] and c[sw.t, sw.y] and not c[sw.s, sw.y] and not c[sw.t, sw.x])


def apply_swap(D: BinaryDataset, sw: Swap) -> None:
    if not is_applicable(D, sw):
        raise SwapError(f"{sw} is not applicable")
    s, t, x, y = sw.s, sw.t, sw.x, sw.y
    c, slot = D.cells, D._slot
    i, j = slot[s, x], slot[t, y]
    c[s, x] = 0
    c[t, y] = 0
    c[s, y] = 1
    c[t, x] = 1
    D._one_cols[i] = y
    D._one_cols[j] = x
    slot[s, y] = i
    slot[t, x] = j
    slot[s, x] = -1
    slot[t, y] = -1
    if DEBUG_CHECKS:
        D.check_invariants()


# -- file formats -----------------------------------------------------------

def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_dataset(source, format: str = "dense") -> BinaryDataset:
    """Read a dataset from a path, bytes, or an open (binary or text) stream."""
    text = _read_text(source)
    if format == "dense":
        return parse_dense(text)
    if format == "transactions":
        return parse_transactions(text)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


def _is_bit(tok: str) -> bool:
    return tok in ("0", "1")


def parse_dense(text: str) -> BinaryDataset:
    lines = [(no, line.strip()) for no, line in enumerate(text.splitlines(), 1)]
    lines = [(no, line) for no, line in lines if line]
    if not lines:
        return BinaryDataset(np.zeros((0, 0), dtype=np.uint8))

    header = None
    first_no, first = lines[0]
    toks = [t.strip() for t in first.split(",")]
    if any(not _is_bit(t) for t in toks[1:]) or (len(toks) == 1 and not _is_bit(toks[0])):
        header = toks
        lines = lines[1:]

    rows, row_labels = [], []
    labelled = None
    for no, line in lines:
        toks = [t.strip() for t in line.split(",")]
        has_label = not _is_bit(toks[0])
        if labelled is None:
            labelled = has_label
        elif has_label != labelled:
            raise ParseError("row labels must be given on every row or none", no)
        if has_label:
            row_labels.append(toks[0])
            toks = toks[1:]
        for tok in toks:
            if not _is_bit(tok):
                raise ValueError(f"line {no}: non-binary value {tok!r}")
        if rows and len(toks) != len(rows[0]):
            raise ParseError(f"expected {len(rows[0])} values, got {len(toks)}", no)
        rows.append([int(t) for t in toks])

    n = len(rows[0]) if rows else (len(header) - 1 if header and header[0] == "" else len(header or ()))
    col_labels = None
    if header is not None:
        if len(header) == n + 1:
            header = header[1:]
        if len(header) != n:
            raise ParseError(f"header has {len(header)} labels for {n} columns", first_no)
        col_labels = header
    cells = np.array(rows, dtype=np.uint8).reshape(len(rows), n)
    return BinaryDataset(cells, row_labels if labelled else None, col_labels)


def parse_transactions(text: str) -> BinaryDataset:
    declared = None
    order: dict[str, int] = {}
    transactions = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            if line.startswith("#items:"):
                if declared is not None or transactions:
                    raise ParseError("#items: directive must come first and only once", no)
                declared = line[len("#items:"):].split()
                if len(set(declared)) != len(declared):
                    raise ParseError("duplicate label in #items: directive", no)
                order = {lab: i for i, lab in enumerate(declared)}
            continue
        items = line.split()
        if len(set(items)) != len(items):
            raise ValueError(f"line {no}: duplicate item in transaction")
        for item in items:
            if item not in order:
                if declared is not None:
                    raise ParseError(f"item {item!r} not declared in #items:", no)
                order[item] = len(order)
        transactions.append([order[i] for i in items])
    cells = np.zeros((len(transactions), len(order)), dtype=np.uint8)
    for r, cols in enumerate(transactions):
        cells[r, cols] = 1
    return BinaryDataset(cells, None, list(order))


def dumps_dataset(D: BinaryDataset, format: str = "dense") -> str:
    out = io.StringIO()
    if format == "dense":
        if D.col_labels is not None:
            head = ([""] if D.row_labels else []) + list(D.col_labels)
            out.write(",".join(head) + "\n")
        for r in range(D.n_rows):
            vals = [str(int(v)) for v in D.cells[r]]
            if D.row_labels:
                vals.insert(0, D.row_labels[r])
            out.write(",".join(vals) + "\n")
    elif format == "transactions":
        names = D.col_names()
        out.write("#items: " + " ".join(names) + "\n")
        for r in range(D.n_rows):
            out.write(" ".join(names[c] for c in np.flatnonzero(D.cells[r])) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")
    return out.getvalue()


def save_dataset(D: BinaryDataset, dest, format: str = "dense") -> None:
    text = dumps_dataset(D, format)
    if isinstance(dest, (str, os.PathLike)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)


def from_rows(rows: Iterable[Iterable[int]], **labels) -> BinaryDataset:
    return BinaryDataset(np.array([list(r) for r in rows], dtype=np.uint8), **labels)
