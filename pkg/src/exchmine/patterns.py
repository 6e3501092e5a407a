"""Itemsets, frequencies, levelwise mining and the soft-constraint energy."""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, UsageError
from .kernels import swap_delta
from .matrix import BinaryDataset, Swap


@dataclass(frozen=True)
class Itemset:
    items: tuple[int, ...] = ()

    def __post_init__(self):
        items = tuple(int(i) for i in self.items)
        if any(i < 0 for i in items):
            raise IndexError("negative column index in itemset")
        if any(a >= b for a, b in zip(items, items[1:])):
            items = tuple(sorted(set(items)))
        object.__setattr__(self, "items", items)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def sort_key(self):
        return (len(self.items), self.items)

    def label(self, names: Sequence[str] | None = None, sep: str = "") -> str:
        if not self.items:
            return "{}"
        if names is None:
            return " ".join(str(i) for i in self.items)
        if sep == "" and any(len(names[i]) != 1 for i in self.items):
            sep = " "
        return sep.join(names[i] for i in self.items)


def as_itemset(x) -> Itemset:
    return x if isinstance(x, Itemset) else Itemset(tuple(x))


class ItemsetFamily:
    """An ordered, duplicate-free collection of itemsets with optional target frequencies."""

    def __init__(self, itemsets: Iterable = (), target_freqs: Iterable[int] | None = None):
        sets = [as_itemset(x) for x in itemsets]
        targets = None if target_freqs is None else [int(f) for f in target_freqs]
        if targets is not None and len(targets) != len(sets):
            raise ValueError(f"{len(targets)} target frequencies for {len(sets)} itemsets")
        seen = set()
        keep_sets, keep_targets = [], []
        for i, X in enumerate(sets):
            if X in seen:
                continue
            seen.add(X)
            keep_sets.append(X)
            if targets is not None:
                keep_targets.append(targets[i])
        self.itemsets: tuple[Itemset, ...] = tuple(keep_sets)
        self.target_freqs: tuple[int, ...] | None = None if targets is None else tuple(keep_targets)
        self._index = {X: i for i, X in enumerate(self.itemsets)}

    def __len__(self):
        return len(self.itemsets)

    def __iter__(self):
        return iter(self.itemsets)

    def __contains__(self, X):
        return as_itemset(X) in self._index

    def __eq__(self, other):
        if not isinstance(other, ItemsetFamily):
            return NotImplemented
        return self.itemsets == other.itemsets and self.target_freqs == other.target_freqs

    def __repr__(self):
        return f"ItemsetFamily({len(self)} itemsets, targets={'yes' if self.target_freqs else 'no'})"

    def index(self, X) -> int:
        return self._index[as_itemset(X)]

    def target(self, X) -> int:
        if self.target_freqs is None:
            raise UsageError("family has no target frequencies")
        return self.target_freqs[self.index(X)]

    def items(self):
        """(itemset, target) pairs; target is None when the family has none."""
        targets = self.target_freqs or (None,) * len(self)
        return list(zip(self.itemsets, targets))

    def with_targets(self, D: BinaryDataset) -> ItemsetFamily:
        return ItemsetFamily(self.itemsets, [frequency(D, X) for X in self.itemsets])

    def added(self, X, target: int) -> ItemsetFamily:
        if self.target_freqs is None and len(self):
            raise UsageError("cannot add a target to a family without targets")
        return ItemsetFamily(self.itemsets + (as_itemset(X),), (self.target_freqs or ()) + (int(target),))

    def removed(self, X) -> ItemsetFamily:
        X = as_itemset(X)
        pairs = [(Y, f) for Y, f in self.items() if Y != X]
        targets = None if self.target_freqs is None else [f for _, f in pairs]
        return ItemsetFamily([Y for Y, _ in pairs], targets)

    def sorted(self) -> ItemsetFamily:
        order = sorted(range(len(self)), key=lambda i: self.itemsets[i].sort_key)
        targets = None if self.target_freqs is None else [self.target_freqs[i] for i in order]
        return ItemsetFamily([self.itemsets[i] for i in order], targets)

    def labels(self, names: Sequence[str] | None = None) -> list[str]:
        return [X.label(names) for X in self.itemsets]

    def csr(self, n_cols: int):
        """Itemset CSR (ptr, items) and column -> itemset inverted index (ptr, sets)."""
        ptr = np.zeros(len(self) + 1, dtype=np.int64)
        for j, X in enumerate(self.itemsets):
            ptr[j + 1] = ptr[j] + len(X)
        items = np.array([c for X in self.itemsets for c in X.items], dtype=np.int64)
        if items.size and items.max() >= n_cols:
            raise IndexError(f"itemset column {int(items.max())} out of range for {n_cols} columns")
        by_col = [[] for _ in range(n_cols)]
        for j, X in enumerate(self.itemsets):
            for c in X.items:
                by_col[c].append(j)
        inv_ptr = np.zeros(n_cols + 1, dtype=np.int64)
        for c in range(n_cols):
            inv_ptr[c + 1] = inv_ptr[c] + len(by_col[c])
        inv_sets = np.array([j for lst in by_col for j in lst], dtype=np.int64)
        return ptr, items, inv_ptr, inv_sets


def frequency(D: BinaryDataset, X) -> int:
    """Number of rows covering X; the empty itemset is covered by every row."""
    X = as_itemset(X)
    if X.items and X.items[-1] >= D.n_cols:
        raise IndexError(f"column {X.items[-1]} out of range for {D.n_cols} columns")
    if not X.items:
        return D.n_rows
    return int(D.cells[:, list(X.items)].all(axis=1).sum())


def frequencies(D: BinaryDataset, F: ItemsetFamily) -> np.ndarray:
    return np.array([frequency(D, X) for X in F], dtype=np.int64)


def mine_frequent(D: BinaryDataset, min_support: int, max_size: int) -> ItemsetFamily:
    """All non-empty itemsets of size <= max_size with frequency >= min_support.

    Levelwise: candidates of size k join two frequent (k-1)-itemsets sharing
    their first k-2 items and survive only if every (k-1)-subset is frequent.
    Output is sorted by (size, items) and carries frequencies as targets.
    """
    if min_support < 1:
        raise UsageError("min_support must be >= 1")
    cols = D.cells.astype(bool).T  # per-column coverage vectors
    found: list[tuple[tuple[int, ...], int]] = []
    level: dict[tuple[int, ...], np.ndarray] = {}
    for c in range(D.n_cols):
        f = int(cols[c].sum())
        if f >= min_support:
            level[(c,)] = cols[c]
    size = 1
    while level and size <= max_size:
        found.extend((X, int(cov.sum())) for X, cov in sorted(level.items()))
        if size == max_size:
            break
        keys = sorted(level)
        nxt = {}
        for a in range(len(keys)):
            for b in range(a + 1, len(keys)):
                p, q = keys[a], keys[b]
                if p[:-1] != q[:-1]:
                    break
                cand = p + (q[-1],)
                if any(sub not in level for sub in combinations(cand, size)):
                    continue
                cov = level[p] & cols[q[-1]]
                if int(cov.sum()) >= min_support:
                    nxt[cand] = cov
        level = nxt
        size += 1
    found.sort(key=lambda e: (len(e[0]), e[0]))
    return ItemsetFamily([X for X, _ in found], [f for _, f in found])


def itemset_difference(F: ItemsetFamily, D_hat: BinaryDataset) -> int:
    """Sum over F of |target frequency - frequency in D_hat|."""
    if F.target_freqs is None:
        raise UsageError("itemset_difference needs target frequencies")
    return int(sum(abs(t - frequency(D_hat, X)) for X, t in zip(F.itemsets, F.target_freqs)))


def incremental_difference_delta(D: BinaryDataset, F: ItemsetFamily, sw: Swap,
                                 current_freqs) -> tuple[int, np.ndarray]:
    """Change of the difference if ``sw`` were applied, and the frequencies afterwards.

    Only itemsets containing column x or y are inspected, and only on rows s, t.
    ``current_freqs`` must equal the frequencies of F in D; this is not checked.
    """
    if F.target_freqs is None:
        raise UsageError("incremental_difference_delta needs target frequencies")
    ptr, items, inv_ptr, inv_sets = F.csr(D.n_cols)
    freqs = np.array(current_freqs, dtype=np.int64)
    targets = np.array(F.target_freqs, dtype=np.int64)
    n = max(len(F), 1)
    stamp = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    dfreq = np.empty(n, dtype=np.int64)
    dh, count = swap_delta(D.cells, sw.s, sw.t, sw.x, sw.y, ptr, items, inv_ptr, inv_sets,
                           targets, freqs, stamp, 1, touched, dfreq)
    freqs[touched[:count]] += dfreq[:count]
    return int(dh), freqs


# -- itemset family files -----------------------------------------------------

def parse_family(text: str, col_labels: Sequence[str]) -> ItemsetFamily:
    """One itemset per line as column labels, optionally ``: <target>``."""
    lookup = {lab: i for i, lab in enumerate(col_labels)}
    sets, targets = [], []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        body, colon, tail = line.rpartition(":")
        if not colon:
            body, tail = line, None
        try:
            X = Itemset(tuple(lookup[tok] for tok in body.split()))
        except KeyError as exc:
            raise ParseError(f"unknown column label {exc.args[0]!r}", no) from None
        if tail is not None:
            try:
                targets.append(int(tail.strip()))
            except ValueError:
                raise ParseError(f"bad target frequency {tail.strip()!r}", no) from None
        sets.append(X)
    if targets and len(targets) != len(sets):
        raise ParseError("target frequencies must be given for all itemsets or none")
    return ItemsetFamily(sets, targets or None)


def load_family(source, col_labels: Sequence[str]) -> ItemsetFamily:
    if isinstance(source, (str, os.PathLike)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
        text = text.decode("utf-8") if isinstance(text, bytes) else text
    return parse_family(text, col_labels)


def dumps_family(F: ItemsetFamily, col_labels: Sequence[str]) -> str:
    lines = []
    for X, t in F.items():
        body = " ".join(col_labels[i] for i in X.items)
        lines.append(body if t is None else f"{body}: {t}")
    return "".join(line + "\n" for line in lines)


def parse_itemset_label(label: str, col_labels: Sequence[str]) -> Itemset:
    """``"A B"``, or ``"AB"`` when every column label is a single character."""
    lookup = {lab: i for i, lab in enumerate(col_labels)}
    label = label.strip()
    if label in lookup:
        return Itemset((lookup[label],))
    if " " in label or not all(len(c) == 1 for c in col_labels):
        toks = label.split()
    else:
        toks = list(label)
    missing = [t for t in toks if t not in lookup]
    if missing or not toks:
        raise KeyError(label)
    return Itemset(tuple(lookup[t] for t in toks))
