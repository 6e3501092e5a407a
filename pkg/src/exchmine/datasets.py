"""Bundled example data and a seeded synthetic generator."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .clustering import RowClustering, parse_clustering
from .matrix import BinaryDataset, parse_dense


def toy_path():
    return resources.files("exchmine") / "data" / "toy.csv"


def toy_clustering_path():
    return resources.files("exchmine") / "data" / "toy_clustering.tsv"


def toy_dataset() -> BinaryDataset:
    """The 9x8 example matrix over items A..H (33 ones)."""
    return parse_dense(toy_path().read_text(encoding="utf-8"))


def toy_clustering() -> RowClustering:
    """Rows 1-4 versus rows 5-9."""
    D = toy_dataset()
    return parse_clustering(toy_clustering_path().read_text(encoding="utf-8"), D.row_labels)


def planted_dataset(m: int = 200, n: int = 50, seed: int = 0, groups: int = 4,
                    density: float = 0.08, block_density: float = 0.55,
                    planted: int = 3) -> BinaryDataset:
    """Background noise plus row groups with dense column blocks and a few planted itemsets.

    Rows are split into ``groups`` contiguous groups; group g is dense on its
    own block of columns. Each planted itemset (3 columns drawn at random)
    is switched on in a random 15% of all rows, cutting across groups.
    """
    rng = np.random.default_rng(seed)
    cells = (rng.random((m, n)) < density).astype(np.uint8)
    row_groups = np.array_split(np.arange(m), groups)
    col_blocks = np.array_split(rng.permutation(n // 2), groups)
    for rows, cols in zip(row_groups, col_blocks):
        block = rng.random((rows.size, cols.size)) < block_density
        cells[np.ix_(rows, cols)] |= block.astype(np.uint8)
    for _ in range(planted):
        cols = rng.choice(np.arange(n // 2, n), size=3, replace=False)
        rows = rng.choice(m, size=max(1, int(0.15 * m)), replace=False)
        cells[np.ix_(rows, cols)] = 1
    row_labels = [f"t{i}" for i in range(m)]
    col_labels = [f"i{j}" for j in range(n)]
    return BinaryDataset(cells, row_labels, col_labels)
