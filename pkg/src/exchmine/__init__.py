"""Significance testing of binary-data patterns against swap-randomized null models."""

from .clustering import RowClustering, clustering_error, kmeans
from .datasets import planted_dataset, toy_clustering, toy_dataset
from .errors import (ExchmineError, MigrationError, ParseError, SessionComplete,
                     SessionFormatError, ShapeError, SwapError, UsageError)
from .matrix import BinaryDataset, Swap, apply_swap, load_dataset, save_dataset
from .nullmodels import ChainConfig, NullModel, choose_swap_count, sample
from .patterns import Itemset, ItemsetFamily, frequency, mine_frequent
from .session import SessionConfig, SessionState, iterate_manual, iterate_smallest_p
from .significance import SignificanceReport, TestStatistic, bh_adjust, empirical_p, test_patterns

__version__ = "0.1.0"
