"""Null models, swap chains, Besag-Clifford sampling and convergence selection."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Literal

import numpy as np

from . import kernels
from .clustering import RowClustering
from .errors import UsageError
from .matrix import BinaryDataset, frobenius_sq_distance
from .patterns import ItemsetFamily, frequencies
from .rng import ChainRNG, stream_state, stream_states

log = logging.getLogger(__name__)

STATUS = {kernels.APPLIED: "applied", kernels.SELF_LOOP: "self-loop", kernels.REJECTED: "rejected"}

# stream key prefixes under a run seed
_BACKWARD = 0
_FORWARD = 1
_CONVERGENCE = 2

CONVERGENCE_REPEATS = 5
CONVERGENCE_TOL = 0.01
CONVERGENCE_EPS = 1e-12
CONVERGENCE_CAP = 2 ** 20
CONVERGENCE_Z = 1.0
DEFAULT_W = 4.0


@dataclass(frozen=True)
class NullModel:
    """Which statistics the randomized datasets share with the original.

    Row and column margins are always preserved. ``cluster-margins`` also
    keeps per-cluster column sums; ``itemset-soft`` weights datasets by
    ``exp(-w * h)`` where h is the total deviation from the family's targets.
    """

    kind: Literal["margins", "cluster-margins", "itemset-soft"] = "margins"
    clustering: RowClustering | None = None
    family: ItemsetFamily | None = None
    w: float = DEFAULT_W

    def __post_init__(self):
        if self.kind == "margins":
            pass
        elif self.kind == "cluster-margins":
            if self.clustering is None:
                raise UsageError("cluster-margins needs a clustering")
        elif self.kind == "itemset-soft":
            if self.family is None or self.family.target_freqs is None:
                raise UsageError("itemset-soft needs an itemset family with target frequencies")
            if not self.w > 0:
                raise UsageError("w must be positive")
        else:
            raise UsageError(f"unknown null model {self.kind!r}")

    @classmethod
    def margins(cls) -> NullModel:
        return cls("margins")

    @classmethod
    def cluster_margins(cls, C: RowClustering) -> NullModel:
        return cls("cluster-margins", clustering=C)

    @classmethod
    def itemset_soft(cls, F: ItemsetFamily, w: float = DEFAULT_W) -> NullModel:
        return cls("itemset-soft", family=F, w=float(w))

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.clustering is not None:
            d["clustering"] = list(self.clustering.assignment)
        if self.family is not None:
            d["itemsets"] = [list(X.items) for X in self.family]
            d["targets"] = list(self.family.target_freqs)
        if self.kind == "itemset-soft":
            d["w"] = self.w
        return d

    @classmethod
    def from_dict(cls, d: dict) -> NullModel:
        C = RowClustering.from_labels(d["clustering"]) if "clustering" in d else None
        F = ItemsetFamily(d["itemsets"], d["targets"]) if "itemsets" in d else None
        return cls(d["kind"], clustering=C, family=F, w=float(d.get("w", DEFAULT_W)))


@dataclass(frozen=True)
class ChainConfig:
    samples: int = 1000
    swap_attempts: int | Literal["auto"] = "auto"
    seed: int = 0

    def __post_init__(self):
        if int(self.samples) < 1:
            raise UsageError("samples must be >= 1")
        if self.swap_attempts != "auto" and int(self.swap_attempts) < 0:
            raise UsageError("swap_attempts must be >= 0 or 'auto'")


class Chain:
    """A swap chain that mutates ``D`` in place under ``model``.

    The dataset's 1-cell index is regrouped so that each cluster's 1-cells
    are contiguous; this keeps proposals O(1) for every model.
    """

    def __init__(self, D: BinaryDataset, model: NullModel, rng: ChainRNG,
                 freqs: np.ndarray | None = None):
        self.D = D
        self.model = model
        self.rng = rng
        self.seg_lo, self.seg_hi = _regroup(D, model.clustering)
        F = model.family if model.kind == "itemset-soft" else None
        if F is None:
            F = ItemsetFamily([], [])
        self.fam_ptr, self.fam_items, self.inv_ptr, self.inv_sets = F.csr(D.n_cols)
        self.targets = np.array(F.target_freqs, dtype=np.int64)
        self.freqs = frequencies(D, F) if freqs is None else freqs
        self.w = float(model.w)

    def run(self, n_steps: int) -> tuple[int, int, str]:
        """Attempt n_steps swaps. Returns (applied, rejected, status of the last step)."""
        D = self.D
        a, r, st = kernels.run_chain(D.cells, D._one_cols, D._one_rows, D._slot,
                                     self.seg_lo, self.seg_hi, int(n_steps), self.rng.state,
                                     self.fam_ptr, self.fam_items, self.inv_ptr, self.inv_sets,
                                     self.targets, self.freqs, self.w)
        return int(a), int(r), STATUS[int(st)]

    def step(self) -> str:
        return self.run(1)[2]


def _regroup(D: BinaryDataset, C: RowClustering | None):
    """Reorder D's 1-cell list by cluster; return per-cluster slot ranges."""
    if C is None:
        return np.array([0], dtype=np.int64), np.array([D.n_ones], dtype=np.int64)
    if len(C.assignment) != D.n_rows:
        raise UsageError(f"clustering covers {len(C.assignment)} rows, dataset has {D.n_rows}")
    assignment = np.asarray(C.assignment, dtype=np.int64)
    rows, cols = D._one_rows, D._one_cols
    order = np.argsort(assignment[rows], kind="stable")
    D._one_rows = rows[order].copy()
    D._one_cols = cols[order].copy()
    D._slot[:] = -1
    D._slot[D._one_rows, D._one_cols] = np.arange(D._one_rows.size)
    counts = np.bincount(assignment[D._one_rows], minlength=C.k)
    hi = np.cumsum(counts).astype(np.int64)
    return hi - counts, hi


def swap_step(D: BinaryDataset, rng: ChainRNG) -> str:
    """One attempt of the margin-preserving swap chain; 'applied' or 'self-loop'."""
    return Chain(D, NullModel.margins(), rng).step()


def cluster_swap_step(D: BinaryDataset, C: RowClustering, rng: ChainRNG) -> str:
    """One attempt restricted to a uniformly chosen cluster."""
    return Chain(D, NullModel.cluster_margins(C), rng).step()


def itemset_swap_step(D: BinaryDataset, F: ItemsetFamily, w: float, freqs_state: np.ndarray,
                      rng: ChainRNG) -> str:
    """One Metropolis step; ``freqs_state`` (int64, aligned with F) is updated on accept."""
    return Chain(D, NullModel.itemset_soft(F, w), rng, freqs=freqs_state).step()


@dataclass
class SampleSet:
    """End states of the k forward chains, stacked as a (k, m, n) uint8 array."""

    cells: np.ndarray
    swap_attempts: int
    seed: int
    start: np.ndarray
    applied: np.ndarray = field(repr=False, default=None)
    rejected: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return self.cells.shape[0]

    def datasets(self, like: BinaryDataset | None = None) -> list[BinaryDataset]:
        if like is None:
            return [BinaryDataset(c) for c in self.cells]
        return [like.with_cells(c) for c in self.cells]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("EXCHMINE_THREADS", "1")))
    except ValueError:
        return 1


def _forward(start: BinaryDataset, chain: Chain, n_steps: int, states: np.ndarray,
             progress: Callable[[int, int], None] | None = None, batch: int = 64):
    k = states.shape[0]
    m, n = start.shape
    out = np.empty((k, m, n), dtype=np.uint8)
    totals = np.zeros((k, 2), dtype=np.int64)

    def work(lo):
        hi = min(lo + batch, k)
        totals[lo:hi] = kernels.run_chains(
            start.cells, start._one_cols, start._one_rows, start._slot,
            chain.seg_lo, chain.seg_hi, int(n_steps), states[lo:hi],
            chain.fam_ptr, chain.fam_items, chain.inv_ptr, chain.inv_sets,
            chain.targets, chain.freqs, chain.w, out[lo:hi])
        return hi - lo

    starts = range(0, k, batch)
    done = 0
    threads = _threads()
    if threads > 1 and k > batch:
        with ThreadPoolExecutor(threads) as pool:
            for cnt in pool.map(work, starts):
                done += cnt
                if progress:
                    progress(done, k)
    else:
        for lo in starts:
            done += work(lo)
            if progress:
                progress(done, k)
    return out, totals


def resolve_swaps(D: BinaryDataset, model: NullModel, cfg: ChainConfig) -> int:
    if cfg.swap_attempts == "auto":
        K = choose_swap_count(D, model, cfg.seed)
        log.info("swap attempts resolved to K=%d", K)
        return K
    return int(cfg.swap_attempts)


def sample(D: BinaryDataset, model: NullModel, cfg: ChainConfig,
           progress: Callable[[int, int], None] | None = None,
           swap_attempts: int | None = None) -> SampleSet:
    """Besag-Clifford exchangeable samples.

    The chain runs K attempts from D to a hub state (the chain is reversible,
    so the backward run uses the forward kernel), then k independent K-step
    chains leave the hub. D itself is never modified.
    """
    K = resolve_swaps(D, model, cfg) if swap_attempts is None else int(swap_attempts)
    hub = D.copy()
    chain = Chain(hub, model, ChainRNG(state=stream_state(cfg.seed, _BACKWARD)))
    chain.run(K)
    states = stream_states(cfg.seed, (_FORWARD,), int(cfg.samples))
    out, totals = _forward(hub, chain, K, states, progress)
    return SampleSet(out, K, cfg.seed, hub.cells.copy(), totals[:, 0], totals[:, 1])


def choose_swap_count(D: BinaryDataset, model: NullModel, seed: int = 0,
                      history: list | None = None) -> int:
    """Double K from the number of 1s until the mean distance to D settles.

    Each stage draws 5 K-step randomizations of D and takes the mean number
    of differing cells; K is accepted when that mean moved less than 1%
    relative to the previous stage, or by no more than one standard error of
    the difference of the two means (on small matrices the 5-sample mean is
    noisier than 1%, and the relative rule alone would rarely fire).
    Stops at 2**20 times the number of 1s.
    """
    base = max(D.n_ones, 1)
    K = base
    cap = CONVERGENCE_CAP * base
    prev = None
    stage = 0
    while True:
        work = D.copy()
        chain = Chain(work, model, ChainRNG(0))
        states = stream_states(seed, (_CONVERGENCE, stage), CONVERGENCE_REPEATS)
        out, _ = _forward(work, chain, K, states)
        dists = [frobenius_sq_distance(D.cells, c) for c in out]
        mean = float(np.mean(dists))
        se = float(np.std(dists, ddof=1) / np.sqrt(len(dists)))
        if history is not None:
            history.append({"K": K, "distances": dists, "mean": mean})
        if prev is not None:
            change = abs(mean - prev[0])
            if (change / max(prev[0], CONVERGENCE_EPS) < CONVERGENCE_TOL
                    or change <= CONVERGENCE_Z * np.hypot(se, prev[1])):
                return K
        if K >= cap:
            log.warning("convergence not reached; using cap K=%d", K)
            return K
        prev = (mean, se)
        K *= 2
        stage += 1


def enumerate_margin_class(D: BinaryDataset, max_cells: int = 20) -> list[BinaryDataset]:
    """Every 0-1 matrix with D's row and column sums, by backtracking over rows."""
    m, n = D.shape
    if m * n > max_cells:
        raise UsageError(f"{m}x{n} is too large to enumerate (limit {max_cells} cells)")
    rows = D.row_margins.tolist()
    remaining = D.col_margins.tolist()
    current = np.zeros((m, n), dtype=np.uint8)
    found: list[BinaryDataset] = []

    def rec(r):
        if r == m:
            if not any(remaining):
                found.append(D.with_cells(current.copy()))
            return
        rows_left = m - r
        if any(c > rows_left for c in remaining):
            return
        for cols in combinations([c for c in range(n) if remaining[c] > 0], rows[r]):
            for c in cols:
                remaining[c] -= 1
                current[r, c] = 1
            rec(r + 1)
            for c in cols:
                remaining[c] += 1
                current[r, c] = 0

    rec(0)
    return found
