"""Compiled swap-chain kernels.

One kernel serves all three null models. The 1-cell list is grouped into
row segments (one segment for plain margins, one per cluster otherwise); a
step picks a segment uniformly, draws two 1-cells from it with replacement
and swaps them if the 2x2 submatrix is a checkerboard. Swaps only rewrite
column entries, so every 1-cell stays in its row's segment.

When an itemset family is supplied the step becomes a Metropolis step on
``exp(-w * h)``, with ``h`` the summed absolute frequency deviation from the
targets. The change in ``h`` is evaluated from the two touched rows only.
"""

import numpy as np
from numba import njit

from .rng import next_below, next_double

APPLIED = 0
SELF_LOOP = 1
REJECTED = 2


@njit(cache=True, nogil=True)
def _covers(cells, r, items, lo, hi, off_col, on_col):
    """Whether row r covers items[lo:hi], reading off_col as 0 and on_col as 1."""
    for k in range(lo, hi):
        c = items[k]
        if c == on_col:
            continue
        if c == off_col or cells[r, c] == 0:
            return 0
    return 1


@njit(cache=True, nogil=True)
def swap_delta(cells, s, t, x, y, fam_ptr, fam_items, inv_ptr, inv_sets,
               targets, freqs, stamp, tick, touched, dfreq):
    """Change in h for the swap (s, t, x, y); fills touched[:count], dfreq[:count].

    Returns (delta_h, count). ``stamp`` must hold values < tick.
    """
    dh = 0
    count = 0
    for col in (x, y):
        for q in range(inv_ptr[col], inv_ptr[col + 1]):
            j = inv_sets[q]
            if stamp[j] == tick:
                continue
            stamp[j] = tick
            lo = fam_ptr[j]
            hi = fam_ptr[j + 1]
            before = _covers(cells, s, fam_items, lo, hi, -1, -1) + _covers(cells, t, fam_items, lo, hi, -1, -1)
            after = _covers(cells, s, fam_items, lo, hi, x, y) + _covers(cells, t, fam_items, lo, hi, y, x)
            d = after - before
            if d != 0:
                f = freqs[j]
                dh += abs(targets[j] - (f + d)) - abs(targets[j] - f)
                touched[count] = j
                dfreq[count] = d
                count += 1
    return dh, count


@njit(cache=True, nogil=True)
def run_chain(cells, one_cols, one_rows, slot, seg_lo, seg_hi, n_steps, state,
              fam_ptr, fam_items, inv_ptr, inv_sets, targets, freqs, w):
    """Run n_steps swap attempts in place. Returns (applied, rejected, last_status)."""
    n_seg = seg_lo.shape[0]
    n_sets = fam_ptr.shape[0] - 1
    stamp = np.zeros(max(n_sets, 1), dtype=np.int64)
    touched = np.empty(max(n_sets, 1), dtype=np.int64)
    dfreq = np.empty(max(n_sets, 1), dtype=np.int64)
    applied = 0
    rejected = 0
    status = SELF_LOOP
    for step in range(n_steps):
        status = SELF_LOOP
        if n_seg == 0:
            continue
        g = 0
        if n_seg > 1:
            g = next_below(state, n_seg)
        lo = seg_lo[g]
        cnt = seg_hi[g] - lo
        if cnt < 1:
            continue
        i = lo + next_below(state, cnt)
        j = lo + next_below(state, cnt)
        s = one_rows[i]
        x = one_cols[i]
        t = one_rows[j]
        y = one_cols[j]
        if s == t or x == y or cells[s, y] != 0 or cells[t, x] != 0:
            continue
        count = 0
        if n_sets > 0:
            dh, count = swap_delta(cells, s, t, x, y, fam_ptr, fam_items, inv_ptr, inv_sets,
                                   targets, freqs, stamp, step + 1, touched, dfreq)
            if dh > 0:
                if not (next_double(state) < np.exp(-w * dh)):
                    rejected += 1
                    status = REJECTED
                    continue
        cells[s, x] = 0
        cells[t, y] = 0
        cells[s, y] = 1
        cells[t, x] = 1
        one_cols[i] = y
        one_cols[j] = x
        slot[s, y] = i
        slot[t, x] = j
        slot[s, x] = -1
        slot[t, y] = -1
        for q in range(count):
            freqs[touched[q]] += dfreq[q]
        applied += 1
        status = APPLIED
    return applied, rejected, status


@njit(cache=True, nogil=True)
def run_chains(cells0, one_cols0, one_rows, slot0, seg_lo, seg_hi, n_steps, states,
               fam_ptr, fam_items, inv_ptr, inv_sets, targets, freqs0, w, out):
    """Independent chains from one start state; chain c's end state goes to out[c]."""
    k = states.shape[0]
    totals = np.zeros((k, 2), dtype=np.int64)
    for c in range(k):
        cells = cells0.copy()
        one_cols = one_cols0.copy()
        slot = slot0.copy()
        freqs = freqs0.copy()
        st = states[c].copy()
        a, r, _ = run_chain(cells, one_cols, one_rows, slot, seg_lo, seg_hi, n_steps, st,
                            fam_ptr, fam_items, inv_ptr, inv_sets, targets, freqs, w)
        out[c] = cells
        totals[c, 0] = a
        totals[c, 1] = r
    return totals


@njit(cache=True, nogil=True)
def support_counts(samples, items):
    """Per-sample frequency of one itemset over a (k, m, n) stack."""
    k, m, _ = samples.shape
    out = np.zeros(k, dtype=np.int64)
    for c in range(k):
        total = 0
        for r in range(m):
            ok = 1
            for q in range(items.shape[0]):
                if samples[c, r, items[q]] == 0:
                    ok = 0
                    break
            total += ok
        out[c] = total
    return out
