"""Seedable, splittable xoshiro256** streams usable from numba kernels.

A stream is a ``uint64[4]`` state array. Streams are derived from a root seed
and a key path with :class:`numpy.random.SeedSequence`, so chain ``i`` of a
run gets the same numbers no matter how chains are scheduled.
"""

from __future__ import annotations

import secrets
from typing import Sequence

import numpy as np
from numba import njit

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_INV53 = 1.0 / 9007199254740992.0


def stream_state(seed: int, *key: int) -> np.ndarray:
    """State array for the stream named by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    state = ss.generate_state(4, np.uint64)
    if not state.any():  # xoshiro's only forbidden state
        state[0] = np.uint64(1)
    return state


def stream_states(seed: int, prefix: Sequence[int], count: int) -> np.ndarray:
    """(count, 4) states for keys ``(*prefix, 0) ... (*prefix, count-1)``."""
    out = np.empty((count, 4), dtype=np.uint64)
    for i in range(count):
        out[i] = stream_state(seed, *prefix, i)
    return out


def fresh_seed() -> int:
    return secrets.randbits(63)


@njit(cache=True, nogil=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, nogil=True)
def next_u64(state):
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return result


@njit(cache=True, nogil=True)
def next_double(state):
    """Uniform float in [0, 1) with 53 random bits."""
    return np.float64(next_u64(state) >> np.uint64(11)) * _INV53


@njit(cache=True, nogil=True)
def next_below(state, n):
    """Integer in [0, n) for n >= 1."""
    return np.int64(next_double(state) * n)


class ChainRNG:
    """Python handle on one stream, for step-at-a-time use."""

    def __init__(self, seed: int = 0, *key: int, state: np.ndarray | None = None):
        self.state = stream_state(seed, *key) if state is None else np.array(state, dtype=np.uint64)

    def random(self) -> float:
        return float(next_double(self.state))

    def below(self, n: int) -> int:
        return int(next_below(self.state, n))
