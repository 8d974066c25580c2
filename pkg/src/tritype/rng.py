"""Seedable 64-bit random streams (xoshiro256++ seeded via splitmix64).

The generator family is fixed so that runs are reproducible across
machines and across the pure-Python and numba code paths:

* state initialisation: four words drawn from a splitmix64 stream
  seeded with the 64-bit run seed;
* ensemble runs: child seed ``i`` is the ``(i+1)``-th output of the
  splitmix64 stream seeded with the master seed;
* bounded integer draws use modulo rejection, so degree-proportional
  sampling involves no floating point;
* unit-interval draws take the top 53 bits of one 64-bit output.

``Xoshiro256PP`` is the Python-side generator used by the step-level
engine API; the ``xs_*`` njit functions implement the identical stream
on a ``uint64[4]`` state array for the simulation kernels.
``tests/test_rng.py`` checks the two paths draw bit-identical streams.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 stream; returns (new_state, output)."""
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


def child_seeds(master_seed: int, n: int) -> list[int]:
    """Derive n ensemble child seeds from a master seed.

    Child i is the (i+1)-th splitmix64 output, so the list is a prefix:
    extending an ensemble never reseeds the existing runs.
    """
    s = master_seed & MASK64
    out = []
    for _ in range(n):
        s, z = splitmix64(s)
        out.append(z)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256PP:
    """xoshiro256++ with the splitmix64 seeding recommended by its authors."""

    def __init__(self, seed: int):
        s = seed & MASK64
        state = []
        for _ in range(4):
            s, z = splitmix64(s)
            state.append(z)
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s0 + s3) & MASK64, 23) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via modulo rejection."""
        if n <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 64) % n
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % n

    def next_unit(self) -> float:
        """Uniform float64 in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def state_array(self) -> np.ndarray:
        """Current state as uint64[4], shareable with the njit kernels."""
        return np.array(self._s, dtype=np.uint64)

    def set_state(self, state: np.ndarray) -> None:
        self._s = [int(w) for w in np.asarray(state, dtype=np.uint64)]


# numba mirror; globals are baked in as uint64 constants
U64 = np.uint64
_SM_GAMMA = U64(_GAMMA)
_SM_M1 = U64(_MIX1)
_SM_M2 = U64(_MIX2)
_S30 = U64(30)
_S27 = U64(27)
_S31 = U64(31)
_R23 = U64(23)
_R41 = U64(41)
_R17 = U64(17)
_R45 = U64(45)
_R19 = U64(19)
_R11 = U64(11)
_ZERO = U64(0)
_INV53 = 2.0**-53


@njit(cache=True, nogil=True)
def xs_init(seed):
    """uint64 seed -> uint64[4] xoshiro256++ state via splitmix64."""
    s = np.empty(4, dtype=np.uint64)
    st = U64(seed)
    for i in range(4):
        st = st + _SM_GAMMA
        z = st
        z = (z ^ (z >> _S30)) * _SM_M1
        z = (z ^ (z >> _S27)) * _SM_M2
        s[i] = z ^ (z >> _S31)
    return s


@njit(cache=True, nogil=True)
def xs_next(s):
    s0 = s[0]
    s1 = s[1]
    s2 = s[2]
    s3 = s[3]
    x = s0 + s3
    result = ((x << _R23) | (x >> _R41)) + s0
    t = s1 << _R17
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << _R45) | (s3 >> _R19)
    s[0] = s0
    s[1] = s1
    s[2] = s2
    s[3] = s3
    return result


@njit(cache=True, nogil=True)
def xs_below(s, n):
    """Uniform uint64 in [0, n); n must be a positive uint64."""
    threshold = (_ZERO - n) % n  # wraps to 2**64 - n, hence 2**64 % n
    while True:
        r = xs_next(s)
        if r >= threshold:
            return r % n


@njit(cache=True, nogil=True)
def xs_unit(s):
    return (xs_next(s) >> _R11) * _INV53
