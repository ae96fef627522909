"""Counter-based random numbers for the simulation kernels.

Philox4x64-10 keyed by ``(seed, sample index)``.  Every sample owns its own
stream, so the values drawn for a sample do not depend on which worker
produced it or in which order samples were processed.  The block function
is bit-compatible with :class:`numpy.random.Philox` (same key, counter
incremented before each block).

State layout (uint64[11]): key0, key1, ctr0..ctr3, buf0..buf3, buffer position.
"""

import math

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_TWO_M53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi

STATE_SIZE = 11


@intrinsic
def _mulhi(typingctx, a, b):
    """High word of the 128-bit product of two uint64 (one native multiply)."""
    sig = types.uint64(types.uint64, types.uint64)

    def codegen(context, builder, signature, args):
        wide = ir.IntType(128)
        prod = builder.mul(builder.zext(args[0], wide), builder.zext(args[1], wide))
        return builder.trunc(builder.lshr(prod, ir.Constant(wide, 64)), ir.IntType(64))

    return sig, codegen


@njit(cache=True, inline="always")
def philox_block(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0 = _mulhi(_M0, c0)
        lo0 = _M0 * c0
        hi1 = _mulhi(_M1, c2)
        lo1 = _M1 * c2
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit(cache=True)
def rng_init(state, seed, index):
    state[0] = np.uint64(seed)
    state[1] = np.uint64(index)
    for i in range(2, 10):
        state[i] = _ZERO
    state[10] = np.uint64(4)


@njit(cache=True, inline="always")
def next_u64(state):
    pos = np.int64(state[10])
    if pos >= 4:
        state[2] += _ONE
        if state[2] == _ZERO:
            state[3] += _ONE
            if state[3] == _ZERO:
                state[4] += _ONE
                if state[4] == _ZERO:
                    state[5] += _ONE
        b0, b1, b2, b3 = philox_block(state[2], state[3], state[4], state[5], state[0], state[1])
        state[6] = b0
        state[7] = b1
        state[8] = b2
        state[9] = b3
        pos = 0
    state[10] = np.uint64(pos + 1)
    return state[6 + pos]


@njit(cache=True, inline="always")
def uniform(state):
    """Uniform on [0, 1) with 53 random bits."""
    return np.float64(next_u64(state) >> _S11) * _TWO_M53


@njit(cache=True, inline="always")
def exponential(state, rate):
    return -math.log(1.0 - uniform(state)) / rate


@njit(cache=True, inline="always")
def normal(state):
    """Standard normal by Box-Muller (the sine branch is discarded)."""
    u1 = 1.0 - uniform(state)
    u2 = uniform(state)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


@njit(cache=True)
def _raw_stream(seed, index, n):
    state = np.empty(STATE_SIZE, dtype=np.uint64)
    rng_init(state, seed, index)
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        out[i] = next_u64(state)
    return out


def raw_stream(seed: int, index: int, n: int) -> np.ndarray:
    """First ``n`` raw 64-bit outputs of stream ``(seed, index)``."""
    return _raw_stream(np.uint64(seed), np.uint64(index), n)


def uniform_stream(seed: int, index: int, n: int) -> np.ndarray:
    return (raw_stream(seed, index, n) >> np.uint64(11)).astype(np.float64) * _TWO_M53
