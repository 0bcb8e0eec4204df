"""xoshiro256** seeded through splitmix64.

The scalar generator drives scene layout one draw at a time. Bulk noise for
rasters comes from :func:`normal_array`, which runs many independent
xoshiro256** lanes side by side in numpy; lane seeds are drawn from the
scalar stream so the whole sequence is fixed by the scene seed.
"""
from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(state):
    """One splitmix64 step: returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    def __init__(self, seed):
        sm = int(seed) & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self.s = s

    def next_u64(self):
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def random(self):
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.random()

    def randint(self, lo, hi):
        """Integer in [lo, hi] inclusive (Lemire-free modulo; the bias is < 2**-50)."""
        return lo + self.next_u64() % (hi - lo + 1)

    def normal(self):
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items):
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]
        return items


_C5 = np.uint64(5)
_C9 = np.uint64(9)


def _rotl_arr(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


def uniform_array(rng, n, lanes=1024):
    """``n`` uniform doubles in [0, 1) from ``lanes`` parallel xoshiro256** streams."""
    state = np.array([[rng.next_u64() for _ in range(4)] for _ in range(lanes)], dtype=np.uint64).T.copy()
    s0, s1, s2, s3 = state
    steps = -(-n // lanes)
    out = np.empty((steps, lanes), dtype=np.uint64)
    for k in range(steps):
        out[k] = _rotl_arr(s1 * _C5, 7) * _C9
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl_arr(s3, 45)
    return (out.ravel()[:n] >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def normal_array(rng, shape):
    """Standard normal samples via Box-Muller on :func:`uniform_array` draws."""
    n = int(np.prod(shape))
    half = -(-n // 2)
    u = uniform_array(rng, 2 * half)
    u1 = 1.0 - u[:half]
    u2 = u[half:]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:n].reshape(shape)
