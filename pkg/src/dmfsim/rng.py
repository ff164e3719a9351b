"""Counter-based random streams.

Every random quantity in the package is a pure function of a 64-bit key and a
counter: ``u(key, k) = splitmix64(key + (k + 1) * GOLDEN)``.  Streams can be
extended (prefix property) or evaluated out of order, and the compiled and
pure-Python kernels consume exactly the same numbers.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# stream tags keep independent uses of one cell seed apart
STREAM_TAGS = {
    "env": 1,
    "pdmp": 2,
    "limit": 3,
    "init": 4,
    "coupling": 5,
    "atoms": 6,
    "annealed_w": 7,
    "replicate": 8,
}


def splitmix64(z: int) -> int:
    z = (z ^ (z >> 30)) * _M1 & MASK64
    z = (z ^ (z >> 27)) * _M2 & MASK64
    return z ^ (z >> 31)


def uniform_scalar(key: int, counter: int) -> float:
    """Open-interval uniform for one (key, counter) pair."""
    z = splitmix64((key + (counter + 1) * GOLDEN) & MASK64)
    return ((z >> 11) + 0.5) * _INV53


def uniforms(key: int, start: int, n: int) -> np.ndarray:
    """Vectorised ``uniform_scalar(key, k)`` for k in [start, start + n)."""
    ctr = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key & MASK64) + ctr * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53


def derive_key(master_seed: int, *path: int | str) -> int:
    """Hash ``(master_seed, *path)`` into a 64-bit stream key.

    String components are mapped through ``STREAM_TAGS`` (or their UTF-8 bytes
    for ad-hoc tags) so keys never depend on Python's salted ``hash``.
    """
    words: list[int] = []
    for p in path:
        if isinstance(p, str):
            tag = STREAM_TAGS.get(p)
            if tag is None:
                tag = int.from_bytes(p.encode("utf-8")[:8].ljust(8, b"\0"), "little") | (1 << 63)
            words.append(tag)
        else:
            words.append(int(p))
    ss = np.random.SeedSequence(entropy=int(master_seed) & MASK64, spawn_key=tuple(words))
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def generator(key: int) -> np.random.Generator:
    """A numpy Generator on a Philox stream keyed by ``key`` (bulk Gaussian work)."""
    return np.random.Generator(np.random.Philox(key=key))
