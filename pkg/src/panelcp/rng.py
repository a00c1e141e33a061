"""Seed derivation and counter-based random streams.

All randomness runs through Philox generators keyed by ``(seed, substream)``,
so a draw depends only on those two integers and never on how work is
split across processes.
"""

import hashlib

import numpy as np

from .errors import ParameterError

_MASK64 = (1 << 64) - 1


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= _MASK64:
        raise ParameterError(f"seed must lie in [0, 2**64), got {seed}")
    return int(seed)


def derive_seed(*parts):
    """Stable 64-bit seed from an arbitrary tuple of ints and strings."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def generator(seed, substream=0):
    """Philox-backed generator for stream ``substream`` of ``seed``."""
    seed = check_seed(seed)
    return np.random.Generator(np.random.Philox(key=[seed, int(substream) & _MASK64]))
