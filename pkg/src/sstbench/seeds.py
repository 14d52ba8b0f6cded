"""Deterministic seed derivation and a portable random stream.

Everything random in the harness flows through this module so that runs are
replayable and plans can be reproduced by independent implementations.  The
algorithms (and their constants) are frozen:

* ``mix``: fold 64-bit parts into a seed, applying the SplitMix64 finalizer
  after each part: ``h <- finalize(((h XOR part) + 0x9E3779B97F4A7C15) mod 2^64)``
  starting from ``h = 0``.
* ``fnv1a64``: FNV-1a over the UTF-8 bytes of a string (offset basis
  0xCBF29CE484222325, prime 0x100000001B3).
* ``SeedStream``: SplitMix64.  State advances by 0x9E3779B97F4A7C15 per draw;
  each output is the finalizer applied to the new state.
* Bounded draws use rejection sampling (reject ``u >= 2^64 - 2^64 mod n``,
  then ``u mod n``); ``n == 1`` returns 0 without consuming the stream.
* Shuffles are Fisher-Yates, descending: for ``i = len-1 .. 1`` swap ``a[i]``
  with ``a[randbelow(i+1)]``.

Published test vectors live in the README and tests/test_seeds.py.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _finalize(z: int) -> int:
    """SplitMix64 finalizer (avalanche) on a 64-bit value."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix(*parts: int) -> int:
    """Combine 64-bit integers into one seed, order-sensitively."""
    h = 0
    for p in parts:
        h = _finalize(((h ^ (p & _MASK64)) + _GOLDEN) & _MASK64)
    return h


def fnv1a64(text: str) -> int:
    """Stable 64-bit FNV-1a hash of a string (process-independent)."""
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


class SeedStream:
    """SplitMix64 stream of 64-bit integers with bounded-draw helpers."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _finalize(self._state)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError(f"randbelow requires n >= 1, got {n}")
        if n == 1:
            return 0
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def shuffle(self, seq) -> None:
        """In-place Fisher-Yates shuffle (descending index order)."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), in draw order."""
        if k > n:
            raise ValueError(f"cannot sample {k} from {n}")
        pool = list(range(n))
        picked = []
        for _ in range(k):
            j = self.randbelow(len(pool))
            picked.append(pool.pop(j))
        return picked


# Role tags separating the independent random streams of one experiment run.
ROLE_TRAIN_DRAW = fnv1a64("train-draw")
ROLE_EVAL_DRAW = fnv1a64("eval-draw")
ROLE_CLUSTER_SAMPLE = fnv1a64("cluster-sample")
ROLE_VOCODER_NOISE = fnv1a64("vocoder-noise")
