"""Counter-based random streams.

Every uniform used by the package is addressed, not drawn: a stream is a
Philox4x64-10 key derived from ``(master_seed, stream_path)``, and a value is
identified by ``(lane, position, attempt)``.  Lane ``n >= 1`` holds the
subdivision variables of level ``n`` of the random homeomorphism, lane 0 is a
general purpose stream.  Because nothing depends on draw order, results do not
depend on how work is split between processes.

Two evaluation routes produce the same bits: numpy's ``Philox`` bit generator
for long contiguous runs of one stream, and a vectorised Philox written here
for few values from many streams at once (one key per Monte Carlo sample).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

_U64 = np.uint64
_MASK32 = _U64(0xFFFFFFFF)
_MUL0 = _U64(0xD2E7470EE14C6C93)
_MUL1 = _U64(0xCA5A826395121157)
_WEYL0 = _U64(0x9E3779B97F4A7C15)
_WEYL1 = _U64(0xBB67AE8584CAA73B)
_ROUNDS = 10

# tags mixed into keys so that derivation steps cannot collide with lanes
_SEED_TAG = 0x5EED_0F_D1AD1C
_CHILD_TAG = 0xC41D

_MASK64 = (1 << 64) - 1


def _mulhilo(a, b):
    al = a & _MASK32
    ah = a >> _U64(32)
    bl = b & _MASK32
    bh = b >> _U64(32)
    ll = al * bl
    lh = al * bh
    hl = ah * bl
    hh = ah * bh
    mid = (ll >> _U64(32)) + (lh & _MASK32) + (hl & _MASK32)
    hi = hh + (lh >> _U64(32)) + (hl >> _U64(32)) + (mid >> _U64(32))
    return hi, a * b


def philox4x64(counter, key):
    """Philox4x64-10 block function, vectorised over broadcastable words.

    ``counter`` is a 4-sequence and ``key`` a 2-sequence of uint64 arrays (or
    scalars).  Returns the four output words as uint64 arrays.
    """
    with np.errstate(over="ignore"):
        c0, c1, c2, c3 = (np.asarray(w, dtype=np.uint64) for w in counter)
        k0, k1 = (np.asarray(w, dtype=np.uint64) for w in key)
        for r in range(_ROUNDS):
            if r:
                k0 = k0 + _WEYL0
                k1 = k1 + _WEYL1
            hi0, lo0 = _mulhilo(_MUL0, c0)
            hi1, lo1 = _mulhilo(_MUL1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


_BELOW_ONE = np.nextafter(1.0, 0.0)


def to_unit_open(raw):
    """Map uint64 words to doubles in the open interval (0, 1)."""
    raw = np.asarray(raw, dtype=np.uint64)
    u = ((raw >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53
    # the top word gives 1 - 2**-54, which rounds to 1.0
    return np.minimum(u, _BELOW_ONE)


def _derive(key0, key1, index):
    out = philox4x64((index, _CHILD_TAG, 0, 0), (key0, key1))
    return out[0], out[1]


def _master_key(seed: int) -> tuple[int, int]:
    seed &= _MASK64
    w = philox4x64((seed, _SEED_TAG, 0, 0), (_SEED_TAG, 0))
    return int(w[0]), int(w[1])


@dataclass(frozen=True)
class RandomSource:
    """Deterministic stream keyed by a master seed and a derivation path."""

    master_seed: int
    stream_path: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(
            self, "stream_path", tuple(int(p) & _MASK64 for p in self.stream_path)
        )

    @property
    def key(self) -> tuple[int, int]:
        k0, k1 = _master_key(self.master_seed)
        for idx in self.stream_path:
            a, b = _derive(_U64(k0), _U64(k1), _U64(idx))
            k0, k1 = int(a), int(b)
        return k0, k1

    def child(self, *path: int) -> "RandomSource":
        return RandomSource(self.master_seed, self.stream_path + tuple(path))

    def child_keys(self, indices) -> np.ndarray:
        """Keys of ``self.child(i)`` for every ``i`` in ``indices``, shape (m, 2)."""
        idx = np.asarray(indices, dtype=np.uint64)
        k0, k1 = self.key
        a, b = _derive(_U64(k0), _U64(k1), idx)
        return np.stack([np.broadcast_to(a, idx.shape), np.broadcast_to(b, idx.shape)], axis=-1)

    def raw_block(self, lane: int, start: int, count: int, attempt: int = 0) -> np.ndarray:
        """``count`` contiguous uint64 words of ``lane`` starting at word ``start``."""
        return _raw_block(self.key, lane, start, count, attempt)

    def level_uniforms(self, n: int, start: int = 0, count: int | None = None,
                       attempt: int = 0) -> np.ndarray:
        """Uniforms X_{n,k} for odd k, in order of k, starting at k = 2*start+1."""
        if count is None:
            count = (1 << (n - 1)) - start
        return to_unit_open(self.raw_block(n, start, count, attempt))

    def uniform(self, size: int, lane: int = 0) -> np.ndarray:
        return to_unit_open(self.raw_block(lane, 0, size))


class KeyedStream(RandomSource):
    """A stream addressed directly by its derived key, e.g. a row of ``child_keys``."""

    def __init__(self, key):
        object.__setattr__(self, "_key", (int(key[0]), int(key[1])))
        object.__setattr__(self, "master_seed", 0)
        object.__setattr__(self, "stream_path", ())

    @property
    def key(self) -> tuple[int, int]:
        return self._key

    def child(self, *path: int) -> "KeyedStream":
        k0, k1 = self._key
        for idx in path:
            a, b = _derive(_U64(k0), _U64(k1), _U64(int(idx) & _MASK64))
            k0, k1 = int(a), int(b)
        return KeyedStream((k0, k1))

    def __eq__(self, other):
        return isinstance(other, KeyedStream) and other._key == self._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"KeyedStream(key=({self._key[0]:#x}, {self._key[1]:#x}))"


def _raw_block(key, lane: int, start: int, count: int, attempt: int = 0) -> np.ndarray:
    if count <= 0:
        return np.empty(0, dtype=np.uint64)
    first_block = start // 4
    n_blocks = (start + count + 3) // 4 - first_block
    # numpy's Philox increments the 256-bit counter before each block
    ctr = (first_block | (lane << 64) | (attempt << 128)) - 1
    ctr &= (1 << 256) - 1
    words = np.array([(ctr >> (64 * w)) & _MASK64 for w in range(4)], dtype=np.uint64)
    gen = np.random.Philox(key=np.array(key, dtype=np.uint64), counter=words)
    raw = gen.random_raw(4 * n_blocks)
    off = start - 4 * first_block
    return raw[off:off + count]


def uniforms_at(keys: np.ndarray, lane, position, attempt=0) -> np.ndarray:
    """Vectorised lookup of single uniforms for many keys.

    ``keys`` has shape (..., 2); ``lane``, ``position`` and ``attempt`` broadcast
    against ``keys[..., 0]``.  Agrees bitwise with ``RandomSource.level_uniforms``.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    position = np.asarray(position, dtype=np.uint64)
    block = position >> _U64(2)
    word = (position & _U64(3)).astype(np.intp)
    out = philox4x64((block, lane, attempt, 0), (keys[..., 0], keys[..., 1]))
    stacked = np.stack(np.broadcast_arrays(*out), axis=-1)
    word = np.broadcast_to(word, stacked.shape[:-1])
    raw = np.take_along_axis(stacked, word[..., None], axis=-1)[..., 0]
    return to_unit_open(raw)


class ConstantSource:
    """Injectable source returning the same value for every X_{n,k}.

    With value 1/2 the sampled homeomorphism is the identity; useful for tests.
    """

    def __init__(self, value: float):
        if not 0.0 < value < 1.0:
            raise ValueError("constant source value must lie in (0, 1)")
        self.value = float(value)
        self.master_seed = 0
        self.stream_path: Sequence[int] = ()

    def child(self, *path: int) -> "ConstantSource":
        return self

    def level_uniforms(self, n: int, start: int = 0, count: int | None = None,
                       attempt: int = 0) -> np.ndarray:
        if count is None:
            count = (1 << (n - 1)) - start
        return np.full(count, self.value)
