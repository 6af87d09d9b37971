"""Packed bit strings, position subsets and seeded randomness.

Every register, message and key in the simulator is a :class:`BitString`.
Bits are stored packed, eight per byte, MSB-first, so that registers of
``k * 2**nu`` bits stay cheap for ``nu`` around 20.  All operations are
positional: index 0 is the first bit of the string.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

Generator = np.random.Generator


def make_rng(seed) -> Generator:
    """The single generator constructor used throughout the package."""
    return np.random.default_rng(seed)


def spawn_rngs(seed, count: int) -> list[Generator]:
    """Independent child generators derived from one master seed."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(count)]


class BitString:
    """Immutable fixed-length bit sequence."""

    __slots__ = ("_packed", "_n")

    def __init__(self, packed: np.ndarray, length: int):
        if length < 0:
            raise ValueError("length must be non-negative")
        nbytes = (length + 7) // 8
        packed = np.asarray(packed, dtype=np.uint8)
        if packed.shape != (nbytes,):
            raise ValueError(f"expected {nbytes} packed bytes for {length} bits, got {packed.shape}")
        tail = length % 8
        if tail and packed[-1] & (0xFF >> tail):
            # keep padding bits zero so equality and hashing are by value
            packed = packed.copy()
            packed[-1] &= (0xFF << (8 - tail)) & 0xFF
        packed = packed.copy() if packed.flags.writeable else packed
        packed.flags.writeable = False
        self._packed = packed
        self._n = length

    # construction

    @classmethod
    def from_array(cls, bits) -> "BitString":
        arr = np.asarray(bits)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise ValueError("bits must be 0 or 1")
        return cls(np.packbits(arr.astype(np.uint8)), arr.size)

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        text = text.replace("_", "").strip()
        if any(ch not in "01" for ch in text):
            raise ValueError(f"not a binary string: {text!r}")
        return cls.from_array(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(np.zeros((length + 7) // 8, dtype=np.uint8), length)

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitString":
        """Big-endian encoding of ``value`` in exactly ``length`` bits."""
        if value < 0 or value >> length:
            raise ValueError(f"{value} does not fit in {length} bits")
        nbytes = (length + 7) // 8
        shifted = value << (nbytes * 8 - length)
        return cls(np.frombuffer(shifted.to_bytes(nbytes, "big"), dtype=np.uint8), length)

    @classmethod
    def from_hex(cls, hexstr: str, length: int) -> "BitString":
        nibbles = (length + 3) // 4
        if len(hexstr) != nibbles:
            raise ValueError(f"{length} bits need {nibbles} hex digits, got {len(hexstr)}")
        raw = bytes.fromhex(hexstr + ("0" if nibbles % 2 else ""))
        return cls(np.frombuffer(raw, dtype=np.uint8)[: (length + 7) // 8], length)

    @classmethod
    def concat(cls, parts: Iterable["BitString"]) -> "BitString":
        arrays = [p.to_array() for p in parts]
        if not arrays:
            return cls.zeros(0)
        return cls.from_array(np.concatenate(arrays))

    # access

    def __len__(self) -> int:
        return self._n

    @property
    def length(self) -> int:
        return self._n

    @property
    def packed(self) -> np.ndarray:
        return self._packed

    def to_array(self) -> np.ndarray:
        """Unpacked uint8 array of 0/1 values (a fresh, writable copy)."""
        return np.unpackbits(self._packed, count=self._n)

    def __getitem__(self, i: int) -> int:
        if not isinstance(i, (int, np.integer)):
            raise TypeError("BitString indices must be integers; use extract() for subsets")
        if i < 0:
            i += self._n
        if not 0 <= i < self._n:
            raise IndexError(i)
        return int(self._packed[i >> 3] >> (7 - (i & 7)) & 1)

    def __iter__(self):
        return iter(self.to_array().tolist())

    def to_int(self) -> int:
        if self._n == 0:
            return 0
        return int.from_bytes(self._packed.tobytes(), "big") >> ((8 - self._n % 8) % 8)

    def to_hex(self) -> str:
        return self._packed.tobytes().hex()[: (self._n + 3) // 4]

    def to_json(self) -> dict:
        return {"len": self._n, "hex": self.to_hex()}

    @classmethod
    def from_json(cls, obj: dict) -> "BitString":
        return cls.from_hex(obj["hex"], obj["len"])

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.to_array())

    def __repr__(self) -> str:
        if self._n <= 64:
            return f"BitString('{self}')"
        return f"BitString(len={self._n}, hex={self.to_hex()[:16]}...)"

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._packed, other._packed)

    def __hash__(self) -> int:
        return hash((self._n, self._packed.tobytes()))

    def __lt__(self, other: "BitString") -> bool:
        # lexicographic on equal lengths, used for tie-breaking
        if self._n != other._n:
            raise ValueError("can only order bit strings of equal length")
        return self._packed.tobytes() < other._packed.tobytes()

    # arithmetic

    def __xor__(self, other: "BitString") -> "BitString":
        return xor(self, other)

    def hamming_weight(self) -> int:
        return int(np.bitwise_count(self._packed).sum(dtype=np.int64))

    def __add__(self, other: "BitString") -> "BitString":
        return BitString.concat([self, other])

    def slice(self, start: int, stop: int) -> "BitString":
        return BitString.from_array(self.to_array()[start:stop])


class SubsetIndex:
    """Sorted, duplicate-free positions into a host string of ``universe`` bits."""

    __slots__ = ("_pos", "universe")

    def __init__(self, positions, universe: int):
        pos = np.asarray(positions, dtype=np.int64).reshape(-1)
        if pos.size:
            if pos[0] < 0 or pos[-1] >= universe:
                raise ValueError("positions out of range for the universe")
            if np.any(np.diff(pos) <= 0):
                raise ValueError("positions must be strictly increasing")
        pos = pos.copy()
        pos.flags.writeable = False
        self._pos = pos
        self.universe = int(universe)

    @classmethod
    def full(cls, universe: int) -> "SubsetIndex":
        return cls(np.arange(universe), universe)

    @property
    def positions(self) -> np.ndarray:
        return self._pos

    def __len__(self) -> int:
        return int(self._pos.size)

    def __iter__(self):
        return iter(self._pos.tolist())

    def __contains__(self, i) -> bool:
        j = np.searchsorted(self._pos, i)
        return bool(j < self._pos.size and self._pos[j] == i)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubsetIndex):
            return NotImplemented
        return self.universe == other.universe and np.array_equal(self._pos, other._pos)

    def __hash__(self) -> int:
        return hash((self.universe, self._pos.tobytes()))

    def __repr__(self) -> str:
        shown = self._pos[:8].tolist()
        more = "..." if self._pos.size > 8 else ""
        return f"SubsetIndex({shown}{more}, universe={self.universe})"

    def complement(self) -> "SubsetIndex":
        mask = np.ones(self.universe, dtype=bool)
        mask[self._pos] = False
        return SubsetIndex(np.flatnonzero(mask), self.universe)

    def compose(self, inner: "SubsetIndex") -> "SubsetIndex":
        """Positions in the host string of the ``inner`` sub-subset of ``self``."""
        if inner.universe != len(self):
            raise ValueError("inner subset must index into this subset")
        return SubsetIndex(self._pos[inner.positions], self.universe)

    def index_width(self) -> int:
        """Bits needed to write one position (at least one)."""
        return max(1, (self.universe - 1).bit_length())

    def encode(self) -> BitString:
        """Fixed-width big-endian encoding of the sorted position list."""
        width = self.index_width()
        shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
        bits = (self._pos[:, None] >> shifts[None, :]) & 1
        return BitString.from_array(bits.reshape(-1).astype(np.uint8))

    @classmethod
    def decode(cls, encoded: BitString, universe: int) -> "SubsetIndex":
        width = max(1, (universe - 1).bit_length())
        if len(encoded) % width:
            raise ValueError("encoded length is not a multiple of the index width")
        bits = encoded.to_array().reshape(-1, width).astype(np.int64)
        weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
        return cls(bits @ weights, universe)


def random_bitstring(length: int, rng: Generator) -> BitString:
    """Independent uniform bits drawn from ``rng``."""
    if length < 0:
        raise ValueError("length must be non-negative")
    raw = rng.integers(0, 256, size=(length + 7) // 8, dtype=np.uint8)
    return BitString(raw, length)


def xor(a: BitString, b: BitString) -> BitString:
    if len(a) != len(b):
        raise ValueError(f"xor of strings with lengths {len(a)} and {len(b)}")
    return BitString(np.bitwise_xor(a.packed, b.packed), len(a))


def extract(x: BitString, s: SubsetIndex) -> BitString:
    """Bits of ``x`` at the positions of ``s``, in order."""
    if s.universe != len(x):
        raise ValueError(f"subset universe {s.universe} does not match string length {len(x)}")
    return BitString.from_array(x.to_array()[s.positions])


def sample_subset(universe: int, count: int, rng: Generator) -> SubsetIndex:
    """Uniform ``count``-subset of ``range(universe)`` by partial Fisher-Yates.

    Only the touched cells of the virtual index array are materialised, so
    extra space is O(count) regardless of ``universe``.
    """
    if not 0 <= count <= universe:
        raise ValueError(f"cannot draw {count} positions from a universe of {universe}")
    if count == 0:
        return SubsetIndex([], universe)
    targets = rng.integers(np.arange(count), universe).tolist()
    swapped: dict[int, int] = {}
    chosen = []
    for i, j in enumerate(targets):
        vi = swapped.get(i, i)
        vj = swapped.get(j, j)
        swapped[j] = vi
        chosen.append(vj)
    return SubsetIndex(np.sort(np.asarray(chosen, dtype=np.int64)), universe)


def hamming_distance(a: BitString, b: BitString) -> int:
    return xor(a, b).hamming_weight()


def hamming_weight(a: BitString) -> int:
    return a.hamming_weight()


def flip_positions(x: BitString, positions: Sequence[int]) -> BitString:
    arr = x.to_array()
    arr[np.asarray(positions, dtype=np.int64)] ^= 1
    return BitString.from_array(arr)


def bsc(x: BitString, p: float, rng: Generator) -> BitString:
    """Binary symmetric channel: flip each bit independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("crossover probability must lie in [0, 1]")
    if p == 0.0 or len(x) == 0:
        return x
    noise = (rng.random(len(x)) < p).astype(np.uint8)
    return BitString(np.bitwise_xor(x.packed, np.packbits(noise)), len(x))
