"""Toeplitz hashing, entropy measures and exhaustive leftover-hash oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .bits import BitString, Generator, random_bitstring

NORMALIZATION_TOL = 1e-12
EXHAUSTIVE_MAX_N = 12


@dataclass(frozen=True)
class ToeplitzHash:
    """``h(x) = T x xor offset`` over GF(2), ``T[i, j] = diagonal_seed[i - j + n - 1]``.

    Ranging over all seeds and offsets gives a strongly 2-universal family
    of maps ``{0,1}^n -> {0,1}^m`` with ``2**(n + 2m - 1)`` members.
    """

    n: int
    m: int
    diagonal_seed: BitString
    offset: BitString

    def __post_init__(self):
        if self.n < 1 or self.m < 0:
            raise ValueError("need n >= 1 and m >= 0")
        if len(self.diagonal_seed) != self.n + self.m - 1:
            raise ValueError(f"diagonal seed must have {self.n + self.m - 1} bits")
        if len(self.offset) != self.m:
            raise ValueError(f"offset must have {self.m} bits")

    @classmethod
    def random(cls, n: int, m: int, rng: Generator) -> "ToeplitzHash":
        return cls(n, m, random_bitstring(n + m - 1, rng), random_bitstring(m, rng))

    @property
    def seed_length(self) -> int:
        return self.n + 2 * self.m - 1

    def matrix(self) -> np.ndarray:
        """The m x n Toeplitz matrix as uint8."""
        seed = self.diagonal_seed.to_array()
        if self.m == 0:
            return np.zeros((0, self.n), dtype=np.uint8)
        return np.ascontiguousarray(sliding_window_view(seed, self.n)[:, ::-1])

    def linear_part(self, x: BitString) -> BitString:
        if len(x) != self.n:
            raise ValueError(f"hash expects {self.n} input bits, got {len(x)}")
        if self.m == 0:
            return BitString.zeros(0)
        seed = self.diagonal_seed.to_array().astype(np.int64)
        conv = np.convolve(seed, x.to_array().astype(np.int64))
        return BitString.from_array((conv[self.n - 1 : self.n - 1 + self.m] & 1).astype(np.uint8))

    def __call__(self, x: BitString) -> BitString:
        return self.linear_part(x) ^ self.offset

    def truncated(self, m: int) -> "ToeplitzHash":
        """The first ``m`` output bits as a hash of its own."""
        if not 0 <= m <= self.m:
            raise ValueError("cannot truncate to more bits than the hash produces")
        return ToeplitzHash(self.n, m, self.diagonal_seed.slice(0, self.n + m - 1), self.offset.slice(0, m))

    def encode(self) -> BitString:
        """Seed as broadcast on the public channel: diagonal seed then offset."""
        return self.diagonal_seed + self.offset

    @classmethod
    def decode(cls, encoded: BitString, n: int, m: int) -> "ToeplitzHash":
        split = n + m - 1
        return cls(n, m, encoded.slice(0, split), encoded.slice(split, split + m))

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "seed": self.encode().to_json()}


def hash(h: ToeplitzHash, x: BitString) -> BitString:  # noqa: A001 - mirrors the operation name
    return h(x)


# entropy and distance


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


class FiniteDistribution:
    """Probability mass function on hashable outcomes."""

    def __init__(self, outcomes: Mapping[Hashable, float] | Iterable[tuple[Hashable, float]]):
        items = outcomes.items() if isinstance(outcomes, Mapping) else outcomes
        probs: dict = {}
        for value, p in items:
            if p < 0:
                raise ValueError(f"negative probability for {value!r}")
            probs[value] = probs.get(value, 0) + p
        total = math.fsum(float(p) for p in probs.values())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self.probs = probs

    @classmethod
    def uniform(cls, values: Iterable[Hashable]) -> "FiniteDistribution":
        values = list(values)
        w = Fraction(1, len(values))
        return cls({v: w for v in values})

    @classmethod
    def point(cls, value: Hashable) -> "FiniteDistribution":
        return cls({value: 1})

    def __getitem__(self, value) -> float:
        return self.probs.get(value, 0)

    def support(self) -> list:
        return [v for v, p in self.probs.items() if p > 0]

    def marginal(self, axis: int) -> "FiniteDistribution":
        out: dict = {}
        for (pair, p) in self.probs.items():
            out[pair[axis]] = out.get(pair[axis], 0) + p
        return FiniteDistribution(out)

    def __repr__(self) -> str:
        return f"FiniteDistribution({len(self.probs)} outcomes)"


def variational_distance(P: FiniteDistribution, Q: FiniteDistribution) -> float:
    keys = set(P.probs) | set(Q.probs)
    return 0.5 * math.fsum(abs(float(P[k]) - float(Q[k])) for k in keys)


def guessing_probability(P: FiniteDistribution) -> float:
    return float(max(P.probs.values()))


def min_entropy(P: FiniteDistribution) -> float:
    return -math.log2(guessing_probability(P))


def conditional_guessing_probability(joint: FiniteDistribution) -> float:
    """``sum_y P(Y=y) max_x P(X=x | Y=y)`` for a joint law on pairs ``(x, y)``."""
    best: dict = {}
    for (x, y), p in joint.probs.items():
        if p > best.get(y, 0):
            best[y] = p
    return math.fsum(float(p) for p in best.values())


def conditional_min_entropy(joint: FiniteDistribution) -> float:
    return -math.log2(conditional_guessing_probability(joint))


# exhaustive oracles over the Toeplitz family


def _family_columns(n: int, m: int, seeds: np.ndarray) -> np.ndarray:
    """Column j of every Toeplitz matrix as an m-bit integer; shape (len(seeds), n).

    Seed integers are read MSB-first as ``diagonal_seed``; column j holds
    ``seed[n-1-j+i]`` for rows i = 0..m-1, i.e. a contiguous m-bit window.
    """
    total = n + m - 1
    cols = np.empty((seeds.size, n), dtype=np.int64)
    mask = (1 << m) - 1
    for j in range(n):
        start = n - 1 - j  # first seed index of the window
        cols[:, j] = (seeds >> (total - start - m)) & mask
    return cols


def _family_table(cols: np.ndarray, n: int) -> np.ndarray:
    """Linear part of every family member on all ``2**n`` inputs; shape (members, 2**n).

    Built by doubling from the least significant input bit: the inputs in
    ``[v, 2v)`` are those in ``[0, v)`` with bit ``v`` (column j) switched on.
    """
    table = np.zeros((cols.shape[0], 1 << n), dtype=np.int64)
    for j in reversed(range(n)):
        v = 1 << (n - 1 - j)
        table[:, v : 2 * v] = table[:, :v] ^ cols[:, j : j + 1]
    return table


def _apply_family(cols: np.ndarray, xs: np.ndarray, n: int) -> np.ndarray:
    """Linear part of every family member on every input; shape (members, len(xs))."""
    return _family_table(cols, n)[:, xs]


def universality_counts(n: int, m: int, x1: int, x2: int) -> np.ndarray:
    """Exhaustive ``#{h : h(x1)=y1, h(x2)=y2}`` over the full family (seeds and offsets).

    Returns a ``2**m x 2**m`` integer table indexed by ``(y1, y2)``.
    """
    if x1 == x2:
        raise ValueError("universality is defined for distinct inputs")
    seeds = np.arange(2 ** (n + m - 1), dtype=np.int64)
    cols = _family_columns(n, m, seeds)
    lin = _apply_family(cols, np.array([x1, x2], dtype=np.int64), n)
    table = np.zeros((2**m, 2**m), dtype=np.int64)
    for b in range(2**m):
        np.add.at(table, (lin[:, 0] ^ b, lin[:, 1] ^ b), 1)
    return table


def family_size(n: int, m: int) -> int:
    return 2 ** (n + 2 * m - 1)


def lhl_distance_oracle(P: FiniteDistribution, n: int, m: int, chunk: int | None = None) -> float:
    """Exact ``delta((h(S,X), S), U x S)`` over the whole Toeplitz family.

    ``P`` is a law on integers ``0 <= x < 2**n`` (MSB-first bit order).
    Because ``S`` is uniform and independent of ``X``, the joint distance is
    the family average of ``delta(h_S(X), U)``.  XOR with an offset permutes
    outputs and leaves that distance unchanged, so only the ``2**(n+m-1)``
    matrices are enumerated; every offset contributes the same term.
    """
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive oracle limited to n <= {EXHAUSTIVE_MAX_N}, got {n}")
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    if m == 0:
        return 0.0
    support = [x for x in P.support()]
    if any(not 0 <= int(x) < 2**n for x in support):
        raise ValueError("distribution outcomes must be n-bit integers")
    xs = np.array(support, dtype=np.int64)
    px = np.array([float(P[x]) for x in support])
    n_seeds = 2 ** (n + m - 1)
    n_out = 2**m
    if chunk is None:
        chunk = max(1, (1 << 21) >> max(n, m))
    acc = 0.0
    for lo in range(0, n_seeds, chunk):
        seeds = np.arange(lo, min(lo + chunk, n_seeds), dtype=np.int64)
        lin = _apply_family(_family_columns(n, m, seeds), xs, n)
        idx = (np.arange(seeds.size)[:, None] * n_out + lin).ravel()
        hist = np.bincount(idx, weights=np.broadcast_to(px, lin.shape).ravel(), minlength=seeds.size * n_out)
        acc += 0.5 * np.abs(hist - 1.0 / n_out).sum()
    return acc / n_seeds


def lhl_distance_bruteforce(P: FiniteDistribution, n: int, m: int) -> float:
    """Same quantity by evaluating every (seed, offset) member with ``ToeplitzHash``.

    Quadratically slower; kept as an independent cross-check for tiny ``n``.
    """
    members = []
    for seed in range(2 ** (n + m - 1)):
        for off in range(2**m):
            members.append(ToeplitzHash(n, m, BitString.from_int(seed, n + m - 1), BitString.from_int(off, m)))
    joint: dict = {}
    for idx, h in enumerate(members):
        for x in P.support():
            y = h(BitString.from_int(int(x), n)).to_int()
            joint[(y, idx)] = joint.get((y, idx), 0.0) + float(P[x]) / len(members)
    ideal = {(y, idx): 1.0 / (2**m * len(members)) for idx in range(len(members)) for y in range(2**m)}
    return variational_distance(FiniteDistribution(joint), FiniteDistribution(ideal))


def lhl_bound(h_min: float, m: int) -> float:
    """``2**-eps`` for the largest ``eps`` with ``H_min >= m + 2 eps``."""
    eps = (h_min - m) / 2.0
    return 2.0 ** (-eps)
