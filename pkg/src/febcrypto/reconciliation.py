"""Parameter estimation and hash-based information reconciliation.

Bob sends a random 2-universal hash of his block; Alice replaces her block
by the closest string carrying the same hash.  :func:`reconcile` computes
that argmin exactly by expanding Hamming balls around Alice's block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .bits import BitString, hamming_distance
from .hashing import ToeplitzHash, binary_entropy

DEFAULT_MAX_CANDIDATES = 1 << 22
_CHUNK = 1 << 15


class SearchExhausted(Exception):
    """Ball expansion hit the candidate cap before finding a hash match."""


class NoCandidate(Exception):
    """No string of the right length carries the target hash."""


@dataclass(frozen=True)
class ErrorEstimate:
    p_test: float
    epsilon: float
    t: int
    s: int = 0

    @property
    def confidence(self) -> float:
        return 1.0 - math.exp(-2.0 * self.epsilon**2 * self.t)

    @property
    def p_error_bound(self) -> float:
        """Upper bound on the global error rate at ``confidence``."""
        return self.p_test + self.epsilon

    @property
    def p_untested_bound(self) -> float:
        """Upper bound on the error rate of the ``s`` untested positions."""
        if self.s == 0:
            return self.p_test
        return self.p_test + self.s * self.epsilon / (self.s + self.t)


def estimate_error(a_test: BitString, b_test: BitString, epsilon: float, s: int = 0) -> ErrorEstimate:
    t = len(a_test)
    if t == 0:
        raise ValueError("error estimation needs at least one test position")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return ErrorEstimate(hamming_distance(a_test, b_test) / t, epsilon, t, s)


def ir_hash_length(s: int, p: float, delta_prime: float, eta: int) -> int:
    """``w = ceil(s * h_b(p + delta') + eta)``.

    ``delta_prime = 0`` is accepted and gives the noiseless limit
    ``w = ceil(s * h_b(p) + eta)`` (so ``w = eta`` at ``p = 0``).
    """
    if s < 1 or eta < 1:
        raise ValueError("need s >= 1 and eta >= 1")
    if p < 0 or delta_prime < 0:
        raise ValueError("p and delta' must be non-negative")
    if p + delta_prime >= 0.5:
        raise ValueError(f"p + delta' = {p + delta_prime} leaves no reconciliation rate (must be < 1/2)")
    # round away float noise before the ceiling so exact integers stay exact
    return math.ceil(round(s * binary_entropy(p + delta_prime) + eta, 9))


def ball_size(s: int, radius: int) -> int:
    return sum(math.comb(s, i) for i in range(min(radius, s) + 1))


def _columns(h: ToeplitzHash) -> list[int]:
    """Column j of the hash matrix as a Python int (row 0 most significant)."""
    T = h.matrix()
    weights = [1 << (h.m - 1 - i) for i in range(h.m)]
    return [sum(w for w, bit in zip(weights, T[:, j]) if bit) for j in range(h.n)]


def reconcile(a: BitString, h: ToeplitzHash, hash_of_b: BitString,
              max_candidates: int = DEFAULT_MAX_CANDIDATES) -> BitString:
    """Closest string to ``a`` whose hash is ``hash_of_b``.

    Candidates ``a xor e`` are visited by increasing weight of ``e``; at the
    first radius with a match, the lexicographically smallest matching
    candidate is returned.
    """
    if len(a) != h.n:
        raise ValueError(f"hash expects {h.n} bits, Alice holds {len(a)}")
    if len(hash_of_b) != h.m:
        raise ValueError(f"hash value must have {h.m} bits")
    # h(a ^ e) = h(a) ^ T e, so we need T e == syndrome
    syndrome = (h(a) ^ hash_of_b).to_int()
    if syndrome == 0:
        return a
    cols = np.array(_columns(h), dtype=object if h.m > 62 else np.int64)
    a_bits = a.to_array()
    explored = 1
    for radius in range(1, h.n + 1):
        matches = []
        combos = combinations(range(h.n), radius)
        while True:
            block = list(islice(combos, _CHUNK))
            if not block:
                break
            if explored + len(block) > max_candidates:
                raise SearchExhausted(
                    f"no hash match within {explored} candidates (radius {radius}, cap {max_candidates})"
                )
            explored += len(block)
            idx = np.array(block, dtype=np.int64)
            acc = cols[idx[:, 0]].copy()
            for k in range(1, radius):
                acc ^= cols[idx[:, k]]
            for row in np.flatnonzero(acc == syndrome):
                cand = a_bits.copy()
                cand[idx[row]] ^= 1
                matches.append(BitString.from_array(cand))
        if matches:
            return min(matches)
    raise NoCandidate("hash value is outside the image of h")


def collision_bound(s: int, distance: int, w: int) -> float:
    """Union bound ``(|ball(distance)| - 1) * 2**-w`` on a wrong argmin.

    Any string other than the true one that is no farther from Alice's block
    and shares its hash would be returned instead; each such string collides
    with probability ``2**-w`` over the choice of hash.
    """
    log2_count = math.log2(ball_size(s, distance)) if distance else 0.0
    return min(1.0, 2.0 ** (log2_count - w))


@dataclass(frozen=True)
class DecodeResult:
    string: BitString
    route: str  # "exhaustive" or "certified"
    failure_bound: float


def decode_for_simulation(a: BitString, h: ToeplitzHash, hash_of_b: BitString, b_true: BitString,
                          max_candidates: int = DEFAULT_MAX_CANDIDATES,
                          certify_below: float = 2.0**-64) -> DecodeResult:
    """Alice's argmin as a simulator evaluates it.

    Alice is computationally unbounded in the model; the simulator is not.
    When the full ball of radius ``d(a, b)`` is small enough it runs the exact
    search.  Otherwise, if the union bound certifies that ``b`` is the unique
    minimiser except with probability below ``certify_below``, it returns
    ``b`` directly: the output then differs from the exact argmin with at
    most that probability.  Neither applicable raises ``SearchExhausted``.
    """
    d = hamming_distance(a, b_true)
    bound = collision_bound(h.n, d, h.m)
    if ball_size(h.n, d) <= max_candidates:
        return DecodeResult(reconcile(a, h, hash_of_b, max_candidates), "exhaustive", bound)
    if bound <= certify_below and h(b_true) == hash_of_b:
        return DecodeResult(b_true, "certified", bound)
    raise SearchExhausted(
        f"distance {d} on {h.n} bits is beyond exhaustive search and the collision bound {bound:.3g} is not certified"
    )
