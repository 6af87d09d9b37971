"""Reference adversaries.

Eve strategies sit on the SWAP channel of the key-establishment protocol;
memory-game adversaries play against the verifier in :mod:`febcrypto.games`.
Both keep information only through ``Agent.retain``, so the ledger bound is
enforced by construction.  Which positions a strategy copies is a function
of its own generator, so position lists ride along uncharged (the strategy
can regenerate them); only the copied bit values cost free energy.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .bits import BitString, Generator, SubsetIndex, random_bitstring, sample_subset
from .ledger import Agent, BudgetExceeded

# Eve on the SWAP channel


class Block:
    name = "block"

    def intercept(self, x: BitString, eve: Agent, rng: Generator) -> Optional[BitString]:
        return None


class Forward:
    name = "forward"

    def intercept(self, x: BitString, eve: Agent, rng: Generator) -> Optional[BitString]:
        return x


class StoreFraction:
    """Copy ``b`` uniformly chosen bits (capped by the remaining budget), then forward."""

    name = "store-fraction"

    def __init__(self, b: Optional[int] = None):
        self.b = b

    def intercept(self, x: BitString, eve: Agent, rng: Generator) -> Optional[BitString]:
        want = eve.ledger.remaining if self.b is None else self.b
        count = min(want, eve.ledger.remaining, len(x))
        pos = sample_subset(len(x), count, rng)
        eve.retain("copy", BitString.from_array(x.to_array()[pos.positions]), extra=pos)
        return x


class Substitute:
    """Keep the original and send Bob a fresh random string instead.

    Full retention of an exponentially long register is over budget; the
    strategy then keeps as long a prefix as it can afford.
    """

    name = "substitute"

    def __init__(self):
        self.budget_exceeded = False

    def intercept(self, x: BitString, eve: Agent, rng: Generator) -> Optional[BitString]:
        try:
            eve.retain("copy", x, extra=SubsetIndex.full(len(x)))
        except BudgetExceeded:
            self.budget_exceeded = True
            keep = min(eve.ledger.remaining, len(x))
            eve.retain("copy", x.slice(0, keep), extra=SubsetIndex(np.arange(keep), len(x)))
        return random_bitstring(len(x), rng)


EVE_STRATEGIES = {"none": None, "block": Block, "forward": Forward,
                  "store-fraction": StoreFraction, "substitute": Substitute}


def make_eve(name: str, b: Optional[int] = None):
    if name not in EVE_STRATEGIES:
        raise ValueError(f"unknown Eve strategy {name!r}; choose from {sorted(EVE_STRATEGIES)}")
    cls = EVE_STRATEGIES[name]
    if cls is None:
        return None
    return cls(b) if cls is StoreFraction else cls()


def eve_known_bits(eve: Agent) -> tuple[np.ndarray, np.ndarray]:
    """Register positions and values Eve holds a copy of."""
    entry = eve.memory.get("copy")
    if entry is None:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.uint8)
    bits, pos = entry
    return pos.positions[: len(bits)], bits.to_array()


# memory-game adversaries


class MemoryAdversary:
    """Base class: ``prepare`` before the swap, ``answer`` the verifier's quiz."""

    name = "base"
    compliant = True

    def prepare(self, x: BitString, agent: Agent, rng: Generator) -> None:
        self.agent = agent
        self.length = len(x)

    def copied_positions(self) -> np.ndarray:
        entry = self.agent.memory.get("copy")
        if entry is None:
            return np.zeros(0, dtype=np.int64)
        return entry[1].positions

    def _known(self) -> dict:
        entry = self.agent.memory.get("copy")
        if entry is None:
            return {}
        bits, pos = entry
        return dict(zip(pos.positions.tolist(), bits.to_array().tolist()))

    def answer(self, positions: np.ndarray, rng: Generator) -> np.ndarray:
        guess = rng.integers(0, 2, size=len(positions), dtype=np.uint8)
        known = self._known()
        for i, p in enumerate(positions.tolist()):
            if p in known:
                guess[i] = known[p]
        return guess

    def log2_guess_probability(self, positions: np.ndarray) -> float:
        """``log2 max_x P(X_positions = x | memory)`` for this strategy's memory."""
        copied = self.copied_positions()
        hit = np.isin(positions, copied).sum()
        return -float(len(positions) - hit)


class NoCopy(MemoryAdversary):
    name = "no-copy"


class CopyFirst(MemoryAdversary):
    """Copy the first ``b`` bits (default: the whole budget)."""

    name = "copy-first"

    def __init__(self, b: Optional[int] = None):
        self.b = b

    def prepare(self, x, agent, rng):
        super().prepare(x, agent, rng)
        b = min(agent.ledger.remaining if self.b is None else self.b, len(x))
        agent.retain("copy", x.slice(0, b), extra=SubsetIndex(np.arange(b), len(x)))


class CopyRandom(MemoryAdversary):
    name = "copy-random"

    def __init__(self, b: Optional[int] = None):
        self.b = b

    def prepare(self, x, agent, rng):
        super().prepare(x, agent, rng)
        b = min(agent.ledger.remaining if self.b is None else self.b, len(x))
        pos = sample_subset(len(x), b, rng)
        agent.retain("copy", BitString.from_array(x.to_array()[pos.positions]), extra=pos)


class Overreach(CopyRandom):
    """Asks for twice its budget, is refused, and settles for what fits."""

    name = "overreach"

    def prepare(self, x, agent, rng):
        MemoryAdversary.prepare(self, x, agent, rng)
        self.refused = False
        try:
            agent.retain("copy", x, extra=SubsetIndex.full(len(x)), cost=2 * agent.ledger.bound + 1)
        except BudgetExceeded:
            self.refused = True
            pos = sample_subset(len(x), min(agent.ledger.remaining, len(x)), rng)
            agent.retain("copy", BitString.from_array(x.to_array()[pos.positions]), extra=pos)


class BlockParity(MemoryAdversary):
    """Store one parity bit per block; never copies any single position."""

    name = "block-parity"

    def prepare(self, x, agent, rng):
        super().prepare(x, agent, rng)
        budget = max(1, agent.ledger.remaining)
        self.block = math.ceil(len(x) / budget)
        arr = x.to_array()
        nblocks = math.ceil(len(x) / self.block)
        padded = np.zeros(nblocks * self.block, dtype=np.uint8)
        padded[: len(x)] = arr
        parities = np.bitwise_xor.reduce(padded.reshape(nblocks, self.block), axis=1)
        agent.retain("parity", BitString.from_array(parities))

    def copied_positions(self):
        return np.zeros(0, dtype=np.int64)

    def _full_blocks(self, positions):
        blocks = positions // self.block
        ids, counts = np.unique(blocks, return_counts=True)
        sizes = np.minimum(self.block, self.length - ids * self.block)
        return ids[counts == sizes]

    def answer(self, positions, rng):
        guess = rng.integers(0, 2, size=len(positions), dtype=np.uint8)
        parities = self.agent.memory["parity"].to_array()
        blocks = positions // self.block
        for b in self._full_blocks(positions):
            idx = np.flatnonzero(blocks == b)
            rest = np.bitwise_xor.reduce(guess[idx[:-1]]) if idx.size > 1 else 0
            guess[idx[-1]] = parities[b] ^ rest
        return guess

    def log2_guess_probability(self, positions):
        return -float(len(positions) - len(self._full_blocks(positions)))


class CopyAll(MemoryAdversary):
    """Copies everything; only affordable with an inflated budget (non-compliant)."""

    name = "copy-all"
    compliant = False

    def prepare(self, x, agent, rng):
        super().prepare(x, agent, rng)
        agent.retain("copy", x, extra=SubsetIndex.full(len(x)))


MEMORY_ADVERSARIES = {cls.name: cls for cls in
                      (NoCopy, CopyFirst, CopyRandom, Overreach, BlockParity, CopyAll)}
COMPLIANT_ADVERSARIES = tuple(n for n, c in MEMORY_ADVERSARIES.items() if c.compliant)


def make_memory_adversary(name: str) -> MemoryAdversary:
    if name not in MEMORY_ADVERSARIES:
        raise ValueError(f"unknown adversary {name!r}; choose from {sorted(MEMORY_ADVERSARIES)}")
    return MEMORY_ADVERSARIES[name]()
