"""Secret-key establishment and 1-2 oblivious transfer over simulated channels.

Each run builds fresh agents, ledgers and channels from one seed; the seed
is split into independent streams for Alice, Bob, Eve and channel noise so a
single party's behaviour can change without disturbing anybody else's
randomness.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import gf2
from .adversaries import eve_known_bits
from .bits import (BitString, Generator, SubsetIndex, bsc, extract, flip_positions,
                   random_bitstring, sample_subset, spawn_rngs, xor)
from .channels import ChannelFailure, PublicChannel, SwapChannel, Transcript
from .hashing import ToeplitzHash
from .ledger import Agent, adversary_budget, honest_budget, HONEST_FACTOR
from .reconciliation import (DEFAULT_MAX_CANDIDATES, SearchExhausted, decode_for_simulation,
                             estimate_error, ir_hash_length)

DEFAULT_CAP_FACTOR = 2**13


class ConfigError(ValueError):
    """Inconsistent protocol parameters, detected before any step runs."""


# secret-key establishment


@dataclass(frozen=True)
class SkeParams:
    nu: int
    k: int = 4
    t: int = 2000
    s: int = 2000
    delta_prime: float = 0.05
    eta: int = 30
    epsilon_pa: float = 20.0
    abort_threshold: Optional[float] = None  # None: largest p_test that still leaves m > 0
    delta: float = 0.02  # per-bit slack on Eve's sampled min-entropy
    epsilon_est: float = 0.01  # Chernoff slack when bounding the untested error rate
    key_bits: Optional[int] = None  # keep only the first key_bits of the final key
    cap_factor: int = DEFAULT_CAP_FACTOR
    honest_factor: int = HONEST_FACTOR
    max_candidates: int = DEFAULT_MAX_CANDIDATES
    certify_below: float = 2.0**-64

    @property
    def register_len(self) -> int:
        return self.k * 2**self.nu

    @property
    def length_cap(self) -> int:
        return self.cap_factor * self.nu

    def untested_rate_bound(self, p_test: float) -> float:
        return p_test + self.s * self.epsilon_est / (self.s + self.t)

    def hash_length(self, p_test: float) -> int:
        return ir_hash_length(self.s, self.untested_rate_bound(p_test), self.delta_prime, self.eta)

    def key_length(self, w: int) -> int:
        """``floor(s (k-1)/k - s delta - w - eps_pa)``."""
        return math.floor(self.s * (self.k - 1) / self.k - self.s * self.delta - w - self.epsilon_pa)

    def max_tolerable_p_test(self) -> Optional[float]:
        """Largest observable ``p_test = j/t`` whose key length is still positive, or ``None``.

        With ``key_bits`` set the key must be at least that long instead.
        """
        need = self.key_bits if self.key_bits is not None else 1
        best = None
        for j in range(self.t + 1):
            p = j / self.t
            if self.untested_rate_bound(p) + self.delta_prime >= 0.5:
                break
            if self.key_length(self.hash_length(p)) < need:
                break
            best = p
        return best

    def effective_threshold(self) -> float:
        tol = self.max_tolerable_p_test()
        if tol is None:
            raise ConfigError("even a noiseless run yields too short a key; increase s or k, or lower key_bits")
        if self.abort_threshold is None:
            return tol
        return min(self.abort_threshold, tol)

    def validate(self) -> None:
        if self.nu < 1 or self.k < 2:
            raise ConfigError("need nu >= 1 and k >= 2")
        if self.s < 1 or self.t < 1:
            raise ConfigError("need s >= 1 and t >= 1")
        if self.s + self.t > self.register_len:
            raise ConfigError(f"s + t = {self.s + self.t} exceeds the register length {self.register_len}")
        if not (self.epsilon_est > 0 and self.delta_prime >= 0):
            raise ConfigError("epsilon_est must be positive and delta' non-negative")
        if self.key_bits is not None and self.key_bits < 1:
            raise ConfigError("key_bits must be positive")
        threshold = self.effective_threshold()
        m_max = self.key_length(self.hash_length(0.0))
        w_max = self.hash_length(threshold)
        width = max(1, (self.register_len - 1).bit_length())
        sizes = {
            "rawkey positions": (self.s + self.t) * width,
            "test positions": self.t * max(1, (self.s + self.t - 1).bit_length()),
            "test bits": self.t,
            "reconciliation hash seed": self.s + 2 * w_max - 1,
            "privacy-amplification seed": self.s + 2 * m_max - 1,
        }
        for what, size in sizes.items():
            if size > self.length_cap:
                raise ConfigError(
                    f"{what} need {size} bits on the public channel, above the cap "
                    f"{self.cap_factor} * nu = {self.length_cap}; raise cap_factor"
                )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SkeOutcome:
    status: str  # key_established | aborted_no_receipt | aborted_error_rate | aborted_reconcile
    params: SkeParams
    transcript: Transcript
    ledgers: dict
    key_alice: Optional[BitString] = None
    key_bob: Optional[BitString] = None
    p_test: Optional[float] = None
    w: Optional[int] = None
    m: Optional[int] = None
    ir_leak_bits: Optional[int] = None
    decoder_route: Optional[str] = None
    decoder_failure_bound: Optional[float] = None
    eve_view: dict = field(default_factory=dict)
    eve_memory: object = None
    # simulator-only ground truth, never read by protocol code
    truth: dict = field(default_factory=dict)

    @property
    def keys_match(self) -> Optional[bool]:
        if self.status != "key_established":
            return None
        return self.key_alice == self.key_bob

    def summary(self) -> dict:
        return {
            "status": self.status,
            "key_length": None if self.key_bob is None else len(self.key_bob),
            "keys_match": self.keys_match,
            "p_test": self.p_test,
            "w": self.w,
            "m": self.m,
            "ir_leak_bits": self.ir_leak_bits,
            "decoder_route": self.decoder_route,
            "charges": {name: led["consumed"] for name, led in self.ledgers.items()},
        }


def _ledger_record(agent: Agent) -> dict:
    return {"bound": agent.ledger.bound, "consumed": agent.ledger.consumed,
            "audit": agent.ledger.audit()}


def run_ske(params: SkeParams, eve=None, noise: float = 0.0, seed=0) -> SkeOutcome:
    """One run of the key-establishment protocol.

    ``eve`` is an interceptor strategy (or ``None``); ``noise`` is the
    crossover probability of a binary symmetric channel on the SWAP link.
    """
    params.validate()
    threshold = params.effective_threshold()
    rng_a, rng_b, rng_e, rng_n = spawn_rngs(seed, 4)
    L, s, t = params.register_len, params.s, params.t

    alice = Agent("alice", honest_budget(params.nu, params.honest_factor))
    bob = Agent("bob", honest_budget(params.nu, params.honest_factor))
    eve_agent = Agent("eve", adversary_budget(params.nu)) if eve is not None else None
    transcript = Transcript()
    public = PublicChannel(params.length_cap, transcript)
    swap = SwapChannel(transcript, interceptor=eve, eve=eve_agent, eve_rng=rng_e,
                       noise=(lambda x: bsc(x, noise, rng_n)) if noise else None)

    def outcome(status, **kw):
        ledgers = {a.name: _ledger_record(a) for a in (alice, bob, eve_agent) if a is not None}
        out = SkeOutcome(status, params, transcript, ledgers, **kw)
        if eve_agent is not None:
            out.eve_memory = eve_agent.memory
            pos, _ = eve_known_bits(eve_agent)
            out.eve_view = {"copied_bits": int(pos.size), "consumed": eve_agent.ledger.consumed}
        if status != "key_established":
            transcript.log("abort", "*", status)
        return out

    # 1. random register, raw-key positions, copy of the raw key
    x_reg = random_bitstring(L, rng_a)
    rawkey = sample_subset(L, s + t, rng_a)
    a_raw = alice.retain("A", extract(x_reg, rawkey), extra=rawkey,
                         cost=(s + t) + len(rawkey.encode()))

    # 2. reversible transfer; Alice is left holding Bob's junk
    try:
        y_reg, x_reg = swap.swap_transfer(alice, x_reg, bob, rng_b, label="X")
    except ChannelFailure:
        y_reg = None

    # 3. receipt
    public.broadcast(bob, BitString.from_int(int(y_reg is not None), 1), "receipt")
    if y_reg is None:
        return outcome("aborted_no_receipt")

    # 4. raw-key positions, test subset, error estimate
    rawkey_msg = public.broadcast(alice, rawkey.encode(), "rawkey")
    rawkey_bob = SubsetIndex.decode(rawkey_msg, L)
    b_raw = extract(y_reg, rawkey_bob)
    test = sample_subset(s + t, t, rng_a)
    test_bob = SubsetIndex.decode(public.broadcast(alice, test.encode(), "test"), s + t)
    untested = test.complement()
    b_test = public.broadcast(bob, extract(b_raw, test_bob), "test-bits-bob")
    a_test = public.broadcast(alice, extract(a_raw, test), "test-bits-alice")
    est = estimate_error(a_test, b_test, params.epsilon_est, s)

    # 5. abort on high error rate, otherwise reconcile toward Bob's block
    if est.p_test > threshold:
        return outcome("aborted_error_rate", p_test=est.p_test)
    w = params.hash_length(est.p_test)
    m = params.key_length(w)
    b_block = extract(b_raw, test_bob.complement())
    a_block = extract(a_raw, untested)
    h_ir = ToeplitzHash.random(s, w, rng_b)
    bob.ledger.charge(w, "hash-output")
    hb = h_ir(b_block)
    h_ir_msg = public.broadcast(bob, h_ir.encode(), "ir-hash")
    hb_msg = public.broadcast(bob, hb, "ir-hash-value")
    ir_leak = len(h_ir_msg) + len(hb_msg)
    alice.ledger.charge(w, "hash-output")
    try:
        decoded = decode_for_simulation(a_block, ToeplitzHash.decode(h_ir_msg, s, w), hb_msg, b_block,
                                        params.max_candidates, params.certify_below)
    except SearchExhausted:
        return outcome("aborted_reconcile", p_test=est.p_test, w=w, m=m, ir_leak_bits=ir_leak)

    # 6. privacy amplification with a hash Alice broadcasts last
    g = ToeplitzHash.random(s, m, rng_a)
    g_msg = public.broadcast(alice, g.encode(), "pa-hash")
    g_alice, g_bob = g, ToeplitzHash.decode(g_msg, s, m)
    if params.key_bits is not None:
        g_alice, g_bob = g_alice.truncated(params.key_bits), g_bob.truncated(params.key_bits)
    alice.ledger.charge(g_alice.m, "hash-output")
    bob.ledger.charge(g_bob.m, "hash-output")
    key_alice = g_alice(decoded.string)
    key_bob = g_bob(b_block)
    return outcome(
        "key_established", key_alice=key_alice, key_bob=key_bob, p_test=est.p_test, w=w, m=m,
        ir_leak_bits=ir_leak, decoder_route=decoded.route, decoder_failure_bound=decoded.failure_bound,
        truth={"b_block": b_block, "rawkey": rawkey, "untested": untested},
    )


def _public_message(transcript: Transcript, label: str) -> BitString:
    for ev in transcript.broadcasts():
        if ev.label == label:
            return ev.payload
    raise KeyError(label)


def eve_best_guess(outcome: SkeOutcome, rng: Optional[Generator] = None) -> dict:
    """Eve's optimal guess of Bob's key from her view alone.

    Everything Eve holds about Bob's block is linear over GF(2): copied
    register bits and the reconciliation hash value.  Conditioned on that,
    the block is uniform on an affine subspace, hence so is the key, and any
    consistent block gives an optimal guess.  Returns the guess, whether it
    hit, and the exact optimal success probability ``2**-rank``.
    """
    if outcome.status != "key_established":
        raise ValueError("no key to guess")
    p = outcome.params
    L, s, t = p.register_len, p.s, p.t
    tr = outcome.transcript
    rawkey = SubsetIndex.decode(_public_message(tr, "rawkey"), L)
    test = SubsetIndex.decode(_public_message(tr, "test"), s + t)
    block_pos = rawkey.positions[test.complement().positions]  # register position of each block bit
    w = outcome.w
    h_ir = ToeplitzHash.decode(_public_message(tr, "ir-hash"), s, w)
    hb = _public_message(tr, "ir-hash-value")
    g = ToeplitzHash.decode(_public_message(tr, "pa-hash"), s, outcome.m)
    if p.key_bits is not None:
        g = g.truncated(p.key_bits)

    known = np.zeros(s, dtype=bool)
    values = np.zeros(s, dtype=np.uint8)
    if outcome.eve_memory is not None and "copy" in outcome.eve_memory:
        bits, pos = outcome.eve_memory["copy"]
        lookup = dict(zip(pos.positions[: len(bits)].tolist(), bits.to_array().tolist()))
        for i, rp in enumerate(block_pos.tolist()):
            if rp in lookup:
                known[i] = True
                values[i] = lookup[rp]

    H = h_ir.matrix()
    G = g.matrix()
    rhs = (hb ^ h_ir.offset).to_array()
    rhs ^= (H[:, known].astype(np.int64) @ values[known].astype(np.int64) & 1).astype(np.uint8)
    Hu = H[:, ~known]
    sol = gf2.solve(Hu, rhs, rng, with_basis=True)
    if sol is None:
        raise RuntimeError("Eve's side information is inconsistent with the public transcript")
    xu, _rank_h, reduced_h, pivots = sol
    guess_block = values.copy()
    guess_block[~known] = xu
    guess = g(BitString.from_array(guess_block))
    Gu = G[:, ~known]
    # key bits not already fixed by the hash value: rank of G modulo the row space of H
    uncertain = gf2.rank(gf2.reduce_rows(Gu, reduced_h, pivots)) if Gu.size else 0
    return {
        "guess": guess,
        "success": guess == outcome.key_bob,
        "success_probability": 2.0**-uncertain,
        "uncertain_key_bits": uncertain,
        "known_block_bits": int(known.sum()),
    }


# 1-2 oblivious transfer


@dataclass(frozen=True)
class OtParams:
    nu: int
    n: int = 128
    eta: int = 40
    cap_factor: int = DEFAULT_CAP_FACTOR
    honest_factor: int = HONEST_FACTOR

    @property
    def register_len(self) -> int:
        return 4 * 2**self.nu

    @property
    def length_cap(self) -> int:
        return self.cap_factor * self.nu

    def validate(self) -> None:
        if self.nu < 1 or self.n < 1 or self.eta < 0:
            raise ConfigError("need nu >= 1, n >= 1, eta >= 0")
        if self.n + self.eta > self.register_len:
            raise ConfigError(f"n + eta = {self.n + self.eta} exceeds 4 * 2**nu = {self.register_len}")
        width = max(1, (self.register_len - 1).bit_length())
        need = (self.n + self.eta) * width
        if need > self.length_cap:
            raise ConfigError(f"raw positions need {need} public bits, above the cap {self.length_cap}")


class HonestAlice:
    def __init__(self, m0: Optional[BitString] = None, m1: Optional[BitString] = None):
        self.m0, self.m1 = m0, m1

    def messages(self, n: int, rng: Generator) -> tuple[BitString, BitString]:
        m0 = self.m0 if self.m0 is not None else random_bitstring(n, rng)
        m1 = self.m1 if self.m1 is not None else random_bitstring(n, rng)
        if len(m0) != n or len(m1) != n:
            raise ConfigError(f"messages must have n = {n} bits")
        return m0, m1


class HonestBob:
    """Keeps ``X^(choice)`` and returns the XOR of both registers.

    With ``classicize`` he first XORs each register onto a fresh random pad
    from his environment and keeps the pads.
    """

    def __init__(self, choice: int, classicize: bool = False):
        if choice not in (0, 1):
            raise ValueError("choice must be 0 or 1")
        self.choice = choice
        self.classicize = classicize

    def tamper(self, x01: BitString, rng: Generator) -> BitString:
        return x01


class FlippingBob(HonestBob):
    """Returns ``X^(0 xor 1)`` with ``flips`` uniformly chosen bits inverted."""

    def __init__(self, choice: int, flips: int, classicize: bool = False):
        super().__init__(choice, classicize)
        self.flips = flips

    def tamper(self, x01, rng):
        pos = sample_subset(len(x01), self.flips, rng)
        return flip_positions(x01, pos.positions)


def ot_classicize(x0: BitString, x1: BitString, pads: tuple[BitString, BitString]):
    """Reversibly XOR each register onto its own fresh random pad.

    Registers come back unchanged; the pads become one-time-pad encryptions
    of them, which is why keeping them costs nothing.
    """
    p0, p1 = pads
    if len(p0) != len(x0) or len(p1) != len(x1):
        raise ValueError("pads must match register lengths")
    return x0, x1, (xor(p0, x0), xor(p1, x1))


@dataclass
class OtOutcome:
    status: str  # delivered | aborted_check
    params: OtParams
    bob_choice: int
    transcript: Transcript
    ledgers: dict
    bob_message: Optional[BitString] = None
    messages: tuple = ()  # Alice's (m0, m1), for checking soundness

    def summary(self) -> dict:
        return {
            "status": self.status,
            "bob_choice": self.bob_choice,
            "correct": None if self.bob_message is None else self.bob_message == self.messages[self.bob_choice],
            "charges": {name: led["consumed"] for name, led in self.ledgers.items()},
        }


def run_ot(params: OtParams, alice: Optional[HonestAlice] = None, bob: Optional[HonestBob] = None,
           seed=0) -> OtOutcome:
    params.validate()
    alice_s = alice if alice is not None else HonestAlice()
    bob_s = bob if bob is not None else HonestBob(0)
    rng_a, rng_b = spawn_rngs(seed, 2)
    L, n, r = params.register_len, params.n, params.n + params.eta

    a = Agent("alice", honest_budget(params.nu, params.honest_factor))
    b = Agent("bob", honest_budget(params.nu, params.honest_factor))
    transcript = Transcript()
    public = PublicChannel(params.length_cap, transcript)
    swap = SwapChannel(transcript)

    def outcome(status, **kw):
        if status != "delivered":
            transcript.log("abort", "*", status)
        ledgers = {ag.name: _ledger_record(ag) for ag in (a, b)}
        return OtOutcome(status, params, bob_s.choice, transcript, ledgers, messages=(m0, m1), **kw)

    # 1-2. messages, registers, raw positions and Alice's stored extracts
    m0, m1 = alice_s.messages(n, rng_a)
    x0 = random_bitstring(L, rng_a)
    x1 = random_bitstring(L, rng_a)
    raw = sample_subset(L, r, rng_a)
    x0_raw, x1_raw = extract(x0, raw), extract(x1, raw)
    a.retain("raw", x0_raw + x1_raw, extra=raw, cost=2 * r + len(raw.encode()))

    # 3. both registers to Bob
    y0, x0 = swap.swap_transfer(a, x0, b, rng_b, label="X0")
    y1, x1 = swap.swap_transfer(a, x1, b, rng_b, label="X1")

    # 4. Bob keeps X^(i) and returns X^(0 xor 1)
    if bob_s.classicize:
        pads = (random_bitstring(L, rng_b), random_bitstring(L, rng_b))
        y0, y1, _kept_pads = ot_classicize(y0, y1, pads)
        b.ledger.charge(0, "cnot-to-fresh-random-pad-target")
    kept = y0 if bob_s.choice == 0 else y1
    y01 = bob_s.tamper(xor(y0, y1), rng_b)
    returned, _junk = swap.swap_transfer(b, y01, a, rng_a, label="X01")

    # 5. Alice's consistency check on the raw positions
    if extract(returned, raw) != xor(x0_raw, x1_raw):
        return outcome("aborted_check")

    # 6. hash, positions and both masked messages on the public channel
    h = ToeplitzHash.random(r, n, rng_a)
    a.ledger.charge(2 * n, "hash-output")
    c0 = m0 ^ h(x0_raw)
    c1 = m1 ^ h(x1_raw)
    h_msg = public.broadcast(a, h.encode(), "ot-hash")
    raw_msg = public.broadcast(a, raw.encode(), "raw")
    c_msgs = (public.broadcast(a, c0, "c0"), public.broadcast(a, c1, "c1"))

    # 7. Bob unmasks his chosen message
    h_bob = ToeplitzHash.decode(h_msg, r, n)
    raw_bob = SubsetIndex.decode(raw_msg, L)
    b.ledger.charge(n, "hash-output")
    message = c_msgs[bob_s.choice] ^ h_bob(extract(kept, raw_bob))
    return outcome("delivered", bob_message=message)


def transcript_view(outcome, agent: str) -> list[dict]:
    """Events visible to ``agent``, as plain dicts."""
    return [ev.to_dict() for ev in outcome.transcript.view(agent)]
