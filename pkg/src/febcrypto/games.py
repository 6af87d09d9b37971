"""Memory games and the finite Landauer counting experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .adversaries import MemoryAdversary, make_memory_adversary
from .bits import random_bitstring, sample_subset, spawn_rngs
from .channels import SwapChannel, Transcript
from .ledger import Agent, BudgetExceeded, EnergyLedger, adversary_budget

MAX_COUNTING_STATE_BITS = 20


class GameConfigError(ValueError):
    pass


# memory games


@dataclass(frozen=True)
class MemoryGameConfig:
    nu: int
    k: int = 4
    variant: str = "exhaustive"  # or "sampled"
    t: Optional[int] = None  # quiz size of the sampled variant
    adversary: str = "no-copy"
    trials: int = 1000
    budget: Optional[int] = None  # override of 2**nu; only for non-compliant demonstrations

    @property
    def register_len(self) -> int:
        return self.k * 2**self.nu

    @property
    def quiz_size(self) -> int:
        return self.register_len if self.variant == "exhaustive" else self.t

    def validate(self) -> None:
        if self.nu < 0 or self.k < 1 or self.trials < 1:
            raise GameConfigError("need nu >= 0, k >= 1, trials >= 1")
        if self.variant not in ("exhaustive", "sampled"):
            raise GameConfigError(f"variant must be exhaustive or sampled, got {self.variant!r}")
        if self.variant == "sampled" and not (self.t and 1 <= self.t <= self.register_len):
            raise GameConfigError("sampled variant needs 1 <= t <= k * 2**nu")
        make_memory_adversary(self.adversary)


@dataclass
class GameStats:
    config: MemoryGameConfig
    trials: int = 0
    full_successes: int = 0
    copied_hits: int = 0
    copied_total: int = 0
    uncopied_hits: int = 0
    uncopied_total: int = 0
    budget_violations: int = 0
    max_consumed: int = 0
    guess_probability_sum: float = 0.0
    records: list = field(default_factory=list)

    @property
    def full_success_rate(self) -> float:
        return self.full_successes / self.trials

    @property
    def per_bit_copied(self) -> Optional[float]:
        return self.copied_hits / self.copied_total if self.copied_total else None

    @property
    def per_bit_uncopied(self) -> Optional[float]:
        return self.uncopied_hits / self.uncopied_total if self.uncopied_total else None

    @property
    def guess_probability(self) -> float:
        """Average over trials of the adversary's optimal guessing probability for the quiz."""
        return self.guess_probability_sum / self.trials

    @property
    def min_entropy(self) -> float:
        return -math.log2(self.guess_probability)

    @property
    def min_entropy_rate(self) -> float:
        return self.min_entropy / self.config.quiz_size

    def summary(self) -> dict:
        cfg = self.config
        return {
            "adversary": cfg.adversary,
            "variant": cfg.variant,
            "nu": cfg.nu,
            "k": cfg.k,
            "quiz_size": cfg.quiz_size,
            "trials": self.trials,
            "full_successes": self.full_successes,
            "full_success_rate": self.full_success_rate,
            "per_bit_copied": self.per_bit_copied,
            "per_bit_uncopied": self.per_bit_uncopied,
            "uncopied_total": self.uncopied_total,
            "min_entropy": self.min_entropy,
            "min_entropy_bound": (cfg.k - 1) * 2**cfg.nu if cfg.variant == "exhaustive" else None,
            "min_entropy_rate": self.min_entropy_rate,
            "min_entropy_rate_bound": (cfg.k - 1) / cfg.k,
            "budget_violations": self.budget_violations,
            "max_consumed": self.max_consumed,
            "budget": cfg.budget if cfg.budget is not None else 2**cfg.nu,
        }


def play_round(adversary: MemoryAdversary, cfg: MemoryGameConfig, rng_adv, rng_ver):
    """One round: isolate X, let the adversary keep what it can, SWAP X away, quiz.

    Returns ``(positions, answer, truth, log2_guess_probability, consumed)``
    or raises ``BudgetExceeded`` if the strategy tried to exceed its bound.
    """
    budget = cfg.budget if cfg.budget is not None else adversary_budget(cfg.nu)
    agent = Agent("adversary", budget)
    verifier = Agent("verifier", 0)
    # isolating X from the environment is selection, not copying
    x = random_bitstring(cfg.register_len, rng_ver)
    adversary.prepare(x, agent, rng_adv)
    received, _junk = SwapChannel(Transcript()).swap_transfer(agent, x, verifier, rng_ver, label="X")
    if cfg.variant == "exhaustive":
        positions = np.arange(cfg.register_len)
    else:
        positions = sample_subset(cfg.register_len, cfg.t, rng_ver).positions
    answer = adversary.answer(positions, rng_adv)
    truth = received.to_array()[positions]
    return positions, answer, truth, adversary.log2_guess_probability(positions), agent.ledger.consumed


def run_memory_game(cfg: MemoryGameConfig, seed=0, keep_records: bool = False,
                    first_trial: int = 0) -> GameStats:
    """Play ``cfg.trials`` rounds; trial ``i`` draws its randomness from ``[seed, i]``.

    ``first_trial`` offsets the trial counter so a batch can be split into
    chunks whose merged statistics equal the unsplit run.
    """
    cfg.validate()
    stats = GameStats(cfg)
    adversary = make_memory_adversary(cfg.adversary)
    for trial in range(first_trial, first_trial + cfg.trials):
        rng_adv, rng_ver = spawn_rngs([int(seed), trial], 2)
        stats.trials += 1
        try:
            positions, answer, truth, log2p, consumed = play_round(adversary, cfg, rng_adv, rng_ver)
        except BudgetExceeded:
            stats.budget_violations += 1
            continue
        correct = answer == truth
        copied = np.isin(positions, adversary.copied_positions())
        full = bool(correct.all())
        stats.full_successes += full
        stats.copied_hits += int(correct[copied].sum())
        stats.copied_total += int(copied.sum())
        stats.uncopied_hits += int(correct[~copied].sum())
        stats.uncopied_total += int((~copied).sum())
        stats.guess_probability_sum += 2.0**log2p
        stats.max_consumed = max(stats.max_consumed, consumed)
        if keep_records:
            stats.records.append({
                "trial": trial,
                "full_success": full,
                "uncopied_hits": int(correct[~copied].sum()),
                "uncopied_total": int((~copied).sum()),
                "log2_guess_probability": log2p,
                "consumed": consumed,
            })
    return stats


def merge_stats(parts: list[GameStats]) -> GameStats:
    """Combine chunked runs in chunk order."""
    cfg = parts[0].config
    out = GameStats(replace(cfg, trials=sum(p.trials for p in parts)))
    for p in parts:
        for name in ("trials", "full_successes", "copied_hits", "copied_total", "uncopied_hits",
                     "uncopied_total", "budget_violations"):
            setattr(out, name, getattr(out, name) + getattr(p, name))
        out.guess_probability_sum += p.guess_probability_sum
        out.max_consumed = max(out.max_consumed, p.max_consumed)
        out.records.extend(p.records)
    return out


def pow_reduction_check(adversary: str, k: int, nu: int, trials: int, seed=0,
                        budget: Optional[int] = None) -> dict:
    """XOR the adversary's best guess onto X and count all-zero results.

    A string of ``k * 2**nu`` zeros is a proof of work of that length; an
    adversary holding ``2**nu`` units can produce one only as often as it can
    guess X outright.
    """
    cfg = MemoryGameConfig(nu=nu, k=k, adversary=adversary, trials=trials, budget=budget)
    cfg.validate()
    strategy = make_memory_adversary(adversary)
    rng_adv, rng_ver = spawn_rngs(np.random.SeedSequence(seed), 2)
    length = cfg.register_len
    all_zero = 0
    violations = 0
    for _ in range(trials):
        agent = Agent("adversary", budget if budget is not None else adversary_budget(nu))
        x = random_bitstring(length, rng_ver)
        try:
            strategy.prepare(x, agent, rng_adv)
        except BudgetExceeded:
            violations += 1
            continue
        guess = strategy.answer(np.arange(length), rng_adv)
        all_zero += not (x.to_array() ^ guess).any()
    bound = 2.0 ** (-(k - 1) * 2**nu)
    return {
        "adversary": adversary,
        "trials": trials,
        "all_zero": all_zero,
        "frequency": all_zero / trials,
        "bound": bound,
        "budget_violations": violations,
    }


# Landauer counting


@dataclass(frozen=True)
class CountingConfig:
    len_x: int
    len_y: int
    w_in: int
    w_out: int
    permutation: str = "random"  # random | adversarial | identity
    permutation_seed: int = 0

    def validate(self) -> None:
        if not (1 <= self.len_x <= 20 and 0 <= self.len_y <= 12):
            raise GameConfigError("need 1 <= len_x <= 20 and 0 <= len_y <= 12")
        if self.len_x + self.len_y > MAX_COUNTING_STATE_BITS:
            raise GameConfigError(
                f"state space 2**{self.len_x + self.len_y} is too large to enumerate "
                f"(limit 2**{MAX_COUNTING_STATE_BITS})"
            )
        if not 0 <= self.w_in <= self.len_y or not 0 <= self.w_out <= self.len_x:
            raise GameConfigError("need 0 <= w_in <= len_y and 0 <= w_out <= len_x")
        if self.permutation not in ("random", "adversarial", "identity"):
            raise GameConfigError(f"unknown permutation kind {self.permutation!r}")

    @property
    def bound(self) -> int:
        return 2 ** (self.len_x - self.w_out + self.w_in)


def _in_target(states: np.ndarray, cfg: CountingConfig) -> np.ndarray:
    """States whose x-part starts with ``w_out`` zeros and whose y-part is zero past ``w_in``.

    A state is the integer ``(x << len_y) | y`` with both parts MSB-first.
    """
    x_part = states >> cfg.len_y
    y_part = states & ((1 << cfg.len_y) - 1)
    lead_ok = (x_part >> (cfg.len_x - cfg.w_out)) == 0
    tail_ok = (y_part & ((1 << (cfg.len_y - cfg.w_in)) - 1)) == 0
    return lead_ok & tail_ok


def adversarial_permutation(cfg: CountingConfig) -> np.ndarray:
    """A bijection sending as many inputs ``(x, 0)`` as possible into the target set."""
    size = 1 << (cfg.len_x + cfg.len_y)
    states = np.arange(size, dtype=np.int64)
    inputs = states[(states & ((1 << cfg.len_y) - 1)) == 0]
    targets = states[_in_target(states, cfg)]
    hit = min(inputs.size, targets.size)
    perm = np.full(size, -1, dtype=np.int64)
    perm[inputs[:hit]] = targets[:hit]
    used = np.zeros(size, dtype=bool)
    used[targets[:hit]] = True
    perm[perm < 0] = states[~used]
    return perm


def counting_permutation(cfg: CountingConfig) -> np.ndarray:
    size = 1 << (cfg.len_x + cfg.len_y)
    if cfg.permutation == "identity":
        return np.arange(size, dtype=np.int64)
    if cfg.permutation == "adversarial":
        return adversarial_permutation(cfg)
    return np.random.default_rng(cfg.permutation_seed).permutation(size)


def landauer_counting(cfg: CountingConfig, perm: Optional[np.ndarray] = None) -> dict:
    """Count inputs ``(x, 0)`` that a reversible map sends into the target set.

    Injectivity caps the count by the target-set size ``2**(len_x - w_out + w_in)``.
    """
    cfg.validate()
    if perm is None:
        perm = counting_permutation(cfg)
    inputs = np.arange(1 << cfg.len_x, dtype=np.int64) << cfg.len_y
    count = int(_in_target(perm[inputs], cfg).sum())
    probability = count / 2**cfg.len_x
    return {
        "count_S": count,
        "bound": cfg.bound,
        "probability": probability,
        "probability_bound": 2.0 ** (cfg.w_in - cfg.w_out),
        "violation": count > cfg.bound,
    }


def landauer_grid(len_x: int, len_y: int, w_in_values, w_out_offsets, permutations: int, seed=0) -> list[dict]:
    """Counting over a grid of ``(w_in, w_out)``, each with fresh random permutations.

    Each row also carries the adversarial permutation's count for tightness.
    """
    rows = []
    ss = np.random.SeedSequence(seed)
    for w_in in w_in_values:
        for off in w_out_offsets:
            w_out = w_in + off
            base = CountingConfig(len_x, len_y, w_in, w_out)
            seeds = ss.spawn(permutations)
            counts = []
            for child in seeds:
                perm = np.random.default_rng(child).permutation(1 << (len_x + len_y))
                counts.append(landauer_counting(base, perm)["count_S"])
            adv = landauer_counting(CountingConfig(len_x, len_y, w_in, w_out, "adversarial"))
            rows.append({
                "w_in": w_in,
                "w_out": w_out,
                "bound": base.bound,
                "max_count": max(counts),
                "mean_count": float(np.mean(counts)),
                "violations": sum(c > base.bound for c in counts),
                "adversarial_count": adv["count_S"],
                "tight": adv["count_S"] == min(base.bound, 2**len_x),
            })
    return rows


def toy_machine_pow(len_x: int, len_y: int, budget: int, k: int, seed=0) -> dict:
    """Run a random reversible machine on every input ``(x, 0)`` under a ledger.

    The machine draws ``w_in`` blank cells (the trailing-zero prefix it
    consumed on the y tape) and leaves ``w_out`` leading zeros on the x tape.
    Runs costing more than ``budget`` are refused by the ledger and are not
    admissible.  Returns how often an admissible run's proof of work exceeds
    its consumption plus ``k``.
    """
    cfg = CountingConfig(len_x, len_y, 0, 0)
    cfg.validate()
    perm = np.random.default_rng(seed).permutation(1 << (len_x + len_y))
    images = perm[np.arange(1 << len_x, dtype=np.int64) << len_y]
    x_out = images >> len_y
    y_out = images & ((1 << len_y) - 1)
    exceed = 0
    refused = 0
    for xo, yo in zip(x_out.tolist(), y_out.tolist()):
        # cells of y beyond the last 1 are still blank; the rest were consumed
        w_in = len_y - ((yo & -yo).bit_length() - 1) if yo else 0
        w_out = len_x - xo.bit_length()
        ledger = EnergyLedger(bound=budget)
        try:
            ledger.charge(w_in, "blank-cells")
        except BudgetExceeded:
            refused += 1
            continue
        ledger.record_pow(w_out)
        exceed += ledger.pow_produced > ledger.consumed + k
    runs = 2**len_x
    return {"runs": runs, "refused": refused, "exceed": exceed,
            "fraction": exceed / runs, "bound": 2.0**-k}
