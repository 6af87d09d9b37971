"""Single-trial experiment functions and their aggregates.

Every trial takes an explicit seed so that batches can be split across
processes without changing any result; the CLI and the acceptance suite
both build on these.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Optional

import numpy as np

from .adversaries import make_eve
from .bits import bsc, extract, hamming_distance, make_rng, random_bitstring, sample_subset
from .hashing import (FiniteDistribution, ToeplitzHash, binary_entropy, family_size, lhl_bound,
                      lhl_distance_oracle, min_entropy, universality_counts)
from .protocols import FlippingBob, HonestBob, OtParams, SkeParams, eve_best_guess, run_ot, run_ske
from .reconciliation import SearchExhausted, decode_for_simulation, estimate_error, ir_hash_length


def trial_seed(master: int, index: int) -> list[int]:
    """Counter-mode derivation of a trial's seed from the master seed."""
    return [int(master), int(index)]


# key establishment


def ske_trial(params: SkeParams, seed, noise: float = 0.0, eve: str = "none",
              eve_bits: Optional[int] = None) -> dict:
    outcome = run_ske(params, make_eve(eve, eve_bits), noise, seed)
    rec = outcome.summary()
    charges = rec.pop("charges")
    for name in ("alice", "bob", "eve"):
        rec[f"charge_{name}"] = charges.get(name)
    rec["eve_guess_success"] = None
    rec["eve_success_probability"] = None
    if eve not in ("none", "block") and outcome.status == "key_established":
        guess = eve_best_guess(outcome, make_rng(list(seed) + [1]))
        rec["eve_guess_success"] = bool(guess["success"])
        rec["eve_success_probability"] = guess["success_probability"]
    return rec


def ske_summary(params: SkeParams, records: list[dict]) -> dict:
    statuses = Counter(r["status"] for r in records)
    est = [r for r in records if r["status"] == "key_established"]
    mismatches = sum(not r["keys_match"] for r in est)
    formula_ok = all(r["m"] == params.key_length(r["w"]) for r in est)
    approx = [((params.k - 1) / params.k - binary_entropy(r["p_test"])) * params.s for r in est]
    guesses = [r for r in est if r["eve_guess_success"] is not None]
    out = {
        "trials": len(records),
        "status_counts": dict(sorted(statuses.items())),
        "keys_established": len(est),
        "key_mismatches": mismatches,
        "mismatch_rate": mismatches / len(est) if est else None,
        "mean_key_length": float(np.mean([r["key_length"] for r in est])) if est else None,
        "mean_m": float(np.mean([r["m"] for r in est])) if est else None,
        "mean_w": float(np.mean([r["w"] for r in est])) if est else None,
        "mean_p_test": float(np.mean([r["p_test"] for r in est])) if est else None,
        "mean_rate_times_s": float(np.mean(approx)) if est else None,
        "key_length_formula_holds": formula_ok,
        "abort_threshold": params.effective_threshold(),
        "decoder_routes": dict(sorted(Counter(r["decoder_route"] for r in est).items())),
    }
    for name in ("alice", "bob", "eve"):
        vals = [r[f"charge_{name}"] for r in records if r[f"charge_{name}"] is not None]
        if vals:
            out[f"max_charge_{name}"] = max(vals)
            out[f"max_charge_{name}_per_nu"] = max(vals) / params.nu
    if guesses:
        out["eve_guesses"] = len(guesses)
        out["eve_guess_successes"] = sum(r["eve_guess_success"] for r in guesses)
        out["eve_mean_success_probability"] = float(np.mean([r["eve_success_probability"] for r in guesses]))
    return out


# oblivious transfer


def ot_trial(params: OtParams, seed, choice: int = 0, flips: int = 0, classicize: bool = False) -> dict:
    bob = FlippingBob(choice, flips, classicize) if flips else HonestBob(choice, classicize)
    outcome = run_ot(params, bob=bob, seed=seed)
    rec = outcome.summary()
    charges = rec.pop("charges")
    rec["charge_alice"] = charges["alice"]
    rec["charge_bob"] = charges["bob"]
    rec["flips"] = flips
    return rec


def ot_abort_probability(register_len: int, raw_size: int, flips: int) -> float:
    """Chance that at least one of ``flips`` distinct flipped positions lies in the raw subset."""
    return 1.0 - math.comb(register_len - flips, raw_size) / math.comb(register_len, raw_size)


def ot_summary(params: OtParams, records: list[dict]) -> dict:
    statuses = Counter(r["status"] for r in records)
    delivered = [r for r in records if r["status"] == "delivered"]
    wrong = sum(not r["correct"] for r in delivered)
    flips = records[0]["flips"] if records else 0
    out = {
        "trials": len(records),
        "status_counts": dict(sorted(statuses.items())),
        "wrong_deliveries": wrong,
        "abort_rate": statuses.get("aborted_check", 0) / len(records) if records else None,
        "max_charge_alice": max(r["charge_alice"] for r in records),
        "max_charge_bob": max(r["charge_bob"] for r in records),
    }
    if flips:
        out["predicted_abort_rate"] = ot_abort_probability(params.register_len, params.n + params.eta, flips)
    return out


# leftover hash lemma


def random_source(n: int, rng) -> FiniteDistribution:
    """A random law on n-bit integers with a mix of flat and peaked shapes."""
    size = int(rng.integers(2 ** (n - 1), 2**n + 1))
    support = rng.choice(2**n, size=size, replace=False)
    kind = int(rng.integers(3))
    if kind == 0:
        weights = np.ones(size)
    elif kind == 1:
        weights = rng.dirichlet(np.full(size, 2.0))
    else:
        weights = rng.random(size)
        weights[int(rng.integers(size))] += rng.random() * weights.sum() / 8
    weights = weights / weights.sum()
    weights[-1] = 1.0 - math.fsum(weights[:-1])
    return FiniteDistribution(dict(zip(support.tolist(), weights.tolist())))


def lhl_trial(seed, epsilon: int, n_range=(6, 10)) -> dict:
    """Draw a source with room for ``m = floor(H_min - 2 eps) >= 1`` and compare exact delta to ``2**-eps``."""
    rng = make_rng(seed)
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        P = random_source(n, rng)
        h = min_entropy(P)
        m = math.floor(h - 2 * epsilon)
        if 1 <= m <= n:
            break
    delta = lhl_distance_oracle(P, n, m)
    bound = 2.0**-epsilon
    return {"n": n, "m": m, "epsilon": epsilon, "h_min": h, "delta": delta, "bound": bound,
            "lhl_bound": lhl_bound(h, m), "ok": delta <= bound}


# universality


def universality_trial(n: int, m: int, seed) -> dict:
    rng = make_rng(seed)
    x1, x2 = (int(v) for v in rng.choice(2**n, size=2, replace=False))
    table = universality_counts(n, m, x1, x2)
    expected = family_size(n, m) // 2 ** (2 * m)
    return {"n": n, "m": m, "x1": x1, "x2": x2, "expected": expected,
            "min_count": int(table.min()), "max_count": int(table.max()),
            "exact": bool((table == expected).all())}


# Chernoff estimation


def chernoff_coverage(p: float, t: int, epsilon: float, trials: int, seed, s: int = 0) -> dict:
    """How often ``p_error <= p_test + epsilon`` holds for BSC(p) strings.

    With ``s = 0`` the error rate is the channel's crossover ``p`` and all
    ``t`` bits are tested.  With ``s > 0`` the error rate is the realised
    fraction over ``s + t`` positions and the test is a random ``t``-subset.
    """
    rng = make_rng(seed)
    covered = 0
    for _ in range(trials):
        a = random_bitstring(s + t, rng)
        b = bsc(a, p, rng)
        if s == 0:
            est = estimate_error(a, b, epsilon)
            p_err = p
        else:
            test = sample_subset(s + t, t, rng)
            est = estimate_error(extract(a, test), extract(b, test), epsilon, s)
            p_err = hamming_distance(a, b) / (s + t)
        covered += p_err <= est.p_error_bound
    return {"trials": trials, "covered": covered, "coverage": covered / trials,
            "guarantee": 1.0 - math.exp(-2 * epsilon**2 * t)}


# reconciliation


def reconcile_trial(s: int, p: float, delta_prime: float, eta: int, seed,
                    max_candidates: int = 1 << 22) -> dict:
    rng = make_rng(seed)
    b = random_bitstring(s, rng)
    a = bsc(b, p, rng)
    w = ir_hash_length(s, p, delta_prime, eta)
    h = ToeplitzHash.random(s, w, rng)
    d = hamming_distance(a, b)
    try:
        res = decode_for_simulation(a, h, h(b), b, max_candidates)
    except SearchExhausted:
        return {"s": s, "w": w, "distance": d, "route": "exhausted", "correct": None, "failure_bound": None}
    return {"s": s, "w": w, "distance": d, "route": res.route, "correct": res.string == b,
            "failure_bound": res.failure_bound}

