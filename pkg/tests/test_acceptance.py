"""Desk-scale acceptance runs; each prints a PASS/FAIL line in the terminal summary."""

import json
import math
import time

import pytest
from scipy.stats import binomtest

import oracles
from febcrypto.adversaries import COMPLIANT_ADVERSARIES
from febcrypto.experiments import (chernoff_coverage, lhl_trial, ot_trial, ske_trial, trial_seed,
                                   universality_trial)
from febcrypto.games import MemoryGameConfig, landauer_grid, merge_stats, run_memory_game
from febcrypto.presets import preset
from febcrypto.protocols import HonestBob, SkeParams, run_ot, transcript_view

pytestmark = pytest.mark.slow


def test_landauer_counting_bound_and_tightness(verdict):
    start = time.perf_counter()
    rows = landauer_grid(12, 6, [0, 2, 4], range(1, 9), permutations=100, seed=2024)
    elapsed = time.perf_counter() - start
    violations = sum(r["violations"] for r in rows)
    tight = all(r["tight"] for r in rows)
    passed = len(rows) == 24 and violations == 0 and tight and elapsed <= 120
    verdict(1, "Landauer counting", passed,
            f"{len(rows)} configs x 100 permutations, {violations} violations, tight={tight}, {elapsed:.1f}s")
    assert len(rows) == 24
    assert violations == 0
    assert tight
    assert elapsed <= 120


def test_two_universality_exact_counts(verdict):
    start = time.perf_counter()
    failures = total = 0
    for n, m in [(3, 1), (4, 2), (5, 2)]:
        for i in range(50):
            rec = universality_trial(n, m, trial_seed(100 * n + m, i))
            assert rec["expected"] * 2 ** (2 * m) == 2 ** (n + 2 * m - 1)
            failures += not rec["exact"]
            total += 1
    elapsed = time.perf_counter() - start
    verdict(2, "2-universality", failures == 0 and elapsed <= 60,
            f"{total} input pairs, {failures} inexact tables, {elapsed:.1f}s")
    assert failures == 0
    assert elapsed <= 60


def test_leftover_hash_distance(verdict):
    start = time.perf_counter()
    records = [lhl_trial(trial_seed(31, i), epsilon=(1, 2, 3)[i % 3], n_range=(6, 10)) for i in range(100)]
    elapsed = time.perf_counter() - start
    violations = sum(not r["ok"] for r in records)
    worst = max(r["delta"] / r["bound"] for r in records)
    assert all(r["n"] <= 10 and r["epsilon"] in (1, 2, 3) for r in records)
    verdict(3, "leftover hash lemma", violations == 0 and elapsed <= 300,
            f"100 sources, {violations} violations, max delta/2^-eps = {worst:.3f}, {elapsed:.1f}s")
    assert violations == 0
    assert elapsed <= 300


def test_chernoff_coverage(verdict):
    start = time.perf_counter()
    res = chernoff_coverage(0.1, 1000, 0.05, 10**4, seed=44)
    elapsed = time.perf_counter() - start
    threshold = 1 - math.exp(-2 * 0.05**2 * 1000) - 0.005
    passed = res["coverage"] >= threshold and elapsed <= 60
    verdict(4, "Chernoff estimation", passed,
            f"coverage {res['coverage']:.4f} >= {threshold:.4f}, {elapsed:.1f}s")
    assert res["coverage"] >= threshold
    assert elapsed <= 60


@pytest.fixture(scope="module")
def ske_desk_runs():
    params = preset("ske-desk")["params"]
    start = time.perf_counter()
    clean = [ske_trial(params, trial_seed(5, i)) for i in range(1000)]
    noisy = [ske_trial(params, trial_seed(6, i), noise=0.05) for i in range(1000)]
    return params, clean, noisy, time.perf_counter() - start


def test_ske_soundness(verdict, ske_desk_runs):
    params, clean, noisy, elapsed = ske_desk_runs
    clean_ok = sum(r["status"] == "key_established" and r["keys_match"] for r in clean)
    established = [r for r in noisy if r["status"] == "key_established"]
    mismatches = sum(not r["keys_match"] for r in established)
    rate = mismatches / len(established)
    passed = clean_ok == 1000 and rate <= 2.0 ** (-params.eta + 1) and elapsed <= 600
    verdict(5, "SKE soundness", passed,
            f"noiseless {clean_ok}/1000 matching, BSC(0.05) {mismatches} mismatches in "
            f"{len(established)} keys, {elapsed:.1f}s")
    assert clean_ok == 1000
    assert len(established) == 1000
    assert mismatches == 0
    assert elapsed <= 600


def test_ske_key_length(verdict, ske_desk_runs):
    params, clean, noisy, _ = ske_desk_runs
    wrong = 0
    for r in clean + noisy:
        if r["status"] != "key_established":
            continue
        p_bar = r["p_test"] + params.s * params.epsilon_est / (params.s + params.t)
        w = oracles.ir_hash_length(params.s, p_bar, params.delta_prime, params.eta)
        m = oracles.ske_key_length(params.s, params.k, params.delta, w, params.epsilon_pa)
        wrong += (r["w"], r["m"], r["key_length"]) != (w, m, m)
    verdict(6, "SKE key length", wrong == 0, f"{wrong} of {len(clean) + len(noisy)} runs differ from the formula")
    assert wrong == 0


def test_ske_security_against_store_fraction_eve(verdict):
    params = SkeParams(nu=12, k=4, t=512, s=512, key_bits=8)
    runs = [ske_trial(params, trial_seed(7, i), eve="store-fraction") for i in range(5000)]
    guessed = [r for r in runs if r["eve_guess_success"] is not None]
    successes = sum(r["eve_guess_success"] for r in guessed)
    ci = binomtest(successes, len(guessed), 2**-8).proportion_ci(confidence_level=0.99, method="exact")
    inside = ci.low <= 2**-8 <= ci.high
    budget_ok = all(r["charge_eve"] == 2**params.nu for r in runs)
    verdict(7, "SKE security vs store-fraction Eve", inside and len(guessed) == 5000 and budget_ok,
            f"{successes}/{len(guessed)} guesses, 99% CI [{ci.low:.5f}, {ci.high:.5f}] vs {2**-8:.5f}")
    assert len(guessed) == 5000
    assert budget_ok
    assert inside


def test_ot_soundness(verdict):
    params = preset("ot-desk")["params"]
    wrong = 0
    for choice in (0, 1):
        for i in range(1000):
            rec = ot_trial(params, trial_seed(80 + choice, i), choice=choice)
            wrong += rec["status"] != "delivered" or not rec["correct"]
    verdict(8, "OT soundness", wrong == 0, f"2000 honest runs, {wrong} wrong or missing deliveries")
    assert wrong == 0


def test_ot_alice_view_hides_choice(verdict):
    params = preset("ot-desk")["params"]
    differences = 0
    for i in range(100):
        seed = trial_seed(9, i)
        views = [json.dumps(transcript_view(run_ot(params, bob=HonestBob(c), seed=seed), "alice"), sort_keys=True)
                 for c in (0, 1)]
        differences += views[0] != views[1]
    verdict(9, "OT security for Bob", differences == 0, f"100 seed pairs, {differences} differing views")
    assert differences == 0


def test_ot_cheat_detection(verdict):
    params = preset("ot-desk")["params"]
    raw = params.n + params.eta
    assert params.register_len == 4 * 2**10
    lines, ok = [], True
    for flips in (1, 16, 256):
        aborts = sum(ot_trial(params, trial_seed(1000 + flips, i), flips=flips)["status"] == "aborted_check"
                     for i in range(10**4))
        p = float(1 - oracles.ot_miss_probability(params.register_len, raw, flips))
        sigma = math.sqrt(p * (1 - p) / 10**4)
        rate = aborts / 10**4
        ok &= abs(rate - p) <= 3 * sigma
        lines.append(f"f={flips}: {rate:.4f} vs {p:.4f}±{3 * sigma:.4f}")
    verdict(10, "OT cheat detection", ok, "; ".join(lines))
    assert ok


def test_memory_game_full_guess_bound(verdict):
    cfg = MemoryGameConfig(nu=3, k=4, variant="exhaustive", adversary="copy-first", trials=10**5)
    stats = run_memory_game(cfg, seed=11)
    bound = 2.0 ** (-(cfg.k - 1) * 2**cfg.nu)
    sigma = math.sqrt(bound * (1 - bound) / cfg.trials)
    passed = stats.full_success_rate <= bound + 3 * sigma and stats.budget_violations == 0
    verdict(11, "memory-game bound", passed,
            f"{stats.full_successes} full guesses in {cfg.trials} trials, copied {stats.max_consumed} of "
            f"{cfg.register_len} bits, min-entropy {stats.min_entropy:.1f}")
    assert stats.max_consumed == 2**cfg.nu
    assert stats.budget_violations == 0
    assert stats.full_success_rate <= bound + 3 * sigma


def test_never_copied_bits_are_coin_flips(verdict):
    per_adversary = 10**5 // len(COMPLIANT_ADVERSARIES)
    parts, lines, ok = [], [], True
    for j, name in enumerate(COMPLIANT_ADVERSARIES):
        cfg = MemoryGameConfig(nu=4, k=4, variant="sampled", t=16, adversary=name, trials=per_adversary)
        stats = run_memory_game(cfg, seed=1200 + j)
        n = stats.uncopied_total
        dev = abs(stats.per_bit_uncopied - 0.5) / math.sqrt(0.25 / n)
        ok &= dev <= 4 and stats.budget_violations == 0
        lines.append(f"{name} {stats.per_bit_uncopied:.4f} ({dev:.1f}σ)")
        parts.append((stats.uncopied_hits, n))
    hits, total = map(sum, zip(*parts))
    pooled = abs(hits / total - 0.5) / math.sqrt(0.25 / total)
    ok &= pooled <= 4
    verdict(12, "never-copied bits", ok, f"pooled {hits / total:.4f} over {total} bits ({pooled:.1f}σ); "
            + ", ".join(lines))
    assert ok
