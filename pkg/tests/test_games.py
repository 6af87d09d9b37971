import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from febcrypto.adversaries import COMPLIANT_ADVERSARIES
from febcrypto.games import (CountingConfig, GameConfigError, MemoryGameConfig, adversarial_permutation,
                             counting_permutation, landauer_counting, landauer_grid, merge_stats,
                             pow_reduction_check, run_memory_game)


def brute_count(cfg, perm):
    # direct enumeration over x with y = 0, bits read MSB-first
    count = 0
    for x in range(2**cfg.len_x):
        image = int(perm[x << cfg.len_y])
        x_out, y_out = image >> cfg.len_y, image & ((1 << cfg.len_y) - 1)
        x_bits = format(x_out, f"0{cfg.len_x}b")
        y_bits = format(y_out, f"0{cfg.len_y}b") if cfg.len_y else ""
        count += x_bits[: cfg.w_out] == "0" * cfg.w_out and set(y_bits[cfg.w_in:]) <= {"0"}
    return count


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 4), st.data())
def test_counting_matches_enumeration_and_bound(len_x, len_y, data):
    w_in = data.draw(st.integers(0, len_y))
    w_out = data.draw(st.integers(0, len_x))
    kind = data.draw(st.sampled_from(["random", "adversarial", "identity"]))
    cfg = CountingConfig(len_x, len_y, w_in, w_out, kind, data.draw(st.integers(0, 1000)))
    perm = counting_permutation(cfg)
    assert sorted(perm.tolist()) == list(range(2 ** (len_x + len_y)))
    res = landauer_counting(cfg, perm)
    assert res["count_S"] == brute_count(cfg, perm)
    assert res["count_S"] <= cfg.bound
    assert not res["violation"]


def test_adversarial_permutation_is_tight():
    for w_in, w_out in [(0, 1), (2, 3), (2, 6), (4, 12)]:
        cfg = CountingConfig(12, 6, w_in, w_out, "adversarial")
        assert landauer_counting(cfg)["count_S"] == min(cfg.bound, 2**12)
    perm = adversarial_permutation(CountingConfig(6, 3, 1, 2))
    assert np.unique(perm).size == perm.size


def test_identity_and_edge_cases():
    # identity leaves y blank, so only the w_out leading-zero condition matters
    assert landauer_counting(CountingConfig(8, 3, 0, 3, "identity"))["count_S"] == 2**5
    res = landauer_counting(CountingConfig(8, 3, 2, 0))
    assert res["count_S"] <= 2**8 and res["probability_bound"] == 4
    with pytest.raises(GameConfigError, match="too large"):
        landauer_counting(CountingConfig(16, 8, 0, 1))
    with pytest.raises(GameConfigError):
        landauer_counting(CountingConfig(8, 3, 4, 0))


def test_grid_rows():
    rows = landauer_grid(8, 3, [0, 2], [1, 2], permutations=5, seed=1)
    assert len(rows) == 4
    assert all(r["violations"] == 0 and r["tight"] and r["max_count"] <= r["bound"] for r in rows)


def test_exhaustive_game_reaches_min_entropy_bound():
    for name in ("copy-first", "copy-random", "overreach"):
        stats = run_memory_game(MemoryGameConfig(nu=3, k=4, adversary=name, trials=200), seed=1)
        assert stats.full_successes == 0
        assert stats.budget_violations == 0
        assert stats.max_consumed == 8
        assert stats.min_entropy == pytest.approx(24)
        assert stats.per_bit_copied == 1.0


def test_sampled_min_entropy_rate():
    for name in COMPLIANT_ADVERSARIES:
        cfg = MemoryGameConfig(nu=4, k=4, variant="sampled", t=64, adversary=name, trials=100)
        stats = run_memory_game(cfg, seed=2)
        assert stats.min_entropy_rate >= 0.75 - 0.1
        assert stats.budget_violations == 0


def test_uncopied_bits_are_coin_flips():
    cfg = MemoryGameConfig(nu=4, k=4, variant="sampled", t=16, adversary="copy-random", trials=2000)
    stats = run_memory_game(cfg, seed=3)
    n = stats.uncopied_total
    assert abs(stats.per_bit_uncopied - 0.5) <= 4 * math.sqrt(0.25 / n)


def test_chunked_runs_merge_to_unsplit_run():
    cfg = MemoryGameConfig(nu=3, k=3, variant="sampled", t=8, adversary="copy-random", trials=30)
    whole = run_memory_game(cfg, seed=4, keep_records=True)
    parts = [run_memory_game(MemoryGameConfig(**{**cfg.__dict__, "trials": 10}), seed=4,
                             keep_records=True, first_trial=i) for i in (0, 10, 20)]
    merged = merge_stats(parts)
    assert merged.summary() == whole.summary()
    assert merged.records == whole.records


def test_inflated_budget_is_not_compliant():
    stats = run_memory_game(MemoryGameConfig(nu=3, k=4, adversary="copy-all", trials=20), seed=5)
    assert stats.budget_violations == 20
    stats = run_memory_game(MemoryGameConfig(nu=3, k=4, adversary="copy-all", trials=20, budget=32), seed=5)
    assert stats.full_success_rate == 1.0


def test_game_config_errors():
    with pytest.raises(GameConfigError):
        MemoryGameConfig(nu=3, variant="sampled").validate()
    with pytest.raises(GameConfigError):
        MemoryGameConfig(nu=3, variant="other").validate()
    with pytest.raises(ValueError):
        MemoryGameConfig(nu=3, adversary="psychic").validate()


def test_pow_reduction():
    full = pow_reduction_check("copy-all", k=3, nu=3, trials=200, seed=0, budget=3 * 2**3)
    assert full["frequency"] == 1.0
    for name in ("no-copy", "copy-first", "block-parity"):
        res = pow_reduction_check(name, k=3, nu=3, trials=2000, seed=1)
        sigma = math.sqrt(res["bound"] * (1 - res["bound"]) / res["trials"])
        assert res["frequency"] <= res["bound"] + 3 * sigma
        assert res["budget_violations"] == 0
