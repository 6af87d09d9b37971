import json
import math

import numpy as np
import pytest

import oracles
from febcrypto.adversaries import Block, Forward, StoreFraction, Substitute
from febcrypto.bits import BitString, SubsetIndex, make_rng, random_bitstring
from febcrypto.hashing import ToeplitzHash
from febcrypto.protocols import (ConfigError, FlippingBob, HonestAlice, HonestBob, OtParams, SkeParams,
                                 eve_best_guess, ot_classicize, run_ot, run_ske, transcript_view)

SMALL = SkeParams(nu=9, k=4, t=300, s=300, delta_prime=0.05, eta=20, epsilon_pa=10)


def width(universe):
    return max(1, (universe - 1).bit_length())


# key establishment


def test_noiseless_run_establishes_matching_key():
    out = run_ske(SMALL, seed=1)
    assert out.status == "key_established"
    assert out.key_alice == out.key_bob
    assert len(out.key_bob) == out.m > 0
    assert out.p_test == 0


def test_block_aborts_without_receipt():
    out = run_ske(SMALL, eve=Block(), seed=2)
    assert out.status == "aborted_no_receipt"
    assert out.key_alice is None and out.key_bob is None


def test_wrong_length_substitution_aborts_without_receipt():
    class Truncate:
        def intercept(self, x, eve, rng):
            return x.slice(0, 10)

    assert run_ske(SMALL, eve=Truncate(), seed=3).status == "aborted_no_receipt"


def test_substitute_is_caught_by_error_estimate():
    strategy = Substitute()
    out = run_ske(SMALL, eve=strategy, seed=4)
    assert out.status == "aborted_error_rate"
    assert strategy.budget_exceeded
    assert out.p_test > 0.3
    assert out.ledgers["eve"]["consumed"] <= 2**SMALL.nu


def test_key_is_a_hash_of_bobs_block():
    out = run_ske(SMALL, noise=0.03, seed=5)
    assert out.status == "key_established"
    pa = [ev for ev in out.transcript.broadcasts() if ev.label == "pa-hash"][0].payload
    g = ToeplitzHash.decode(pa, SMALL.s, out.m)
    assert out.key_bob == g(out.truth["b_block"]) == out.key_alice


def test_key_length_matches_formula_exactly():
    for seed, noise in [(6, 0.0), (7, 0.02), (8, 0.05)]:
        out = run_ske(SMALL, noise=noise, seed=seed)
        assert out.status == "key_established"
        p_bar = out.p_test + SMALL.s * SMALL.epsilon_est / (SMALL.s + SMALL.t)
        w = oracles.ir_hash_length(SMALL.s, p_bar, SMALL.delta_prime, SMALL.eta)
        assert out.w == w
        assert out.m == len(out.key_bob) == oracles.ske_key_length(SMALL.s, SMALL.k, SMALL.delta, w, SMALL.epsilon_pa)


def test_high_noise_aborts_on_error_rate():
    out = run_ske(SMALL, noise=0.3, seed=9)
    assert out.status == "aborted_error_rate"


def test_ske_desk_frozen_accounting():
    params = SkeParams(nu=12, k=4, t=2000, s=2000, delta_prime=0.05, eta=30)
    out = run_ske(params, seed=0)
    L, s, t = params.register_len, params.s, params.t
    w, m = out.w, out.m
    assert (w, m) == (645, 795)
    assert params.effective_threshold() == pytest.approx(0.136)
    alice = ((s + t) * (1 + width(L)) + (s + t) * width(L) + t * width(s + t) + t
             + w + (s + 2 * m - 1) + m)
    bob = 1 + t + w + (s + 2 * w - 1) + w + m
    assert out.ledgers["alice"]["consumed"] == alice == 147029
    assert out.ledgers["bob"]["consumed"] == bob == 7375


def test_ledgers_within_bounds_and_audited():
    out = run_ske(SMALL, eve=StoreFraction(), noise=0.02, seed=10)
    for led in out.ledgers.values():
        assert led["consumed"] <= led["bound"]
        assert sum(e["amount"] for e in led["audit"]) == led["consumed"]
    assert out.ledgers["eve"]["consumed"] == 2**SMALL.nu
    assert out.eve_view["copied_bits"] == 2**SMALL.nu


def test_honest_consumption_is_linear_in_nu():
    ratios = []
    for nu in range(8, 21, 3):
        params = SkeParams(nu=nu, k=4, t=200, s=200, eta=20, epsilon_pa=10)
        out = run_ske(params, seed=nu)
        assert out.status == "key_established"
        ratios.append(max(out.ledgers[a]["consumed"] for a in ("alice", "bob")) / nu)
    # consumption grows like (s + t) log2(k 2**nu), so the ratio to nu stays bounded
    assert max(ratios) <= 2**14


def test_ske_is_deterministic():
    a = run_ske(SMALL, eve=StoreFraction(), noise=0.02, seed=11)
    b = run_ske(SMALL, eve=StoreFraction(), noise=0.02, seed=11)
    assert a.transcript.to_jsonl() == b.transcript.to_jsonl()
    assert a.key_bob == b.key_bob


def test_eve_view_holds_broadcasts_and_intercepts_only():
    out = run_ske(SMALL, eve=Forward(), seed=12)
    kinds = {ev.kind for ev in out.transcript.view("eve")}
    assert kinds == {"broadcast", "intercept"}
    assert all(ev.kind != "swap-send" for ev in out.transcript.view("bob"))


def test_eve_best_guess_with_partial_knowledge():
    params = SkeParams(nu=9, k=4, t=300, s=300, eta=20, epsilon_pa=10, key_bits=6)
    out = run_ske(params, eve=StoreFraction(), seed=13)
    guess = eve_best_guess(out, make_rng(0))
    assert guess["uncertain_key_bits"] == 6
    assert guess["success_probability"] == 2**-6
    assert 0 < guess["known_block_bits"] < params.s


def test_eve_best_guess_with_full_knowledge():
    out = run_ske(SMALL, eve=Forward(), seed=14)
    block_pos = out.truth["rawkey"].positions[out.truth["untested"].positions]
    out.eve_memory = {"copy": (out.truth["b_block"], SubsetIndex(block_pos, SMALL.register_len))}
    guess = eve_best_guess(out)
    assert guess["success"] and guess["success_probability"] == 1.0


@pytest.mark.parametrize("kwargs", [
    {"s": 5000, "t": 5000},  # beyond the register
    {"k": 1},
    {"s": 50, "t": 50},  # no positive key length
    {"cap_factor": 10},  # raw-key positions do not fit the public channel
    {"key_bits": 0},
    {"epsilon_est": 0.0},
])
def test_configuration_errors(kwargs):
    base = dict(nu=9, k=4, t=300, s=300, eta=20, epsilon_pa=10)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        run_ske(SkeParams(**base))


def test_explicit_abort_threshold():
    params = SkeParams(nu=9, k=4, t=300, s=300, eta=20, epsilon_pa=10, abort_threshold=0.0)
    assert run_ske(params, noise=0.05, seed=15).status == "aborted_error_rate"


# oblivious transfer

OT = OtParams(nu=10, n=128, eta=40)


@pytest.mark.parametrize("choice", [0, 1])
def test_ot_honest_delivers_chosen_message(choice):
    m0 = random_bitstring(128, make_rng(1))
    m1 = random_bitstring(128, make_rng(2))
    out = run_ot(OT, HonestAlice(m0, m1), HonestBob(choice), seed=3)
    assert out.status == "delivered"
    assert out.bob_message == (m0, m1)[choice]


def test_ot_alice_view_independent_of_choice():
    views = [json.dumps(transcript_view(run_ot(OT, bob=HonestBob(i), seed=4), "alice"), sort_keys=True)
             for i in (0, 1)]
    assert views[0] == views[1]
    bob_view = transcript_view(run_ot(OT, bob=HonestBob(0), seed=4), "bob")
    assert not any(ev["kind"] == "swap-send" and ev["agent"] == "alice" for ev in bob_view)


def test_ot_accounting():
    out = run_ot(OT, seed=5)
    r, n = OT.n + OT.eta, OT.n
    alice = 2 * r + r * width(OT.register_len) + 2 * n + (r + 2 * n - 1) + r * width(OT.register_len) + 2 * n
    assert out.ledgers["alice"]["consumed"] == alice == 5303
    assert out.ledgers["bob"]["consumed"] == n


def test_ot_classicize_is_free_and_invisible():
    plain = run_ot(OT, bob=HonestBob(1), seed=6)
    classic = run_ot(OT, bob=HonestBob(1, classicize=True), seed=6)
    assert classic.status == plain.status == "delivered"
    assert classic.bob_message == plain.bob_message
    assert transcript_view(classic, "alice")[:-1] == transcript_view(plain, "alice")[:-1]
    audit = classic.ledgers["bob"]["audit"]
    assert {"reason": "cnot-to-fresh-random-pad-target", "amount": 0, "running_total": 0} in audit
    assert classic.ledgers["bob"]["consumed"] == plain.ledgers["bob"]["consumed"]


def test_ot_classicize_helper():
    pads = (random_bitstring(16, make_rng(0)), random_bitstring(16, make_rng(1)))
    zero = BitString.zeros(16)
    x0, x1, kept = ot_classicize(zero, zero, pads)
    assert (x0, x1) == (zero, zero) and kept == pads
    with pytest.raises(ValueError):
        ot_classicize(zero, zero, (BitString.zeros(3), pads[1]))


def test_ot_cheating_bob():
    assert run_ot(OT, bob=FlippingBob(0, OT.register_len), seed=7).status == "aborted_check"
    aborted = sum(run_ot(OT, bob=FlippingBob(0, 256), seed=s).status == "aborted_check" for s in range(50))
    assert aborted == 50


def test_ot_configuration_errors():
    with pytest.raises(ConfigError):
        run_ot(OtParams(nu=3, n=40, eta=0))
    with pytest.raises(ConfigError):
        run_ot(OtParams(nu=10, n=128, eta=40, cap_factor=1))
    with pytest.raises(ValueError):
        HonestBob(2)
    with pytest.raises(ConfigError):
        run_ot(OT, HonestAlice(BitString.zeros(3), BitString.zeros(3)))


def test_ot_abort_probability_oracle():
    p = 1 - oracles.ot_miss_probability(4096, 168, 1)
    assert float(p) == pytest.approx(168 / 4096)
    assert math.isclose(float(1 - oracles.ot_miss_probability(4096, 168, 16)), 0.48897880757216, rel_tol=1e-10)
    assert np.isclose(float(1 - oracles.ot_miss_probability(4096, 168, 0)), 0.0)
