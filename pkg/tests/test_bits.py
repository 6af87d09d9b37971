import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from febcrypto.bits import (BitString, SubsetIndex, bsc, extract, flip_positions, hamming_distance,
                            make_rng, random_bitstring, sample_subset, spawn_rngs, xor)

bit_lists = st.lists(st.integers(0, 1), max_size=200)


@st.composite
def equal_pairs(draw):
    n = draw(st.integers(0, 150))
    a = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    b = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    return BitString.from_array(np.array(a, dtype=np.uint8)), BitString.from_array(np.array(b, dtype=np.uint8))


@st.composite
def string_and_subset(draw):
    n = draw(st.integers(1, 120))
    bits = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    pos = sorted(draw(st.sets(st.integers(0, n - 1), max_size=n)))
    return BitString.from_array(np.array(bits, dtype=np.uint8)), SubsetIndex(pos, n)


def test_xor_example():
    assert xor(BitString.from_str("0101"), BitString.from_str("0011")) == BitString.from_str("0110")


def test_xor_length_mismatch():
    with pytest.raises(ValueError):
        xor(BitString.from_str("01"), BitString.from_str("011"))


def test_extract_example():
    x = BitString.from_str("10110")
    assert extract(x, SubsetIndex([0, 2, 3], 5)) == BitString.from_str("111")
    with pytest.raises(ValueError):
        extract(x, SubsetIndex([0], 6))


@given(equal_pairs())
def test_xor_is_involution(pair):
    a, b = pair
    assert xor(xor(a, b), b) == a
    assert xor(a, a) == BitString.zeros(len(a))


@given(equal_pairs())
def test_hamming_distance_matches_count(pair):
    a, b = pair
    assert hamming_distance(a, b) == int((a.to_array() != b.to_array()).sum())


@given(bit_lists)
def test_roundtrips(bits):
    x = BitString.from_array(np.array(bits, dtype=np.uint8))
    assert x.to_array().tolist() == bits
    assert BitString.from_str(str(x)) == x
    assert BitString.from_json(x.to_json()) == x
    assert BitString.from_int(x.to_int(), len(x)) == x
    assert len(x) == len(bits)


@given(string_and_subset())
def test_extract_matches_indexing(pair):
    x, s = pair
    assert extract(x, s).to_array().tolist() == [x[i] for i in s]
    assert len(extract(x, s)) + len(extract(x, s.complement())) == len(x)


@given(string_and_subset())
def test_subset_encoding_roundtrip(pair):
    _, s = pair
    enc = s.encode()
    assert len(enc) == len(s) * s.index_width()
    assert SubsetIndex.decode(enc, s.universe) == s


def test_subset_validation():
    with pytest.raises(ValueError):
        SubsetIndex([2, 1], 5)
    with pytest.raises(ValueError):
        SubsetIndex([1, 1], 5)
    with pytest.raises(ValueError):
        SubsetIndex([5], 5)


def test_compose():
    outer = SubsetIndex([1, 4, 6, 9], 10)
    inner = SubsetIndex([0, 2], 4)
    assert outer.compose(inner) == SubsetIndex([1, 6], 10)
    x = random_bitstring(10, make_rng(3))
    assert extract(x, outer.compose(inner)) == extract(extract(x, outer), inner)


@settings(max_examples=50)
@given(st.integers(1, 500), st.data())
def test_sample_subset_shape(universe, data):
    count = data.draw(st.integers(0, universe))
    seed = data.draw(st.integers(0, 2**32))
    s = sample_subset(universe, count, make_rng(seed))
    pos = s.positions
    assert len(s) == count
    assert np.all(np.diff(pos) > 0)
    assert pos.size == 0 or (pos[0] >= 0 and pos[-1] < universe)


def test_sample_subset_is_uniform():
    # every 2-subset of a 5-set should appear about 1/10 of the time
    rng = make_rng(11)
    counts = {}
    trials = 20000
    for _ in range(trials):
        key = tuple(sample_subset(5, 2, rng).positions.tolist())
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 10
    sigma = np.sqrt(trials * 0.1 * 0.9)
    assert all(abs(c - trials / 10) < 5 * sigma for c in counts.values())


def test_sample_subset_rejects_oversize():
    with pytest.raises(ValueError):
        sample_subset(3, 4, make_rng(0))


def test_random_bitstring_determinism():
    assert random_bitstring(1000, make_rng(5)) == random_bitstring(1000, make_rng(5))
    assert random_bitstring(1000, make_rng(5)) != random_bitstring(1000, make_rng(6))
    a, b = spawn_rngs(1, 2)
    assert random_bitstring(64, a) != random_bitstring(64, b)


def test_random_bitstring_bias():
    x = random_bitstring(200000, make_rng(0))
    assert abs(x.hamming_weight() - 100000) < 4 * np.sqrt(50000)


def test_bsc_rate_and_edge_cases():
    rng = make_rng(1)
    x = random_bitstring(100000, rng)
    y = bsc(x, 0.1, rng)
    assert abs(hamming_distance(x, y) - 10000) < 4 * np.sqrt(100000 * 0.09)
    assert bsc(x, 0.0, rng) == x
    assert bsc(x, 1.0, rng) == xor(x, BitString.from_array(np.ones(len(x), dtype=np.uint8)))
    with pytest.raises(ValueError):
        bsc(x, 1.5, rng)


def test_padding_is_canonical():
    raw = np.array([0b10111111], dtype=np.uint8)
    assert BitString(raw, 2) == BitString.from_str("10")
    assert hash(BitString(raw, 2)) == hash(BitString.from_str("10"))


def test_flip_and_slice():
    x = BitString.from_str("0000")
    assert flip_positions(x, [1, 3]) == BitString.from_str("0101")
    assert BitString.from_str("110010").slice(2, 5) == BitString.from_str("001")
    assert BitString.from_str("01") + BitString.from_str("1") == BitString.from_str("011")


def test_ordering_is_lexicographic():
    assert BitString.from_str("0011") < BitString.from_str("0100")
    assert not BitString.from_str("1000") < BitString.from_str("0111")


def test_storage_is_immutable():
    x = BitString.from_str("1010")
    with pytest.raises(ValueError):
        x.packed[0] = 0
