import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqfp_sc.sc import (
    BinaryCode,
    BitStream,
    Encoding,
    StreamShapeError,
    SupplyError,
    decode_bits,
    decode_stream,
    encode_bipolar,
    encode_bipolar_array,
    generate_stream,
    mux_add,
    neutral_noise,
    sng_compare,
    sng_streams,
    xnor_multiply,
)


def random_stream(gen, p, n):
    return BitStream((gen.random(n) < p).astype(np.uint8))


class TestEncode:
    def test_saturation(self):
        assert encode_bipolar(-1.0).code == 0
        assert encode_bipolar(1.0).code == 1024

    def test_point_four(self):
        # 0.7 * 1024 = 716.8
        code = encode_bipolar(0.4)
        assert code.code == 717
        assert abs((2 * code.probability - 1) - 0.4004) < 1e-4

    def test_half_rounds_away_from_zero(self):
        # (x + 1) * 2 = 2.5 exactly for n_bits=2
        assert encode_bipolar(0.25, n_bits=2).code == 3

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            encode_bipolar(1.0001)
        with pytest.raises(ValueError):
            encode_bipolar_array([0.0, -1.5])

    @given(st.floats(-1, 1), st.integers(1, 14))
    def test_array_matches_scalar(self, x, n):
        assert encode_bipolar_array([x], n)[0] == encode_bipolar(x, n).code

    def test_code_range(self):
        BinaryCode(1024, 10)
        with pytest.raises(ValueError):
            BinaryCode(1025, 10)


class TestCompare:
    def test_constants(self):
        for r in (0, 17, 1023):
            assert sng_compare(BinaryCode(0), r) == 0
            assert sng_compare(BinaryCode(1024), r) == 1

    def test_strict_less(self):
        assert sng_compare(BinaryCode(512), 511) == 1
        assert sng_compare(BinaryCode(512), 512) == 0

    def test_word_range(self):
        with pytest.raises(ValueError):
            sng_compare(BinaryCode(3), 1024)


class TestGenerate:
    def test_zero_and_one_codes(self, rng):
        words = rng.integers(0, 1024, 256)
        assert generate_stream(BinaryCode(0), words, 256).popcount() == 0
        assert generate_stream(BinaryCode(1024), words, 256).popcount() == 256

    def test_value_within_binomial_bound(self, rng):
        s = generate_stream(BinaryCode(717), rng.integers(0, 1024, 4096), 4096)
        assert abs(decode_stream(s) - 0.4) <= 0.043

    def test_iterable_and_callable_sources_agree(self, rng):
        words = rng.integers(0, 1024, 64)
        it = iter(words.tolist())
        a = generate_stream(BinaryCode(300), words.tolist(), 64)
        b = generate_stream(BinaryCode(300), lambda: next(it), 64)
        c = generate_stream(BinaryCode(300), words, 64)
        assert a == b == c

    def test_exhausted_source(self):
        with pytest.raises(SupplyError):
            generate_stream(BinaryCode(3), [1, 2, 3], 4)
        with pytest.raises(SupplyError):
            generate_stream(BinaryCode(3), np.array([1, 2]), 4)

    def test_batch_matches_scalar(self, rng):
        codes = np.array([0, 100, 717, 1024])
        words = rng.integers(0, 1024, (4, 50))
        batch = sng_streams(codes, words)
        for i, c in enumerate(codes):
            assert np.array_equal(batch[i], generate_stream(BinaryCode(int(c)), words[i], 50).bits)

    def test_round_trip_on_grid(self):
        n = 1024
        hits = 0
        trials = 200
        for t in range(trials):
            gen = np.random.default_rng(t)
            k = int(gen.integers(0, 1025))
            x = k / 512 - 1
            s = generate_stream(encode_bipolar(x), gen.integers(0, 1024, n), n)
            hits += abs(decode_stream(s) - x) <= 4 / np.sqrt(n)
        assert hits >= 0.99 * trials


class TestDecode:
    def test_unipolar_example(self):
        assert decode_stream(BitStream.from_string("0100110100"), Encoding.UNIPOLAR) == pytest.approx(0.4)

    def test_bipolar_example(self):
        assert decode_stream(BitStream.from_string("10010000")) == pytest.approx(-0.5)

    def test_all_ones(self):
        assert decode_stream(BitStream(np.ones(8, dtype=np.uint8))) == 1.0

    def test_bits_along_last_axis(self):
        bits = np.array([[1, 1, 0, 0], [1, 1, 1, 1]])
        assert decode_bits(bits).tolist() == [0.0, 1.0]


class TestArithmetic:
    def test_xnor_identity_and_negation(self, rng):
        b = random_stream(rng, 0.3, 100)
        ones = BitStream(np.ones(100, dtype=np.uint8))
        zeros = BitStream(np.zeros(100, dtype=np.uint8))
        assert xnor_multiply(ones, b) == b
        assert np.array_equal(xnor_multiply(zeros, b).bits, 1 - b.bits)

    def test_xnor_product(self, rng):
        n = 8192
        a = random_stream(rng, 0.8, n)  # 0.6
        b = random_stream(rng, 0.25, n)  # -0.5
        p = 2 * (0.8 * 0.25 + 0.2 * 0.75) - 1
        sigma = 2 * np.sqrt(((1 + p) / 2) * ((1 - p) / 2) / n)
        assert p == pytest.approx(-0.3)
        assert abs(decode_stream(xnor_multiply(a, b)) - p) <= 3 * sigma

    def test_xnor_multiplicative_on_average(self, rng):
        n = 8192
        errs = []
        for _ in range(500):
            x, y = rng.uniform(-1, 1, 2)
            a = random_stream(rng, (x + 1) / 2, n)
            b = random_stream(rng, (y + 1) / 2, n)
            errs.append(abs(decode_stream(xnor_multiply(a, b)) - x * y))
        assert np.mean(errs) <= 0.02

    def test_mux(self, rng):
        n = 8192
        a = random_stream(rng, 0.7, n)
        ones = BitStream(np.ones(n, dtype=np.uint8))
        zeros = BitStream(np.zeros(n, dtype=np.uint8))
        sel = random_stream(rng, 0.5, n)
        assert mux_add(a, a, sel) == a
        assert mux_add(a, zeros, ones) == a
        assert abs(decode_stream(mux_add(ones, zeros, sel))) <= 3 * 2 * np.sqrt(0.25 / n)

    def test_length_mismatch(self):
        a = BitStream.from_string("1010")
        b = BitStream.from_string("101")
        with pytest.raises(StreamShapeError):
            xnor_multiply(a, b)
        with pytest.raises(StreamShapeError):
            mux_add(a, a, b)

    @settings(max_examples=50)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=64), st.lists(st.integers(0, 1), min_size=1, max_size=64))
    def test_bit_local(self, xs, ys):
        n = min(len(xs), len(ys))
        a, b = BitStream(xs[:n]), BitStream(ys[:n])
        out = xnor_multiply(a, b)
        assert out.length == n
        assert all(out.bits[t] == (1 if xs[t] == ys[t] else 0) for t in range(n))


class TestNeutralNoise:
    def test_pattern(self):
        assert str(neutral_noise(4)) == "1010"

    def test_even_length_is_zero(self):
        s = neutral_noise(1024)
        assert s.popcount() == 512
        assert decode_stream(s) == 0.0

    def test_odd_length_bias(self):
        s = neutral_noise(5)
        assert str(s) == "10101"
        assert decode_stream(s) == pytest.approx(0.2)


class TestBitStream:
    def test_immutable(self):
        s = BitStream([1, 0, 1])
        with pytest.raises(ValueError):
            s.bits[0] = 0

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            BitStream([0, 2])
        with pytest.raises(ValueError):
            BitStream([])

    def test_hash_and_eq(self):
        assert {BitStream.from_string("101"), BitStream([1, 0, 1])} == {BitStream([1, 0, 1])}
