"""Stochastic number encodings and elementary stochastic arithmetic.

A stochastic number is carried by a :class:`BitStream`; its value is the
density of ones (unipolar) or ``2 * density - 1`` (bipolar).  Binary codes are
turned into streams with a comparator SNG: bit ``t`` is ``1`` iff the random
word of cycle ``t`` is strictly less than the code.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Union

import numpy as np

DEFAULT_N_BITS = 10


class Encoding(enum.Enum):
    UNIPOLAR = "unipolar"
    BIPOLAR = "bipolar"


class StreamShapeError(ValueError):
    """Raised when stream operands have mismatched lengths."""


class SupplyError(RuntimeError):
    """Raised when a random-word source runs dry."""


@dataclass(frozen=True, eq=False)
class BitStream:
    """Fixed-length binary sequence.

    ``bits`` is stored as a read-only ``uint8`` array of zeros and ones.
    """

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("a bit-stream must be a non-empty 1-D sequence")
        if arr.dtype != np.uint8:
            if not np.all((arr == 0) | (arr == 1)):
                raise ValueError("bit-stream elements must be 0 or 1")
            arr = arr.astype(np.uint8)
        elif arr.max(initial=0) > 1:
            raise ValueError("bit-stream elements must be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @classmethod
    def from_string(cls, text: str) -> "BitStream":
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    @property
    def length(self) -> int:
        return int(self.bits.size)

    def __len__(self) -> int:
        return self.length

    def popcount(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __repr__(self) -> str:
        text = str(self)
        if len(text) > 32:
            text = text[:29] + "..."
        return f"BitStream('{text}', length={self.length})"


@dataclass(frozen=True)
class BinaryCode:
    """Unsigned SNG code with ``n_bits`` resolution; ``2**n_bits`` means "always 1"."""

    code: int
    n_bits: int = DEFAULT_N_BITS

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be positive")
        if not 0 <= self.code <= (1 << self.n_bits):
            raise ValueError(f"code {self.code} outside [0, 2^{self.n_bits}]")

    @property
    def probability(self) -> float:
        return self.code / (1 << self.n_bits)


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def encode_bipolar(x: float, n_bits: int = DEFAULT_N_BITS) -> BinaryCode:
    """Map ``x`` in [-1, 1] to ``round((x + 1) * 2**(n_bits - 1))``."""
    if n_bits < 1:
        raise ValueError("n_bits must be positive")
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"bipolar value {x} outside [-1, 1]")
    return BinaryCode(_round_half_away((x + 1.0) * (1 << (n_bits - 1))), n_bits)


def encode_bipolar_array(values, n_bits: int = DEFAULT_N_BITS) -> np.ndarray:
    """Vectorised :func:`encode_bipolar`; returns integer codes."""
    v = np.asarray(values, dtype=float)
    if np.any(v < -1.0) or np.any(v > 1.0):
        raise ValueError("bipolar values must lie in [-1, 1]")
    # all scaled values are non-negative, so half-away rounding is floor(x + 0.5)
    return np.floor((v + 1.0) * (1 << (n_bits - 1)) + 0.5).astype(np.int64)


def sng_compare(code: BinaryCode, rand_word: int) -> int:
    if not 0 <= rand_word < (1 << code.n_bits):
        raise ValueError(f"random word {rand_word} is not an unsigned {code.n_bits}-bit value")
    return 1 if rand_word < code.code else 0


RandSource = Union[Iterable[int], Callable[[], int]]


def _iter_words(rand_source: RandSource) -> Iterator[int]:
    if callable(rand_source):
        while True:
            yield rand_source()
    else:
        yield from rand_source


def generate_stream(code: BinaryCode, rand_source: RandSource, length: int) -> BitStream:
    """Run the comparator SNG for ``length`` cycles.

    ``rand_source`` is an iterable of words or a zero-argument callable; a
    numpy array of words is accepted and compared in one shot.
    """
    if length < 1:
        raise ValueError("stream length must be positive")
    if isinstance(rand_source, np.ndarray):
        words = rand_source.reshape(-1)
        if words.size < length:
            raise SupplyError(f"need {length} random words, source has {words.size}")
        words = words[:length]
        if words.min() < 0 or words.max() >= (1 << code.n_bits):
            raise ValueError(f"random words must be unsigned {code.n_bits}-bit values")
        return BitStream((words < code.code).astype(np.uint8))
    bits = np.empty(length, dtype=np.uint8)
    it = _iter_words(rand_source)
    for t in range(length):
        try:
            word = next(it)
        except StopIteration:
            raise SupplyError(f"random source exhausted after {t} of {length} words") from None
        bits[t] = sng_compare(code, int(word))
    return BitStream(bits)


def sng_streams(codes, words: np.ndarray) -> np.ndarray:
    """Batch comparator SNG: ``words[..., t] < codes[...]`` as ``uint8``.

    ``words`` has a trailing time axis; ``codes`` broadcasts against the rest.
    """
    codes = np.asarray(codes)
    return (words < codes[..., None]).astype(np.uint8)


def decode_stream(s: BitStream, encoding: Encoding = Encoding.BIPOLAR) -> float:
    p = s.popcount() / s.length
    if encoding is Encoding.UNIPOLAR:
        return p
    return 2.0 * p - 1.0


def decode_bits(bits: np.ndarray, encoding: Encoding = Encoding.BIPOLAR) -> np.ndarray:
    """Decode along the last axis of a 0/1 array."""
    p = np.asarray(bits).mean(axis=-1)
    if encoding is Encoding.UNIPOLAR:
        return p
    return 2.0 * p - 1.0


def _check_lengths(*streams: BitStream) -> None:
    n = streams[0].length
    for s in streams[1:]:
        if s.length != n:
            raise StreamShapeError(f"stream lengths differ: {n} vs {s.length}")


def xnor_multiply(a: BitStream, b: BitStream) -> BitStream:
    _check_lengths(a, b)
    return BitStream(1 - (a.bits ^ b.bits))


def mux_add(a: BitStream, b: BitStream, select: BitStream) -> BitStream:
    """Scaled addition: picks ``a`` where ``select`` is 1, else ``b``."""
    _check_lengths(a, b, select)
    return BitStream(np.where(select.bits == 1, a.bits, b.bits))


def neutral_noise_bits(length: int) -> np.ndarray:
    if length < 1:
        raise ValueError("stream length must be positive")
    return (1 - (np.arange(length) & 1)).astype(np.uint8)


def neutral_noise(length: int) -> BitStream:
    """Alternating ``1010...`` stream; bipolar zero for even lengths."""
    return BitStream(neutral_noise_bits(length))
