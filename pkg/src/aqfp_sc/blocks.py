"""Sorter-based SC-DNN blocks: feature extraction, average pooling, categorization.

Each block has three views that the tests hold against each other:

* a step-wise behavioural model (:func:`fe_step`, :func:`pool_step`) that
  literally sorts the current column together with the feedback vector;
* fast count-domain runs (:func:`fe_run`, :func:`pool_run` and the ``*_batch``
  variants) -- because the feedback vector is always sorted, it is fully
  described by its number of ones;
* a gate-level netlist (:func:`build_block_netlist`) that is simulated cycle by
  cycle with :func:`simulate_block`.

Feature extraction computes ``clip(sum of bipolar products, -1, 1)``; pooling
computes the mean.  Even widths of feature-extraction and categorization
blocks get one neutral-noise row (``1010...``) appended.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .netlist import MAJ3, NOT, GateNetlist, prune, simulate
from .sc import BitStream, StreamShapeError, decode_bits, neutral_noise_bits
from .sortnet import DESCENDING, merge_wires, sort_wires


class BlockKind(enum.Enum):
    FEATURE_EXTRACTION = "feature_extraction"
    AVG_POOL = "avg_pool"
    CATEGORIZATION = "categorization"

    @classmethod
    def parse(cls, value: Union[str, "BlockKind"]) -> "BlockKind":
        if isinstance(value, cls):
            return value
        aliases = {"fe": cls.FEATURE_EXTRACTION, "pool": cls.AVG_POOL, "cat": cls.CATEGORIZATION}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"unknown block kind {value!r}") from None


@dataclass(frozen=True, eq=False)
class ProductMatrix:
    """``M`` product streams of common length ``N`` as a ``(M, N)`` uint8 array."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise StreamShapeError("product matrix must be a non-empty (M, N) array")
        object.__setattr__(self, "rows", rows.astype(np.uint8, copy=False))

    @classmethod
    def from_streams(cls, streams: Sequence[BitStream]) -> "ProductMatrix":
        lengths = {s.length for s in streams}
        if len(lengths) != 1:
            raise StreamShapeError(f"ragged product matrix, lengths {sorted(lengths)}")
        return cls(np.stack([s.bits for s in streams]))

    @property
    def M(self) -> int:
        return self.rows.shape[0]

    @property
    def N(self) -> int:
        return self.rows.shape[1]


MatrixLike = Union[ProductMatrix, np.ndarray, Sequence[BitStream]]


def _as_rows(sp: MatrixLike) -> np.ndarray:
    if isinstance(sp, ProductMatrix):
        return sp.rows
    if isinstance(sp, np.ndarray):
        return ProductMatrix(sp).rows
    return ProductMatrix.from_streams(list(sp)).rows


@dataclass(frozen=True, eq=False)
class FeedbackState:
    carry: np.ndarray

    @classmethod
    def zeros(cls, m: int) -> "FeedbackState":
        return cls(np.zeros(m, dtype=np.uint8))

    @classmethod
    def with_ones(cls, m: int, ones: int) -> "FeedbackState":
        return cls((np.arange(m) < ones).astype(np.uint8))

    @property
    def ones(self) -> int:
        return int(self.carry.sum())

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.carry.astype(np.int8)) <= 0))


def _sorted_desc(column, carry) -> np.ndarray:
    return np.sort(np.concatenate([np.asarray(column, dtype=np.uint8), carry]))[::-1]


# -- feature extraction ---------------------------------------------------

def fe_step(state: FeedbackState, column) -> tuple[int, FeedbackState]:
    m = len(column)
    if m % 2 == 0:
        raise ValueError("feature-extraction step needs an odd column width; pad with neutral noise")
    if state.carry.size != m:
        raise ValueError(f"feedback width {state.carry.size} does not match column width {m}")
    s = _sorted_desc(column, state.carry)
    half = (m + 1) // 2
    return int(s[half - 1]), FeedbackState(s[half:half + m].copy())


def pad_neutral(rows: np.ndarray) -> np.ndarray:
    """Append one neutral-noise row along axis -2 if the row count is even."""
    if rows.shape[-2] % 2:
        return rows
    noise = np.broadcast_to(neutral_noise_bits(rows.shape[-1]), rows.shape[:-2] + (1, rows.shape[-1]))
    return np.concatenate([rows, noise], axis=-2)


def fe_counts(counts: np.ndarray, m: int) -> np.ndarray:
    """Feature extraction in the count domain.

    ``counts[..., t]`` is the number of ones in column ``t`` of an odd ``m``-row
    matrix; returns output bits with the same shape.
    """
    counts = np.asarray(counts, dtype=np.int64)
    half = (m + 1) // 2
    carry = np.zeros(counts.shape[:-1], dtype=np.int64)
    out = np.empty(counts.shape, dtype=np.uint8)
    for t in range(counts.shape[-1]):
        total = carry + counts[..., t]
        out[..., t] = total >= half
        carry = np.clip(total - half, 0, m)
    return out


def fe_run_batch(sp: np.ndarray) -> np.ndarray:
    """``(..., M, N)`` product bits -> ``(..., N)`` output bits."""
    rows = pad_neutral(np.asarray(sp, dtype=np.uint8))
    return fe_counts(rows.sum(axis=-2, dtype=np.int64), rows.shape[-2])


def fe_run(sp: MatrixLike) -> BitStream:
    return BitStream(fe_run_batch(_as_rows(sp)))


def fe_reference(values) -> float:
    return float(np.clip(np.sum(values), -1.0, 1.0))


# -- average pooling ------------------------------------------------------

def pool_step(state: FeedbackState, column) -> tuple[int, FeedbackState]:
    m = len(column)
    if state.carry.size != m:
        raise ValueError(f"feedback width {state.carry.size} does not match column width {m}")
    s = _sorted_desc(column, state.carry)
    out = int(s[m - 1])
    carry = s[m:] if out else s[:m]
    return out, FeedbackState(carry.copy())


def pool_counts(counts: np.ndarray, m: int, return_carry: bool = False):
    counts = np.asarray(counts, dtype=np.int64)
    carry = np.zeros(counts.shape[:-1], dtype=np.int64)
    out = np.empty(counts.shape, dtype=np.uint8)
    for t in range(counts.shape[-1]):
        total = carry + counts[..., t]
        fired = total >= m
        out[..., t] = fired
        carry = total - m * fired
    return (out, carry) if return_carry else out


def pool_run_batch(sp: np.ndarray) -> np.ndarray:
    rows = np.asarray(sp, dtype=np.uint8)
    return pool_counts(rows.sum(axis=-2, dtype=np.int64), rows.shape[-2])


def pool_run(sp: MatrixLike) -> BitStream:
    return BitStream(pool_run_batch(_as_rows(sp)))


def pool_reference(values) -> float:
    return float(np.mean(values))


# -- categorization -------------------------------------------------------

def majority_chain_bits(bits: np.ndarray) -> np.ndarray:
    """Left-to-right MAJ3 chain over axis -2 of a ``(..., M, N)`` array."""
    x = np.asarray(bits, dtype=np.uint8)
    if x.shape[-2] == 1:
        return x[..., 0, :].copy()
    x = pad_neutral(x)
    a, b, c = x[..., 0, :], x[..., 1, :], x[..., 2, :]
    y = (a & b) | (a & c) | (b & c)
    for k in range(3, x.shape[-2], 2):
        a, b = x[..., k, :], x[..., k + 1, :]
        y = (y & a) | (y & b) | (a & b)
    return y


def majority_chain(streams: Sequence[BitStream]) -> BitStream:
    if not streams:
        raise ValueError("majority chain needs at least one input")
    return BitStream(majority_chain_bits(ProductMatrix.from_streams(list(streams)).rows))


def categorize_rank(outputs: Sequence[Union[BitStream, float]]) -> list[int]:
    """Class indices by decoded value, highest first; ties go to the lower index."""
    if len(outputs) == 0:
        raise ValueError("nothing to rank")
    values = [o if isinstance(o, (int, float, np.floating)) else decode_bits(o.bits) for o in outputs]
    if isinstance(outputs[0], BitStream) and len({o.length for o in outputs}) != 1:
        raise StreamShapeError("categorization outputs differ in length")
    return sorted(range(len(values)), key=lambda i: (-values[i], i))


# -- gate level -----------------------------------------------------------

def _neutral_noise_source(net: GateNetlist) -> int:
    """REG/NOT toggle emitting 1, 0, 1, ... from reset."""
    reg = net.add_reg("noise_state")
    noise = net.add(NOT, reg, name="neutral_noise")
    net.connect(reg, noise)
    return noise


def _fe_netlist(m: int) -> GateNetlist:
    net = GateNetlist()
    wires = [net.add_input(f"sp{j}") for j in range(m)]
    if m % 2 == 0:
        wires.append(_neutral_noise_source(net))
    width = len(wires)
    half = (width + 1) // 2
    regs = [net.add_reg(f"carry{i}") for i in range(width)]
    column = sort_wires(net, wires, DESCENDING)
    merged = merge_wires(net, column + regs[::-1], DESCENDING, first_run=DESCENDING)
    for i, reg in enumerate(regs):
        net.connect(reg, merged[half + i])
    net.outputs = [merged[half - 1]]
    return prune(net)


def _pool_netlist(m: int) -> GateNetlist:
    net = GateNetlist()
    wires = [net.add_input(f"sp{j}") for j in range(m)]
    regs = [net.add_reg(f"carry{i}") for i in range(m)]
    column = sort_wires(net, wires, DESCENDING)
    merged = merge_wires(net, column + regs[::-1], DESCENDING, first_run=DESCENDING)
    out = merged[m - 1]
    keep = net.add(NOT, out)
    # out=1 keeps merged[m+i]; out=0 keeps merged[i] (merged[m+i] is then 0)
    for i, reg in enumerate(regs):
        net.connect(reg, net.add(MAJ3, merged[i], keep, merged[m + i]))
    net.outputs = [out]
    return prune(net)


def _chain_netlist(m: int) -> GateNetlist:
    net = GateNetlist()
    wires = [net.add_input(f"x{j}") for j in range(m)]
    if m == 1:
        net.outputs = [wires[0]]
        return net
    if m % 2 == 0:
        wires.append(_neutral_noise_source(net))
    y = net.add(MAJ3, wires[0], wires[1], wires[2])
    for k in range(3, len(wires), 2):
        y = net.add(MAJ3, y, wires[k], wires[k + 1])
    net.outputs = [y]
    return net


def build_block_netlist(kind: Union[str, BlockKind], m: int) -> GateNetlist:
    kind = BlockKind.parse(kind)
    if m < 1:
        raise ValueError("block width must be at least 1")
    if kind is BlockKind.FEATURE_EXTRACTION:
        return _fe_netlist(m)
    if kind is BlockKind.AVG_POOL:
        return _pool_netlist(m)
    return _chain_netlist(m)


def simulate_block(net: GateNetlist, sp: np.ndarray) -> np.ndarray:
    """Run a block netlist over ``(M, N)`` or ``(B, M, N)`` product bits; returns ``(N,)`` / ``(B, N)``."""
    out = simulate(net, sp)
    return out[..., 0, :]


def run_behavioral(kind: Union[str, BlockKind], sp: np.ndarray) -> np.ndarray:
    kind = BlockKind.parse(kind)
    if kind is BlockKind.FEATURE_EXTRACTION:
        return fe_run_batch(sp)
    if kind is BlockKind.AVG_POOL:
        return pool_run_batch(sp)
    return majority_chain_bits(sp)
