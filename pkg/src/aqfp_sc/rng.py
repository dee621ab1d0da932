"""True-RNG unit model and the shared N x N RNG matrix.

Thermal noise is stood in for by a seeded PCG64 stream.  The matrix exposes
``4N`` words per cycle: rows, columns, wrapped diagonals and wrapped
anti-diagonals of the cell grid.  Every cell belongs to exactly four lines and,
for odd ``N``, two distinct lines share at most one cell.
"""
from __future__ import annotations

import itertools
from typing import Optional

import numpy as np

JJ_PER_UNIT = 2

ROW, COLUMN, DIAGONAL, ANTI_DIAGONAL = "row", "column", "diagonal", "anti_diagonal"
FAMILIES = (ROW, COLUMN, DIAGONAL, ANTI_DIAGONAL)


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.default_rng(seed)


class UnitRng:
    """One AQFP buffer with zero input current: emits an unbiased bit per cycle."""

    def __init__(self, seed=0, force: Optional[int] = None):
        self._gen = _generator(seed)
        self.force = force

    def step(self) -> int:
        bit = int(self._gen.integers(0, 2))
        return bit if self.force is None else int(self.force)

    def steps(self, count: int) -> np.ndarray:
        bits = self._gen.integers(0, 2, size=count, dtype=np.uint8)
        if self.force is not None:
            bits[:] = self.force
        return bits


def unit_rng_step(state: UnitRng) -> int:
    return state.step()


def _layout(n: int) -> tuple[np.ndarray, list[str]]:
    lines, families = [], []
    for r in range(n):
        lines.append([(r, c) for c in range(n)])
        families.append(ROW)
    for c in range(n):
        lines.append([(r, c) for r in range(n)])
        families.append(COLUMN)
    for d in range(n):
        lines.append([(i, (i + d) % n) for i in range(n)])
        families.append(DIAGONAL)
    for d in range(n):
        lines.append([(i, (d - i) % n) for i in range(n)])
        families.append(ANTI_DIAGONAL)
    return np.array(lines, dtype=np.int64), families


class RngMatrix:
    """N x N grid of unit RNGs feeding 4N N-bit words.

    ``lines[k]`` lists the ``(row, col)`` cells of word ``k``; the first cell
    is the most significant bit.  One call to :meth:`step` advances every cell
    exactly once.  ``force`` pins every cell to a constant (test hook).
    """

    def __init__(self, size: int, seed=0, force: Optional[int] = None):
        if size < 1:
            raise ValueError("RNG matrix size must be at least 1")
        self.size = size
        self.lines, self.families = _layout(size)
        self.force = force
        self._gen = _generator(seed)
        self._flat = self.lines[..., 0] * size + self.lines[..., 1]
        self._weights = 1 << np.arange(size - 1, -1, -1, dtype=np.int64) if size < 63 else None

    @property
    def n_words(self) -> int:
        return 4 * self.size

    @property
    def jj_count(self) -> int:
        return JJ_PER_UNIT * self.size * self.size

    def cells_of(self, k: int) -> list[tuple[int, int]]:
        if not 0 <= k < self.n_words:
            raise IndexError(f"line {k} out of range for {self.n_words} lines")
        return [tuple(map(int, cell)) for cell in self.lines[k]]

    def step_bits(self, steps: int = 1) -> np.ndarray:
        """Cell outputs for ``steps`` cycles, shape ``(steps, N, N)``."""
        n = self.size
        bits = self._gen.integers(0, 2, size=(steps, n, n), dtype=np.uint8)
        if self.force is not None:
            bits[:] = self.force
        return bits

    def word_bits(self, steps: int = 1) -> np.ndarray:
        """Per-word bit vectors, shape ``(steps, 4N, N)``, MSB first."""
        flat = self.step_bits(steps).reshape(steps, -1)
        return flat[:, self._flat]

    def words(self, steps: int = 1) -> np.ndarray:
        """Word values for ``steps`` cycles, shape ``(steps, 4N)``."""
        if self._weights is None:
            raise ValueError("vectorised words need size < 63; use step()")
        return self.word_bits(steps).astype(np.int64) @ self._weights

    def step(self) -> list[int]:
        out = []
        for vec in self.word_bits(1)[0]:
            word = 0
            for b in vec:
                word = (word << 1) | int(b)
            out.append(word)
        return out


def build_rng_matrix(size: int, seed=0, force: Optional[int] = None) -> RngMatrix:
    return RngMatrix(size, seed=seed, force=force)


def matrix_step(m: RngMatrix) -> list[int]:
    return m.step()


def line_overlap(m: RngMatrix, i: int, j: int) -> int:
    if i == j:
        raise ValueError("overlap is defined for distinct lines")
    a = set(m.cells_of(i))
    b = set(m.cells_of(j))
    return len(a & b)


def max_pairwise_overlap(m: RngMatrix) -> int:
    return max(
        (line_overlap(m, i, j) for i, j in itertools.combinations(range(m.n_words), 2)),
        default=0,
    )


def cell_line_counts(m: RngMatrix) -> np.ndarray:
    counts = np.zeros((m.size, m.size), dtype=np.int64)
    for line in m.lines:
        for r, c in line:
            counts[r, c] += 1
    return counts
