"""Monte Carlo accuracy tables and RNG-matrix diagnostics.

Every trial draws its values and random words from its own generator, seeded
from ``(master seed, block, M, N, trial)``, so any cell can be recomputed in
isolation and results do not depend on worker count or order.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .blocks import BlockKind, categorize_rank, fe_counts, majority_chain_bits, pool_counts
from .network import worker_count
from .rng import build_rng_matrix, cell_line_counts, max_pairwise_overlap
from .sc import DEFAULT_N_BITS, encode_bipolar_array, neutral_noise_bits

log = logging.getLogger(__name__)

DEFAULT_LENGTHS = (128, 256, 512, 1024, 2048)
DEFAULT_SIZES = {
    BlockKind.FEATURE_EXTRACTION: (9, 25, 49, 81, 121),
    BlockKind.AVG_POOL: (4, 9, 16, 25, 36),
    BlockKind.CATEGORIZATION: (100, 200, 500, 800),
}
# reported cells used for the reproduction checks
REPORTED_TABLES = {
    BlockKind.FEATURE_EXTRACTION: {
        9: (0.1131, 0.0847, 0.0676, 0.0573, 0.0511),
        25: (0.1278, 0.0896, 0.0674, 0.0536, 0.0434),
        49: (0.1267, 0.0954, 0.0705, 0.0528, 0.0468),
        81: (0.129, 0.0937, 0.0685, 0.0531, 0.0396),
        121: (0.1359, 0.0942, 0.0654, 0.0513, 0.0374),
    },
    BlockKind.AVG_POOL: {
        4: (0.0249, 0.0163, 0.0115, 0.0085, 0.0058),
        9: (0.0173, 0.0112, 0.0079, 0.0055, 0.0039),
        16: (0.0141, 0.0089, 0.0061, 0.0042, 0.0030),
        25: (0.0122, 0.0078, 0.0049, 0.0033, 0.0024),
        36: (0.0105, 0.0065, 0.0043, 0.0029, 0.0019),
    },
    # percent
    BlockKind.CATEGORIZATION: {
        100: (0.3718, 0.2198, 0.1235, 0.0620, 0.0376),
        200: (0.2708, 0.2106, 0.1671, 0.0743, 0.0301),
        500: (0.2769, 0.2374, 0.1201, 0.0687, 0.0393),
        800: (0.2780, 0.1641, 0.1269, 0.0585, 0.0339),
    },
}
_KIND_CODE = {BlockKind.FEATURE_EXTRACTION: 1, BlockKind.AVG_POOL: 2, BlockKind.CATEGORIZATION: 3}


def reported_value(kind: BlockKind, m: int, n: int) -> Optional[float]:
    row = REPORTED_TABLES[kind].get(m)
    if row is None or n not in DEFAULT_LENGTHS:
        return None
    return row[DEFAULT_LENGTHS.index(n)]


@dataclass
class ExperimentConfig:
    kind: BlockKind
    sizes: list[int]
    lengths: list[int] = field(default_factory=lambda: list(DEFAULT_LENGTHS))
    trials: int = 1000
    seed: int = 0
    n_bits: int = DEFAULT_N_BITS
    outputs: int = 10  # categorization classes

    def __post_init__(self):
        self.kind = BlockKind.parse(self.kind)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("sizes must be positive")
        if not self.lengths or min(self.lengths) < 1:
            raise ValueError("stream lengths must be positive")
        if self.kind is BlockKind.CATEGORIZATION and self.outputs < 2:
            raise ValueError("categorization needs at least two outputs")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        kind = BlockKind.parse(doc["kind"])
        allowed = {"sizes", "lengths", "trials", "seed", "n_bits", "outputs"}
        unknown = set(doc) - allowed - {"kind", "distribution"}
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        if doc.get("distribution", "uniform") != "uniform":
            raise ValueError("only the uniform[-1, 1] value distribution is supported")
        kwargs = {k: doc[k] for k in allowed if k in doc}
        kwargs.setdefault("sizes", list(DEFAULT_SIZES[kind]))
        return cls(kind=kind, **kwargs)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["kind"] = self.kind.value
        doc["distribution"] = "uniform"
        return doc


def trial_generator(seed: int, kind: BlockKind, m: int, n: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_KIND_CODE[kind], m, n, trial))
    return np.random.Generator(np.random.PCG64(ss))


def _column_counts(gen: np.random.Generator, values: np.ndarray, n: int, n_bits: int) -> np.ndarray:
    codes = encode_bipolar_array(values, n_bits)
    words = gen.integers(0, 1 << n_bits, size=values.shape + (n,), dtype=np.uint16)
    return (words < codes[..., None]).sum(axis=-2, dtype=np.int64)


@dataclass
class CellResult:
    kind: str
    M: int
    N: int
    trials: int
    value: float
    agreement: Optional[float] = None
    reported: Optional[float] = None


def run_cell(cfg: ExperimentConfig, m: int, n: int) -> CellResult:
    kind = cfg.kind
    if kind is BlockKind.CATEGORIZATION:
        return _categorization_cell(cfg, m, n)
    counts = np.empty((cfg.trials, n), dtype=np.int64)
    refs = np.empty(cfg.trials)
    width = m
    if kind is BlockKind.FEATURE_EXTRACTION and m % 2 == 0:
        width = m + 1
    noise = neutral_noise_bits(n).astype(np.int64)
    for t in range(cfg.trials):
        gen = trial_generator(cfg.seed, kind, m, n, t)
        values = gen.uniform(-1.0, 1.0, size=m)
        counts[t] = _column_counts(gen, values, n, cfg.n_bits)
        if width != m:
            counts[t] += noise
        refs[t] = np.clip(values.sum(), -1, 1) if kind is BlockKind.FEATURE_EXTRACTION else values.mean()
    if kind is BlockKind.FEATURE_EXTRACTION:
        out = fe_counts(counts, width)
    else:
        out = pool_counts(counts, m)
    decoded = 2.0 * out.mean(axis=1) - 1.0
    err = float(np.mean(np.abs(decoded - refs)))
    return CellResult(kind.value, m, n, cfg.trials, err, reported=reported_value(kind, m, n))


def relative_margin(scores: np.ndarray) -> float:
    """``(top1 - top2) / |top1|`` of a score vector."""
    top = np.sort(scores)[::-1]
    return float((top[0] - top[1]) / abs(top[0])) if top[0] != 0 else float("inf")


def _categorization_cell(cfg: ExperimentConfig, m: int, n: int) -> CellResult:
    worst = 0.0
    agree = 0
    for t in range(cfg.trials):
        gen = trial_generator(cfg.seed, cfg.kind, m, n, t)
        values = gen.uniform(-1.0, 1.0, size=(cfg.outputs, m))
        codes = encode_bipolar_array(values, cfg.n_bits)
        words = gen.integers(0, 1 << cfg.n_bits, size=values.shape + (n,), dtype=np.uint16)
        bits = (words < codes[..., None]).astype(np.uint8)
        sc = 2.0 * majority_chain_bits(bits).mean(axis=-1) - 1.0
        ref = values.sum(axis=1)
        sc_top = categorize_rank(list(sc))[0]
        ref_top = categorize_rank(list(ref))[0]
        if sc_top == ref_top:
            agree += 1
        else:
            worst = max(worst, relative_margin(ref))
    return CellResult(
        cfg.kind.value, m, n, cfg.trials, 100.0 * worst,
        agreement=agree / cfg.trials, reported=reported_value(cfg.kind, m, n),
    )


def run_accuracy_table(cfg: ExperimentConfig, workers: Optional[int] = None) -> list[CellResult]:
    """All ``(M, N)`` cells, sorted by ``(M, N)``.

    FE/pool cells hold the mean absolute error against the float reference;
    categorization cells hold the largest float relative margin (in percent)
    among trials whose SC top-1 differs from the float top-1.
    """
    cells = sorted(itertools.product(cfg.sizes, cfg.lengths))
    workers = workers or worker_count()
    if workers == 1:
        results = [run_cell(cfg, m, n) for m, n in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda mn: run_cell(cfg, *mn), cells))
    return sorted(results, key=lambda r: (r.M, r.N))


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else format(v, ".6g")


def table_csv(results: Sequence[CellResult]) -> str:
    """Wide layout: one row per input size, one column per stream length."""
    lengths = sorted({r.N for r in results})
    by = {(r.M, r.N): r for r in results}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M"] + [str(n) for n in lengths])
    for m in sorted({r.M for r in results}):
        w.writerow([m] + [_fmt(by[(m, n)].value) if (m, n) in by else "" for n in lengths])
    return buf.getvalue()


def cells_csv(results: Sequence[CellResult]) -> str:
    """Long layout with the trial count, top-1 agreement and reported value per cell."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["block", "M", "N", "trials", "value", "agreement", "reported"])
    for r in results:
        w.writerow([r.kind, r.M, r.N, r.trials, _fmt(r.value), _fmt(r.agreement), _fmt(r.reported)])
    return buf.getvalue()


# -- RNG matrix diagnostics ----------------------------------------------

@dataclass
class RngDiagnostics:
    size: int
    cycles: int
    bias: np.ndarray  # per word: fraction of ones over all its bits
    cell_bias: np.ndarray
    word_mean: np.ndarray  # per word: mean integer value
    bit_correlation: np.ndarray  # (4N, 4N), position-aligned bit streams
    value_correlation: np.ndarray  # (4N, 4N), integer word values
    max_overlap: int
    cells_per_line_ok: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def max_bit_correlation(self) -> float:
        c = np.abs(self.bit_correlation.copy())
        np.fill_diagonal(c, 0.0)
        return float(c.max()) if c.size > 1 else 0.0

    @property
    def max_value_correlation(self) -> float:
        c = np.abs(self.value_correlation.copy())
        np.fill_diagonal(c, 0.0)
        return float(c.max()) if c.size > 1 else 0.0


def _corr(x: np.ndarray) -> np.ndarray:
    x = x - x.mean(axis=1, keepdims=True)
    norms = np.sqrt((x * x).sum(axis=1))
    norms[norms == 0] = 1.0
    return (x @ x.T) / np.outer(norms, norms)


def rng_diagnostics(size: int, cycles: int, seed: int = 0, chunk: int = 20_000) -> RngDiagnostics:
    """Per-word bias, pairwise correlations and the layout overlap summary.

    Bit correlation aligns the two words bit position by bit position, so a
    pair sharing one cell in the same position correlates at about ``1/N``.
    """
    m = build_rng_matrix(size, seed=seed)
    warnings = []
    if size == 1:
        warnings.append("size 1 matrix is degenerate: all four words are the same cell")
    elif size % 2 == 0:
        warnings.append("even size: lines may share two cells, correlation bound is relaxed")
    k = m.n_words
    ones = np.zeros(k)
    cell_ones = np.zeros((size, size))
    value_sum = np.zeros(k)
    if size >= 63:
        raise ValueError("diagnostics need size < 63")
    weights = 1 << np.arange(size - 1, -1, -1, dtype=np.int64)
    bit_chunks, value_chunks = [], []
    done = 0
    while done < cycles:
        step = min(chunk, cycles - done)
        cells = m.step_bits(step)  # (step, N, N)
        cell_ones += cells.sum(axis=0)
        wb = cells.reshape(step, -1)[:, m._flat]  # (step, 4N, N)
        ones += wb.sum(axis=(0, 2))
        values = wb.astype(np.int64) @ weights  # (step, 4N)
        value_sum += values.sum(axis=0)
        bit_chunks.append(wb.transpose(1, 0, 2).reshape(k, -1).astype(np.float32))
        value_chunks.append(values.T.astype(np.float64))
        done += step
    bits = np.concatenate(bit_chunks, axis=1)
    values = np.concatenate(value_chunks, axis=1)
    for w in warnings:
        log.warning(w)
    return RngDiagnostics(
        size=size,
        cycles=cycles,
        bias=ones / (cycles * size),
        cell_bias=cell_ones / cycles,
        word_mean=value_sum / cycles,
        bit_correlation=_corr(bits),
        value_correlation=_corr(values),
        max_overlap=max_pairwise_overlap(m) if size > 1 else 1,
        cells_per_line_ok=bool(np.all(cell_line_counts(m) == 4)),
        warnings=warnings,
    )


def rng_diagnostics_csv(d: RngDiagnostics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["word", "bias", "mean_value", "max_bit_correlation", "max_value_correlation"])
    bc = np.abs(d.bit_correlation.copy())
    vc = np.abs(d.value_correlation.copy())
    np.fill_diagonal(bc, 0.0)
    np.fill_diagonal(vc, 0.0)
    for i in range(len(d.bias)):
        w.writerow([i, _fmt(d.bias[i]), _fmt(d.word_mean[i]), _fmt(bc[i].max()), _fmt(vc[i].max())])
    w.writerow(["summary", "", "", _fmt(d.max_bit_correlation), _fmt(d.max_value_correlation)])
    w.writerow(["max_overlap", d.max_overlap, "", "", ""])
    w.writerow(["cells_in_four_lines", int(d.cells_per_line_ok), "", "", ""])
    return buf.getvalue()


def load_config(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text())
