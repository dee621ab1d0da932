"""Small end-to-end SC networks: conv/FC feature extraction, pooling, categorization.

A network is described by a :class:`NetworkSpec` (layer list) plus a
:class:`WeightFile`.  :func:`run_network` evaluates it in the stream domain and
:func:`float_forward` runs the float model the streams approximate: feature
layers compute ``clip(w.x + b, -1, 1)``, pooling the window mean, and the
categorization layer the raw inner product used for ranking.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .blocks import categorize_rank, fe_run_batch, majority_chain_bits, pool_run_batch
from .rng import build_rng_matrix
from .sc import DEFAULT_N_BITS, encode_bipolar_array

CONV = "conv"
AVGPOOL = "avgpool"
FC = "fc_feature"
CATEGORIZE = "fc_categorize"
LAYER_TYPES = (CONV, AVGPOOL, FC, CATEGORIZE)


class NetworkError(ValueError):
    """Malformed network description or weights."""


@dataclass
class LayerSpec:
    type: str
    name: str = ""
    out_channels: int = 0  # conv; fc/categorize: output count
    kernel: int = 1  # conv/avgpool window
    stride: int = 1

    def __post_init__(self):
        if self.type not in LAYER_TYPES:
            raise NetworkError(f"unknown layer type {self.type!r}")
        if self.kernel < 1 or self.stride < 1:
            raise NetworkError("kernel and stride must be positive")
        if self.type != AVGPOOL and self.out_channels < 1:
            raise NetworkError(f"layer {self.name or self.type} needs out_channels >= 1")

    @property
    def has_weights(self) -> bool:
        return self.type != AVGPOOL


@dataclass
class NetworkSpec:
    input_shape: tuple[int, int, int]  # (C, H, W)
    layers: list[LayerSpec]
    stream_length: int = 1024
    n_bits: int = DEFAULT_N_BITS

    def __post_init__(self):
        self.input_shape = tuple(int(v) for v in self.input_shape)
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise NetworkError("input_shape must be three positive ints (C, H, W)")
        if not self.layers:
            raise NetworkError("network has no layers")
        if any(layer.type == CATEGORIZE for layer in self.layers[:-1]):
            raise NetworkError("only the last layer may categorize")
        for i, layer in enumerate(self.layers):
            if not layer.name:
                layer.name = f"{layer.type}{i}"
        self.shapes()

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkSpec":
        try:
            layers = [LayerSpec(**layer) for layer in doc["layers"]]
            return cls(
                input_shape=doc["input_shape"],
                layers=layers,
                stream_length=int(doc.get("stream_length", 1024)),
                n_bits=int(doc.get("n_bits", DEFAULT_N_BITS)),
            )
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"bad network description: {exc}") from None

    @classmethod
    def load(cls, path: Union[str, Path]) -> "NetworkSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "stream_length": self.stream_length,
            "n_bits": self.n_bits,
            "layers": [
                {k: v for k, v in vars(layer).items() if not (k == "out_channels" and layer.type == AVGPOOL)}
                for layer in self.layers
            ],
        }

    def shapes(self) -> list[tuple[int, ...]]:
        """Activation shape after each layer."""
        shape = self.input_shape
        out = []
        for layer in self.layers:
            c, h, w = shape if len(shape) == 3 else (shape[0], 1, 1)
            if layer.type in (CONV, AVGPOOL):
                if len(shape) != 3:
                    raise NetworkError(f"{layer.name}: spatial layer after a flattening layer")
                h2 = (h - layer.kernel) // layer.stride + 1
                w2 = (w - layer.kernel) // layer.stride + 1
                if h2 < 1 or w2 < 1:
                    raise NetworkError(f"{layer.name}: window larger than its input")
                shape = (layer.out_channels if layer.type == CONV else c, h2, w2)
            else:
                shape = (layer.out_channels,)
            out.append(shape)
        return out

    def weight_shapes(self) -> dict[str, tuple[int, ...]]:
        shape = self.input_shape
        result = {}
        for layer, after in zip(self.layers, self.shapes()):
            if layer.type == CONV:
                result[layer.name] = (layer.out_channels, shape[0], layer.kernel, layer.kernel)
            elif layer.type in (FC, CATEGORIZE):
                result[layer.name] = (layer.out_channels, int(np.prod(shape)))
            shape = after
        return result


@dataclass
class LayerWeights:
    weight: np.ndarray
    bias: Optional[np.ndarray] = None


@dataclass
class WeightFile:
    layers: dict[str, LayerWeights] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "WeightFile":
        """``{"layers": [{"name", "shape", "values" (flat), "bias"}]}``; ``bias`` may be null."""
        layers = {}
        try:
            for entry in doc["layers"]:
                shape = tuple(int(v) for v in entry["shape"])
                values = np.asarray(entry["values"], dtype=float)
                if values.size != int(np.prod(shape)):
                    raise NetworkError(f"{entry['name']}: {values.size} values for shape {shape}")
                b = entry.get("bias")
                layers[entry["name"]] = LayerWeights(
                    values.reshape(shape), None if b is None else np.asarray(b, dtype=float)
                )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, NetworkError):
                raise
            raise NetworkError(f"bad weight file: {exc}") from None
        return cls(layers)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "WeightFile":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "layers": [
                {
                    "name": name,
                    "shape": list(lw.weight.shape),
                    "values": lw.weight.reshape(-1).tolist(),
                    "bias": None if lw.bias is None else lw.bias.tolist(),
                }
                for name, lw in self.layers.items()
            ]
        }

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    def check(self, spec: NetworkSpec) -> None:
        for name, shape in spec.weight_shapes().items():
            lw = self.layers.get(name)
            if lw is None:
                raise NetworkError(f"no weights for layer {name}")
            if lw.weight.shape != shape:
                raise NetworkError(f"{name}: weight shape {lw.weight.shape}, expected {shape}")
            if lw.bias is not None and lw.bias.shape != (shape[0],):
                raise NetworkError(f"{name}: bias shape {lw.bias.shape}, expected ({shape[0]},)")
            for arr in (lw.weight, lw.bias):
                if arr is not None and (not np.all(np.isfinite(arr)) or np.abs(arr).max(initial=0) > 1):
                    raise NetworkError(f"{name}: weights must lie in [-1, 1]")


def random_weights(spec: NetworkSpec, seed: int = 0, bias: bool = True) -> WeightFile:
    """Uniform weights scaled by ``1/sqrt(fan_in)`` so pre-activations stay mostly unclipped."""
    gen = np.random.default_rng(seed)
    layers = {}
    for name, shape in spec.weight_shapes().items():
        fan_in = int(np.prod(shape[1:]))
        scale = 1.0 / np.sqrt(fan_in)
        w = gen.uniform(-scale, scale, size=shape)
        b = gen.uniform(-scale, scale, size=shape[0]) if bias else None
        layers[name] = LayerWeights(w, b)
    return WeightFile(layers)


def _windows(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    """``(C, H, W, ...)`` -> ``(H', W', C, k, k, ...)``."""
    c, h, w = x.shape[:3]
    h2 = (h - k) // stride + 1
    w2 = (w - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(1, 2))  # (C, H-k+1, W-k+1, ..., k, k)
    win = win[:, ::stride, ::stride][:, :h2, :w2]
    win = np.moveaxis(win, (-2, -1), (1, 2))  # (C, k, k, H', W', ...)
    return np.moveaxis(win, (3, 4), (0, 1))


# -- float model ------------------------------------------------------------

def float_forward(spec: NetworkSpec, weights: WeightFile, x: np.ndarray) -> np.ndarray:
    """Class scores of the float model for one ``(C, H, W)`` input."""
    a = np.asarray(x, dtype=float)
    for layer in spec.layers:
        if layer.type == AVGPOOL:
            a = _windows(a, layer.kernel, layer.stride).mean(axis=(-2, -1)).transpose(2, 0, 1)
            continue
        lw = weights.layers[layer.name]
        if layer.type == CONV:
            win = _windows(a, layer.kernel, layer.stride)  # (H', W', C, k, k)
            z = np.einsum("hwcij,ocij->ohw", win, lw.weight)
            if lw.bias is not None:
                z += lw.bias[:, None, None]
        else:
            z = lw.weight @ a.reshape(-1)
            if lw.bias is not None:
                z = z + lw.bias
        a = z if layer.type == CATEGORIZE else np.clip(z, -1.0, 1.0)
    return a


# -- stream model -----------------------------------------------------------

class _WeightStreams:
    """Hard-wired weight SNGs drawing their random words from a bank of RNG matrices."""

    def __init__(self, n_weights: int, n_bits: int, seed: np.random.SeedSequence):
        size = n_bits
        per = 4 * size
        self.n_bits = n_bits
        self.n_matrices = -(-n_weights // per)
        seeds = seed.spawn(self.n_matrices)
        self.matrices = [build_rng_matrix(size, seed=s) for s in seeds]
        self.n_weights = n_weights

    def words(self, length: int) -> np.ndarray:
        """``(n_weights, length)`` random words; each matrix supplies ``4 * n_bits`` of them."""
        blocks = [m.words(length).T for m in self.matrices]
        return np.concatenate(blocks, axis=0)[: self.n_weights]


def _layer_codes(spec: NetworkSpec, weights: WeightFile):
    codes = []
    for layer in spec.layers:
        if not layer.has_weights:
            continue
        lw = weights.layers[layer.name]
        codes.append(encode_bipolar_array(lw.weight.reshape(-1), spec.n_bits))
        if lw.bias is not None:
            codes.append(encode_bipolar_array(lw.bias, spec.n_bits))
    return np.concatenate(codes) if codes else np.zeros(0, dtype=np.int64)


def _stream_layer(layer: LayerSpec, lw: Optional[LayerWeights], a: np.ndarray, wbits: dict) -> np.ndarray:
    n = a.shape[-1]
    if layer.type == AVGPOOL:
        win = _windows(a, layer.kernel, layer.stride)  # (H', W', C, k, k, N)
        h2, w2, c = win.shape[:3]
        rows = win.reshape(h2, w2, c, -1, n)
        return pool_run_batch(rows).transpose(2, 0, 1, 3)
    w = wbits[layer.name]["weight"]
    b = wbits[layer.name].get("bias")
    if layer.type == CONV:
        win = _windows(a, layer.kernel, layer.stride)  # (H', W', C, k, k, N)
        h2, w2 = win.shape[:2]
        o = w.shape[0]
        prod = 1 - (win[None] ^ w[:, None, None])  # (O, H', W', C, k, k, N)
        rows = prod.reshape(o, h2, w2, -1, n)
        if b is not None:
            rows = np.concatenate([rows, np.broadcast_to(b[:, None, None, None, :], (o, h2, w2, 1, n))], axis=-2)
        return fe_run_batch(rows)
    flat = a.reshape(-1, n)
    rows = 1 - (flat[None] ^ w)  # (O, D, N)
    if b is not None:
        rows = np.concatenate([rows, b[:, None, :]], axis=1)
    if layer.type == FC:
        return fe_run_batch(rows)
    return majority_chain_bits(rows)


@dataclass
class NetworkResult:
    sc_scores: np.ndarray  # (images, outputs) decoded last-layer values, flattened
    float_scores: np.ndarray
    sc_top: np.ndarray
    float_top: np.ndarray

    @property
    def agreement(self) -> float:
        return float(np.mean(self.sc_top == self.float_top))

    def to_dict(self) -> dict:
        return {
            "images": int(len(self.sc_top)),
            "top1_agreement": self.agreement,
            "sc_top": self.sc_top.tolist(),
            "float_top": self.float_top.tolist(),
            "sc_scores": self.sc_scores.tolist(),
            "float_scores": self.float_scores.tolist(),
        }


def _run_image(spec, weights, img, codes, n, input_ss, weight_ss) -> np.ndarray:
    bank = _WeightStreams(len(codes), spec.n_bits, weight_ss)
    wb = (bank.words(n) < codes[:, None]).astype(np.uint8)
    wbits, pos = {}, 0
    for layer in spec.layers:
        if not layer.has_weights:
            continue
        lw = weights.layers[layer.name]
        size = lw.weight.size
        entry = {"weight": wb[pos:pos + size].reshape(lw.weight.shape + (n,))}
        pos += size
        if lw.bias is not None:
            entry["bias"] = wb[pos:pos + lw.bias.size]
            pos += lw.bias.size
        wbits[layer.name] = entry
    gen = np.random.Generator(np.random.PCG64(input_ss))
    in_codes = encode_bipolar_array(img, spec.n_bits)
    words = gen.integers(0, 1 << spec.n_bits, size=img.shape + (n,), dtype=np.uint16)
    a = (words < in_codes[..., None]).astype(np.uint8)
    for layer in spec.layers:
        a = _stream_layer(layer, weights.layers.get(layer.name), a, wbits)
    return (2.0 * a.mean(axis=-1) - 1.0).reshape(-1)


def worker_count() -> int:
    """Worker cap from ``AQFP_SC_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("AQFP_SC_THREADS", "1")))
    except ValueError:
        return 1


def run_network(
    spec: NetworkSpec,
    weights: WeightFile,
    inputs: np.ndarray,
    seed: int = 0,
    stream_length: Optional[int] = None,
) -> NetworkResult:
    """Evaluate ``(images, C, H, W)`` inputs in both domains.

    Inputs get software SNGs with independent words; weights get hard-wired
    SNGs fed from RNG matrices.  Image ``i`` draws from its own sub-seed of
    ``seed``, so results do not depend on ``AQFP_SC_THREADS``.
    """
    weights.check(spec)
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 3:
        x = x[None]
    if x.shape[1:] != spec.input_shape:
        raise NetworkError(f"input shape {x.shape[1:]}, expected {spec.input_shape}")
    if np.abs(x).max(initial=0) > 1:
        raise NetworkError("inputs must lie in [-1, 1]")
    n = stream_length or spec.stream_length
    codes = _layer_codes(spec, weights)

    def one(i: int) -> np.ndarray:
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        input_ss, weight_ss = ss.spawn(2)
        return _run_image(spec, weights, x[i], codes, n, input_ss, weight_ss)

    workers = worker_count()
    if workers == 1:
        sc_scores = [one(i) for i in range(len(x))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sc_scores = list(pool.map(one, range(len(x))))
    float_scores = [float_forward(spec, weights, img).reshape(-1) for img in x]
    sc = np.array(sc_scores)
    fl = np.array(float_scores)
    return NetworkResult(
        sc_scores=sc,
        float_scores=fl,
        sc_top=np.array([categorize_rank(list(s))[0] for s in sc]),
        float_top=np.array([categorize_rank(list(f))[0] for f in fl]),
    )


def demo_network(stream_length: int = 1024) -> NetworkSpec:
    """Conv 3x3 (4 maps) -> 2x2 average pool -> categorization over 10 classes on 1x8x8 inputs."""
    return NetworkSpec(
        input_shape=(1, 8, 8),
        layers=[
            LayerSpec(CONV, "conv1", out_channels=4, kernel=3),
            LayerSpec(AVGPOOL, "pool1", kernel=2, stride=2),
            LayerSpec(CATEGORIZE, "fc_out", out_channels=10),
        ],
        stream_length=stream_length,
    )


def synthetic_inputs(spec: NetworkSpec, count: int, seed: int = 0) -> np.ndarray:
    gen = np.random.default_rng(seed)
    return gen.uniform(-1.0, 1.0, size=(count,) + spec.input_shape)
