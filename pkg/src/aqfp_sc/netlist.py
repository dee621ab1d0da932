"""Gate-level netlists and their bit-parallel evaluation.

Signals are evaluated as Python integers with one bit per pattern (or per
instance), so a single pass over the topological order evaluates thousands of
input vectors at once.  ``REG`` nodes are the only legal way to close a loop:
they output their state and latch their input at the end of each cycle.
"""
from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

INPUT, OUTPUT = "INPUT", "OUTPUT"
AND2, OR2, MAJ3, NOT, BUF = "AND2", "OR2", "MAJ3", "NOT", "BUF"
CONST0, CONST1, SPLIT, REG, RNG = "CONST0", "CONST1", "SPLIT", "REG", "RNG"

ARITY = {
    INPUT: 0, RNG: 0, CONST0: 0, CONST1: 0,
    AND2: 2, OR2: 2, MAJ3: 3,
    NOT: 1, BUF: 1, SPLIT: 1, REG: 1, OUTPUT: 1,
}
KINDS = frozenset(ARITY)
SOURCES = frozenset({INPUT, RNG})
CONSTANTS = frozenset({CONST0, CONST1})
# kinds that occupy a clock phase on a combinational path
LOGIC = frozenset({AND2, OR2, MAJ3, NOT, BUF, SPLIT})

FORMAT_TAG = "aqfp-sc-netlist"


class StructureError(ValueError):
    """Malformed netlist: bad arity, dangling reference, or a loop without a REG."""


@dataclass
class Node:
    id: int
    kind: str
    inputs: tuple[int, ...] = ()
    name: Optional[str] = None


@dataclass
class GateNetlist:
    nodes: list[Node] = field(default_factory=list)
    inputs: list[int] = field(default_factory=list)
    outputs: list[int] = field(default_factory=list)

    # -- construction -----------------------------------------------------
    def add(self, kind: str, *inputs: int, name: Optional[str] = None) -> int:
        if kind not in KINDS:
            raise StructureError(f"unknown node kind {kind!r}")
        if kind != REG and len(inputs) != ARITY[kind]:
            raise StructureError(f"{kind} takes {ARITY[kind]} inputs, got {len(inputs)}")
        nid = len(self.nodes)
        self.nodes.append(Node(nid, kind, tuple(inputs), name))
        if kind in SOURCES:
            self.inputs.append(nid)
        return nid

    def add_input(self, name: Optional[str] = None) -> int:
        return self.add(INPUT, name=name)

    def const(self, value: int) -> int:
        return self.add(CONST1 if value else CONST0)

    def add_reg(self, name: Optional[str] = None) -> int:
        """REG with its data input left open; close it with :meth:`connect`."""
        nid = len(self.nodes)
        self.nodes.append(Node(nid, REG, (), name))
        return nid

    def connect(self, reg: int, source: int) -> None:
        node = self.nodes[reg]
        if node.kind != REG:
            raise StructureError("only REG inputs can be connected after creation")
        node.inputs = (source,)

    # -- queries ----------------------------------------------------------
    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def regs(self) -> list[int]:
        return [n.id for n in self.nodes if n.kind == REG]

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    def is_sequential(self) -> bool:
        return any(n.kind == REG for n in self.nodes)

    def sinks(self) -> dict[int, list[tuple[object, int]]]:
        """Map node id -> list of ``(sink, slot)``; primary outputs appear as ``("OUT", k)``."""
        result: dict[int, list[tuple[object, int]]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for slot, src in enumerate(n.inputs):
                result[src].append((n.id, slot))
        for k, out in enumerate(self.outputs):
            result[out].append(("OUT", k))
        return result

    def fanout(self) -> dict[int, int]:
        return {nid: len(s) for nid, s in self.sinks().items()}

    def validate(self) -> None:
        n = len(self.nodes)
        for node in self.nodes:
            if node.kind not in KINDS:
                raise StructureError(f"node {node.id}: unknown kind {node.kind!r}")
            if len(node.inputs) != ARITY[node.kind]:
                raise StructureError(
                    f"node {node.id} ({node.kind}) has {len(node.inputs)} inputs, expected {ARITY[node.kind]}"
                )
            for src in node.inputs:
                if not 0 <= src < n:
                    raise StructureError(f"node {node.id} references missing node {src}")
        for out in self.outputs:
            if not 0 <= out < n:
                raise StructureError(f"output references missing node {out}")
        self.topo_order()

    def topo_order(self) -> list[int]:
        """Combinational evaluation order; REG outputs count as sources."""
        indeg = [0] * len(self.nodes)
        succ: list[list[int]] = [[] for _ in self.nodes]
        for node in self.nodes:
            if node.kind == REG:
                continue
            for src in node.inputs:
                indeg[node.id] += 1
                succ[src].append(node.id)
        queue = deque(i for i, d in enumerate(indeg) if d == 0)
        order = []
        while queue:
            i = queue.popleft()
            order.append(i)
            for j in succ[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    queue.append(j)
        if len(order) != len(self.nodes):
            stuck = [i for i, d in enumerate(indeg) if d > 0]
            raise StructureError(f"combinational cycle through nodes {stuck[:8]}")
        return order

    def copy(self) -> "GateNetlist":
        return GateNetlist(
            [Node(n.id, n.kind, n.inputs, n.name) for n in self.nodes],
            list(self.inputs),
            list(self.outputs),
        )

    # -- serialization ----------------------------------------------------
    def to_dict(self, phase: Optional[Sequence[int]] = None) -> dict:
        doc = {
            "format": FORMAT_TAG,
            "version": 1,
            "nodes": [
                {"id": n.id, "kind": n.kind, "inputs": list(n.inputs), **({"name": n.name} if n.name else {})}
                for n in self.nodes
            ],
            "edges": [[src, n.id, slot] for n in self.nodes for slot, src in enumerate(n.inputs)],
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
        }
        if phase is not None:
            doc["phase"] = [int(p) for p in phase]
        return doc

    def to_json(self, phase: Optional[Sequence[int]] = None, **kwargs) -> str:
        return json.dumps(self.to_dict(phase), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "GateNetlist":
        if doc.get("format", FORMAT_TAG) != FORMAT_TAG:
            raise StructureError(f"not an {FORMAT_TAG} document")
        raw = sorted(doc["nodes"], key=lambda d: d["id"])
        if [d["id"] for d in raw] != list(range(len(raw))):
            raise StructureError("node ids must be 0..n-1")
        nodes = [Node(d["id"], d["kind"], tuple(d.get("inputs", ())), d.get("name")) for d in raw]
        if "edges" in doc:
            wired: dict[int, dict[int, int]] = {}
            for src, dst, slot in doc["edges"]:
                wired.setdefault(dst, {})[slot] = src
            for node in nodes:
                got = wired.get(node.id, {})
                if not node.inputs and got:
                    node.inputs = tuple(got[s] for s in sorted(got))
                elif got and tuple(got[s] for s in sorted(got)) != node.inputs:
                    raise StructureError(f"edges disagree with inputs of node {node.id}")
        net = cls(nodes, list(doc.get("inputs", [n.id for n in nodes if n.kind in SOURCES])), list(doc["outputs"]))
        net.validate()
        return net

    @classmethod
    def from_json(cls, text: str) -> "GateNetlist":
        return cls.from_dict(json.loads(text))


# -- structural statistics ------------------------------------------------

def levels(net: GateNetlist) -> list[int]:
    """Per-node logic depth: number of phase-occupying nodes on the longest path."""
    lvl = [0] * len(net.nodes)
    for i in net.topo_order():
        node = net.nodes[i]
        if node.kind in SOURCES or node.kind in CONSTANTS or node.kind == REG:
            continue
        base = max((lvl[s] for s in node.inputs), default=0)
        lvl[i] = base + (1 if node.kind in LOGIC else 0)
    return lvl


def net_stats(net: GateNetlist) -> dict:
    counts = Counter(n.kind for n in net.nodes if n.kind not in SOURCES and n.kind != OUTPUT)
    lvl = levels(net)
    sinks = set(net.outputs) | {n.inputs[0] for n in net.nodes if n.kind == REG and n.inputs}
    depth = max((lvl[s] for s in sinks), default=0)
    return {"gate_count": dict(sorted(counts.items())), "levels": depth}


def prune(net: GateNetlist) -> GateNetlist:
    """Drop nodes that reach neither an output nor a live REG; renumber compactly."""
    live: set[int] = set()
    stack = list(net.outputs)
    while stack:
        i = stack.pop()
        if i in live:
            continue
        live.add(i)
        stack.extend(net.nodes[i].inputs)
    order = sorted(live | set(net.inputs))
    remap = {old: new for new, old in enumerate(order)}
    out = GateNetlist()
    for old in order:
        node = net.nodes[old]
        out.nodes.append(Node(remap[old], node.kind, tuple(remap[s] for s in node.inputs), node.name))
    out.inputs = [remap[i] for i in net.inputs]
    out.outputs = [remap[o] for o in net.outputs]
    return out


# -- evaluation -----------------------------------------------------------

def pack_rows(bits: np.ndarray) -> list[int]:
    """``(k, B)`` 0/1 array -> k Python ints with bit ``b`` = column ``b``."""
    arr = np.ascontiguousarray(np.asarray(bits, dtype=np.uint8))
    if arr.ndim == 1:
        arr = arr[:, None]
    packed = np.packbits(arr, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def unpack_rows(words: Sequence[int], width: int) -> np.ndarray:
    nbytes = (width + 7) // 8
    buf = b"".join(int(w).to_bytes(nbytes, "little") for w in words)
    arr = np.frombuffer(buf, dtype=np.uint8).reshape(len(words), nbytes)
    return np.unpackbits(arr, axis=1, bitorder="little")[:, :width]


class CompiledNet:
    """Topologically ordered program for repeated evaluation of one netlist."""

    def __init__(self, net: GateNetlist):
        net.validate()
        self.net = net
        self.order = [i for i in net.topo_order()]
        self.nodes = net.nodes
        self.input_index = {nid: k for k, nid in enumerate(net.inputs)}
        self.regs = net.regs

    def step(self, inputs: Sequence[int], state: Sequence[int], mask: int) -> tuple[list[int], list[int]]:
        """Evaluate one cycle.  Returns (outputs, next REG state)."""
        val = [0] * len(self.nodes)
        for r, s in zip(self.regs, state):
            val[r] = s
        nodes = self.nodes
        for i in self.order:
            node = nodes[i]
            kind = node.kind
            ins = node.inputs
            if kind == AND2:
                val[i] = val[ins[0]] & val[ins[1]]
            elif kind == OR2:
                val[i] = val[ins[0]] | val[ins[1]]
            elif kind == MAJ3:
                a, b, c = val[ins[0]], val[ins[1]], val[ins[2]]
                val[i] = (a & b) | (a & c) | (b & c)
            elif kind == NOT:
                val[i] = val[ins[0]] ^ mask
            elif kind in (BUF, SPLIT, OUTPUT):
                val[i] = val[ins[0]]
            elif kind in SOURCES:
                val[i] = inputs[self.input_index[i]]
            elif kind == CONST1:
                val[i] = mask
            elif kind == CONST0:
                val[i] = 0
            # REG: value preset from state
        outs = [val[o] for o in self.net.outputs]
        nxt = [val[nodes[r].inputs[0]] for r in self.regs]
        return outs, nxt


def eval_packed(net: GateNetlist, inputs: Sequence[int], width: int) -> list[int]:
    """Evaluate a combinational net on ``width`` packed patterns."""
    if net.is_sequential():
        raise StructureError("net contains REG nodes; use simulate()")
    if len(inputs) != net.n_inputs:
        raise ValueError(f"expected {net.n_inputs} inputs, got {len(inputs)}")
    outs, _ = CompiledNet(net).step(list(inputs), [], (1 << width) - 1)
    return outs


def eval_combinational(net: GateNetlist, inputs: Sequence[int]) -> list[int]:
    """Evaluate one input vector; returns the output bits."""
    return [int(v) for v in eval_packed(net, [int(b) & 1 for b in inputs], 1)]


def evaluate_batch(net: GateNetlist, inputs: np.ndarray) -> np.ndarray:
    """``(n_inputs, B)`` 0/1 array -> ``(n_outputs, B)`` array."""
    arr = np.asarray(inputs, dtype=np.uint8)
    width = arr.shape[1]
    return unpack_rows(eval_packed(net, pack_rows(arr), width), width)


def exhaustive_inputs(n: int) -> list[int]:
    """Packed inputs enumerating all ``2**n`` patterns; pattern ``p`` sets input ``i`` to bit ``i`` of ``p``."""
    patterns = np.arange(1 << n, dtype=np.int64)
    rows = ((patterns[None, :] >> np.arange(n)[:, None]) & 1).astype(np.uint8)
    return pack_rows(rows) if n else []


def exhaustive_patterns(n: int) -> np.ndarray:
    """``(2**n, n)`` array of all patterns in the :func:`exhaustive_inputs` order."""
    patterns = np.arange(1 << n, dtype=np.int64)
    return ((patterns[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)


def simulate(net: GateNetlist, streams: np.ndarray, initial_state: Optional[Iterable[int]] = None) -> np.ndarray:
    """Cycle-synchronous simulation.

    ``streams`` is ``(n_inputs, N)`` or ``(B, n_inputs, N)``; the result has
    the matching ``(n_outputs, N)`` / ``(B, n_outputs, N)`` shape.  All REGs
    start at 0 unless ``initial_state`` (one 0/1 per REG) is given.
    """
    arr = np.asarray(streams, dtype=np.uint8)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[None]
    batch, n_in, cycles = arr.shape
    if n_in != net.n_inputs:
        raise ValueError(f"expected {net.n_inputs} input streams, got {n_in}")
    prog = CompiledNet(net)
    mask = (1 << batch) - 1
    if initial_state is None:
        state = [0] * len(prog.regs)
    else:
        state = [mask if b else 0 for b in initial_state]
    # time-major packing: per cycle, per input, an int over the batch
    per_cycle = np.packbits(np.ascontiguousarray(arr.transpose(2, 1, 0)), axis=2, bitorder="little")
    nbytes = per_cycle.shape[2]
    out_words: list[list[int]] = []
    for t in range(cycles):
        words = [int.from_bytes(per_cycle[t, k].tobytes(), "little") for k in range(n_in)]
        outs, state = prog.step(words, state, mask)
        out_words.append(outs)
    n_out = net.n_outputs
    result = np.empty((batch, n_out, cycles), dtype=np.uint8)
    for t, outs in enumerate(out_words):
        if n_out:
            buf = b"".join(w.to_bytes(nbytes, "little") for w in outs)
            bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8).reshape(n_out, nbytes), axis=1, bitorder="little")
            result[:, :, t] = bits[:, :batch].T
    return result[0] if squeeze else result
