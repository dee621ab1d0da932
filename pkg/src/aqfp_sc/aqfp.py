"""AQFP elaboration: splitters, phase balancing, majority synthesis, cost reports.

Every AQFP cell is clocked and occupies one phase, every fan-out goes through
a splitter, and all inputs of a cell must arrive in the same phase.  The
passes here turn a plain :class:`~aqfp_sc.netlist.GateNetlist` into a
:class:`PhasedNetlist` that satisfies those rules, and price it against a
:class:`CellLibrary`.
"""
from __future__ import annotations

import heapq
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import netlist as nl
from .netlist import (
    AND2, BUF, CONST0, CONST1, CONSTANTS, INPUT, MAJ3, NOT, OR2, OUTPUT, REG, RNG, SOURCES, SPLIT,
    GateNetlist, StructureError,
)

DEFAULT_JJ = {
    BUF: 2, NOT: 2, CONST0: 2, CONST1: 2,
    MAJ3: 6, AND2: 6, OR2: 6,
    SPLIT: 2,  # per output branch
    REG: 2, RNG: 2,
    INPUT: 0, OUTPUT: 0,
}
_FREE = frozenset({INPUT, OUTPUT})


@dataclass
class CellLibrary:
    jj: dict = field(default_factory=lambda: dict(DEFAULT_JJ))
    branching: int = 3
    f_hz: float = 5e9
    e_jj: float = 1.0
    phases_per_cycle: int = 4
    energy_unit: str = "a.u."

    def __post_init__(self):
        merged = dict(DEFAULT_JJ)
        merged.update({k: int(v) for k, v in self.jj.items()})
        self.jj = merged
        for kind, count in self.jj.items():
            if kind not in nl.KINDS:
                raise ValueError(f"library names unknown cell kind {kind!r}")
            if kind not in _FREE and count < 1:
                raise ValueError(f"cell {kind} must cost at least one JJ")
        if self.branching < 2:
            raise ValueError("splitter branching must be at least 2")
        if self.f_hz <= 0 or self.e_jj < 0 or self.phases_per_cycle < 1:
            raise ValueError("clock frequency, JJ energy and phase count must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "CellLibrary":
        cells = doc.get("cells", {})
        jj = {kind: (spec["jj"] if isinstance(spec, dict) else spec) for kind, spec in cells.items()}
        kwargs = {k: doc[k] for k in ("branching", "f_hz", "e_jj", "phases_per_cycle", "energy_unit") if k in doc}
        return cls(jj=jj, **kwargs)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CellLibrary":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "cells": {kind: {"jj": count} for kind, count in sorted(self.jj.items())},
            "branching": self.branching,
            "f_hz": self.f_hz,
            "e_jj": self.e_jj,
            "phases_per_cycle": self.phases_per_cycle,
            "energy_unit": self.energy_unit,
        }

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def jj_breakdown(net: GateNetlist, lib: CellLibrary) -> Counter:
    """JJ count per cell kind.

    Splitters are charged per used branch.  A constant whose only sink is a
    MAJ3 input is the constant branch of that majority cell and costs nothing
    extra: MAJ3(a, b, 0) is the AND cell.
    """
    sinks = net.sinks()
    cost: Counter = Counter()
    for node in net.nodes:
        kind = node.kind
        if kind in _FREE:
            continue
        if kind == SPLIT:
            cost[kind] += lib.jj[SPLIT] * max(len(sinks[node.id]), 1)
        elif kind in CONSTANTS:
            uses = sinks[node.id]
            absorbed = len(uses) == 1 and uses[0][0] != "OUT" and net.nodes[uses[0][0]].kind == MAJ3
            if not absorbed:
                cost[kind] += lib.jj[kind]
        else:
            cost[kind] += lib.jj[kind]
    return cost


def jj_count(net: GateNetlist, lib: Optional[CellLibrary] = None) -> int:
    return int(sum(jj_breakdown(net, lib or CellLibrary()).values()))


# -- splitter insertion ---------------------------------------------------

def splitter_tree_shape(sinks: int, branching: int) -> tuple[list[int], list[int]]:
    """Minimal splitter tree for ``sinks`` leaves.

    Returns ``(branches per splitter, leaf depths)``.  Splitters are expanded
    shallowest-slot-first and the last one only gets the branches it needs, so
    both the splitter count ``ceil((s-1)/(b-1))`` and the depth
    ``ceil(log_b s)`` are minimal.
    """
    if sinks <= 1:
        return [], [0] * sinks
    slots = [0]
    splitters = []
    while len(slots) < sinks:
        depth = heapq.heappop(slots)
        width = min(branching, sinks - len(slots))
        splitters.append(width)
        for _ in range(width):
            heapq.heappush(slots, depth + 1)
    return splitters, sorted(slots)


def insert_splitters(net: GateNetlist, lib: Optional[CellLibrary] = None) -> GateNetlist:
    """Route every multi-sink signal through a minimal-depth splitter tree.

    Constants are duplicated per sink instead of split.  Sinks that sit deeper
    in the logic get the deeper leaves of the tree.
    """
    lib = lib or CellLibrary()
    b = lib.branching
    out = net.copy()
    sinks = out.sinks()
    lvl = nl.levels(out)
    late = max(lvl, default=0) + 1

    def urgency(sink):
        node_id, _ = sink
        if node_id == "OUT" or out.nodes[node_id].kind == REG:
            return late
        return lvl[node_id]

    def rewire(sink, src):
        node_id, slot = sink
        if node_id == "OUT":
            out.outputs[slot] = src
        else:
            node = out.nodes[node_id]
            ins = list(node.inputs)
            ins[slot] = src
            node.inputs = tuple(ins)

    for nid in range(len(net.nodes)):
        uses = sinks[nid]
        if len(uses) <= 1:
            continue
        kind = out.nodes[nid].kind
        if kind in CONSTANTS:
            for use in uses[1:]:
                rewire(use, out.add(kind))
            continue
        # build the tree level by level using the same slot order as splitter_tree_shape
        slots: list[tuple[int, int, int]] = [(0, 0, nid)]  # (depth, tie, driver)
        tie = 1
        while len(slots) < len(uses):
            depth, _, driver = heapq.heappop(slots)
            width = min(b, len(uses) - len(slots))
            sp = out.add(SPLIT, driver)
            for _ in range(width):
                heapq.heappush(slots, (depth + 1, tie, sp))
                tie += 1
        leaves = sorted(slots)
        ordered = sorted(uses, key=urgency)
        for use, (_, _, driver) in zip(ordered, leaves):
            rewire(use, driver)
    return out


# -- phase balancing ------------------------------------------------------

@dataclass
class PhasedNetlist:
    base: GateNetlist
    phase: list[int]

    @property
    def depth(self) -> int:
        return max((self.phase[o] for o in self.base.outputs), default=0)

    def loop_phases(self) -> int:
        """Longest REG-to-REG combinational path, in phases (0 without feedback)."""
        regs = [n for n in self.base.nodes if n.kind == REG]
        return max((self.phase[n.inputs[0]] + 1 for n in regs), default=0)

    def to_dict(self) -> dict:
        return self.base.to_dict(self.phase)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "PhasedNetlist":
        if "phase" not in doc:
            raise StructureError("netlist document carries no phase annotation")
        net = GateNetlist.from_dict(doc)
        return cls(net, [int(p) for p in doc["phase"]])


def balance_phases(net: GateNetlist) -> PhasedNetlist:
    """ASAP phase assignment with BUF chains on early edges.

    Sources (primary inputs, RNG cells, REG outputs) sit at phase 0; a
    constant is scheduled one phase before its consumer.  Primary outputs are
    padded to a common phase; REG data inputs are left as they are.
    """
    sinks = net.sinks()
    for node in net.nodes:
        if node.kind not in (SPLIT, INPUT) and len(sinks[node.id]) > 1:
            raise StructureError(f"node {node.id} ({node.kind}) drives {len(sinks[node.id])} sinks; insert splitters first")
    out = net.copy()
    order = out.topo_order()
    phase: dict[int, int] = {}

    def delay(src: int, have: int, want: int) -> int:
        for _ in range(want - have):
            src = out.add(BUF, src)
            phase[src] = have + 1
            have += 1
        return src

    for nid in order:
        node = out.nodes[nid]
        if node.kind in SOURCES or node.kind == REG:
            phase[nid] = 0
            continue
        if node.kind in CONSTANTS:
            continue  # placed by its consumer
        live = [s for s in node.inputs if out.nodes[s].kind not in CONSTANTS]
        target = max((phase[s] for s in live), default=0)
        ins = []
        for s in node.inputs:
            if out.nodes[s].kind in CONSTANTS:
                phase[s] = target
                ins.append(s)
            else:
                ins.append(delay(s, phase[s], target))
        node.inputs = tuple(ins)
        phase[nid] = target + 1
    for nid, node in enumerate(out.nodes):
        if node.kind in CONSTANTS and nid not in phase:
            phase[nid] = 0  # constant driving an output or a REG directly
    if out.outputs:
        final = max(phase[o] for o in out.outputs)
        out.outputs = [delay(o, phase[o], final) for o in out.outputs]
    return PhasedNetlist(out, [phase[i] for i in range(len(out.nodes))])


def validate_phased(p: PhasedNetlist, lib: Optional[CellLibrary] = None) -> list[str]:
    """Return every violated AQFP rule (an empty list means the netlist is legal)."""
    lib = lib or CellLibrary()
    net, phase = p.base, p.phase
    problems = []
    if len(phase) != len(net.nodes):
        return [f"{len(phase)} phase entries for {len(net.nodes)} nodes"]
    sinks = net.sinks()
    for node in net.nodes:
        fan = len(sinks[node.id])
        if node.kind == SPLIT:
            if fan > lib.branching:
                problems.append(f"splitter {node.id} drives {fan} > {lib.branching} sinks")
        elif node.kind != INPUT and fan > 1:
            problems.append(f"{node.kind} {node.id} drives {fan} sinks without a splitter")
        if node.kind in SOURCES or node.kind == REG:
            if phase[node.id] != 0:
                problems.append(f"source {node.id} at phase {phase[node.id]}")
            continue
        if not node.inputs:
            continue
        arrivals = {phase[s] for s in node.inputs}
        if len(arrivals) != 1:
            problems.append(f"{node.kind} {node.id} has inputs at phases {sorted(arrivals)}")
        elif phase[node.id] != arrivals.pop() + 1:
            problems.append(f"{node.kind} {node.id} is not one phase after its inputs")
    outs = {phase[o] for o in net.outputs}
    if len(outs) > 1:
        problems.append(f"primary outputs at phases {sorted(outs)}")
    return problems


def check_phased(p: PhasedNetlist, lib: Optional[CellLibrary] = None) -> None:
    problems = validate_phased(p, lib)
    if problems:
        raise StructureError("; ".join(problems[:10]))


# -- majority synthesis ---------------------------------------------------
# Literals are (node, complemented) pairs over an internal majority-inverter
# graph; 0 is the constant-false node.

_FALSE = (0, False)
_TRUE = (0, True)


def _neg(lit):
    return (lit[0], not lit[1])


class _Mig:
    def __init__(self):
        self.kind = ["const"]
        self.fanin: list[tuple] = [()]
        self.table: dict = {}

    def leaf(self, kind: str) -> tuple[int, bool]:
        self.kind.append(kind)
        self.fanin.append(())
        return (len(self.kind) - 1, False)

    def maj(self, a, b, c):
        x, y, z = sorted((a, b, c))
        # absorption, complementary pair and constants all reduce to these two rules
        if x == y or y == z:
            return y
        if x == z:
            return x
        if x[0] == y[0]:
            return z
        if y[0] == z[0]:
            return x
        if x[0] == z[0]:
            return y
        # self-duality: keep at most one complemented fan-in
        flips = sum(l[1] for l in (x, y, z))
        if flips >= 2:
            return _neg(self.maj(_neg(x), _neg(y), _neg(z)))
        key = (x, y, z)
        if key not in self.table:
            self.kind.append("maj")
            self.fanin.append(key)
            self.table[key] = len(self.kind) - 1
        return (self.table[key], False)


def majority_rewrite(net: GateNetlist, lib: Optional[CellLibrary] = None) -> GateNetlist:
    """Re-express the netlist as MAJ3 gates (plus NOTs, constants, REGs).

    AND2/OR2 become MAJ3 with a constant input; double negations, duplicate
    or complementary majority inputs, constants and structurally identical
    gates are folded, and inverters are pushed through majorities by
    self-duality.  If the result would cost more JJs than the input, the input
    is returned unchanged.
    """
    lib = lib or CellLibrary()
    mig = _Mig()
    lit: dict[int, tuple[int, bool]] = {}
    src_of: dict[int, int] = {}  # mig leaf -> original node id
    for nid in net.inputs:
        lit[nid] = mig.leaf("input")
        src_of[lit[nid][0]] = nid
    for r in net.regs:
        lit[r] = mig.leaf("reg")
        src_of[lit[r][0]] = r
    for nid in net.topo_order():
        node = net.nodes[nid]
        kind = node.kind
        if nid in lit:
            continue
        ins = [lit[s] for s in node.inputs]
        if kind == CONST0:
            lit[nid] = _FALSE
        elif kind == CONST1:
            lit[nid] = _TRUE
        elif kind in (BUF, SPLIT, OUTPUT):
            lit[nid] = ins[0]
        elif kind == NOT:
            lit[nid] = _neg(ins[0])
        elif kind == AND2:
            lit[nid] = mig.maj(ins[0], ins[1], _FALSE)
        elif kind == OR2:
            lit[nid] = mig.maj(ins[0], ins[1], _TRUE)
        elif kind == MAJ3:
            lit[nid] = mig.maj(*ins)
        else:
            raise StructureError(f"cannot rewrite node kind {kind}")

    result = GateNetlist()
    created: dict[int, int] = {}
    inverted: dict[int, int] = {}

    for nid in net.inputs:
        mnode = lit[nid][0]
        name = net.nodes[nid].name
        created[mnode] = result.add(net.nodes[nid].kind, name=name)
    reg_map = {}
    for r in net.regs:
        reg_map[r] = result.add_reg(net.nodes[r].name)
        created[lit[r][0]] = reg_map[r]

    def materialize(l) -> int:
        node, comp = l
        if node == 0:
            return result.const(1 if comp else 0)
        base = created[node]
        if not comp:
            return base
        if node not in inverted:
            inverted[node] = result.add(NOT, base)
        return inverted[node]

    # majority nodes were created in topological order
    roots = [lit[o] for o in net.outputs] + [lit[net.nodes[r].inputs[0]] for r in net.regs]
    needed = set()
    stack = [l[0] for l in roots]
    while stack:
        m = stack.pop()
        if m in needed or mig.kind[m] != "maj":
            continue
        needed.add(m)
        stack.extend(f[0] for f in mig.fanin[m])
    for m in sorted(needed):
        a, b, c = (materialize(f) for f in mig.fanin[m])
        created[m] = result.add(MAJ3, a, b, c)

    outputs = [materialize(lit[o]) for o in net.outputs]
    for r, new in reg_map.items():
        result.connect(new, materialize(lit[net.nodes[r].inputs[0]]))
    result.outputs = outputs
    result = nl.prune(result)
    if jj_count(result, lib) > jj_count(net, lib):
        return net.copy()
    return result


# -- equivalence ----------------------------------------------------------

@dataclass
class Verdict:
    equivalent: bool
    method: str
    checked: int
    counterexample: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.equivalent


def equivalence_check(
    a: GateNetlist,
    b: GateNetlist,
    limit: int = 12,
    vectors: int = 10_000,
    cycles: int = 256,
    instances: int = 64,
    seed: int = 0,
) -> Verdict:
    """Compare two nets: exhaustively up to ``limit`` inputs, else on random vectors.

    Nets with REGs are co-simulated for ``cycles`` cycles on ``instances``
    random stream sets.  The counterexample is an input vector (combinational)
    or ``(instance, cycle)`` (sequential).
    """
    if a.n_inputs != b.n_inputs or a.n_outputs != b.n_outputs:
        raise ValueError(
            f"arity mismatch: {a.n_inputs}->{a.n_outputs} vs {b.n_inputs}->{b.n_outputs}"
        )
    n = a.n_inputs
    rng = np.random.default_rng(seed)
    if a.is_sequential() or b.is_sequential():
        density = rng.random((instances, n, 1))
        streams = (rng.random((instances, n, cycles)) < density).astype(np.uint8)
        ya, yb = nl.simulate(a, streams), nl.simulate(b, streams)
        diff = np.argwhere(np.any(ya != yb, axis=1))
        if diff.size:
            return Verdict(False, "cosimulation", instances * cycles, tuple(int(v) for v in diff[0]))
        return Verdict(True, "cosimulation", instances * cycles)
    if n <= limit:
        width = 1 << n
        packed = nl.exhaustive_inputs(n)
        method = "exhaustive"
    else:
        width = vectors
        patterns = rng.integers(0, 2, size=(n, vectors), dtype=np.uint8)
        packed = nl.pack_rows(patterns)
        method = "random"
    if width == 1 and n == 0:
        packed = []
    oa, ob = nl.eval_packed(a, packed, width), nl.eval_packed(b, packed, width)
    bad = 0
    for wa, wb in zip(oa, ob):
        bad |= wa ^ wb
    if not bad:
        return Verdict(True, method, width)
    first = (bad & -bad).bit_length() - 1
    vec = tuple((p >> first) & 1 for p in packed)
    return Verdict(False, method, width, vec)


# -- reports --------------------------------------------------------------

@dataclass
class EnergyReport:
    jj_total: int
    phase_depth: int
    latency_s: float
    throughput: float
    energy_total: float
    cycles: int
    loop_phases: int = 0
    jj_by_kind: dict = field(default_factory=dict)
    energy_unit: str = "a.u."

    @property
    def latency_ns(self) -> float:
        return self.latency_s * 1e9

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["latency_ns"] = self.latency_ns
        return doc


def report(p: PhasedNetlist, lib: Optional[CellLibrary] = None, cycles: int = 1024) -> EnergyReport:
    lib = lib or CellLibrary()
    breakdown = jj_breakdown(p.base, lib)
    jj_total = int(sum(breakdown.values()))
    depth = p.depth
    return EnergyReport(
        jj_total=jj_total,
        phase_depth=depth,
        latency_s=depth / (lib.phases_per_cycle * lib.f_hz),
        throughput=lib.f_hz if p.base.outputs else 0.0,
        energy_total=cycles * jj_total * lib.e_jj,
        cycles=cycles,
        loop_phases=p.loop_phases(),
        jj_by_kind=dict(sorted(breakdown.items())),
        energy_unit=lib.energy_unit,
    )


def elaborate(net: GateNetlist, lib: Optional[CellLibrary] = None, rewrite: bool = True) -> PhasedNetlist:
    """Majority rewrite (optional), splitter insertion and phase balancing, then validation."""
    lib = lib or CellLibrary()
    work = majority_rewrite(net, lib) if rewrite else net
    phased = balance_phases(insert_splitters(work, lib))
    check_phased(phased, lib)
    return phased


# -- stochastic number generator bank ------------------------------------

def sng_comparator_wires(net: GateNetlist, rand_bits: list[int], code_bits: list[int], saturate: Optional[int] = None) -> int:
    """``rand < code`` for MSB-first bit lists, as a MAJ3 ripple.

    Stage ``i`` (from the LSB) is ``MAJ3(~r_i, c_i, lt_{i-1})`` with
    ``lt_{-1} = 0``.  ``saturate`` is the extra code bit for the always-1 code.
    """
    lt = net.const(0)
    for r, c in zip(reversed(rand_bits), reversed(code_bits)):
        lt = net.add(MAJ3, net.add(NOT, r), c, lt)
    if saturate is not None:
        lt = net.add(OR2, lt, saturate)
    return lt


def build_sng_netlist(n_outputs: int, n_bits: int = 10) -> GateNetlist:
    """Bank of ``n_outputs`` comparator SNGs fed by shared ``n_bits`` x ``n_bits`` RNG matrices.

    Each SNG has ``n_bits + 1`` code inputs (MSB first, then the saturation
    bit) and consumes one line of a matrix; a matrix serves ``4 * n_bits`` SNGs.
    """
    from .rng import _layout

    if n_outputs < 1:
        raise ValueError("SNG bank needs at least one output")
    net = GateNetlist()
    lines, _ = _layout(n_bits)
    per_matrix = len(lines)
    cells: list[list[int]] = []
    outs = []
    for k in range(n_outputs):
        if k % per_matrix == 0:
            cells = [[net.add(RNG, name=f"rng{k // per_matrix}_{r}_{c}") for c in range(n_bits)] for r in range(n_bits)]
        rand = [cells[r][c] for r, c in lines[k % per_matrix]]
        code = [net.add_input(f"w{k}_b{i}") for i in range(n_bits)]
        sat = net.add_input(f"w{k}_sat")
        outs.append(sng_comparator_wires(net, rand, code, sat))
    net.outputs = outs
    return net


def calibrate_energy(
    lib: CellLibrary,
    target: float = 9.700e-5,
    n_outputs: int = 100,
    cycles: int = 1024,
    unit: str = "pJ",
) -> CellLibrary:
    """Fit ``e_jj`` so the ``n_outputs`` SNG bank costs ``target`` over ``cycles`` cycles."""
    probe = report(elaborate(build_sng_netlist(n_outputs), lib), replace(lib, e_jj=1.0), cycles)
    if probe.energy_total == 0:
        raise ValueError("calibration netlist has no energy")
    return replace(lib, e_jj=target / probe.energy_total, energy_unit=unit)


def splitter_lower_bounds(sinks: int, branching: int) -> tuple[int, int]:
    """Counting bounds: at least ``ceil((s-1)/(b-1))`` splitters and depth ``ceil(log_b s)``."""
    if sinks <= 1:
        return 0, 0
    count = math.ceil((sinks - 1) / (branching - 1))
    depth = 0
    while branching ** depth < sinks:
        depth += 1
    return count, depth
