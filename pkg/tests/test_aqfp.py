import numpy as np
import pytest

from aqfp_sc.aqfp import (
    CellLibrary,
    PhasedNetlist,
    balance_phases,
    build_sng_netlist,
    calibrate_energy,
    check_phased,
    elaborate,
    equivalence_check,
    insert_splitters,
    jj_count,
    majority_rewrite,
    report,
    splitter_lower_bounds,
    splitter_tree_shape,
    validate_phased,
)
from aqfp_sc.blocks import BlockKind, build_block_netlist
from aqfp_sc.netlist import (
    AND2,
    BUF,
    MAJ3,
    NOT,
    OR2,
    SPLIT,
    GateNetlist,
    StructureError,
    evaluate_batch,
    levels,
    net_stats,
    simulate,
)
from aqfp_sc.sortnet import build_bitonic_sorter


def gate(kind, arity=2):
    net = GateNetlist()
    ins = [net.add_input() for _ in range(arity)]
    net.outputs = [net.add(kind, *ins)]
    return net


def chain(net, src, kind, length):
    for _ in range(length):
        src = net.add(kind, src)
    return src


class TestLibrary:
    def test_defaults(self):
        lib = CellLibrary()
        assert lib.jj[MAJ3] == 6 and lib.jj[BUF] == 2 and lib.jj[SPLIT] == 2
        assert lib.branching == 3 and lib.f_hz == 5e9

    def test_round_trip(self, tmp_path):
        lib = CellLibrary(jj={"MAJ3": 8}, branching=4, e_jj=0.5)
        lib.save(tmp_path / "lib.json")
        back = CellLibrary.load(tmp_path / "lib.json")
        assert back == lib

    def test_rejects_bad(self):
        with pytest.raises(ValueError):
            CellLibrary(jj={"FOO": 2})
        with pytest.raises(ValueError):
            CellLibrary(branching=1)


class TestSplitters:
    def test_fanout_one_unchanged(self):
        net = gate(AND2)
        assert insert_splitters(net).to_dict() == net.to_dict()

    def test_five_sinks(self):
        sizes, depths = splitter_tree_shape(5, 3)
        assert len(sizes) == 2
        assert max(depths) == 2
        assert splitter_lower_bounds(5, 3) == (2, 2)

    @pytest.mark.parametrize("sinks", range(1, 40))
    @pytest.mark.parametrize("b", [2, 3, 4])
    def test_minimal(self, sinks, b):
        sizes, depths = splitter_tree_shape(sinks, b)
        count, depth = splitter_lower_bounds(sinks, b)
        assert len(sizes) == count
        assert max(depths) == depth
        assert all(2 <= s <= b for s in sizes)
        assert len(depths) == sinks

    def test_tree_inserted(self):
        net = GateNetlist()
        a = net.add_input()
        net.outputs = [net.add(NOT, a) for _ in range(5)]
        s = insert_splitters(net)
        assert sum(n.kind == SPLIT for n in s.nodes) == 2
        assert max(levels(s)) == 3
        assert np.array_equal(evaluate_batch(s, [[0, 1]]), evaluate_batch(net, [[0, 1]]))


class TestPhases:
    def test_single_and(self):
        p = balance_phases(gate(AND2))
        assert p.phase == [0, 0, 1]
        assert len(p.base.nodes) == 3

    def test_unequal_arrivals(self):
        net = GateNetlist()
        a, b = net.add_input(), net.add_input()
        net.outputs = [net.add(AND2, chain(net, a, NOT, 2), chain(net, b, NOT, 4))]
        p = balance_phases(net)
        assert sum(n.kind == BUF for n in p.base.nodes) == 2
        assert p.depth == 5
        assert validate_phased(p) == []

    def test_sorter_eight(self):
        net = build_bitonic_sorter(8)
        assert net_stats(net)["levels"] == 6
        split = insert_splitters(net)
        p = balance_phases(split)
        out_phases = {p.phase[o] for o in p.base.outputs}
        assert len(out_phases) == 1
        # logic stages plus one splitter level per stage
        assert p.depth == max(levels(split)[o] for o in split.outputs) == 12

    def test_fanout_required(self):
        net = GateNetlist()
        a = net.add_input()
        x = net.add(NOT, a)
        net.outputs = [net.add(AND2, x, x)]
        with pytest.raises(StructureError):
            balance_phases(net)

    def test_validator_catches_tampering(self):
        net = GateNetlist()
        a, b = net.add_input(), net.add_input()
        net.outputs = [net.add(AND2, chain(net, a, NOT, 1), b)]
        p = balance_phases(net)
        bad = PhasedNetlist(net, [0, 0, 1, 2])
        assert validate_phased(bad)
        with pytest.raises(StructureError):
            check_phased(bad)
        assert validate_phased(p) == []

    def test_json_round_trip(self):
        p = elaborate(build_block_netlist("cat", 5))
        back = PhasedNetlist.from_dict(p.to_dict())
        assert back.phase == p.phase
        assert back.base.to_dict() == p.base.to_dict()


class TestRewrite:
    def test_and_becomes_majority(self):
        net = gate(AND2)
        out = majority_rewrite(net)
        assert out.nodes[out.outputs[0]].kind == MAJ3
        assert equivalence_check(net, out).equivalent
        assert jj_count(out) <= jj_count(net)

    def test_absorption(self):
        net = GateNetlist()
        a, b = net.add_input(), net.add_input()
        net.outputs = [net.add(MAJ3, a, a, b)]
        out = majority_rewrite(net)
        assert out.outputs == [out.inputs[0]]

    def test_double_negation(self):
        net = GateNetlist()
        a = net.add_input()
        net.outputs = [chain(net, a, NOT, 2)]
        out = majority_rewrite(net)
        assert out.outputs == [out.inputs[0]]

    @pytest.mark.parametrize("n", [3, 4, 5, 8, 9])
    def test_sorters(self, n):
        net = build_bitonic_sorter(n)
        out = majority_rewrite(net)
        v = equivalence_check(net, out)
        assert v.equivalent and v.method == "exhaustive"
        assert jj_count(out) <= jj_count(net)

    @pytest.mark.parametrize("kind", list(BlockKind))
    @pytest.mark.parametrize("m", [2, 3, 4, 9, 16, 25])
    def test_blocks(self, kind, m):
        net = build_block_netlist(kind, m)
        out = majority_rewrite(net)
        assert equivalence_check(net, out).equivalent
        assert jj_count(out) <= jj_count(net)

    def test_random_logic(self):
        gen = np.random.default_rng(5)
        for _ in range(30):
            net = GateNetlist()
            wires = [net.add_input() for _ in range(6)]
            for _ in range(25):
                kind = gen.choice([AND2, OR2, MAJ3, NOT])
                arity = {AND2: 2, OR2: 2, MAJ3: 3, NOT: 1}[kind]
                picks = gen.choice(len(wires), arity)
                wires.append(net.add(kind, *[wires[i] for i in picks]))
            net.outputs = wires[-3:]
            out = majority_rewrite(net)
            assert equivalence_check(net, out).equivalent
            assert jj_count(out) <= jj_count(net)


class TestEquivalence:
    def test_self(self):
        net = build_bitonic_sorter(5)
        assert equivalence_check(net, net).equivalent

    def test_and_or(self):
        v = equivalence_check(gate(AND2), gate(OR2))
        assert not v.equivalent
        assert v.counterexample in {(1, 0), (0, 1)}

    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            equivalence_check(gate(AND2), gate(MAJ3, 3))

    def test_large_uses_vectors(self):
        net = build_bitonic_sorter(16)
        v = equivalence_check(net, majority_rewrite(net), limit=12)
        assert v.equivalent and v.method != "exhaustive"


class TestElaboration:
    @pytest.mark.parametrize("kind", list(BlockKind))
    @pytest.mark.parametrize("m", [1, 2, 3, 4, 9, 25])
    def test_invariants(self, kind, m):
        lib = CellLibrary()
        net = build_block_netlist(kind, m)
        p = elaborate(net, lib)
        assert validate_phased(p, lib) == []
        fan = p.base.fanout()
        for node in p.base.nodes:
            if node.kind == SPLIT:
                assert fan[node.id] <= lib.branching
            elif node.kind != "INPUT":
                assert fan[node.id] <= 1

    @pytest.mark.parametrize("kind", list(BlockKind))
    def test_function_preserved(self, kind, rng):
        net = build_block_netlist(kind, 6)
        p = elaborate(net)
        sp = rng.integers(0, 2, (20, 6, 64), dtype=np.uint8)
        assert np.array_equal(simulate(net, sp), simulate(p.base, sp))

    def test_branching_respected(self):
        lib = CellLibrary(branching=2)
        p = elaborate(build_block_netlist("fe", 9), lib)
        assert validate_phased(p, lib) == []


class TestReport:
    def test_empty(self):
        r = report(balance_phases(GateNetlist()))
        assert (r.jj_total, r.phase_depth, r.latency_s, r.throughput, r.energy_total) == (0, 0, 0.0, 0.0, 0.0)

    def test_latency_and_energy(self):
        lib = CellLibrary(f_hz=4e9, e_jj=2.0)
        p = elaborate(build_block_netlist("cat", 9), lib)
        r = report(p, lib, cycles=100)
        assert r.latency_s == pytest.approx(p.depth / (4 * 4e9))
        assert r.energy_total == pytest.approx(100 * r.jj_total * 2.0)
        assert report(p, lib, cycles=200).energy_total == pytest.approx(2 * r.energy_total)
        assert r.throughput == 4e9
        assert sum(r.jj_by_kind.values()) == r.jj_total

    def test_sng_ratio(self):
        lib = CellLibrary()
        e = [report(elaborate(build_sng_netlist(k), lib), lib).energy_total for k in (100, 500, 800)]
        assert e[1] / e[0] == pytest.approx(5, rel=0.01)
        assert e[2] / e[0] == pytest.approx(8, rel=0.01)

    def test_sng_function(self, rng):
        from aqfp_sc.rng import _layout
        from aqfp_sc.sc import encode_bipolar_array

        n_bits, k = 4, 20  # 16 lines per matrix, so two matrices
        net = build_sng_netlist(k, n_bits)
        lines, _ = _layout(n_bits)
        batch = 256
        cells = rng.integers(0, 2, (2, n_bits, n_bits, batch), dtype=np.uint8)
        codes = encode_bipolar_array(rng.uniform(-1, 1, (k, batch)), n_bits)
        value = {}
        for j in range(k):
            for i in range(n_bits):
                value[f"w{j}_b{i}"] = (codes[j] >> (n_bits - 1 - i)) & 1
            value[f"w{j}_sat"] = (codes[j] >> n_bits) & 1
        for mtx in range(2):
            for r in range(n_bits):
                for c in range(n_bits):
                    value[f"rng{mtx}_{r}_{c}"] = cells[mtx, r, c]
        rows = np.array([value[net.nodes[i].name] for i in net.inputs], dtype=np.uint8)
        got = evaluate_batch(net, rows)
        weights = 1 << np.arange(n_bits - 1, -1, -1)
        for j in range(k):
            line = lines[j % len(lines)]
            word = sum(cells[j // len(lines), r, c].astype(int) * w for (r, c), w in zip(line, weights))
            assert np.array_equal(got[j], (word < codes[j]).astype(np.uint8))

    def test_calibration(self):
        lib = calibrate_energy(CellLibrary())
        p = elaborate(build_sng_netlist(100), lib)
        assert report(p, lib, 1024).energy_total == pytest.approx(9.7e-5)
        assert lib.energy_unit == "pJ"

    def test_chain_depth_linear(self):
        d100 = elaborate(build_block_netlist("cat", 100)).depth
        d200 = elaborate(build_block_netlist("cat", 200)).depth
        assert abs(d200 - 2 * d100) <= 1
