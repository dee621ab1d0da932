"""Command line front end: ``aqfp-sc {table,network,elaborate,synth,rng}``.

Every subcommand reads a JSON config (``--config``), takes a master seed
(``--seed``) and writes one output file (``--out``).  Exit status is 0 on
success, 1 for usage errors and 2 for validation failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import aqfp
from .blocks import BlockKind, build_block_netlist
from .experiments import ExperimentConfig, cells_csv, rng_diagnostics, rng_diagnostics_csv, run_accuracy_table, table_csv
from .netlist import GateNetlist, StructureError
from .network import NetworkError, NetworkSpec, WeightFile, random_weights, run_network, synthetic_inputs

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2
REPORT_COLUMNS = ["block", "M", "N", "jj_total", "phase_depth", "latency_ns", "energy_units"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _read_json(path: Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{path} must hold a JSON object")
    return doc


def _relative(base: Path, ref: str) -> Path:
    p = Path(ref)
    return p if p.is_absolute() else base.parent / p


def _kind(value) -> BlockKind:
    try:
        return BlockKind.parse(value)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _library(cfg: dict, config_path: Path) -> aqfp.CellLibrary:
    ref = cfg.get("library")
    if ref is None:
        return aqfp.CellLibrary()
    if isinstance(ref, dict):
        return aqfp.CellLibrary.from_dict(ref)
    return aqfp.CellLibrary.from_dict(_read_json(_relative(config_path, ref)))


# -- subcommands ------------------------------------------------------------

def cmd_table(cfg: dict, seed: Optional[int], out: Path, path: Path) -> str:
    if "kind" not in cfg:
        raise UsageError("table config needs a 'kind'")
    _kind(cfg["kind"])
    if seed is not None:
        cfg = {**cfg, "seed": seed}
    layout = cfg.pop("layout", "wide")
    exp = ExperimentConfig.from_dict(cfg)
    results = run_accuracy_table(exp)
    if out.suffix == ".json":
        return _dump_json({"config": exp.to_dict(), "cells": [vars(r) for r in results]})
    if layout == "long":
        return cells_csv(results)
    if layout != "wide":
        raise UsageError("layout must be 'wide' or 'long'")
    return table_csv(results)


def _network_parts(cfg: dict, path: Path, seed: int):
    net_ref = cfg.get("network")
    if net_ref is None:
        raise UsageError("network config needs a 'network' entry")
    spec_doc = net_ref if isinstance(net_ref, dict) else _read_json(_relative(path, net_ref))
    spec = NetworkSpec.from_dict(spec_doc)
    w_ref = cfg.get("weights")
    if w_ref is None:
        weights = random_weights(spec, seed=int(cfg.get("weight_seed", seed)))
    elif isinstance(w_ref, dict):
        weights = WeightFile.from_dict(w_ref)
    else:
        weights = WeightFile.from_dict(_read_json(_relative(path, w_ref)))
    inputs = cfg.get("inputs", {"synthetic": 10})
    if isinstance(inputs, dict) and "synthetic" in inputs:
        x = synthetic_inputs(spec, int(inputs["synthetic"]), seed=int(inputs.get("seed", seed)))
    else:
        if isinstance(inputs, str):
            inputs = json.loads(_relative(path, inputs).read_text())
        x = np.asarray(inputs, dtype=float)
    return spec, weights, x


def cmd_network(cfg: dict, seed: Optional[int], out: Path, path: Path) -> str:
    seed = int(cfg.get("seed", 0)) if seed is None else seed
    spec, weights, x = _network_parts(cfg, path, seed)
    lengths = cfg.get("stream_lengths", [cfg.get("stream_length", spec.stream_length)])
    runs = []
    for n in lengths:
        res = run_network(spec, weights, x, seed=seed, stream_length=int(n))
        runs.append({"stream_length": int(n), **res.to_dict()})
    if out.suffix == ".csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "image", "sc_top", "float_top"])
        for run in runs:
            for i, (a, b) in enumerate(zip(run["sc_top"], run["float_top"])):
                w.writerow([run["stream_length"], i, a, b])
        return buf.getvalue()
    return _dump_json({"seed": seed, "network": spec.to_dict(), "runs": runs})


def _block_entries(cfg: dict) -> list[tuple[BlockKind, int]]:
    entries = cfg.get("blocks") or [{"kind": cfg.get("kind"), "M": cfg.get("M")}]
    result = []
    for e in entries:
        if e.get("kind") is None or e.get("M") is None:
            raise UsageError("each block needs 'kind' and 'M'")
        result.append((_kind(e["kind"]), int(e["M"])))
    return result


def cmd_elaborate(cfg: dict, seed: Optional[int], out: Path, path: Path) -> str:
    lib = _library(cfg, path)
    cycles = int(cfg.get("cycles", 1024))
    rewrite = bool(cfg.get("rewrite", True))
    records = []
    for kind, m in _block_entries(cfg):
        net = build_block_netlist(kind, m)
        phased = aqfp.elaborate(net, lib, rewrite=rewrite)
        rep = aqfp.report(phased, lib, cycles)
        pre = aqfp.majority_rewrite(net, lib) if rewrite else net
        records.append((kind, m, cycles, rep, phased, pre))
    if out.suffix == ".csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for kind, m, n, rep, _, _ in records:
            w.writerow([kind.value, m, n, rep.jj_total, rep.phase_depth, format(rep.latency_ns, ".6g"), format(rep.energy_total, ".6g")])
        return buf.getvalue()
    docs = []
    for kind, m, n, rep, phased, pre in records:
        docs.append({
            "block": kind.value,
            "M": m,
            "N": n,
            "pre_splitting_cells": dict(sorted(_kind_counts(pre).items())),
            "report": rep.to_dict(),
            "netlist": phased.to_dict(),
        })
    return _dump_json({"library": lib.to_dict(), "blocks": docs})


def _kind_counts(net: GateNetlist) -> dict:
    return Counter(node.kind for node in net.nodes)


def cmd_synth(cfg: dict, seed: Optional[int], out: Path, path: Path) -> str:
    lib = _library(cfg, path)
    ref = cfg.get("netlist")
    if ref is not None:
        doc = ref if isinstance(ref, dict) else _read_json(_relative(path, ref))
        net = GateNetlist.from_dict(doc)
        label = "netlist"
    else:
        (kind, m), = _block_entries(cfg)[:1]
        net = build_block_netlist(kind, m)
        label = f"{kind.value}:{m}"
    net.validate()
    rewritten = aqfp.majority_rewrite(net, lib)
    verdict = aqfp.equivalence_check(net, rewritten, seed=0 if seed is None else seed)
    if not verdict.equivalent:
        raise StructureError(f"rewrite changed the function of {label}")
    return _dump_json({
        "source": label,
        "jj_before": aqfp.jj_count(net, lib),
        "jj_after": aqfp.jj_count(rewritten, lib),
        "equivalence": {"method": verdict.method, "checked": verdict.checked},
        "netlist": rewritten.to_dict(),
    })


def cmd_rng(cfg: dict, seed: Optional[int], out: Path, path: Path) -> str:
    seed = int(cfg.get("seed", 0)) if seed is None else seed
    size = int(cfg.get("size", 5))
    cycles = int(cfg.get("cycles", 100_000))
    if size < 1 or cycles < 2:
        raise ValueError("rng diagnostics need size >= 1 and cycles >= 2")
    d = rng_diagnostics(size, cycles, seed=seed)
    if out.suffix == ".json":
        return _dump_json({
            "size": d.size, "cycles": d.cycles, "seed": seed,
            "bias": d.bias.tolist(), "word_mean": d.word_mean.tolist(),
            "max_bit_correlation": d.max_bit_correlation,
            "max_value_correlation": d.max_value_correlation,
            "max_overlap": d.max_overlap, "cells_in_four_lines": d.cells_per_line_ok,
            "warnings": d.warnings,
        })
    return rng_diagnostics_csv(d)


COMMANDS = {
    "table": (cmd_table, "Monte Carlo accuracy table for one block kind"),
    "network": (cmd_network, "run a network in SC and float, report top-1 agreement"),
    "elaborate": (cmd_elaborate, "elaborate blocks into phase-balanced AQFP netlists with reports"),
    "synth": (cmd_synth, "majority rewrite of a netlist with an equivalence check"),
    "rng": (cmd_rng, "RNG matrix diagnostics"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aqfp-sc", description="SC-DNN blocks on AQFP: simulation, elaboration, reports")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path, help="JSON config file")
        p.add_argument("--seed", type=_u64, default=None, help="master seed (overrides the config)")
        p.add_argument("--out", required=True, type=Path, help="output file (.csv or .json)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"aqfp-sc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    func, _ = COMMANDS[args.command]
    try:
        cfg = _read_json(args.config)
        text = func(cfg, args.seed, args.out, args.config)
    except UsageError as exc:
        print(f"aqfp-sc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NetworkError, StructureError, ValueError, KeyError, TypeError) as exc:
        print(f"aqfp-sc {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
