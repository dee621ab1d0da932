"""Stochastic-computing DNN blocks for AQFP superconducting logic.

Modules:

* :mod:`aqfp_sc.sc` -- bipolar streams, SNG comparison, XNOR/MUX arithmetic
* :mod:`aqfp_sc.rng` -- buffer-based true RNG cells and the shared RNG matrix
* :mod:`aqfp_sc.netlist` -- gate graphs, bit-parallel evaluation, JSON format
* :mod:`aqfp_sc.sortnet` -- binary bitonic sorters and mergers of any width
* :mod:`aqfp_sc.blocks` -- feature extraction, pooling and categorization blocks
* :mod:`aqfp_sc.aqfp` -- splitter/buffer insertion, majority rewrite, JJ/energy reports
* :mod:`aqfp_sc.experiments`, :mod:`aqfp_sc.network`, :mod:`aqfp_sc.cli` -- Monte Carlo tables, networks, CLI
"""
from .aqfp import CellLibrary, EnergyReport, PhasedNetlist, elaborate, majority_rewrite, report
from .blocks import BlockKind, ProductMatrix, build_block_netlist, fe_run, majority_chain, pool_run
from .netlist import GateNetlist, StructureError
from .rng import RngMatrix, UnitRng, build_rng_matrix
from .sc import BinaryCode, BitStream, Encoding, decode_stream, encode_bipolar, generate_stream
from .sortnet import build_bitonic_merger, build_bitonic_sorter

__all__ = [
    "BinaryCode", "BitStream", "BlockKind", "CellLibrary", "EnergyReport", "Encoding", "GateNetlist",
    "PhasedNetlist", "ProductMatrix", "RngMatrix", "StructureError", "UnitRng", "build_bitonic_merger",
    "build_bitonic_sorter", "build_block_netlist", "build_rng_matrix", "decode_stream", "elaborate",
    "encode_bipolar", "fe_run", "generate_stream", "majority_chain", "majority_rewrite", "pool_run", "report",
]
__version__ = "0.1.0"
