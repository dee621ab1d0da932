# %% [markdown]
# # AQFP elaboration and cost reports
#
# Every AQFP cell occupies one clock phase and drives a single sink.  The
# elaborator rewrites logic into majority form, inserts splitter trees for
# fan-out, pads short paths with buffers so every gate sees equal-phase
# inputs, and validates the result.

# %%
from aqfp_sc.aqfp import CellLibrary, build_sng_netlist, calibrate_energy, elaborate, jj_count, majority_rewrite, report
from aqfp_sc.blocks import build_block_netlist

lib = CellLibrary()
for kind, m in (("fe", 9), ("fe", 25), ("pool", 4), ("pool", 16), ("cat", 100), ("cat", 800)):
    net = build_block_netlist(kind, m)
    r = report(elaborate(net, lib), lib, cycles=1024)
    print(f"{kind:4s} M={m:3d}  logic JJ {jj_count(net, lib):6d} -> {jj_count(majority_rewrite(net, lib), lib):6d}"
          f"  elaborated JJ {r.jj_total:6d}  depth {r.phase_depth:4d}  latency {r.latency_ns:.2f} ns")

# %% [markdown]
# SNG banks share RNG matrices, so cost grows linearly with the number of
# outputs.  Calibration fits the energy per JJ to a 100-output reference.

# %%
cal = calibrate_energy(lib)
for k in (100, 500, 800):
    r = report(elaborate(build_sng_netlist(k), cal), cal, cycles=1024)
    print(f"SNG x{k}: {r.jj_total} JJ, {r.energy_total:.3e} {r.energy_unit}")
