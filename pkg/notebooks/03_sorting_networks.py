# %% [markdown]
# # Binary bitonic sorters
#
# In the 0/1 domain a compare-exchange is an OR (larger bit) and an AND
# (smaller bit).  Any width works: widths that are not powers of two pad the
# merge with constants that fold away, and width-3 pieces use a dedicated
# OR / MAJ3 / AND sorter.

# %%
import numpy as np

from aqfp_sc.netlist import evaluate_batch, exhaustive_patterns, net_stats
from aqfp_sc.sortnet import build_bitonic_sorter, power_of_two_comparators

for n in (3, 4, 8, 9, 12, 25):
    print(n, net_stats(build_bitonic_sorter(n)))
print("closed form for n=8:", power_of_two_comparators(8), "comparators")

# %% [markdown]
# Zero-one check: every input pattern comes out as its ones count packed at the top.

# %%
n = 9
pats = exhaustive_patterns(n)
out = evaluate_batch(build_bitonic_sorter(n), pats.T).T
oracle = (np.arange(n)[None, :] < pats.sum(axis=1)[:, None]).astype(np.uint8)
print(f"n={n}: {len(pats)} patterns, all sorted: {np.array_equal(out, oracle)}")
