# %% [markdown]
# # Shared RNG matrix
#
# An N x N grid of one-bit random cells feeds 4N words: every row, column,
# wrapped diagonal and wrapped anti-diagonal.  Each cell serves four words,
# and for odd N two words share at most one cell.

# %%
from aqfp_sc.experiments import rng_diagnostics
from aqfp_sc.rng import build_rng_matrix, cell_line_counts, max_pairwise_overlap

m = build_rng_matrix(5, seed=1)
print("words:", m.n_words, " JJ cost:", m.jj_count)
print("lines per cell:\n", cell_line_counts(m))
print("largest overlap between two words:", max_pairwise_overlap(m))
print("even N=4 overlap:", max_pairwise_overlap(build_rng_matrix(4)))

# %%
print("one step, 20 five-bit words:", m.step())

# %% [markdown]
# Diagnostics over 10^5 cycles: the word bias is close to 1/2, and two words
# sharing one cell in the same bit position correlate at about 1/N.

# %%
d = rng_diagnostics(5, 100_000, seed=2)
print("bias range:", d.bias.min().round(4), d.bias.max().round(4))
print("max bit-aligned correlation:", round(d.max_bit_correlation, 4), " bound 1/N + 0.02 =", 1 / 5 + 0.02)
print("max correlation of word values:", round(d.max_value_correlation, 4))
