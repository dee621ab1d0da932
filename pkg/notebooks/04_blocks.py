# %% [markdown]
# # Feature extraction, pooling and categorization blocks
#
# Each block takes an (M, N) matrix of product streams.  Feature extraction
# sorts each column together with a sorted feedback vector and approximates
# clip(sum, -1, 1); pooling emits one 1 per M ones and approximates the mean;
# categorization is a chain of MAJ3 gates.

# %%
import numpy as np

from aqfp_sc.blocks import build_block_netlist, fe_reference, fe_run, majority_chain_bits, pool_reference, pool_run, simulate_block
from aqfp_sc.sc import decode_bits, decode_stream, encode_bipolar_array

gen = np.random.default_rng(3)
n = 1024


def streams(values):
    codes = encode_bipolar_array(values)
    return (gen.integers(0, 1024, (len(values), n)) < codes[:, None]).astype(np.uint8)


# %%
for v in ([0.5, 0.4, -0.3], [0.9, 0.8, 0.5], [-0.6, -0.2, 0.1], [0.2, -0.1, -0.2, 0.3, 0.1]):
    sp = streams(np.array(v))
    print(f"FE {v}: stream {decode_stream(fe_run(sp)):+.3f}  float {fe_reference(v):+.3f}")

# %% [markdown]
# The feedback can only hold surplus ones, never a deficit, so sums below
# (M+1)/2 ones per column lose their negative part.  Results for negative or
# small sums sit above the float value.

# %%
for v in ([0.25, 0.25, 0.25, 0.25], [0.6, 0.2, -0.4, 0.0]):
    sp = streams(np.array(v))
    print(f"pool {v}: stream {decode_stream(pool_run(sp)):+.3f}  float {pool_reference(v):+.3f}")

# %% [markdown]
# Gate-level netlists run cycle by cycle and match the behavioural models bit for bit.

# %%
for kind, m in (("fe", 9), ("pool", 4), ("cat", 9)):
    net = build_block_netlist(kind, m)
    sp = gen.integers(0, 2, (m, 256), dtype=np.uint8)
    gate = simulate_block(net, sp)
    ref = {"fe": lambda x: fe_run(x).bits, "pool": lambda x: pool_run(x).bits, "cat": majority_chain_bits}[kind](sp)
    print(kind, m, "nodes:", len(net.nodes), "match:", np.array_equal(gate, ref))

# %% [markdown]
# A MAJ3 chain weights late inputs far more than early ones:

# %%
values = np.zeros((9, 1))
values[0] = 1.0
print("first input +1, others 0 ->", decode_bits(majority_chain_bits(streams(values[:, 0]))).round(3))
values = np.zeros((9, 1))
values[-1] = 1.0
print("last input +1, others 0 ->", decode_bits(majority_chain_bits(streams(values[:, 0]))).round(3))
