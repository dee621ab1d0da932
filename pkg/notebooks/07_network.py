# %% [markdown]
# # A small network in both domains
#
# conv 3x3 (4 maps) -> average pool 2x2 -> 10-way categorization on 1x8x8
# inputs.  Weights are seeded synthetic values; no training is involved.

# %%
import numpy as np

from aqfp_sc.network import demo_network, float_forward, random_weights, run_network, synthetic_inputs

spec = demo_network()
weights = random_weights(spec, seed=7)
x = synthetic_inputs(spec, 40, seed=1)
print("activation shapes:", spec.shapes())

# %%
for n in (128, 512, 1024):
    res = run_network(spec, weights, x, seed=5, stream_length=n)
    print(f"N={n:5d}  top-1 agreement with float model {res.agreement:.0%}")

# %% [markdown]
# Layer by layer, the conv stage already drifts from its float value because
# the feature-extraction feedback cannot carry deficits.

# %%
from aqfp_sc.network import NetworkSpec

conv_only = NetworkSpec(spec.input_shape, [spec.layers[0]])
res = run_network(conv_only, weights, x[:5], seed=5)
print("conv mean |stream - float|:", np.abs(res.sc_scores - res.float_scores).mean().round(3))
print("conv mean |float|:", np.abs(res.float_scores).mean().round(3))
print(float_forward(spec, weights, x[0]).round(3))
