# %% [markdown]
# # Bipolar stochastic streams
#
# A value x in [-1, 1] becomes a binary code, a comparator turns the code and
# a random word into one stream bit per cycle, and the stream decodes back to
# 2 * P(1) - 1.  Multiplication is a bitwise XNOR.

# %%
import numpy as np

from aqfp_sc.sc import decode_stream, encode_bipolar, generate_stream, neutral_noise, xnor_multiply

gen = np.random.default_rng(0)
n = 4096

code = encode_bipolar(0.4)
print("code for 0.4:", code.code, "of", 1 << code.n_bits)

# %%
a = generate_stream(encode_bipolar(0.6), gen.integers(0, 1024, n), n)
b = generate_stream(encode_bipolar(-0.5), gen.integers(0, 1024, n), n)
print("decoded a, b:", round(decode_stream(a), 4), round(decode_stream(b), 4))
print("a * b via XNOR:", round(decode_stream(xnor_multiply(a, b)), 4), "(float -0.3)")

# %% [markdown]
# The neutral-noise stream 1010... is the bipolar zero used to pad even widths.

# %%
print(neutral_noise(8), decode_stream(neutral_noise(8)))

# %% [markdown]
# Stream error shrinks like 1/sqrt(N):

# %%
for length in (128, 512, 2048, 8192):
    errs = [abs(decode_stream(generate_stream(code, gen.integers(0, 1024, length), length)) - 0.4) for _ in range(200)]
    print(f"N={length:5d}  mean |error| {np.mean(errs):.4f}")
