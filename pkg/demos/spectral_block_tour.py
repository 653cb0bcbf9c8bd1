"""
A tour of the Fourier neural filter block
=========================================

Run with ``python demos/spectral_block_tour.py``. Everything is seeded, so the
printed numbers repeat from run to run.
"""

import numpy as np

from fnf import fft
from fnf.block import FnfBlock, block_param_count, fnf_forward, spectral_branch

rng = np.random.default_rng(0)

# The transform underneath. Power-of-two lengths take the radix-2 path and
# other lengths fall back to a cached DFT matrix. Both agree with numpy here.
for n in (16, 63):
    x = rng.normal(size=n)
    print(f"n={n:3d}  |rfft - numpy| = {np.abs(fft.rfft(x) - np.fft.rfft(x)).max():.1e}")

# A block of width D holds 7D^2 + 7D weights plus one learnable threshold.
block = FnfBlock(8, rng)
print("parameters for D=8:", block.num_parameters(exclude_nonneg=True), "==", block_param_count(8))

# The block maps (batch, tokens, D) to the same shape.
h = rng.normal(size=(2, 16, 8))
print("output shape:", fnf_forward(block, h).shape)

# %%
# Locality of the linear path
# ---------------------------
# Without the activation and the threshold, the spectral branch multiplies
# every frequency by the same channel matrix. With purely real weights that is
# a per-token map, so nudging token 5 leaves the others untouched.
for layer in (block.clin1, block.clin2):
    layer.W_r.data[...] = 0.5 * rng.standard_normal(layer.W_r.shape)
    layer.W_i.data[...] = 0.0
block.lam.data[...] = 0.0

bumped = h.copy()
bumped[:, 5] += 1.0
diff = np.abs(spectral_branch(block, bumped, disable_nonlinear=True).data
              - spectral_branch(block, h, disable_nonlinear=True).data)
print("largest change away from token 5 (real weights):", f"{np.delete(diff, 5, axis=1).max():.1e}")

# An imaginary weight part adds a Hilbert-transform term, which reaches every token.
block.clin1.W_i.data[...] = 0.5 * rng.standard_normal(block.clin1.W_i.shape)
diff = np.abs(spectral_branch(block, bumped, disable_nonlinear=True).data
              - spectral_branch(block, h, disable_nonlinear=True).data)
print("largest change away from token 5 (complex weights):", f"{np.delete(diff, 5, axis=1).max():.2f}")

# %%
# Global mixing once the nonlinearity is on
# -----------------------------------------
block.lam.data[...] = 0.05
diff = np.abs(spectral_branch(block, bumped).data - spectral_branch(block, h).data)
print("fraction of other tokens that moved:", np.mean(np.delete(diff, 5, axis=1) > 1e-8))
