"""
Checking gradients and saving a model
=====================================

The autodiff tape records each operation once. ``value_and_grad`` plays it
backwards, and ``grad_check`` compares the result with central differences.
"""

import tempfile
from pathlib import Path

import numpy as np

from fnf import tensor as T
from fnf.autodiff import Parameter, grad_check, value_and_grad
from fnf.checkpoint import load_checkpoint, save_checkpoint
from fnf.diagnostics import model_grad_check
from fnf.model import build_variant

rng = np.random.default_rng(1)

# A small objective built by hand: sum of gelu(x @ w).
x = Parameter(rng.normal(size=(3, 4)))
w = Parameter(rng.normal(size=(4, 2)))
loss = lambda: T.sum_(T.gelu(T.matmul(x, w)))
value, (gx, gw) = value_and_grad(loss, [x, w])
print(f"loss {value:.4f}, |dL/dw| {np.abs(gw).sum():.4f}")
print(f"relative error against finite differences: {grad_check(loss, [x, w]):.1e}")

# The same check over every weight of a tiny four-variant model.
for variant in "IUSP":
    print(f"variant {variant}: {model_grad_check(variant):.1e}")

# %%
# Checkpoints are a small binary format: a JSON header with the variant and
# shape settings, then every named array as little-endian float64.
model = build_variant("S", L=64, H=16, M=3, P=8, S=4, D=16, layers=1, seed=4)
batch = rng.normal(size=(2, 64, 3))
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "s.ckpt"
    save_checkpoint(model, path)
    print("checkpoint bytes:", path.stat().st_size)
    restored = load_checkpoint(path)
print("restored forecast identical:", np.array_equal(model(batch).data, restored(batch).data))
