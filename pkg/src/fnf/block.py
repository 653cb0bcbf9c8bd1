"""The Fourier neural filter block.

Input ``(..., T, D)`` is expanded to ``2D`` channels and split. The first
half feeds a GELU gate; the second half goes through the spectral path
rfft -> complex linear -> complex GELU -> complex linear -> softshrink ->
irfft along the token axis. The two halves are multiplied elementwise and
projected back to ``D`` channels.
"""
from __future__ import annotations

import numpy as np

from . import nn
from . import tensor as T
from .autodiff import Parameter
from .errors import ContractError, DimensionError
from .tensor import Tensor, as_tensor


class FnfBlock(nn.Module):
    def __init__(self, d_model: int, rng: np.random.Generator, *, lambda_init: float = 0.01,
                 token_axis: str = "patch"):
        super().__init__()
        self.d_model = d_model
        self.token_axis = token_axis
        self.expand = nn.Linear(d_model, 2 * d_model, rng)
        self.clin1 = nn.ComplexLinear(d_model, d_model, rng)
        self.clin2 = nn.ComplexLinear(d_model, d_model, rng)
        self.out = nn.Linear(d_model, d_model, rng)
        self.lam = Parameter(np.asarray(lambda_init, dtype=np.float64), nonneg=True)
        # set to a list to collect pre-threshold spectral magnitudes (kink diagnostics)
        self.probe = None

    def __call__(self, x) -> Tensor:
        return fnf_forward(self, x)


def spectral_branch(block: FnfBlock, h, disable_nonlinear: bool = False) -> Tensor:
    """Frequency-domain path over the token axis (second to last) of ``h``.

    With ``disable_nonlinear`` the complex GELU becomes the identity and the
    softshrink threshold is taken as zero, leaving a per-token linear map.
    """
    h = as_tensor(h)
    n_tokens = h.shape[-2]
    z = T.rfft(h, axis=-2)
    z = block.clin1(z)
    if not disable_nonlinear:
        z = nn.complex_gelu(z)
    z = block.clin2(z)
    if block.probe is not None:
        block.probe.append(z.magnitude())
    if not disable_nonlinear:
        z = T.softshrink(z, block.lam)
    return T.irfft(z, n_tokens, axis=-2)


def selective_activation(g, p) -> Tensor:
    """Elementwise gating of the global path ``p`` by the local path ``g``."""
    g, p = as_tensor(g), as_tensor(p)
    if g.shape != p.shape:
        raise DimensionError(f"gate {g.shape} and signal {p.shape} must have equal shapes")
    return T.mul(g, p)


def fnf_forward(block: FnfBlock, x) -> Tensor:
    x = as_tensor(x)
    if x.ndim < 2 or x.shape[-1] != block.d_model:
        raise DimensionError(f"FnfBlock(D={block.d_model}) expects (..., T, D), got {x.shape}")
    if x.shape[-2] < 1:
        raise ContractError("token axis must be non-empty")
    d = block.d_model
    e = block.expand(x)
    gate = T.gelu(e[..., :d])
    spec = spectral_branch(block, e[..., d:])
    return block.out(selective_activation(gate, spec))


def block_param_count(d_model: int) -> int:
    """Trainable entries of one block, threshold excluded."""
    return 7 * d_model * d_model + 7 * d_model
