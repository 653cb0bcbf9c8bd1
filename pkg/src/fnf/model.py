"""Forecasting pipeline and its four backbone arrangements.

``I`` runs a temporal stack over patches of each variable independently.
``U`` runs one stack over the flattened (variable, patch) token axis.
``S`` runs the temporal stack and then a spatial stack over variables.
``P`` runs both stacks from the same embedding and merges them with a
learned sigmoid gate computed from the temporal output.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import nn
from . import tensor as T
from .block import FnfBlock
from .errors import ContractError, DimensionError
from .tensor import Tensor, as_tensor

VARIANTS = ("I", "U", "S", "P")


@dataclass(frozen=True)
class ModelHyper:
    L: int = 512
    H: int = 96
    M: int = 7
    P: int = 16
    S: int = 8
    D: int = 128
    layers: int = 3
    lambda_init: float = 0.01
    positional: bool = True

    def __post_init__(self):
        for key in ("L", "H", "M", "P", "S", "D", "layers"):
            if getattr(self, key) < 1:
                raise ContractError(f"hyperparameter {key} must be >= 1, got {getattr(self, key)}")
        if self.D % 2:
            raise ContractError(f"embedding width D must be even, got {self.D}")
        if self.lambda_init < 0:
            raise ContractError("lambda_init must be non-negative")
        nn.num_patches(self.L, self.P, self.S)

    @property
    def N(self) -> int:
        return nn.num_patches(self.L, self.P, self.S)

    def to_dict(self) -> dict:
        return asdict(self)


DESK_HYPER = dict(L=64, H=16, P=8, S=4, D=16, layers=1)


class FnfStack(nn.Module):
    """``layers`` x (block, residual, BatchNorm) over the token axis of (G, T, D)."""

    def __init__(self, hyper: ModelHyper, rng: np.random.Generator, token_axis: str):
        super().__init__()
        self.depth = hyper.layers
        for i in range(hyper.layers):
            self.add_module(f"block{i}", FnfBlock(hyper.D, rng, lambda_init=hyper.lambda_init,
                                                  token_axis=token_axis))
            self.add_module(f"norm{i}", nn.BatchNorm(hyper.D))

    def __call__(self, x, mode: str) -> Tensor:
        for i in range(self.depth):
            block = getattr(self, f"block{i}")
            norm = getattr(self, f"norm{i}")
            x = norm(T.add(x, block(x)), mode)
        return x


class GatedFusion(nn.Module):
    def __init__(self, d_model: int, rng: np.random.Generator):
        super().__init__()
        self.lin = nn.Linear(d_model, d_model, rng)

    def __call__(self, t1, t2) -> Tensor:
        return fuse(self, t1, t2)

    def alpha(self, t1) -> Tensor:
        return T.sigmoid(self.lin(t1))


def fuse(gate: GatedFusion, t1, t2) -> Tensor:
    """alpha * t1 + (1 - alpha) * t2 with alpha = sigmoid(affine(t1)) per feature."""
    t1, t2 = as_tensor(t1), as_tensor(t2)
    if t1.shape != t2.shape:
        raise DimensionError(f"fusion branches differ in shape: {t1.shape} vs {t2.shape}")
    a = gate.alpha(t1)
    return T.add(T.mul(a, T.sub(t1, t2)), t2)


class ForecastModel(nn.Module):
    def __init__(self, variant: str, hyper: ModelHyper, seed: int = 0):
        super().__init__()
        if variant not in VARIANTS:
            raise ContractError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        self.variant = variant
        self.hyper = hyper
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.embed = nn.Linear(hyper.P, hyper.D, rng)
        if variant == "U":
            self.joint = FnfStack(hyper, rng, "joint")
        else:
            self.temporal = FnfStack(hyper, rng, "patch")
        if variant in ("S", "P"):
            self.spatial = FnfStack(hyper, rng, "variable")
        if variant == "P":
            self.gate = GatedFusion(hyper.D, rng)
        self.proj = nn.Linear(hyper.N * hyper.D, hyper.H, rng)
        if hyper.positional:
            self.pe = nn.positional_encoding(hyper.N, hyper.D)
        else:
            self.pe = np.zeros((hyper.N, hyper.D))

    def __call__(self, x, mode: str = "eval", bypass_backbone: bool = False) -> Tensor:
        return forward(self, x, mode, bypass_backbone)

    def embed_input(self, xn) -> Tensor:
        patches = nn.patchify(xn, self.hyper.P, self.hyper.S)
        return T.add(self.embed(patches), self.pe)

    def backbone(self, e, mode: str) -> Tensor:
        b, m, n, d = e.shape
        if self.variant == "U":
            return T.reshape(self.joint(T.reshape(e, (b, m * n, d)), mode), (b, m, n, d))
        if self.variant == "I":
            return self._temporal(e, mode)
        if self.variant == "S":
            return self._spatial(self._temporal(e, mode), mode)
        return self.gate(self._temporal(e, mode), self._spatial(e, mode))

    def _temporal(self, e, mode):
        b, m, n, d = e.shape
        out = self.temporal(T.reshape(e, (b * m, n, d)), mode)
        return T.reshape(out, (b, m, n, d))

    def _spatial(self, e, mode):
        b, m, n, d = e.shape
        x = T.reshape(T.transpose(e, (0, 2, 1, 3)), (b * n, m, d))
        out = self.spatial(x, mode)
        return T.transpose(T.reshape(out, (b, n, m, d)), (0, 2, 1, 3))


def forward(model: ForecastModel, x, mode: str = "eval", bypass_backbone: bool = False) -> Tensor:
    """(B, L, M) -> (B, H, M) in the units of ``x``."""
    x = as_tensor(x)
    hp = model.hyper
    if x.ndim != 3 or x.shape[1] != hp.L or x.shape[2] != hp.M:
        raise ContractError(f"model expects (B, {hp.L}, {hp.M}) input, got {x.shape}")
    xn, mu, sigma = nn.instance_norm(x)
    e = model.embed_input(xn)
    if not bypass_backbone:
        e = model.backbone(e, mode)
    b, m, n, d = e.shape
    y = model.proj(T.reshape(e, (b, m, n * d)))
    y = T.transpose(y, (0, 2, 1))
    return nn.denormalize(y, mu, sigma)


def build_variant(variant: str, hyper: ModelHyper | None = None, seed: int = 0, **overrides) -> ForecastModel:
    if hyper is None:
        hyper = ModelHyper(**overrides)
    elif overrides:
        hyper = ModelHyper(**{**hyper.to_dict(), **overrides})
    return ForecastModel(variant, hyper, seed)


def expected_param_count(variant: str, hyper: ModelHyper) -> int:
    """Closed-form parameter audit (thresholds included, one per block)."""
    d = hyper.D
    per_layer = 7 * d * d + 7 * d + 1 + 2 * d
    stack = hyper.layers * per_layer
    count = (hyper.P * d + d) + (hyper.N * d * hyper.H + hyper.H)
    count += {"I": stack, "U": stack, "S": 2 * stack, "P": 2 * stack + d * d + d}[variant]
    return count
