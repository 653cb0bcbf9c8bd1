"""Layers and stateless neural ops used by the forecasting pipeline."""
from __future__ import annotations

from typing import Iterator

import numpy as np

from . import tensor as T
from .autodiff import Parameter
from .errors import ContractError, DimensionError
from .tensor import ComplexTensor, Tensor, as_tensor

INSTANCE_NORM_EPS = 1e-5


class Module:
    """Container that registers parameters, buffers and sub-modules in assignment order."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})
        object.__setattr__(self, "_buffers", {})

    def __setattr__(self, key, value):
        if isinstance(value, Parameter):
            self._params[key] = value
            if value.name is None:
                value.name = key
        elif isinstance(value, Module):
            self._children[key] = value
        object.__setattr__(self, key, value)

    def register_buffer(self, key: str, value: np.ndarray) -> None:
        self._buffers[key] = None
        object.__setattr__(self, key, value)

    def add_module(self, key: str, module: "Module") -> None:
        setattr(self, key, module)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for k, p in self._params.items():
            yield prefix + k, p
        for k, m in self._children.items():
            yield from m.named_parameters(prefix + k + ".")

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for k in self._buffers:
            yield prefix + k, getattr(self, k)
        for k, m in self._children.items():
            yield from m.named_buffers(prefix + k + ".")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self, exclude_nonneg: bool = False) -> int:
        return sum(p.size for p in self.parameters() if not (exclude_nonneg and p.nonneg))

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {k: p.data for k, p in self.named_parameters()}
        state.update(dict(self.named_buffers()))
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = self.state_dict()
        missing = set(own) - set(state)
        extra = set(state) - set(own)
        if missing or extra:
            raise DimensionError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for k, p in self.named_parameters():
            if state[k].shape != p.shape:
                raise DimensionError(f"{k}: expected shape {p.shape}, got {state[k].shape}")
            p.data[...] = state[k]
        for k, _ in self.named_buffers():
            owner, attr = self._resolve(k)
            current = getattr(owner, attr)
            if state[k].shape != current.shape:
                raise DimensionError(f"{k}: expected shape {current.shape}, got {state[k].shape}")
            current[...] = state[k]

    def _resolve(self, dotted: str):
        *path, attr = dotted.split(".")
        owner = self
        for part in path:
            owner = owner._children[part]
        return owner, attr


def xavier_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


class Linear(Module):
    """y = x W^T + b with W of shape (out, in)."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.W = Parameter(xavier_uniform(rng, out_features, in_features))
        self.b = Parameter(np.zeros(out_features))

    def __call__(self, x) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.in_features:
            raise DimensionError(f"Linear expects last extent {self.in_features}, got shape {x.shape}")
        return T.add(T.matmul(x, T.transpose(self.W)), self.b)


class ComplexLinear(Module):
    """Complex affine map with weights shared across every leading index."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, std: float = 0.02):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.W_r = Parameter(std * rng.standard_normal((out_features, in_features)))
        self.W_i = Parameter(std * rng.standard_normal((out_features, in_features)))
        self.b_r = Parameter(std * rng.standard_normal(out_features))
        self.b_i = Parameter(std * rng.standard_normal(out_features))

    def __call__(self, z: ComplexTensor) -> ComplexTensor:
        return complex_linear(self, z)


def complex_linear(layer: ComplexLinear, z: ComplexTensor) -> ComplexTensor:
    if z.shape[-1] != layer.in_features:
        raise DimensionError(f"ComplexLinear expects last extent {layer.in_features}, got shape {z.shape}")
    wr_t, wi_t = T.transpose(layer.W_r), T.transpose(layer.W_i)
    re = T.add(T.sub(T.matmul(z.re, wr_t), T.matmul(z.im, wi_t)), layer.b_r)
    im = T.add(T.add(T.matmul(z.im, wr_t), T.matmul(z.re, wi_t)), layer.b_i)
    return ComplexTensor(re, im)


gelu = T.gelu
softshrink = T.softshrink


def complex_gelu(z: ComplexTensor) -> ComplexTensor:
    return ComplexTensor(T.gelu(z.re), T.gelu(z.im))


def instance_norm(x, eps: float = INSTANCE_NORM_EPS):
    """Per-instance, per-variable standardization over the time axis of (B, L, M).

    Returns ``(xn, mu, sigma)`` with ``mu``/``sigma`` of shape (B, 1, M);
    ``eps`` is added to sigma, not to the variance.
    """
    x = as_tensor(x)
    if x.ndim != 3:
        raise DimensionError(f"instance_norm expects (B, L, M), got {x.shape}")
    mu = T.reduce_mean(x, axis=1, keepdims=True)
    sigma = T.reduce_std(x, axis=1, keepdims=True)
    xn = T.div(T.sub(x, mu), T.add(sigma, eps))
    return xn, mu, sigma


def denormalize(y, mu, sigma, eps: float = INSTANCE_NORM_EPS) -> Tensor:
    return T.add(T.mul(y, T.add(sigma, eps)), mu)


def num_patches(length: int, patch_len: int, stride: int) -> int:
    if patch_len < 1 or stride < 1:
        raise ContractError(f"patch length and stride must be >= 1, got P={patch_len}, S={stride}")
    if length < patch_len:
        raise ContractError(f"series length {length} is shorter than patch length {patch_len}")
    return (length - patch_len) // stride + 1


def patch_indices(length: int, patch_len: int, stride: int) -> np.ndarray:
    n = num_patches(length, patch_len, stride)
    return np.arange(n)[:, None] * stride + np.arange(patch_len)[None, :]


def patchify(x, patch_len: int, stride: int) -> Tensor:
    """(B, L, M) -> (B, M, N, P); the tail past the last full patch is dropped."""
    x = as_tensor(x)
    if x.ndim != 3:
        raise DimensionError(f"patchify expects (B, L, M), got {x.shape}")
    idx = patch_indices(x.shape[1], patch_len, stride)
    xt = T.transpose(x, (0, 2, 1))
    return T.take(xt, idx, axis=2)


def positional_encoding(n: int, d: int) -> np.ndarray:
    if d % 2:
        raise ContractError(f"positional encoding needs an even width, got {d}")
    pos = np.arange(n)[:, None]
    freq = 10000.0 ** (np.arange(0, d, 2) / d)
    pe = np.zeros((n, d))
    pe[:, 0::2] = np.sin(pos / freq)
    pe[:, 1::2] = np.cos(pos / freq)
    return pe


class BatchNorm(Module):
    """Per-feature normalization over every axis but the last.

    Running statistics use the biased (population) variance so that eval mode
    on the batch just seen reproduces train mode when momentum is 1.
    """

    def __init__(self, num_features: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.num_features = num_features
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(np.ones(num_features))
        self.beta = Parameter(np.zeros(num_features))
        self.register_buffer("running_mean", np.zeros(num_features))
        self.register_buffer("running_var", np.ones(num_features))

    def __call__(self, x, mode: str) -> Tensor:
        return batch_norm(self, x, mode)


def batch_norm(layer: BatchNorm, x, mode: str) -> Tensor:
    x = as_tensor(x)
    if x.shape[-1] != layer.num_features:
        raise DimensionError(f"BatchNorm over {layer.num_features} features got shape {x.shape}")
    axes = tuple(range(x.ndim - 1))
    if mode == "train":
        mean = T.reduce_mean(x, axes, keepdims=True)
        centered = T.sub(x, mean)
        var = T.reduce_mean(T.square(centered), axes, keepdims=True)
        m = layer.momentum
        layer.running_mean[...] = (1 - m) * layer.running_mean + m * mean.data.reshape(-1)
        layer.running_var[...] = (1 - m) * layer.running_var + m * var.data.reshape(-1)
        xhat = T.div(centered, T.sqrt(T.add(var, layer.eps)))
    elif mode == "eval":
        xhat = T.div(T.sub(x, layer.running_mean), np.sqrt(layer.running_var + layer.eps))
    else:
        raise ContractError(f"mode must be 'train' or 'eval', got {mode!r}")
    return T.add(T.mul(xhat, layer.gamma), layer.beta)
