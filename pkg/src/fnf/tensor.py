"""Dense float64 tensors and the differentiable primitives built on them.

Every function here computes its result with numpy and, when a tape is
active and an input is tracked, records a backward rule. Complex values are
carried as a :class:`ComplexTensor` pair of real tensors, so every recorded
rule is real-valued.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import fft as _fft
from .errors import ContractError, DimensionError, NonFiniteError
from .tape import active_tape

_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_A = 0.044715


class Tensor:
    """Row-major float64 array that can take part in a recorded computation."""

    __array_priority__ = 1000
    is_leaf = False

    def __init__(self, data, *, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        if any(s < 1 for s in arr.shape):
            raise DimensionError(f"tensor extents must be positive, got {arr.shape}")
        _check_finite(arr, "Tensor")
        self.data = arr
        self.tracked = False
        self._tape = None
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        t = cls.__new__(cls)
        t.data = arr
        t.tracked = False
        t._tape = None
        t.name = None
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return slice_(self, idx)

    @property
    def T(self):
        return transpose(self)


class ComplexTensor:
    """Pair of equally shaped real tensors holding real and imaginary parts."""

    def __init__(self, re, im):
        re, im = as_tensor(re), as_tensor(im)
        if re.shape != im.shape:
            raise DimensionError(f"real part {re.shape} and imaginary part {im.shape} differ")
        self.re = re
        self.im = im

    @classmethod
    def from_numpy(cls, z) -> "ComplexTensor":
        z = np.asarray(z, dtype=np.complex128)
        return cls(Tensor(z.real), Tensor(z.imag))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    def numpy(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.re.data, self.im.data)

    def __repr__(self) -> str:
        return f"ComplexTensor(shape={self.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{op} produced non-finite values")


def _emit(op: str, data: np.ndarray, inputs: Sequence[Tensor], backward) -> Tensor:
    _check_finite(data, op)
    out = Tensor._wrap(data)
    tape = active_tape()
    if tape is not None and any(t.tracked for t in inputs):
        tape.record(op, inputs, (out,), backward)
    return out


def _emit_many(op: str, datas, inputs, backward) -> tuple[Tensor, ...]:
    outs = []
    for d in datas:
        _check_finite(d, op)
        outs.append(Tensor._wrap(d))
    tape = active_tape()
    if tape is not None and any(t.tracked for t in inputs):
        tape.record(op, inputs, outs, backward)
    return tuple(outs)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _broadcast_shapes(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# --- elementwise -----------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shapes("add", a, b)
    return _emit("add", a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shapes("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    """Hadamard (elementwise) product with broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shapes("mul", a, b)
    return _emit("mul", a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shapes("div", a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data

    def backward(g):
        ga = g / b.data
        return _unbroadcast(ga, a.shape), _unbroadcast(-ga * out, b.shape)

    return _emit("div", out, (a, b), backward)


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _emit("scale", a.data * c, (a,), lambda g: (g * c,))


def square(a) -> Tensor:
    a = as_tensor(a)
    return _emit("square", a.data * a.data, (a,), lambda g: (2.0 * g * a.data,))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    if (a.data < 0).any():
        raise ContractError("sqrt of a negative value")
    out = np.sqrt(a.data)

    def backward(g):
        safe = np.where(out > 0, out, 1.0)
        return (np.where(out > 0, 0.5 * g / safe, 0.0),)

    return _emit("sqrt", out, (a,), backward)


def abs_(a) -> Tensor:
    a = as_tensor(a)
    return _emit("abs", np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _emit("exp", out, (a,), lambda g: (g * out,))


def gelu(a) -> Tensor:
    """Tanh-approximated GELU."""
    a = as_tensor(a)
    x = a.data
    t = np.tanh(_GELU_C * (x + _GELU_A * (x * x * x)))
    out = 0.5 * x * (1.0 + t)

    def backward(g):
        du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du),)

    return _emit("gelu", out, (a,), backward)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _emit("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


# --- reductions --------------------------------------------------------------

def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _emit("sum", np.asarray(out), (a,), backward)


def reduce_mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes]))
    return scale(sum_(a, axes, keepdims), 1.0 / count)


def reduce_var(a, axis=None, keepdims: bool = False) -> Tensor:
    """Population variance (divides by the element count)."""
    a = as_tensor(a)
    centered = sub(a, reduce_mean(a, axis, keepdims=True))
    return reduce_mean(square(centered), axis, keepdims)


def reduce_std(a, axis=None, keepdims: bool = False) -> Tensor:
    return sqrt(reduce_var(a, axis, keepdims))


# --- shape algebra -----------------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"cannot reshape {a.shape} into {tuple(shape)}") from None
    return _emit("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None) -> Tensor:
    """Permute axes; the default swaps the last two."""
    a = as_tensor(a)
    if axes is None:
        axes = list(range(a.ndim))
        axes[-2], axes[-1] = axes[-1], axes[-2]
    axes = tuple(ax % a.ndim for ax in axes)
    inv = tuple(np.argsort(axes))
    return _emit("transpose", np.ascontiguousarray(a.data.transpose(axes)), (a,),
                 lambda g: (g.transpose(inv),))


def slice_(a, idx) -> Tensor:
    """Basic (view-style) indexing; integer-array indices go through :func:`take`."""
    a = as_tensor(a)
    out = np.array(a.data[idx])

    def backward(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return (full,)

    return _emit("slice", out, (a,), backward)


def take(a, indices, axis: int) -> Tensor:
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.intp)
    axis = axis % a.ndim
    out = np.take(a.data, indices, axis=axis)

    def backward(g):
        full = np.zeros_like(a.data)
        moved = np.moveaxis(full, axis, 0)
        gm = np.moveaxis(g, tuple(range(axis, axis + indices.ndim)), tuple(range(indices.ndim)))
        np.add.at(moved, indices, gm)
        return (full,)

    return _emit("take", out, (a,), backward)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = [t.shape for t in tensors]
        raise DimensionError(f"concat along axis {axis}: incompatible shapes {shapes}") from None
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _emit("concat", out, tensors, lambda g: tuple(np.split(g, splits, axis=axis)))


# --- linear algebra ----------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Batched matrix product ``[..., M, K] @ [..., K, N]`` with broadcast batch axes."""
    a, b = as_tensor(a), as_tensor(b)
    a_vec, b_vec = a.ndim == 1, b.ndim == 1
    A = a.data[None, :] if a_vec else a.data
    B = b.data[:, None] if b_vec else b.data
    if A.shape[-1] != B.shape[-2]:
        raise DimensionError(f"matmul: inner extents differ for shapes {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(A.shape[:-2], B.shape[:-2])
    except ValueError:
        raise DimensionError(f"matmul: batch extents of {a.shape} and {b.shape} do not broadcast") from None
    with np.errstate(over="ignore", invalid="ignore"):
        out = A @ B

    def backward(g):
        ga = g @ np.swapaxes(B, -1, -2)
        gb = np.swapaxes(A, -1, -2) @ g
        ga = _unbroadcast(ga, A.shape)
        gb = _unbroadcast(gb, B.shape)
        return ga.reshape(a.shape), gb.reshape(b.shape)

    if a_vec:
        out = out[..., 0, :]
    if b_vec:
        out = out[..., 0]
    if a_vec or b_vec:
        inner = backward

        def backward(g):
            if b_vec:
                g = g[..., None]
            if a_vec:
                g = g[..., None, :]
            return inner(g)

    return _emit("matmul", np.asarray(out), (a, b), backward)


# --- spectral ------------------------------------------------------------------

def rfft(x, axis: int = -1) -> ComplexTensor:
    """Real-input DFT along ``axis``, keeping floor(N/2)+1 bins."""
    x = as_tensor(x)
    axis = axis % x.ndim
    n = x.shape[axis]
    z = np.moveaxis(_fft.rfft(np.moveaxis(x.data, axis, -1)), -1, axis)
    w = _fft.hermitian_weights(n)

    def backward(g_re, g_im):
        # adjoint of the truncated DFT: dx = N * irfft((g_re + i g_im) / w)
        g = np.moveaxis(g_re + 1j * g_im, axis, -1) / w
        return (np.moveaxis(n * _fft.irfft(g, n), -1, axis),)

    re, im = _emit_many("rfft", (np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)), (x,), backward)
    return ComplexTensor(re, im)


def irfft(z: ComplexTensor, n: int, axis: int = -1) -> Tensor:
    """Inverse real DFT (1/N normalization) producing ``n`` samples along ``axis``."""
    axis = axis % len(z.shape)
    k = z.shape[axis]
    if k != n // 2 + 1:
        raise DimensionError(f"irfft: {k} modes along axis {axis} do not match signal length {n}")
    zz = np.moveaxis(z.re.data + 1j * z.im.data, axis, -1)
    out = np.moveaxis(_fft.irfft(zz, n), -1, axis)
    w = _fft.hermitian_weights(n)

    def backward(g):
        s = _fft.rfft(np.moveaxis(g, axis, -1)) * (w / n)
        s = np.moveaxis(s, -1, axis)
        return np.ascontiguousarray(s.real), np.ascontiguousarray(s.imag)

    return _emit("irfft", np.ascontiguousarray(out), (z.re, z.im), backward)


def softshrink(z: ComplexTensor, lam) -> ComplexTensor:
    """Complex soft-thresholding: zero where |z| <= lam, else shrink |z| by lam keeping phase.

    ``lam`` may be a float or a scalar tensor (e.g. a learnable parameter).
    """
    lam_t = as_tensor(lam)
    if lam_t.size != 1:
        raise ContractError(f"softshrink threshold must be a scalar, got shape {lam_t.shape}")
    lv = float(lam_t.data.reshape(()))
    if lv < 0:
        raise ContractError(f"softshrink threshold must be non-negative, got {lv}")
    re, im = z.re.data, z.im.data
    mag = np.hypot(re, im)
    keep = mag > lv
    safe = np.where(keep, mag, 1.0)
    factor = np.where(keep, 1.0 - lv / safe, 0.0)
    out_re, out_im = re * factor, im * factor

    def backward(g_re, g_im):
        proj = (g_re * re + g_im * im) / safe
        extra = np.where(keep, lv * proj / safe**2, 0.0)
        gr = g_re * factor + extra * re
        gi = g_im * factor + extra * im
        gl = -np.where(keep, proj, 0.0).sum()
        return gr, gi, np.full(lam_t.shape, gl)

    ore, oim = _emit_many("softshrink", (out_re, out_im), (z.re, z.im, lam_t), backward)
    return ComplexTensor(ore, oim)


def circular_shift(x, shift: int, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    return _emit("roll", np.roll(x.data, shift, axis=axis), (x,),
                 lambda g: (np.roll(g, -shift, axis=axis),))
