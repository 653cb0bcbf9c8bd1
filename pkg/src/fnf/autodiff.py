"""Parameters, the backward pass, and a finite-difference gradient checker."""
from __future__ import annotations

import itertools
from typing import Callable, Iterable

import numpy as np

from .errors import ContractError, TapeError
from .tape import Tape
from .tensor import Tensor

_ids = itertools.count()


class Parameter(Tensor):
    """Learnable leaf tensor with an accumulated gradient of the same shape.

    ``nonneg`` marks values the optimizer must clamp at zero after each step.
    """

    is_leaf = True

    def __init__(self, value, *, name: str | None = None, nonneg: bool = False):
        super().__init__(value, name=name)
        self.id = next(_ids)
        self.grad = np.zeros_like(self.data)
        self.tracked = True
        self.nonneg = nonneg

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter(id={self.id}, shape={self.shape}, name={self.name!r})"


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def backward(loss: Tensor) -> None:
    """Run reverse accumulation on the tape that recorded ``loss``."""
    tape = loss._tape
    if tape is None:
        raise TapeError("loss was not recorded on any tape")
    tape.backward(loss)


def value_and_grad(f: Callable[[], Tensor], params: list[Parameter]) -> tuple[float, list[np.ndarray]]:
    """Evaluate ``f`` under a fresh tape and return the loss and a copy of every gradient."""
    zero_grads(params)
    with Tape() as tape:
        loss = f()
    if loss.data.size != 1:
        raise ContractError(f"objective must be scalar, got shape {loss.shape}")
    if len(tape):
        tape.backward(loss)
    return loss.item(), [p.grad.copy() for p in params]


def numerical_grad(f: Callable[[], Tensor], p: Parameter, h: float = 1e-5) -> np.ndarray:
    """Central differences of the scalar ``f`` with respect to every entry of ``p``."""
    out = np.zeros_like(p.data)
    flat = p.data.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f().item()
        flat[i] = orig - h
        fm = f().item()
        flat[i] = orig
        out.reshape(-1)[i] = (fp - fm) / (2.0 * h)
    return out


def grad_check(f: Callable[[], Tensor], params: list[Parameter], h: float = 1e-5) -> float:
    """Max over entries of |analytic - numeric| / max(|numeric|, 1e-8)."""
    _, analytic = value_and_grad(f, params)
    worst = 0.0
    for p, a in zip(params, analytic):
        n = numerical_grad(f, p, h)
        err = np.abs(a - n) / np.maximum(np.abs(n), 1e-8)
        worst = max(worst, float(err.max()))
    return worst
