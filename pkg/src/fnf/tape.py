"""Recording side of reverse-mode differentiation.

A :class:`Tape` is activated with ``with Tape() as tape:``. While active,
every primitive applied to at least one tracked tensor appends a
:class:`Node` holding its inputs, outputs and vector-Jacobian rule. The
tape is consumed by exactly one :meth:`Tape.backward` call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, TapeError

_ACTIVE: list["Tape"] = []


def active_tape() -> "Tape | None":
    return _ACTIVE[-1] if _ACTIVE else None


@dataclass
class Node:
    op: str
    inputs: tuple
    outputs: tuple
    backward: Callable[..., Sequence[np.ndarray | None]]


class Tape:
    def __init__(self):
        self.nodes: list[Node] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        if self.consumed:
            raise TapeError("tape was already consumed by backward(); record a new one")
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.remove(self)

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, op: str, inputs, outputs, backward) -> None:
        if self.consumed:
            raise TapeError("cannot record onto a consumed tape")
        for out in outputs:
            out.tracked = True
            out._tape = self
        self.nodes.append(Node(op, tuple(inputs), tuple(outputs), backward))

    def backward(self, loss) -> None:
        """Accumulate d(loss)/d(param) into ``param.grad`` for every parameter reached."""
        if self.consumed:
            raise TapeError("tape already consumed; replaying requires re-recording the forward pass")
        if loss.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not self.nodes:
            raise TapeError("tape is empty; nothing to differentiate")
        self.consumed = True
        if getattr(loss, "_tape", None) is not self:
            # untracked loss: every gradient is zero
            return
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            gouts = [grads.pop(id(o), None) for o in node.outputs]
            if all(g is None for g in gouts):
                continue
            gouts = [np.zeros_like(o.data) if g is None else g for o, g in zip(node.outputs, gouts)]
            gins = node.backward(*gouts)
            for inp, g in zip(node.inputs, gins):
                if g is None or not inp.tracked:
                    continue
                if inp.is_leaf:
                    inp.grad += g
                else:
                    key = id(inp)
                    prev = grads.get(key)
                    grads[key] = g if prev is None else prev + g
        self.nodes.clear()
