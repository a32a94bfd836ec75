"""Dense float64 tensors with a recording tape for reverse-mode gradients.

A :class:`Tape` is entered as a context manager; primitive applications
(see :mod:`kdfip.engine.ops`) involving tracked tensors are recorded on the
innermost active tape of the current thread. Tensors are immutable values;
independent tapes may run concurrently on separate threads.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional

import numpy as np


class EngineError(Exception):
    """Engine error state: non-finite values, invalid tape use, bad closure."""


class ShapeError(EngineError):
    """Operand shapes do not conform to a primitive's rule."""


def as_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not arr.flags.c_contiguous:
        arr = np.ascontiguousarray(arr)
    return arr


class _Node:
    __slots__ = ("op", "tape", "parents", "backward", "replay", "out", "name")

    def __init__(self, op, tape, parents, backward, replay, out, name=None):
        self.op = op
        self.tape = tape
        self.parents = parents
        self.backward = backward
        self.replay = replay
        self.out = out
        self.name = name


class Tensor:
    """Immutable dense value; ``node`` links it into a recording tape."""

    __slots__ = ("data", "node")

    def __init__(self, data, node: Optional[_Node] = None):
        self.data = as_array(data)
        self.node = node

    @staticmethod
    def of(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        kind = "tracked" if self.node is not None else "const"
        return f"Tensor(shape={self.data.shape}, {kind})"


_active = threading.local()


def _stack() -> list:
    if not hasattr(_active, "stack"):
        _active.stack = []
    return _active.stack


def active_tape() -> Optional["Tape"]:
    stack = _stack()
    return stack[-1] if stack else None


class Tape:
    """Ordered record of primitive applications plus a registry of named leaves.

    Replaying the records on identical leaves reproduces identical outputs
    bit-for-bit; ``backward`` visits nodes in reverse topological order
    exactly once.
    """

    def __init__(self):
        self._nodes: list[_Node] = []
        self._leaves: dict[str, _Node] = {}

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _stack().pop()
        if popped is not self:
            raise EngineError("tape context exited out of order")

    @property
    def n_ops(self) -> int:
        return sum(1 for n in self._nodes if n.op != "param")

    def param(self, name: str, array) -> Tensor:
        """Register a named leaf tensor that will receive gradients."""
        if name in self._leaves:
            raise EngineError(f"parameter {name!r} registered twice")
        data = as_array(array)
        node = _Node("param", self, (), None, None, data, name=name)
        self._nodes.append(node)
        self._leaves[name] = node
        return Tensor(data, node)

    def record(self, op, out_data, parent_tensors, backward, replay) -> _Node:
        # tensors recorded on a different tape act as constants here
        parents = tuple(
            t.node if (t.node is not None and t.node.tape is self) else None
            for t in parent_tensors
        )
        node = _Node(op, self, parents, backward, replay, out_data)
        self._nodes.append(node)
        return node

    def backward(self, output: Tensor) -> dict[str, np.ndarray]:
        """Gradients of a scalar output for every registered parameter.

        Parameters not on the path to ``output`` receive zero gradients.
        """
        if output.data.shape != ():
            raise ShapeError(
                f"backward: output must be a scalar, got shape {output.data.shape}"
            )
        if output.node is None or output.node.tape is not self:
            raise EngineError("backward: output was not produced on this tape")
        grads: dict[int, np.ndarray] = {id(output.node): np.ones((), dtype=np.float64)}
        for node in reversed(self._nodes):
            g = grads.pop(id(node), None)
            if g is None or node.op == "param":
                if node.op == "param" and g is not None:
                    grads[id(node)] = g
                continue
            partials = node.backward(g)
            for parent, pg in zip(node.parents, partials):
                if parent is None or pg is None:
                    continue
                prev = grads.get(id(parent))
                grads[id(parent)] = pg if prev is None else prev + pg
        out: dict[str, np.ndarray] = {}
        for name, leaf in self._leaves.items():
            g = grads.get(id(leaf))
            if g is None:
                g = np.zeros_like(leaf.out)
            elif not np.all(np.isfinite(g)):
                raise EngineError(f"backward: non-finite gradient for {name!r}")
            out[name] = g
        return out

    def replay(self) -> None:
        """Re-execute every recorded primitive; raises if any output differs bitwise."""
        for node in self._nodes:
            if node.op == "param":
                continue
            again = node.replay()
            if not np.array_equal(again, node.out):
                raise EngineError(f"replay: {node.op} did not reproduce its output")
