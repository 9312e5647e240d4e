"""Dense tensors with reverse-mode automatic differentiation on a global tape."""

from __future__ import annotations

import numpy as np

FLOAT_DTYPES = (np.float32, np.float64)


class Tensor:
    """N-dimensional float array with an optional gradient slot.

    Data is row-major and treated as immutable once wrapped; new values are
    produced only through ops. `grad` is populated by `backward` and has the
    same shape as `data`.
    """

    __slots__ = ("data", "requires_grad", "grad", "_op_index")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._op_index = None  # position on the tape when produced by an op

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def accumulate_grad(self, g: np.ndarray):
        if g.shape != self.data.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match tensor shape {self.data.shape}"
            )
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}{flag})"

    # arithmetic sugar; the implementations live in kanconv.ops
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops

        return ops.add(self, other)

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops

        return ops.mul(self, other)

    def __truediv__(self, other):
        from . import ops

        return ops.div(self, other)

    def __neg__(self):
        from . import ops

        return ops.neg(self)


class Node:
    """One recorded operation: inputs, output, and its backward rule."""

    __slots__ = ("inputs", "out", "backward_fn", "name")

    def __init__(self, inputs, out, backward_fn, name):
        self.inputs = inputs
        self.out = out
        self.backward_fn = backward_fn
        self.name = name


class Tape:
    """Append-only record of ops in execution order (a valid topological order)."""

    __slots__ = ("nodes", "enabled")

    def __init__(self):
        self.nodes = []
        self.enabled = True

    def clear(self):
        self.nodes.clear()

    def __len__(self):
        return len(self.nodes)


_TAPE = Tape()


def tape() -> Tape:
    return _TAPE


class no_grad:
    """Context manager that disables tape recording (eval / finite differences)."""

    def __enter__(self):
        self._prev = _TAPE.enabled
        _TAPE.enabled = False
        return self

    def __exit__(self, *exc):
        _TAPE.enabled = self._prev
        return False


def record(out: Tensor, inputs, backward_fn, name: str) -> Tensor:
    """Register an op node if recording is on and any input requires grad."""
    if _TAPE.enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._op_index = len(_TAPE.nodes)
        _TAPE.nodes.append(Node(tuple(inputs), out, backward_fn, name))
    return out


def backward(root: Tensor):
    """Populate grads of every requires_grad tensor contributing to `root`.

    `root` must be a scalar (size 1) produced on the tape. Repeated calls
    accumulate into leaf grads unless they are zeroed in between.
    """
    if root.size != 1:
        raise ValueError(f"backward root must be scalar, got shape {root.shape}")
    if root._op_index is None:
        if not root.requires_grad:
            raise ValueError("backward root is not on the tape")
        root.accumulate_grad(np.ones_like(root.data))
        return
    root.accumulate_grad(np.ones_like(root.data))
    for node in reversed(_TAPE.nodes[: root._op_index + 1]):
        g = node.out.grad
        if g is None:
            continue
        grads = node.backward_fn(g)
        for t, gi in zip(node.inputs, grads):
            if gi is None or not t.requires_grad:
                continue
            t.accumulate_grad(gi)
        # op outputs are fully propagated at their own node; dropping the grad
        # here frees memory and keeps later backward calls from re-walking
        # this subgraph with stale values (leaf grads persist untouched)
        node.out.grad = None


def as_tensor(x, dtype=None, like: Tensor | None = None) -> Tensor:
    """Wrap a value as a constant Tensor, matching `like`'s dtype when given."""
    if isinstance(x, Tensor):
        return x
    if dtype is None and like is not None:
        dtype = like.dtype
    return Tensor(np.asarray(x, dtype=dtype))


def zeros(shape, dtype=np.float32, requires_grad=False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)


def ones(shape, dtype=np.float32, requires_grad=False) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)
