"""A small define-by-run reverse-mode autodiff engine over float64 numpy arrays.

Only the primitives the relation model needs are provided. There is no
broadcasting: binary elementwise ops require identical shapes.

Scalars are 0-d arrays (shape ``()``); vectors used by the model are column
matrices of shape ``(d, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError, NumericError, ShapeError

_graph_stack: list["Graph"] = []


class Value:
    """A node in the computation graph.

    Leaves (parameters, inputs, constants) have ``recipe is None``. Every
    other node has ``recipe == (op_name, inputs)`` and a backward closure that
    pushes ``self.grad`` into its inputs' grads.
    """

    __slots__ = ("data", "_grad", "recipe", "_backward", "name")

    def __init__(self, data, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self._grad = None
        self.recipe: tuple[str, tuple[Value, ...]] | None = None
        self._backward = None
        self.name = name
        if _graph_stack:
            _graph_stack[-1].nodes.append(self)

    @classmethod
    def _make(cls, data, op: str, inputs: Sequence["Value"], backward) -> "Value":
        out = cls.__new__(cls)
        out.data = data
        out._grad = None
        out.recipe = (op, tuple(inputs))
        out._backward = backward
        out.name = None
        if _graph_stack:
            _graph_stack[-1].nodes.append(out)
        return out

    @property
    def grad(self) -> np.ndarray:
        # allocated on first touch; always shaped like data
        if self._grad is None:
            self._grad = np.zeros_like(self.data)
        return self._grad

    @grad.setter
    def grad(self, value):
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self.data.shape:
            raise ShapeError(f"grad shape {value.shape} does not match data shape {self.data.shape}")
        self._grad = value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def is_leaf(self) -> bool:
        return self.recipe is None

    def zero_grad(self) -> None:
        if self._grad is None:
            self._grad = np.zeros_like(self.data)
        else:
            self._grad[...] = 0.0

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        op = "leaf" if self.recipe is None else self.recipe[0]
        label = f" {self.name}" if self.name else ""
        return f"Value({op}{label}, shape={self.shape})"

    # operator sugar, no broadcasting
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


class Graph:
    """Records, in creation order, every Value built inside a ``with`` block.

    Creation order is a valid topological order since a node can only be
    built from nodes that already exist.
    """

    def __init__(self):
        self.nodes: list[Value] = []

    def __enter__(self):
        _graph_stack.append(self)
        return self

    def __exit__(self, *exc):
        _graph_stack.pop()
        return False


def _check_same_shape(op, a: Value, b: Value):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def matmul(a: Value, b: Value) -> Value:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward(out):
        a.grad += out.grad @ b.data.T
        b.grad += a.data.T @ out.grad

    return Value._make(a.data @ b.data, "matmul", (a, b), backward)


def transpose(a: Value) -> Value:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got {a.shape}")

    def backward(out):
        a.grad += out.grad.T

    return Value._make(a.data.T.copy(), "transpose", (a,), backward)


def add(a: Value, b: Value) -> Value:
    _check_same_shape("add", a, b)

    def backward(out):
        a.grad += out.grad
        b.grad += out.grad

    return Value._make(a.data + b.data, "add", (a, b), backward)


def sub(a: Value, b: Value) -> Value:
    _check_same_shape("sub", a, b)

    def backward(out):
        a.grad += out.grad
        b.grad -= out.grad

    return Value._make(a.data - b.data, "sub", (a, b), backward)


def mul(a: Value, b: Value) -> Value:
    _check_same_shape("mul", a, b)

    def backward(out):
        a.grad += out.grad * b.data
        b.grad += out.grad * a.data

    return Value._make(a.data * b.data, "mul", (a, b), backward)


def _sigmoid(x):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a: Value) -> Value:
    s = _sigmoid(a.data)

    def backward(out):
        a.grad += out.grad * s * (1.0 - s)

    return Value._make(s, "sigmoid", (a,), backward)


def tanh(a: Value) -> Value:
    t = np.tanh(a.data)

    def backward(out):
        a.grad += out.grad * (1.0 - t * t)

    return Value._make(t, "tanh", (a,), backward)


def one_minus(a: Value) -> Value:
    def backward(out):
        a.grad -= out.grad

    return Value._make(1.0 - a.data, "one_minus", (a,), backward)


def softplus(a: Value) -> Value:
    """log(1 + exp(x)), stable for large |x|."""

    def backward(out):
        a.grad += out.grad * _sigmoid(a.data)

    return Value._make(np.logaddexp(0.0, a.data), "softplus", (a,), backward)


def square(a: Value) -> Value:
    def backward(out):
        a.grad += out.grad * 2.0 * a.data

    return Value._make(a.data * a.data, "square", (a,), backward)


def scale(a: Value, c: float) -> Value:
    c = float(c)

    def backward(out):
        a.grad += c * out.grad

    return Value._make(c * a.data, "scale", (a,), backward)


def shift(a: Value, c: float) -> Value:
    """a + c for a Python constant c."""

    def backward(out):
        a.grad += out.grad

    return Value._make(a.data + float(c), "shift", (a,), backward)


def mask(a: Value, m: np.ndarray) -> Value:
    """Elementwise product with a constant array (dropout masks)."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != a.shape:
        raise ShapeError(f"mask: shape mismatch {a.shape} vs {m.shape}")

    def backward(out):
        a.grad += out.grad * m

    return Value._make(a.data * m, "mask", (a,), backward)


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "one_minus": one_minus,
    "softplus": softplus,
    "square": square,
}


def elementwise(kind: str, *operands: Value) -> Value:
    try:
        fn = _ELEMENTWISE[kind]
    except KeyError:
        raise ContractError(f"unknown elementwise op {kind!r}") from None
    return fn(*operands)


def softmax_rowvec(x: Value) -> Value:
    if x.data.ndim != 2 or x.shape[0] != 1 or x.shape[1] < 1:
        raise ShapeError(f"softmax_rowvec: expected shape (1, T>=1), got {x.shape}")
    z = x.data - x.data.max()
    e = np.exp(z)
    p = e / e.sum()

    def backward(out):
        g = out.grad
        x.grad += p * (g - np.sum(g * p))

    return Value._make(p, "softmax", (x,), backward)


def concat(parts: Sequence[Value]) -> Value:
    """Stack vectors end to end (1-d vectors or ``(d, 1)`` columns)."""
    if not parts:
        raise ShapeError("concat: no parts")
    ndims = {p.data.ndim for p in parts}
    if len(ndims) != 1:
        raise ShapeError(f"concat: mixed ranks {[p.shape for p in parts]}")
    for p in parts:
        if p.data.ndim == 2 and p.shape[1] != 1 or p.data.ndim > 2:
            raise ShapeError(f"concat: parts must be vectors, got {p.shape}")
    sizes = [p.shape[0] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(out):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            p.grad += out.grad[lo:hi]

    data = np.concatenate([p.data for p in parts], axis=0)
    return Value._make(data, "concat", parts, backward)


def hstack(cols: Sequence[Value]) -> Value:
    """Place ``(d, 1)`` columns side by side into a ``(d, T)`` matrix."""
    if not cols:
        raise ShapeError("hstack: no columns")
    d = cols[0].shape
    for c in cols:
        if c.shape != d or len(d) != 2 or d[1] != 1:
            raise ShapeError(f"hstack: columns must all be ({d[0]}, 1), got {c.shape}")

    def backward(out):
        for j, c in enumerate(cols):
            c.grad += out.grad[:, j : j + 1]

    return Value._make(np.hstack([c.data for c in cols]), "hstack", cols, backward)


def take_columns(w: Value, ids: Sequence[int]) -> Value:
    """Gather columns of ``w`` (the embedding lookup ``W_e w_t`` for one-hot w_t)."""
    ids = np.asarray(ids, dtype=np.int64)
    if w.data.ndim != 2:
        raise ShapeError(f"take_columns: expected a matrix, got {w.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= w.shape[1]):
        raise ShapeError(f"take_columns: ids out of range for {w.shape}")

    def backward(out):
        np.add.at(w.grad, (slice(None), ids), out.grad)

    return Value._make(w.data[:, ids], "take_columns", (w,), backward)


def column(x: Value, j: int) -> Value:
    if x.data.ndim != 2 or not 0 <= j < x.shape[1]:
        raise ShapeError(f"column: index {j} invalid for {x.shape}")

    def backward(out):
        x.grad[:, j : j + 1] += out.grad

    return Value._make(x.data[:, j : j + 1].copy(), "column", (x,), backward)


def pick(x: Value, i: int) -> Value:
    """Entry ``i`` of the flattened array, as a scalar."""
    flat = x.data.reshape(-1)
    if not 0 <= i < flat.size:
        raise ShapeError(f"pick: index {i} invalid for {x.shape}")

    def backward(out):
        x.grad.reshape(-1)[i] += out.grad

    return Value._make(np.array(flat[i]), "pick", (x,), backward)


def max_over(x: Value, indices: Sequence[int]) -> Value:
    """Maximum over the given flat indices; lowest index wins ties."""
    indices = list(indices)
    if not indices:
        raise ShapeError("max_over: empty index set")
    flat = x.data.reshape(-1)
    best = max(indices, key=lambda i: (flat[i], -i))

    def backward(out):
        x.grad.reshape(-1)[best] += out.grad

    return Value._make(np.array(flat[best]), "max", (x,), backward)


def sum_all(x: Value) -> Value:
    def backward(out):
        x.grad += out.grad

    return Value._make(np.array(x.data.sum()), "sum", (x,), backward)


def add_scalars(terms: Iterable[Value]) -> Value:
    terms = list(terms)
    if not terms:
        return Value(0.0)
    for t in terms:
        if t.data.size != 1:
            raise ShapeError(f"add_scalars: non-scalar term {t.shape}")

    def backward(out):
        for t in terms:
            t.grad += out.grad.reshape(t.shape)

    total = np.array(sum(float(t.data) for t in terms))
    return Value._make(total, "sum", terms, backward)


def _toposort(root: Value) -> list[Value]:
    order: list[Value] = []
    seen: set[int] = set()
    stack: list[tuple[Value, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        if node.recipe is not None:
            for parent in node.recipe[1]:
                if id(parent) not in seen:
                    stack.append((parent, False))
    return order


def backward(loss: Value, graph: Graph | None = None) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``.

    Intermediate grads are reset on each call, so calling twice without
    zeroing leaves doubles the leaf grads exactly.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward: loss must be scalar, got shape {loss.shape}")
    nodes = graph.nodes if graph is not None else _toposort(loss)
    for node in nodes:
        if node.recipe is not None:
            node._grad = None
    if loss.recipe is None:
        loss.grad += 1.0
        return
    loss.grad = np.ones_like(loss.data)
    for node in reversed(nodes):
        if node._backward is not None and node._grad is not None:
            node._backward(node)


@dataclass
class GradCheckReport:
    max_rel_error: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-4

    @property
    def passed(self) -> bool:
        return all(err < self.tol for err in self.max_rel_error.values())

    @property
    def failing(self) -> list[str]:
        return [k for k, err in self.max_rel_error.items() if not err < self.tol]

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)

    def summary(self) -> str:
        lines = [f"{name}\t{err:.3e}" for name, err in self.max_rel_error.items()]
        status = "PASS" if self.passed else "FAIL " + ",".join(self.failing)
        lines.append(f"max relative error {self.worst:.3e} (tol {self.tol:g}): {status}")
        return "\n".join(lines)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||) over a whole array; 0 when both vanish."""
    diff = float(np.linalg.norm(analytic - numeric))
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if scale == 0.0:
        return 0.0
    return diff / scale


def grad_check(
    f: Callable[[], Value],
    params: Mapping[str, Value],
    eps: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """Compare backprop grads of ``f()`` against central differences.

    ``f`` must rebuild the graph on each call and be deterministic.
    Every entry of every array in ``params`` is perturbed; the error
    reported for an array is norm-wise, see ``relative_error``.
    """
    if eps <= 0:
        raise ContractError("grad_check: eps must be positive")
    for p in params.values():
        p.zero_grad()
    loss = f()
    if not np.isfinite(loss.data).all():
        raise NumericError("grad_check: loss is not finite")
    backward(loss)
    analytic = {name: p.grad.copy() for name, p in params.items()}

    report = GradCheckReport(tol=tol)
    for name, p in params.items():
        if not np.isfinite(analytic[name]).all():
            raise NumericError(f"grad_check: non-finite analytic gradient in {name}")
        numeric = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(f().data)
            flat[i] = orig - eps
            down = float(f().data)
            flat[i] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NumericError(f"grad_check: non-finite loss while perturbing {name}")
            num_flat[i] = (up - down) / (2.0 * eps)
        report.max_rel_error[name] = relative_error(analytic[name], numeric)
    for p in params.values():
        p.zero_grad()
    return report
