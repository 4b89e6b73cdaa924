"""Dense-matrix reverse-mode differentiation engine.

Everything is a 2-D float64 matrix. Operations build a computation graph
whose backward rules are themselves expressed through graph operations, so
gradients are differentiable again: taking the gradient of a discriminator
output with respect to its input yields a node that later parameter
gradients can flow through. That is exactly what the soft Lipschitz penalty
of the adversarial loss needs.

Scope is deliberately small: row-batched affine layers, leaky rectifier,
hyperbolic tangent, dropout-mask application, elementwise arithmetic,
column reductions, and column concatenation/slicing. No general
broadcasting beyond what a row-wise bias needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonFiniteError, ShapeError

__all__ = [
    "Tensor",
    "Tape",
    "constant",
    "leaf",
    "grad",
    "forward_affine",
    "leaky_rectifier",
    "tanh",
    "dropout",
    "DenseLayer",
    "LayerSpec",
    "ParamSet",
    "run_network",
    "run_network_values",
    "input_gradient",
    "AdamState",
    "adam_step",
    "make_rng",
]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based random source; every stochastic operation takes one of these."""
    return np.random.Generator(np.random.Philox(seed))


# --------------------------------------------------------------------------
# graph nodes


_ACTIVE_TAPES: list["Tape"] = []


class Tensor:
    """One node of the computation graph holding a (rows, cols) float64 matrix.

    Leaves are parameters or constants; interior nodes remember their parents
    and a backward rule. Any node whose value contains a NaN or infinity is
    rejected at construction time.
    """

    __slots__ = ("data", "parents", "op", "requires_grad", "_vjp", "_forward")

    def __init__(self, data, parents=(), op="leaf", requires_grad=False,
                 vjp=None, forward=None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D matrices, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite value produced by op '{op}'")
        self.data = arr
        self.parents = tuple(parents)
        self.op = op
        self.requires_grad = requires_grad or any(p.requires_grad for p in self.parents)
        self._vjp = vjp
        self._forward = forward
        if _ACTIVE_TAPES:
            _ACTIVE_TAPES[-1].nodes.append(self)

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.data.shape})"

    # convenience operators (hadamard semantics for *)
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)


class Tape:
    """Creation-ordered record of graph nodes, for replay and audit.

    Backward traversal happens in exact reverse topological order by
    construction (see ``grad``); ``replay`` recomputes every interior node
    from its parents and checks the stored values are reproduced bit-exactly.
    """

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPES.pop()
        return False

    def replay(self) -> bool:
        for node in self.nodes:
            if node._forward is None:
                continue
            redone = node._forward(*[p.data for p in node.parents])
            if redone.shape != node.data.shape or not (redone == node.data).all():
                return False
        return True


def constant(data) -> Tensor:
    """A graph leaf that never receives gradients."""
    return Tensor(data, op="const")


def leaf(data) -> Tensor:
    """A graph leaf that gradients are taken with respect to."""
    return Tensor(data, op="leaf", requires_grad=True)


def _as2d(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return a


# --------------------------------------------------------------------------
# primitives
#
# Each vjp receives the output adjoint as a Tensor and returns one adjoint
# Tensor (or None) per parent, built from these same primitives so that
# second-order gradients work.


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"add: {a.shape} vs {b.shape}")
    return Tensor(a.data + b.data, (a, b), "add",
                  vjp=lambda g: (g, g), forward=lambda x, y: x + y)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"sub: {a.shape} vs {b.shape}")
    return Tensor(a.data - b.data, (a, b), "sub",
                  vjp=lambda g: (g, neg(g)), forward=lambda x, y: x - y)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"mul: {a.shape} vs {b.shape}")
    return Tensor(a.data * b.data, (a, b), "mul",
                  vjp=lambda g: (mul(g, b), mul(g, a)), forward=lambda x, y: x * y)


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.data, (a,), "neg",
                  vjp=lambda g: (neg(g),), forward=lambda x: -x)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return Tensor(a.data * c, (a,), "scale",
                  vjp=lambda g: (scale(g, c),), forward=lambda x: x * c)


def shift(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return Tensor(a.data + c, (a,), "shift",
                  vjp=lambda g: (g,), forward=lambda x: x + c)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} vs {b.shape}")
    return Tensor(a.data @ b.data, (a, b), "matmul",
                  vjp=lambda g: (matmul(g, transpose(b)), matmul(transpose(a), g)),
                  forward=lambda x, y: x @ y)


def transpose(a: Tensor) -> Tensor:
    return Tensor(a.data.T.copy(), (a,), "transpose",
                  vjp=lambda g: (transpose(g),), forward=lambda x: x.T.copy())


def reciprocal(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore"):
        out = Tensor(1.0 / a.data, (a,), "reciprocal", forward=lambda x: 1.0 / x)
    out._vjp = lambda g: (neg(mul(g, mul(out, out))),)
    return out


def sqrt(a: Tensor) -> Tensor:
    with np.errstate(invalid="ignore"):
        out = Tensor(np.sqrt(a.data), (a,), "sqrt", forward=np.sqrt)
    out._vjp = lambda g: (scale(mul(g, reciprocal(out)), 0.5),)
    return out


def tanh(a: Tensor) -> Tensor:
    out = Tensor(np.tanh(a.data), (a,), "tanh", forward=np.tanh)
    # d tanh = 1 - tanh^2
    out._vjp = lambda g: (mul(g, shift(neg(mul(out, out)), 1.0)),)
    return out


def leaky_rectifier(a: Tensor, slope: float) -> Tensor:
    """x for x >= 0, slope*x otherwise; slope must lie in (0, 1)."""
    slope = float(slope)
    if not 0.0 < slope < 1.0:
        raise ConfigError(f"leaky rectifier slope must be in (0,1), got {slope}")
    mask = np.where(a.data >= 0.0, 1.0, slope)
    out = Tensor(a.data * mask, (a,), "leaky_rectifier",
                 forward=lambda x: x * np.where(x >= 0.0, 1.0, slope))
    mask_t = constant(mask)  # local derivative frozen at the forward point
    out._vjp = lambda g: (mul(g, mask_t),)
    return out


def sum_all(a: Tensor) -> Tensor:
    rows, cols = a.shape
    return Tensor([[a.data.sum()]], (a,), "sum_all",
                  vjp=lambda g: (broadcast_to(g, (rows, cols)),),
                  forward=lambda x: np.array([[x.sum()]]))


def sum_cols(a: Tensor) -> Tensor:
    """Row sums: (r, c) -> (r, 1)."""
    rows, cols = a.shape
    return Tensor(a.data.sum(axis=1, keepdims=True), (a,), "sum_cols",
                  vjp=lambda g: (broadcast_to(g, (rows, cols)),),
                  forward=lambda x: x.sum(axis=1, keepdims=True))


def sum_rows(a: Tensor) -> Tensor:
    """Column sums: (r, c) -> (1, c)."""
    rows, cols = a.shape
    return Tensor(a.data.sum(axis=0, keepdims=True), (a,), "sum_rows",
                  vjp=lambda g: (broadcast_to(g, (rows, cols)),),
                  forward=lambda x: x.sum(axis=0, keepdims=True))


def broadcast_to(a: Tensor, shape) -> Tensor:
    """Expand (1,1), (1,c) or (r,1) to (r, c); adjoint sums back over the new axes."""
    rows, cols = shape
    ar, ac = a.shape
    if (ar, ac) == (rows, cols):
        return a
    if ar not in (1, rows) or ac not in (1, cols):
        raise ShapeError(f"broadcast_to: {a.shape} -> {shape}")

    def back(g):
        if ar == 1 and ac == 1:
            return (sum_all(g),)
        if ar == 1:
            return (sum_rows(g),)
        return (sum_cols(g),)

    return Tensor(np.broadcast_to(a.data, (rows, cols)).copy(), (a,), "broadcast",
                  vjp=back, forward=lambda x: np.broadcast_to(x, (rows, cols)).copy())


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols: {a.shape} vs {b.shape}")
    na = a.shape[1]
    total = na + b.shape[1]
    return Tensor(np.concatenate([a.data, b.data], axis=1), (a, b), "concat_cols",
                  vjp=lambda g: (slice_cols(g, 0, na), slice_cols(g, na, total)),
                  forward=lambda x, y: np.concatenate([x, y], axis=1))


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    rows, cols = a.shape
    if not (0 <= start <= stop <= cols):
        raise ShapeError(f"slice_cols: [{start}:{stop}] out of {cols} columns")

    def back(g):
        parts = g
        if start > 0:
            parts = concat_cols(constant(np.zeros((rows, start))), parts)
        if stop < cols:
            parts = concat_cols(parts, constant(np.zeros((rows, cols - stop))))
        return (parts,)

    return Tensor(a.data[:, start:stop].copy(), (a,), "slice_cols",
                  vjp=back, forward=lambda x: x[:, start:stop].copy())


# --------------------------------------------------------------------------
# composites


def mean_all(a: Tensor) -> Tensor:
    return scale(sum_all(a), 1.0 / a.data.size)


def square(a: Tensor) -> Tensor:
    return mul(a, a)


def row_l2_norm(a: Tensor) -> Tensor:
    """Euclidean norm of each row: (r, c) -> (r, 1)."""
    return sqrt(sum_cols(square(a)))


def mean_squared_error(a: Tensor, b: Tensor) -> Tensor:
    return mean_all(square(sub(a, b)))


def forward_affine(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Row-batched dense layer: x @ weights + bias, bias broadcast per row."""
    if x.shape[1] != weights.shape[0]:
        raise ShapeError(f"affine input {x.shape} does not chain with weights {weights.shape}")
    if bias.shape != (1, weights.shape[1]):
        raise ShapeError(f"affine bias {bias.shape} does not match weights {weights.shape}")
    return add(matmul(x, weights), broadcast_to(bias, (x.shape[0], weights.shape[1])))


def dropout(x: Tensor, rate: float, mode: str, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout: zero each element with probability ``rate`` and scale
    survivors by 1/(1-rate) in ``train`` mode; identity in ``infer`` mode."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0,1), got {rate}")
    if mode not in ("train", "infer"):
        raise ConfigError(f"dropout mode must be 'train' or 'infer', got {mode!r}")
    if mode == "infer" or rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("train-mode dropout needs a random source")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, constant(mask))


# --------------------------------------------------------------------------
# backward pass


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def grad(output: Tensor, wrt: list[Tensor], seed: Tensor | None = None) -> list[Tensor]:
    """Adjoints of a scalar ``output`` with respect to each tensor in ``wrt``.

    The returned adjoints are graph nodes, so they can be differentiated
    again. Branches that cannot reach any ``wrt`` tensor are skipped.
    """
    if output.data.shape != (1, 1) and seed is None:
        raise ShapeError(f"grad needs a scalar output, got shape {output.shape}")
    order = _topo_order(output)
    wanted = {id(t) for t in wrt}

    # a node matters only if some wrt leaf is reachable from it
    needed: set[int] = set()
    for node in order:  # parents precede children
        if id(node) in wanted or any(id(p) in needed for p in node.parents):
            needed.add(id(node))

    adjoints: dict[int, Tensor] = {
        id(output): seed if seed is not None else constant(np.ones((1, 1)))
    }
    results: dict[int, Tensor] = {}
    for node in reversed(order):
        g = adjoints.pop(id(node), None)
        if g is None:
            continue
        if id(node) in wanted:
            results[id(node)] = g
        if node._vjp is None:
            continue
        for parent, pg in zip(node.parents, node._vjp(g)):
            if pg is None or id(parent) not in needed:
                continue
            acc = adjoints.get(id(parent))
            adjoints[id(parent)] = pg if acc is None else add(acc, pg)

    out = []
    for t in wrt:
        got = results.get(id(t))
        out.append(got if got is not None else constant(np.zeros(t.shape)))
    return out


# --------------------------------------------------------------------------
# networks


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: widths, activation, and dropout applied to its input."""

    in_dim: int
    out_dim: int
    activation: str | None = None  # None | "leaky_rectifier" | "tanh"
    slope: float = 0.2
    input_dropout: float = 0.0


@dataclass
class DenseLayer:
    weights: Tensor
    bias: Tensor
    activation: str | None = None
    slope: float = 0.2
    input_dropout: float = 0.0

    @property
    def spec(self) -> LayerSpec:
        return LayerSpec(self.weights.shape[0], self.weights.shape[1],
                         self.activation, self.slope, self.input_dropout)


@dataclass
class ParamSet:
    """All learnable weights and biases of one network, layer by layer."""

    layers: list[DenseLayer] = field(default_factory=list)

    @classmethod
    def from_specs(cls, specs: list[LayerSpec], rng: np.random.Generator) -> "ParamSet":
        layers = []
        prev_out = None
        for s in specs:
            if prev_out is not None and s.in_dim != prev_out:
                raise ShapeError(f"layer widths do not chain: {prev_out} -> {s.in_dim}")
            prev_out = s.out_dim
            bound = np.sqrt(6.0 / s.in_dim)  # uniform fan-in scaling
            w = leaf(rng.uniform(-bound, bound, size=(s.in_dim, s.out_dim)))
            b = leaf(np.zeros((1, s.out_dim)))
            layers.append(DenseLayer(w, b, s.activation, s.slope, s.input_dropout))
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weights.shape[1]

    def parameters(self) -> list[Tensor]:
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out

    def specs(self) -> list[LayerSpec]:
        return [layer.spec for layer in self.layers]


def run_network(params: ParamSet, x: Tensor, *, mode: str = "infer",
                rng: np.random.Generator | None = None) -> Tensor:
    """Graph-building forward pass over row-batched inputs."""
    h = x
    for layer in params.layers:
        if layer.input_dropout > 0.0:
            h = dropout(h, layer.input_dropout, mode, rng)
        h = forward_affine(h, layer.weights, layer.bias)
        if layer.activation == "leaky_rectifier":
            h = leaky_rectifier(h, layer.slope)
        elif layer.activation == "tanh":
            h = tanh(h)
        elif layer.activation is not None:
            raise ConfigError(f"unknown activation {layer.activation!r}")
    return h


def run_network_values(params: ParamSet, x: np.ndarray, *, mode: str = "infer",
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """Value-only forward pass; bit-identical to ``run_network`` on the same inputs."""
    h = _as2d(x)
    for layer in params.layers:
        if layer.input_dropout > 0.0 and mode == "train":
            if rng is None:
                raise ConfigError("train-mode dropout needs a random source")
            mask = (rng.random(h.shape) >= layer.input_dropout) / (1.0 - layer.input_dropout)
            h = h * mask
        h = h @ layer.weights.data + layer.bias.data
        if layer.activation == "leaky_rectifier":
            h = h * np.where(h >= 0.0, 1.0, layer.slope)
        elif layer.activation == "tanh":
            h = np.tanh(h)
    if not np.isfinite(h).all():
        raise NonFiniteError("non-finite value in network forward pass")
    return h


def input_gradient(network: ParamSet, x, *, mode: str = "infer",
                   rng: np.random.Generator | None = None):
    """Gradient of the summed network output with respect to its input.

    Returns ``(gradient, input_leaf, output)`` where the gradient is a graph
    node: differentiating anything built from it still reaches the network
    parameters, which is what the Lipschitz penalty requires.
    """
    x_leaf = leaf(_as2d(x))
    if x_leaf.shape[1] != network.in_dim:
        raise ShapeError(f"input width {x_leaf.shape[1]} does not match "
                         f"network input {network.in_dim}")
    out = run_network(network, x_leaf, mode=mode, rng=rng)
    g = grad(sum_all(out), [x_leaf])[0]
    return g, x_leaf, out


# --------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    """Per-parameter moment accumulators plus the shared step counter."""

    learning_rate: float
    beta1: float
    beta2: float
    epsilon: float
    step_count: int
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]

    @classmethod
    def for_params(cls, params: ParamSet, learning_rate: float,
                   beta1: float = 0.9, beta2: float = 0.999,
                   epsilon: float = 1e-8) -> "AdamState":
        tensors = params.parameters()
        return cls(learning_rate, beta1, beta2, epsilon, 0,
                   [np.zeros(t.shape) for t in tensors],
                   [np.zeros(t.shape) for t in tensors])


def adam_step(params: ParamSet, grads: list[np.ndarray], state: AdamState) -> None:
    """One bias-corrected moment-estimate update, in place."""
    tensors = params.parameters()
    if len(grads) != len(tensors):
        raise ShapeError(f"got {len(grads)} gradients for {len(tensors)} parameters")
    state.step_count += 1
    t = state.step_count
    lr, b1, b2, eps = state.learning_rate, state.beta1, state.beta2, state.epsilon
    for i, (p, g) in enumerate(zip(tensors, grads)):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m = state.first_moment[i]
        v = state.second_moment[i]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
        if not np.isfinite(p.data).all():
            raise NonFiniteError("parameter became non-finite during optimizer update")
