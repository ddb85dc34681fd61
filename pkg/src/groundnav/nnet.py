"""Minimal neural toolkit: tape autodiff, GRU encoder, linear heads, Adam.

Everything runs on float64 numpy arrays, one sample at a time. The tape
is rebuilt per forward pass; backward() walks it in reverse topological
order and accumulates exact gradients.
"""

from __future__ import annotations

import math

import numpy as np


class NnetError(Exception):
    pass


class Tensor:
    """Node in the reverse-mode tape. Wraps a float64 numpy array."""

    __slots__ = ("value", "grad", "parents", "_backward", "requires_grad", "name")

    def __init__(self, value, parents=(), backward=None, requires_grad=False, name=""):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self.parents = parents
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    # -- operators ---------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)

        def bw(g, out):
            _accum(self, _unbroadcast(g, self.shape))
            _accum(other, _unbroadcast(g, other.shape))

        return Tensor(self.value + other.value, (self, other), bw)

    __radd__ = __add__

    def __neg__(self):
        def bw(g, out):
            _accum(self, -g)

        return Tensor(-self.value, (self,), bw)

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)

        def bw(g, out):
            _accum(self, _unbroadcast(g * other.value, self.shape))
            _accum(other, _unbroadcast(g * self.value, other.shape))

        return Tensor(self.value * other.value, (self, other), bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)

        def bw(g, out):
            _accum(self, _unbroadcast(g / other.value, self.shape))
            _accum(other, _unbroadcast(-g * self.value / other.value**2, other.shape))

        return Tensor(self.value / other.value, (self, other), bw)

    def matmul(self, other):
        """(m,n) @ (n,) -> (m,) or (m,n) @ (n,k) -> (m,k)."""
        other = as_tensor(other)

        def bw(g, out):
            if other.value.ndim == 1:
                _accum(self, np.outer(g, other.value))
                _accum(other, self.value.T @ g)
            else:
                _accum(self, g @ other.value.T)
                _accum(other, self.value.T @ g)

        return Tensor(self.value @ other.value, (self, other), bw)

    def __matmul__(self, other):
        return self.matmul(other)

    def sum(self):
        def bw(g, out):
            _accum(self, np.full(self.shape, g))

        return Tensor(self.value.sum(), (self,), bw)

    def dot(self, other):
        return (self * other).sum()

    def tanh(self):
        def bw(g, out):
            _accum(self, g * (1.0 - out.value**2))

        return Tensor(np.tanh(self.value), (self,), bw)

    def sigmoid(self):
        def bw(g, out):
            _accum(self, g * out.value * (1.0 - out.value))

        return Tensor(1.0 / (1.0 + np.exp(-self.value)), (self,), bw)

    def exp(self):
        def bw(g, out):
            _accum(self, g * out.value)

        return Tensor(np.exp(self.value), (self,), bw)

    def log(self):
        def bw(g, out):
            _accum(self, g / self.value)

        return Tensor(np.log(self.value), (self,), bw)

    def relu(self):
        def bw(g, out):
            _accum(self, g * (self.value > 0))

        return Tensor(np.maximum(self.value, 0.0), (self,), bw)

    def power(self, exponent):
        """Elementwise self**exponent with gradients to both; base must be > 0."""
        exponent = as_tensor(exponent)

        def bw(g, out):
            _accum(
                self,
                _unbroadcast(g * exponent.value * self.value ** (exponent.value - 1.0), self.shape),
            )
            _accum(exponent, _unbroadcast(g * out.value * np.log(self.value), exponent.shape))

        return Tensor(self.value**exponent.value, (self, exponent), bw)

    def pick(self, index: int):
        """Scalar element of a vector."""

        def bw(g, out):
            gv = np.zeros(self.shape)
            gv[index] = g
            _accum(self, gv)

        return Tensor(self.value[index], (self,), bw)

    def row(self, index: int):
        """One row of a matrix as a vector."""

        def bw(g, out):
            gm = np.zeros(self.shape)
            gm[index] = g
            _accum(self, gm)

        return Tensor(self.value[index], (self,), bw)

    def backward(self):
        if self.value.shape != ():
            raise NnetError("backward() requires a scalar loss root")
        order = []
        seen = set()

        def visit(node):
            stack = [(node, iter(node.parents))]
            while stack:
                cur, it = stack[-1]
                advanced = False
                for p in it:
                    if id(p) not in seen and p.requires_grad:
                        seen.add(id(p))
                        stack.append((p, iter(p.parents)))
                        advanced = True
                        break
                if not advanced:
                    order.append(cur)
                    stack.pop()

        seen.add(id(self))
        visit(self)
        for node in order:
            node.grad = np.zeros(node.shape)
        self.grad = np.array(1.0)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad, node)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x) -> Tensor:
    return Tensor(x)


def parameter(value, name="") -> Tensor:
    t = Tensor(value, requires_grad=True, name=name)
    t.grad = np.zeros(t.shape)
    return t


def _accum(node: Tensor, g):
    if node.requires_grad:
        if node.grad is None:
            node.grad = np.zeros(node.shape)
        node.grad = node.grad + g


def _unbroadcast(g, shape):
    g = np.asarray(g)
    if g.shape == tuple(shape):
        return g
    # sum over broadcast axes
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def log_softmax(logits: Tensor) -> Tensor:
    shift = float(np.max(logits.value))  # detached; constant offset
    z = (logits - shift).exp().sum().log()
    return logits - shift - z


def glorot(rng, fan_out, fan_in):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


class LinearHead:
    """Affine map y = W x + b."""

    def __init__(self, in_width, out_width, rng=None):
        rng = rng or np.random.default_rng(0)
        self.W = parameter(glorot(rng, out_width, in_width), "W")
        self.b = parameter(np.zeros(out_width), "b")

    def __call__(self, x: Tensor) -> Tensor:
        return self.W @ x + self.b

    def parameters(self):
        return [self.W, self.b]

    def state(self):
        return {"W": self.W.value.tolist(), "b": self.b.value.tolist()}

    def load_state(self, state):
        self.W.value = np.asarray(state["W"], dtype=float)
        self.b.value = np.asarray(state["b"], dtype=float)


class GruEncoder:
    """Gated recurrent encoder; returns the final hidden state.

    Recurrence per step (h0 = 0):
        z = sigmoid(Wz x + Uz h + bz)
        r = sigmoid(Wr x + Ur h + br)
        n = tanh(Wn x + Un (r * h) + bn)
        h' = (1 - z) * h + z * n
    """

    def __init__(self, input_width, hidden_width=8, rng=None):
        rng = rng or np.random.default_rng(0)
        self.input_width = input_width
        self.hidden_width = hidden_width
        mk = lambda fi: parameter(glorot(rng, hidden_width, fi))
        self.Wz, self.Uz = mk(input_width), mk(hidden_width)
        self.Wr, self.Ur = mk(input_width), mk(hidden_width)
        self.Wn, self.Un = mk(input_width), mk(hidden_width)
        self.bz = parameter(np.zeros(hidden_width))
        self.br = parameter(np.zeros(hidden_width))
        self.bn = parameter(np.zeros(hidden_width))

    def __call__(self, sequence) -> Tensor:
        """sequence: nonempty list of input vectors (Tensors or arrays)."""
        if len(sequence) == 0:
            raise NnetError("GRU requires a nonempty sequence")
        h = constant(np.zeros(self.hidden_width))
        for x in sequence:
            x = as_tensor(x)
            if x.shape != (self.input_width,):
                raise NnetError(
                    f"GRU input width {x.shape} does not match {self.input_width}"
                )
            z = (self.Wz @ x + self.Uz @ h + self.bz).sigmoid()
            r = (self.Wr @ x + self.Ur @ h + self.br).sigmoid()
            n = (self.Wn @ x + self.Un @ (r * h) + self.bn).tanh()
            h = (1.0 - z) * h + z * n
        return h

    def parameters(self):
        return [
            self.Wz, self.Uz, self.bz,
            self.Wr, self.Ur, self.br,
            self.Wn, self.Un, self.bn,
        ]

    def state(self):
        names = ["Wz", "Uz", "bz", "Wr", "Ur", "br", "Wn", "Un", "bn"]
        return {n: getattr(self, n).value.tolist() for n in names}

    def load_state(self, state):
        for n, v in state.items():
            getattr(self, n).value = np.asarray(v, dtype=float)


class AdamState:
    """Adam optimizer with bias correction over a fixed parameter list."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros(p.shape) for p in self.params]
        self.v = [np.zeros(p.shape) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = np.zeros(p.shape)

    def step(self):
        self.step_count += 1
        t = self.step_count
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NnetError(f"non-finite gradient in parameter {p.name or i}")
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g**2
            m_hat = self.m[i] / (1 - self.beta1**t)
            v_hat = self.v[i] / (1 - self.beta2**t)
            p.value = p.value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def finite_diff_check(loss_fn, params, step=1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn() must rebuild the forward graph from the current parameter
    values and return a scalar Tensor.
    """
    loss = loss_fn()
    for p in params:
        p.grad = np.zeros(p.shape)
    loss.backward()
    analytic = [np.array(p.grad, copy=True) for p in params]

    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.value.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn().item()
            flat[i] = orig - step
            down = loss_fn().item()
            flat[i] = orig
            num = (up - down) / (2 * step)
            ana = ga.ravel()[i]
            denom = max(abs(num), abs(ana))
            if denom > 1e-7:
                worst = max(worst, abs(num - ana) / denom)
    return worst
