"""
A small reverse-mode autodiff over dense float64 numpy arrays.

Operations executed inside `with Tape() as tape:` are recorded in order; backward
replays them in reverse recording order. Outside a tape the same functions only
compute forward values, which is how inference runs.
"""
import contextvars
import logging
from collections.abc import Callable

import numpy as np
from scipy.special import expit

from errors import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

LOG_EPS = 1e-12

_current_tape: contextvars.ContextVar['Tape | None'] = contextvars.ContextVar('current_tape', default=None)


class Tensor:
    __slots__ = ('data', 'requires_grad', 'grad', 'name', '_parents', '_backward')

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._parents: tuple['Tensor', ...] = ()
        self._backward: Callable[[np.ndarray], tuple] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float('nan')

    def __repr__(self):
        return f"<Tensor shape:{self.shape} requires_grad:{self.requires_grad} name:{self.name!r}>"


class Tape:
    """Records operations for one training step. Confined to the thread that opened it."""

    def __init__(self):
        self.nodes: list[Tensor] = []
        self.leaves: list[Tensor] = []
        self._token = None

    def __enter__(self):
        self._token = _current_tape.set(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        _current_tape.reset(self._token)
        self._token = None

    def parameter(self, name: str, array: np.ndarray) -> Tensor:
        leaf = Tensor(array, requires_grad=True, name=name)
        self.leaves.append(leaf)
        return leaf

    def record(self, tensor: Tensor) -> None:
        self.nodes.append(tensor)

    def backward(self, loss: Tensor) -> dict[str, np.ndarray]:
        """Accumulates d(loss)/d(leaf) over all paths; unreachable leaves get zeros."""
        if loss.data.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            grad_out = grads.get(id(node))
            if grad_out is None or node._backward is None:
                continue
            for parent, grad in zip(node._parents, node._backward(grad_out)):
                if grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = grad

        result = {}
        for leaf in self.leaves:
            leaf.grad = grads.get(id(leaf), np.zeros_like(leaf.data))
            result[leaf.name] = leaf.grad
        logger.debug(f"Backward replayed {len(self.nodes)} nodes for {len(self.leaves)} leaves.")
        return result


def constant(array) -> Tensor:
    return Tensor(array, requires_grad=False)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else constant(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward: Callable) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("non-finite value")
    requires_grad = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires_grad)
    tape = _current_tape.get()
    if requires_grad and tape is not None:
        out._parents = parents
        out._backward = backward
        tape.record(out)
    return out


def _check_broadcast(a: Tensor, b: Tensor) -> None:
    # Only equal shapes, or a bias row (N,) / (1, N) added to every row of a (B, N).
    if a.shape == b.shape:
        return
    if a.data.ndim == 2 and b.shape in ((a.shape[1],), (1, a.shape[1])):
        return
    raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    return grad.sum(axis=0).reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b)
    return _make(a.data + b.data, (a, b), lambda g: (g, _unbroadcast(g, b.shape)))


def subtract(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b)
    return _make(a.data - b.data, (a, b), lambda g: (g, -_unbroadcast(g, b.shape)))


def hadamard(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return _make(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"shape mismatch: {a.shape} @ {b.shape}")
    return _make(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def concat_cols(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ShapeError(f"shape mismatch: {a.shape} | {b.shape}")
    split = a.shape[1]
    return _make(np.concatenate([a.data, b.data], axis=1), (a, b),
                 lambda g: (g[:, :split], g[:, split:]))


def slice_rows(a, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    if a.data.ndim != 2 or not 0 <= start < stop <= a.shape[0]:
        raise ShapeError(f"shape mismatch: rows [{start}, {stop}) of {a.shape}")

    def backward(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        return (full,)
    return _make(a.data[start:stop], (a,), backward)


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        data = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"shape mismatch: cannot reshape {a.shape} to {shape}") from e
    return _make(data, (a,), lambda g: (g.reshape(a.shape),))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = expit(a.data)
    return _make(s, (a,), lambda g: (g * s * (1.0 - s),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.data)
    return _make(t, (a,), lambda g: (g * (1.0 - t * t),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    return _make(np.maximum(a.data, 0.0), (a,), lambda g: (g * (a.data > 0),))


def abs_val(a) -> Tensor:
    a = as_tensor(a)
    # np.sign(0) == 0, the subgradient used at the kink
    return _make(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def pow_scalar(a, alpha: float) -> Tensor:
    a = as_tensor(a)
    integer_power = float(alpha).is_integer()
    if not integer_power and np.any(a.data < 0):
        raise ShapeError("pow_scalar with a non-integer exponent needs a non-negative base")

    if integer_power:
        out = np.power(a.data, alpha)

        def backward(g):
            return (g * alpha * np.power(a.data, alpha - 1),)
    else:
        positive = a.data > 0
        base = np.where(positive, a.data, 1.0)
        out = np.where(positive, np.power(base, alpha), 0.0)

        def backward(g):
            # base 0 is clamped to a zero gradient, even for alpha < 1
            return (g * np.where(positive, alpha * np.power(base, alpha - 1), 0.0),)
    return _make(out, (a,), backward)


def log_eps(a) -> Tensor:
    a = as_tensor(a)
    shifted = a.data + LOG_EPS
    with np.errstate(invalid='ignore', divide='ignore'):
        out = np.log(shifted)
    return _make(out, (a,), lambda g: (g / shifted,))


def sum_all(a) -> Tensor:
    a = as_tensor(a)
    return _make(np.asarray(a.data.sum()), (a,), lambda g: (np.full_like(a.data, float(g)),))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _make(a.data * c, (a,), lambda g: (g * c,))


def one_minus(a) -> Tensor:
    """1 - a, built from the primitives."""
    a = as_tensor(a)
    return add(scale(a, -1.0), constant(np.ones_like(a.data)))


def backward(loss: Tensor) -> dict[str, np.ndarray]:
    tape = _current_tape.get()
    if tape is None:
        raise RuntimeError("backward() called outside of a Tape context")
    return tape.backward(loss)


def grad_check(f: Callable[[dict[str, Tensor]], Tensor], theta: dict[str, np.ndarray],
               eps: float = 1e-6) -> float:
    """
    Largest element-wise relative error between backward() gradients and central
    differences (f(θ+ε) - f(θ-ε)) / 2ε, with denominator max(|analytic|, |numeric|, 1e-8).
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-7, 1e-3], got {eps}")

    with Tape() as tape:
        leaves = {name: tape.parameter(name, array) for name, array in theta.items()}
        loss = f(leaves)
        analytic = tape.backward(loss)

    def evaluate(arrays):
        return f({name: Tensor(array) for name, array in arrays.items()}).item()

    working = {name: np.array(array, dtype=np.float64, copy=True) for name, array in theta.items()}
    max_error = 0.0
    worst = None
    for name, array in working.items():
        flat = array.reshape(-1)
        grad = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            f_plus = evaluate(working)
            flat[i] = original - eps
            f_minus = evaluate(working)
            flat[i] = original

            numeric = (f_plus - f_minus) / (2.0 * eps)
            denominator = max(abs(grad[i]), abs(numeric), 1e-8)
            error = abs(grad[i] - numeric) / denominator
            if error > max_error:
                max_error = error
                worst = (name, i)

    logger.info(f"Gradient check: max relative error {max_error:.3e} (worst at {worst}).")
    return max_error
