"""Dense float64 tensors with taped reverse-mode differentiation.

Everything downstream (the encoders, the fusion block, the contrastive
and reconstruction losses) is built from the fixed operation catalog in
this module.  Values are numpy arrays; while a :class:`Tape` is active
each operation records a backward closure, and ``Tape.backward`` replays
the records once in reverse execution order to accumulate gradients.
Tapes are single use and support first-order gradients only.

Domain guards follow one convention: ``log`` clamps its argument at
``EPS`` and cosine denominators use ``norm + EPS``, so a degenerate
embedding never turns into a NaN mid-training.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import expit

EPS = 1e-12

logger = logging.getLogger(__name__)


class ShapeError(ValueError):
    """Operand shapes do not conform to the requested operation."""


class Tensor:
    """Dense float64 array, optionally tracked for gradients.

    Tensors are value-like: operations never mutate their inputs.  The
    trainer rebinding ``data`` between optimization steps is the only
    sanctioned mutation.
    """

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scalar_mul(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (int, float)):
            raise TypeError("tensor division is only defined for python scalars")
        return scalar_mul(self, 1.0 / float(other))

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    # -- method forms of catalog ops ------------------------------------
    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self):
        return transpose(self)

    def sum(self, axis=None, keepdims: bool = False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def softplus(self):
        return softplus(self)

    def sigmoid(self):
        return sigmoid(self)

    def silu(self):
        return silu(self)

    def square(self):
        return square(self)

    def relu(self):
        return clamp_min(self, 0.0)

    def clamp_min(self, floor: float):
        return clamp_min(self, floor)

    def l2_norm(self, axis=None, keepdims: bool = False):
        return l2_norm(self, axis=axis, keepdims=keepdims)

    def narrow(self, axis: int, start: int, stop: int):
        return slice_axis(self, axis, start, stop)


def parameter(data) -> Tensor:
    """Leaf tensor that accumulates gradients."""
    return Tensor(data, requires_grad=True)


# ---------------------------------------------------------------------------
# tape

_TAPES: list["Tape"] = []


def active_tape():
    return _TAPES[-1] if _TAPES else None


class Tape:
    """Execution-ordered record of differentiable operations.

    Records append in forward order, so the list is already topologically
    sorted (every node's inputs precede it); ``backward`` sweeps it once
    in reverse.  A tape can run backward exactly once.
    """

    def __init__(self):
        self._records = []          # (out, inputs, backward_fn)
        self._produced: set[int] = set()
        self._leaves: dict[int, Tensor] = {}
        self._spent = False

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _TAPES.pop()
        return False

    def record(self, out: Tensor, inputs, backward_fn) -> None:
        self._records.append((out, inputs, backward_fn))
        self._produced.add(id(out))
        for t in inputs:
            if t.requires_grad and id(t) not in self._produced:
                self._leaves.setdefault(id(t), t)

    def backward(self, loss: Tensor, leaves=None) -> dict[int, Tensor]:
        """Accumulate d(loss)/d(leaf) for every leaf the tape touched.

        Returns a map from ``id(leaf)`` to the gradient tensor; leaves
        passed explicitly but never reached by the sweep get zeros.
        Gradients also land on each leaf's ``.grad`` slot.
        """
        if self._spent:
            raise RuntimeError("tape already consumed; build a new tape per forward pass")
        self._spent = True
        if loss.data.size != 1:
            raise ValueError(f"backward requires a scalar loss, got shape {loss.shape}")
        loss.grad = np.ones_like(loss.data)
        for out, _inputs, fn in reversed(self._records):
            if out.grad is not None:
                fn(out.grad)
        targets = list(leaves) if leaves is not None else list(self._leaves.values())
        grads: dict[int, Tensor] = {}
        for t in targets:
            g = t.grad if t.grad is not None else np.zeros_like(t.data)
            grads[id(t)] = Tensor(g)
        return grads


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    t.grad = g if t.grad is None else t.grad + g


def _make(data: np.ndarray, inputs, backward_fn) -> Tensor:
    out = Tensor(data)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(out, inputs, backward_fn)
    return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# binary ops

def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    data = a.data @ b.data

    def backward(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _make(data, (a, b), backward)


def _broadcast_binary(name, a, b, fwd, da, db) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = fwd(a.data, b.data)
    except ValueError:
        raise ShapeError(f"{name}: shapes {a.shape} and {b.shape} do not broadcast") from None

    def backward(g):
        _accum(a, _unbroadcast(da(g, a.data, b.data), a.shape))
        _accum(b, _unbroadcast(db(g, a.data, b.data), b.shape))

    return _make(data, (a, b), backward)


def add(a, b) -> Tensor:
    return _broadcast_binary("add", a, b, np.add,
                             lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b) -> Tensor:
    return _broadcast_binary("sub", a, b, np.subtract,
                             lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b) -> Tensor:
    return _broadcast_binary("elementwise-mul", a, b, np.multiply,
                             lambda g, x, y: g * y, lambda g, x, y: g * x)


def scalar_mul(a, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)
    data = a.data * c

    def backward(g):
        _accum(a, g * c)

    return _make(data, (a,), backward)


# ---------------------------------------------------------------------------
# structural ops

def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    shape = tuple(int(s) for s in shape)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view shape {a.shape} as {shape}") from None
    old = a.shape

    def backward(g):
        _accum(a, g.reshape(old))

    return _make(data, (a,), backward)


def transpose(a) -> Tensor:
    """Swap the last two axes; defined for 2-D and batched 3-D tensors."""
    a = _as_tensor(a)
    if a.ndim not in (2, 3):
        raise ShapeError(f"transpose: expected a 2-D or 3-D tensor, got shape {a.shape}")
    data = np.swapaxes(a.data, -1, -2)

    def backward(g):
        _accum(a, np.swapaxes(g, -1, -2))

    return _make(data, (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat: need at least one tensor")
    nd = tensors[0].ndim
    ax = axis if axis >= 0 else axis + nd
    for t in tensors[1:]:
        if t.ndim != nd or any(i != ax and t.shape[i] != tensors[0].shape[i] for i in range(nd)):
            raise ShapeError(
                f"concat: shape {t.shape} does not align with {tensors[0].shape} off axis {ax}")
    data = np.concatenate([t.data for t in tensors], axis=ax)
    sizes = [t.shape[ax] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * nd
            idx[ax] = slice(int(start), int(stop))
            _accum(t, g[tuple(idx)])

    return _make(data, tuple(tensors), backward)


def slice_axis(a, axis: int, start: int, stop: int) -> Tensor:
    a = _as_tensor(a)
    ax = axis if axis >= 0 else axis + a.ndim
    if not (0 <= ax < a.ndim):
        raise ShapeError(f"slice: axis {axis} out of range for shape {a.shape}")
    if not (0 <= start <= stop <= a.shape[ax]):
        raise ShapeError(f"slice: range [{start}, {stop}) invalid for shape {a.shape} axis {ax}")
    idx = [slice(None)] * a.ndim
    idx[ax] = slice(start, stop)
    idx = tuple(idx)
    data = a.data[idx]

    def backward(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        _accum(a, full)

    return _make(data, (a,), backward)


# ---------------------------------------------------------------------------
# reductions

def _norm_axis(axis, ndim):
    if axis is None:
        return None
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax if ax >= 0 else ax + ndim for ax in axis)


def _spread(g, shape, axis, keepdims):
    """Broadcast a reduced gradient back over the reduced axes."""
    if axis is None:
        return np.broadcast_to(g, shape)
    if not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def tensor_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    ax = _norm_axis(axis, a.ndim)
    data = a.data.sum(axis=ax, keepdims=keepdims)
    shape = a.shape

    def backward(g):
        _accum(a, _spread(g, shape, ax, keepdims))

    return _make(data, (a,), backward)


def tensor_mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    ax = _norm_axis(axis, a.ndim)
    data = a.data.mean(axis=ax, keepdims=keepdims)
    count = a.data.size if ax is None else int(np.prod([a.shape[i] for i in ax]))
    shape = a.shape

    def backward(g):
        _accum(a, _spread(g, shape, ax, keepdims) / count)

    return _make(data, (a,), backward)


# ---------------------------------------------------------------------------
# pointwise ops

def exp(a) -> Tensor:
    a = _as_tensor(a)
    data = np.exp(a.data)

    def backward(g):
        _accum(a, g * data)

    return _make(data, (a,), backward)


def log(a) -> Tensor:
    """Natural log with the argument clamped at ``EPS``."""
    a = _as_tensor(a)
    safe = np.maximum(a.data, EPS)
    data = np.log(safe)

    def backward(g):
        _accum(a, g / safe)

    return _make(data, (a,), backward)


def softplus(a) -> Tensor:
    a = _as_tensor(a)
    data = np.logaddexp(0.0, a.data)

    def backward(g):
        _accum(a, g * expit(a.data))

    return _make(data, (a,), backward)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    s = expit(a.data)

    def backward(g):
        _accum(a, g * s * (1.0 - s))

    return _make(s, (a,), backward)


def silu(a) -> Tensor:
    a = _as_tensor(a)
    s = expit(a.data)
    data = a.data * s

    def backward(g):
        _accum(a, g * (s * (1.0 + a.data * (1.0 - s))))

    return _make(data, (a,), backward)


def square(a) -> Tensor:
    a = _as_tensor(a)
    data = a.data * a.data

    def backward(g):
        _accum(a, g * (2.0 * a.data))

    return _make(data, (a,), backward)


def clamp_min(a, floor: float) -> Tensor:
    """Elementwise max with a constant; zero gradient on the clamped side."""
    a = _as_tensor(a)
    floor = float(floor)
    data = np.maximum(a.data, floor)

    def backward(g):
        _accum(a, g * (a.data > floor))

    return _make(data, (a,), backward)


def l2_norm(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    ax = _norm_axis(axis, a.ndim)
    data = np.sqrt(np.sum(a.data * a.data, axis=ax, keepdims=keepdims))
    shape = a.shape

    def backward(g):
        n = _spread(data, shape, ax, keepdims) if data.shape != shape else data
        _accum(a, _spread(g, shape, ax, keepdims) * a.data / (n + EPS))

    return _make(data, (a,), backward)


# ---------------------------------------------------------------------------
# similarity ops

def cosine_similarity_matrix(a, b) -> Tensor:
    """Pairwise row cosines: out[i, j] = cos(a_i, b_j).

    Row norms are guarded with ``+ EPS``; zero rows therefore yield zero
    similarities and are flagged in the log rather than raising.
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError(
            f"cosine-similarity-matrix: incompatible shapes {a.shape} and {b.shape}")
    raw_na = np.linalg.norm(a.data, axis=1)
    raw_nb = np.linalg.norm(b.data, axis=1)
    zeros = int((raw_na == 0.0).sum() + (raw_nb == 0.0).sum())
    if zeros:
        logger.warning("cosine similarity: %d zero-norm rows epsilon-guarded", zeros)
    na = raw_na + EPS
    nb = raw_nb + EPS
    ah = a.data / na[:, None]
    bh = b.data / nb[:, None]
    data = ah @ bh.T

    def backward(g):
        row = (g * data).sum(axis=1)
        _accum(a, (g @ bh - row[:, None] * ah) / na[:, None])
        col = (g * data).sum(axis=0)
        _accum(b, (g.T @ ah - col[:, None] * bh) / nb[:, None])

    return _make(data, (a, b), backward)


def cosine_similarity(u, v) -> Tensor:
    """Cosine of two vectors as a scalar tensor."""
    u, v = _as_tensor(u), _as_tensor(v)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ShapeError(f"cosine-similarity: expected equal-length vectors, "
                         f"got shapes {u.shape} and {v.shape}")
    m = cosine_similarity_matrix(reshape(u, (1, u.shape[0])), reshape(v, (1, v.shape[0])))
    return reshape(m, ())


# ---------------------------------------------------------------------------
# depthwise causal convolution

def conv1d_depthwise(x, kernel) -> Tensor:
    """Per-channel causal convolution along the last axis.

    ``x`` is (N, C, L), ``kernel`` is (C, k); tap j multiplies the input
    j steps in the past, so kernel [1, 0, ...] is the identity and no
    output position sees the future.
    """
    x, kernel = _as_tensor(x), _as_tensor(kernel)
    if x.ndim != 3 or kernel.ndim != 2 or kernel.shape[0] != x.shape[1]:
        raise ShapeError(
            f"conv1d-depthwise: expected x (N, C, L) with kernel (C, k), "
            f"got {x.shape} and {kernel.shape}")
    k = kernel.shape[1]
    length = x.shape[2]
    w = kernel.data
    data = np.zeros_like(x.data)
    for j in range(min(k, length)):
        if j == 0:
            data += w[:, 0][None, :, None] * x.data
        else:
            data[..., j:] += w[:, j][None, :, None] * x.data[..., :-j]

    def backward(g):
        gx = np.zeros_like(x.data)
        gw = np.zeros_like(w)
        for j in range(min(k, length)):
            if j == 0:
                gx += w[:, 0][None, :, None] * g
                gw[:, 0] = np.einsum("ncl,ncl->c", g, x.data)
            else:
                gx[..., :-j] += w[:, j][None, :, None] * g[..., j:]
                gw[:, j] = np.einsum("ncl,ncl->c", g[..., j:], x.data[..., :-j])
        _accum(x, gx)
        _accum(kernel, gw)

    return _make(data, (x, kernel), backward)


def state_scan(x, delta, b_seq, c_seq, a, skip) -> Tensor:
    """Input-dependent linear state recurrence along the token axis.

    ``x`` and ``delta`` are (N, L, C); ``b_seq`` and ``c_seq`` are
    (N, L, S); ``a`` is (C, S) per-channel decay rates (negative keeps
    the recurrence contractive); ``skip`` is (C,).  Per step each
    channel's state decays by exp(delta*a), absorbs delta*b*x, and the
    output token is <c, h> plus skip*x.

    The backward pass recomputes states from sqrt(L)-spaced checkpoints
    rather than taping every step, so live memory stays at O(sqrt(L))
    state slabs no matter the sequence length.

    Raises on a non-finite state, naming the offending step.
    """
    x, delta = _as_tensor(x), _as_tensor(delta)
    b_seq, c_seq = _as_tensor(b_seq), _as_tensor(c_seq)
    a, skip = _as_tensor(a), _as_tensor(skip)
    if x.ndim != 3:
        raise ShapeError(f"state-scan: expected x (N, L, C), got {x.shape}")
    n, length, channels = x.shape
    if delta.shape != x.shape:
        raise ShapeError(f"state-scan: delta shape {delta.shape} does not match x {x.shape}")
    if b_seq.ndim != 3 or b_seq.shape[:2] != (n, length):
        raise ShapeError(f"state-scan: b shape {b_seq.shape} does not match x {x.shape}")
    state = b_seq.shape[2]
    if c_seq.shape != b_seq.shape:
        raise ShapeError(f"state-scan: c shape {c_seq.shape} does not match b {b_seq.shape}")
    if a.shape != (channels, state):
        raise ShapeError(f"state-scan: a shape {a.shape}, expected {(channels, state)}")
    if skip.shape != (channels,):
        raise ShapeError(f"state-scan: skip shape {skip.shape}, expected {(channels,)}")

    xv, dv, bv, cv, av, sv = x.data, delta.data, b_seq.data, c_seq.data, a.data, skip.data
    inputs = (x, delta, b_seq, c_seq, a, skip)
    track = active_tape() is not None and any(t.requires_grad for t in inputs)
    stride = max(1, int(np.ceil(np.sqrt(length))))
    checkpoints = []                    # state entering step g*stride
    h = np.zeros((n, channels, state))
    y = np.empty_like(xv)
    for t in range(length):
        if track and t % stride == 0:
            checkpoints.append(h)
        dt = dv[:, t, :]
        h = np.exp(dt[:, :, None] * av) * h \
            + (dt * xv[:, t, :])[:, :, None] * bv[:, t, None, :]
        if not np.all(np.isfinite(h)):
            raise FloatingPointError(f"state-scan: non-finite state at step {t}")
        y[:, t, :] = np.einsum("ncs,ns->nc", h, cv[:, t, :]) + xv[:, t, :] * sv

    def backward(g):
        gx = np.zeros_like(xv)
        gdelta = np.zeros_like(dv)
        gb = np.zeros_like(bv)
        gc = np.zeros_like(cv)
        ga = np.zeros_like(av)
        gskip = np.zeros_like(sv)
        gh = np.zeros((n, channels, state))
        for seg in range(len(checkpoints) - 1, -1, -1):
            start = seg * stride
            stop = min(start + stride, length)
            states = [checkpoints[seg]]   # state entering each step of the segment
            decays = []
            h_run = checkpoints[seg]
            for t in range(start, stop):
                decay = np.exp(dv[:, t, :][:, :, None] * av)
                h_run = decay * h_run \
                    + (dv[:, t, :] * xv[:, t, :])[:, :, None] * bv[:, t, None, :]
                states.append(h_run)
                decays.append(decay)
            for t in range(stop - 1, start - 1, -1):
                i = t - start
                h_t, h_prev, decay = states[i + 1], states[i], decays[i]
                dt, xt = dv[:, t, :], xv[:, t, :]
                gy = g[:, t, :]
                gc[:, t, :] = np.einsum("nc,ncs->ns", gy, h_t)
                gskip += (gy * xt).sum(axis=0)
                gh = gh + gy[:, :, None] * cv[:, t, None, :]
                g_pre = gh * h_prev * decay          # grad at the exponent delta*a
                g_dx = np.einsum("ncs,ns->nc", gh, bv[:, t, :])
                gb[:, t, :] = np.einsum("ncs,nc->ns", gh, dt * xt)
                gx[:, t, :] = gy * sv + g_dx * dt
                gdelta[:, t, :] = g_dx * xt + np.einsum("ncs,cs->nc", g_pre, av)
                ga += np.einsum("ncs,nc->cs", g_pre, dt)
                gh = gh * decay
        _accum(x, gx)
        _accum(delta, gdelta)
        _accum(b_seq, gb)
        _accum(c_seq, gc)
        _accum(a, ga)
        _accum(skip, gskip)

    return _make(y, inputs, backward)


# ---------------------------------------------------------------------------
# named dispatch

_CATALOG = {
    "matmul": lambda inputs, attrs: matmul(*inputs),
    "add": lambda inputs, attrs: add(*inputs),
    "sub": lambda inputs, attrs: sub(*inputs),
    "elementwise-mul": lambda inputs, attrs: mul(*inputs),
    "scalar-mul": lambda inputs, attrs: scalar_mul(inputs[0], attrs["scalar"]),
    "reshape": lambda inputs, attrs: reshape(inputs[0], attrs["shape"]),
    "concat": lambda inputs, attrs: concat(list(inputs), attrs.get("axis", 0)),
    "slice": lambda inputs, attrs: slice_axis(inputs[0], attrs["axis"],
                                              attrs["start"], attrs["stop"]),
    "transpose": lambda inputs, attrs: transpose(inputs[0]),
    "sum": lambda inputs, attrs: tensor_sum(inputs[0], attrs.get("axis"),
                                            attrs.get("keepdims", False)),
    "mean": lambda inputs, attrs: tensor_mean(inputs[0], attrs.get("axis"),
                                              attrs.get("keepdims", False)),
    "exp": lambda inputs, attrs: exp(inputs[0]),
    "log": lambda inputs, attrs: log(inputs[0]),
    "softplus": lambda inputs, attrs: softplus(inputs[0]),
    "sigmoid": lambda inputs, attrs: sigmoid(inputs[0]),
    "silu": lambda inputs, attrs: silu(inputs[0]),
    "square": lambda inputs, attrs: square(inputs[0]),
    "clamp-min": lambda inputs, attrs: clamp_min(inputs[0], attrs["floor"]),
    "l2-norm": lambda inputs, attrs: l2_norm(inputs[0], attrs.get("axis"),
                                             attrs.get("keepdims", False)),
    "cosine-similarity-matrix": lambda inputs, attrs: cosine_similarity_matrix(
        inputs[0], inputs[1] if len(inputs) > 1 else inputs[0]),
    "conv1d-depthwise": lambda inputs, attrs: conv1d_depthwise(*inputs),
    "state-scan": lambda inputs, attrs: state_scan(*inputs),
}


def op_kinds() -> tuple[str, ...]:
    return tuple(sorted(_CATALOG))


def apply(kind: str, inputs, attrs=None) -> Tensor:
    """Run one catalog operation by name.

    ``inputs`` is a sequence of tensors (or array-likes), ``attrs`` the
    operation's keyword attributes, e.g. ``{"axis": 1}`` for concat.
    """
    if kind not in _CATALOG:
        raise ValueError(f"unknown op kind {kind!r}; known kinds: {', '.join(op_kinds())}")
    return _CATALOG[kind]([_as_tensor(t) for t in inputs], dict(attrs or {}))
