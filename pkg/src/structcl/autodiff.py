"""Minimal reverse-mode autodiff over dense 2-D float64 arrays.

Operations executed inside ``with Tape() as tape:`` are recorded in order;
``backward(loss)`` replays the record in reverse and accumulates into
``Tensor.grad`` of every leaf with ``requires_grad``. Outside a tape the same
functions just compute values.

    >>> w = Tensor(np.ones((2, 2)), requires_grad=True)
    >>> with Tape():
    ...     loss = total(matmul(w, w))
    >>> backward(loss)
"""
from __future__ import annotations

import struct
import threading
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, StructCLError, TrainingError

L2_EPS = 1e-12


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "tape")

    def __init__(self, data, requires_grad=False, name=None):
        a = np.asarray(data, dtype=np.float64)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        elif a.ndim == 1:
            a = a.reshape(1, -1)
        elif a.ndim != 2:
            raise DimensionError(f"Tensor must be 2-D, got shape {a.shape}")
        self.data = a
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self.tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    def item(self) -> float:
        return float(self.data[0, 0])

    def zero_grad(self):
        self.grad = None

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}{self.data.shape}"


class Tape:
    """Ordered record of (output, inputs, backward_fn) entries."""

    _local = threading.local()

    def __init__(self):
        self.nodes = []
        self.outputs = set()

    def __enter__(self):
        stack = getattr(self._local, "stack", None)
        if stack is None:
            stack = self._local.stack = []
        stack.append(self)
        return self

    def __exit__(self, *exc):
        self._local.stack.pop()
        return False

    @classmethod
    def current(cls):
        stack = getattr(cls._local, "stack", None)
        return stack[-1] if stack else None

    def record(self, out, inputs, fn):
        self.nodes.append((out, inputs, fn))
        self.outputs.add(id(out))

    def backward(self, loss: Tensor):
        if loss.shape != (1, 1):
            raise StructCLError(f"backward needs a 1x1 loss, got {loss.shape}")
        if id(loss) not in self.outputs:
            raise StructCLError("loss was not produced on this tape")
        grads = {id(loss): np.ones((1, 1))}
        for out, inputs, fn in reversed(self.nodes):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for inp, gi in zip(inputs, fn(g)):
                if gi is None or not _tracked(inp, self):
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi
                if inp.requires_grad:
                    inp.grad = gi.copy() if inp.grad is None else inp.grad + gi
        return self


def _tracked(t, tape):
    return isinstance(t, Tensor) and (t.requires_grad or id(t) in tape.outputs)


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Accumulate d(loss)/d(leaf) into every leaf's ``.grad``."""
    tape = tape or loss.tape or Tape.current()
    if tape is None:
        raise StructCLError("no tape: run the forward pass inside 'with Tape()'")
    tape.backward(loss)


def _emit(value, inputs, fn, name=None):
    out = Tensor(value, name=name)
    tape = Tape.current()
    if tape is not None and any(_tracked(t, tape) for t in inputs):
        tape.record(out, inputs, fn)
        out.tape = tape
    return out


def _check(cond, op, msg):
    if not cond:
        raise DimensionError(f"{op}: {msg}")


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# primitives

def matmul(a: Tensor, b: Tensor) -> Tensor:
    _check(a.cols == b.rows, "matmul", f"{a.shape} @ {b.shape}")
    A, B = a.data, b.data
    return _emit(A @ B, (a, b), lambda g: (g @ B.T, A.T @ g))


def matmul_nt(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b.T`` without materializing the transpose node."""
    _check(a.cols == b.cols, "matmul_nt", f"{a.shape} @ {b.shape}.T")
    A, B = a.data, b.data
    return _emit(A @ B.T, (a, b), lambda g: (g @ B, g.T @ A))


def exp_similarity(a: Tensor, b: Tensor, scale: float = 1.0, shift: float = 0.0) -> Tensor:
    """``exp(scale * a @ b.T + shift)`` as one node, keeping only the NxM output."""
    _check(a.cols == b.cols, "exp_similarity", f"{a.shape} @ {b.shape}.T")
    A, B = a.data, b.data
    out = A @ B.T
    out *= scale
    out += shift
    np.exp(out, out=out)

    def fn(g):
        gs = g * out
        gs *= scale
        return gs @ B, gs.T @ A
    return _emit(out, (a, b), fn)


def sparse_matmul(m, b: Tensor) -> Tensor:
    """Constant sparse (or dense ndarray) matrix times a tensor."""
    _check(m.shape[1] == b.rows, "sparse_matmul", f"{m.shape} @ {b.shape}")
    mt = m.T.tocsr() if sp.issparse(m) else m.T
    return _emit(np.asarray(m @ b.data), (b,), lambda g: (np.asarray(mt @ g),))


def transpose(a: Tensor) -> Tensor:
    return _emit(a.data.T, (a,), lambda g: (g.T,))


def add(a: Tensor, b) -> Tensor:
    """Elementwise sum; ``b`` may be a 1xC row broadcast over rows or a 1x1 scalar."""
    b = _as_tensor(b)
    _check(b.shape == a.shape or (b.rows == 1 and b.cols in (a.cols, 1))
           or (b.cols == 1 and b.rows == a.rows),
           "add", f"cannot broadcast {b.shape} onto {a.shape}")
    shape = b.shape

    def fn(g):
        gb = g
        if shape[0] == 1 and g.shape[0] != 1:
            gb = gb.sum(axis=0, keepdims=True)
        if shape[1] == 1 and g.shape[1] != 1:
            gb = gb.sum(axis=1, keepdims=True)
        return g, gb
    return _emit(a.data + b.data, (a, b), fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, scale(b, -1.0))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check(a.shape == b.shape, "mul", f"{a.shape} vs {b.shape}")
    A, B = a.data, b.data
    return _emit(A * B, (a, b), lambda g: (g * B, g * A))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _emit(a.data * c, (a,), lambda g: (g * c,))


def div(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise ``a / b``; ``b`` may be an Nx1 column broadcast across columns."""
    _check(b.shape == a.shape or (b.cols == 1 and b.rows == a.rows),
           "div", f"{a.shape} / {b.shape}")
    A, B = a.data, b.data
    out = A / B

    def fn(g):
        gb = -g * out / B
        if gb.shape != B.shape:
            gb = gb.sum(axis=1, keepdims=True)
        return g / B, gb
    return _emit(out, (a, b), fn)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _emit(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _emit(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    A = a.data
    return _emit(np.log(A), (a,), lambda g: (g / A,))


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    _check(a.rows == b.rows, "concat_cols", f"row mismatch {a.shape} | {b.shape}")
    k = a.cols
    return _emit(np.hstack([a.data, b.data]), (a, b), lambda g: (g[:, :k], g[:, k:]))


def row_l2_normalize(a: Tensor, eps: float = L2_EPS) -> Tensor:
    """Divide each row by ``max(||row||, eps)``."""
    A = a.data
    norm = np.sqrt((A * A).sum(axis=1, keepdims=True))
    den = np.maximum(norm, eps)
    out = A / den
    active = norm > eps

    def fn(g):
        # below eps the map is linear (A / eps)
        proj = (g * out).sum(axis=1, keepdims=True)
        return (np.where(active, g - out * proj, g) / den,)
    return _emit(out, (a,), fn)


def row_sum(a: Tensor) -> Tensor:
    n = a.cols
    return _emit(a.data.sum(axis=1, keepdims=True), (a,),
                 lambda g: (np.repeat(g, n, axis=1),))


def col_sum(a: Tensor) -> Tensor:
    n = a.rows
    return _emit(a.data.sum(axis=0, keepdims=True), (a,),
                 lambda g: (np.repeat(g, n, axis=0),))


def masked_row_sum(a: Tensor, mask) -> Tensor:
    """Row sums of ``a * mask`` for a constant 0/1 mask (dense or sparse)."""
    _check(mask.shape == a.shape, "masked_row_sum", f"mask {mask.shape} vs {a.shape}")
    if sp.issparse(mask):
        m = mask.tocsr()
        vals = np.asarray(m.multiply(a.data).sum(axis=1))

        def fn(g):
            return (np.asarray(m.multiply(g).todense()),)
    else:
        m = np.asarray(mask, dtype=np.float64)
        vals = (a.data * m).sum(axis=1, keepdims=True)

        def fn(g):
            return (g * m,)
    return _emit(vals, (a,), fn)


def diagonal(a: Tensor) -> Tensor:
    _check(a.rows == a.cols, "diagonal", f"square input needed, got {a.shape}")
    n = a.rows

    def fn(g):
        d = np.zeros((n, n))
        d[np.arange(n), np.arange(n)] = g[:, 0]
        return (d,)
    return _emit(np.diag(a.data).reshape(-1, 1).copy(), (a,), fn)


def total(a: Tensor) -> Tensor:
    shape = a.shape
    return _emit(np.array([[a.data.sum()]]), (a,), lambda g: (np.full(shape, g[0, 0]),))


def mean(a: Tensor) -> Tensor:
    return scale(total(a), 1.0 / a.data.size)


def take_rows(a: Tensor, idx) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)
    shape = a.shape

    def fn(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)
    return _emit(a.data[idx], (a,), fn)


def pick(a: Tensor, cols) -> Tensor:
    """``out[i] = a[i, cols[i]]`` as an Nx1 column."""
    cols = np.asarray(cols, dtype=np.int64)
    _check(cols.shape[0] == a.rows, "pick", f"{cols.shape[0]} indices for {a.rows} rows")
    rows = np.arange(a.rows)
    shape = a.shape

    def fn(g):
        out = np.zeros(shape)
        out[rows, cols] = g[:, 0]
        return (out,)
    return _emit(a.data[rows, cols].reshape(-1, 1), (a,), fn)


def log_softmax(a: Tensor) -> Tensor:
    A = a.data
    shifted = A - A.max(axis=1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    soft = np.exp(out)
    return _emit(out, (a,), lambda g: (g - soft * g.sum(axis=1, keepdims=True),))


# ---------------------------------------------------------------------------
# optimizer

class Adam:
    """Adam with bias correction, operating in place on ``Tensor.data``."""

    def __init__(self, params, lr=5e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        grads = [np.zeros_like(p.data) if p.grad is None else p.grad for p in self.params]
        for p, g in zip(self.params, grads):
            if not np.all(np.isfinite(g)):
                bad = int((~np.isfinite(g)).sum())
                raise TrainingError(
                    f"non-finite gradient in {p.name or 'parameter'} {p.shape}: "
                    f"{bad} bad entries at step {self.t + 1}")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# ---------------------------------------------------------------------------
# checkpoints: b"SCLCKPT1", u32 count, then per tensor (u32 name_len, name,
# u32 rows, u32 cols); then all data as little-endian float64, row-major

MAGIC = b"SCLCKPT1"


def save_tensors(path, tensors: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(tensors)))
        for name, t in tensors.items():
            a = t.data if isinstance(t, Tensor) else np.asarray(t)
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<II", *a.shape))
        for t in tensors.values():
            a = t.data if isinstance(t, Tensor) else np.asarray(t)
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_tensors(path) -> dict:
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise StructCLError(f"{path}: not a checkpoint (bad magic)")
    off = 8
    (count,) = struct.unpack_from("<I", blob, off)
    off += 4
    table = []
    for _ in range(count):
        (ln,) = struct.unpack_from("<I", blob, off)
        off += 4
        name = blob[off:off + ln].decode("utf-8")
        off += ln
        r, c = struct.unpack_from("<II", blob, off)
        off += 8
        table.append((name, r, c))
    out = {}
    for name, r, c in table:
        n = r * c
        out[name] = np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(r, c).copy()
        off += 8 * n
    if off != len(blob):
        raise StructCLError(f"{path}: {len(blob) - off} trailing bytes")
    return out
