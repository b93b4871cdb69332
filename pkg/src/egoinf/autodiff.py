"""Dense fp64 matrices with reverse-mode differentiation on an explicit tape.

Every trainable model in this package is built from the primitives below.
An operation computes its result eagerly in numpy and records a node
(inputs + backward rule) on the Tape; ``Tape.backward`` replays the
records once, in reverse, accumulating gradients. Matrices are always
2-D float64; scalars are 1x1 matrices.

Any op whose result contains NaN/Inf raises ``NumericsError`` at record
time, so divergence is caught where it happens.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, NumericsError

_CLIP = 1e-12  # probability clamp for cross-entropy terms


class Tensor:
    """A 2-D fp64 matrix living as one node on a Tape."""

    __slots__ = ("values", "idx", "parents", "grad_fn")

    def __init__(
        self,
        values: np.ndarray,
        idx: int,
        parents: tuple = (),
        grad_fn: Callable | None = None,
    ):
        self.values = values
        self.idx = idx
        self.parents = parents
        self.grad_fn = grad_fn

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, idx={self.idx})"


def _as_matrix(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    return arr


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Tape:
    """Ordered record of primitive ops; supports one reverse sweep.

    Nodes only ever reference earlier nodes, so iterating the record
    backwards visits each node exactly once with its output gradient
    fully accumulated.
    """

    def __init__(self):
        self._nodes: list[Tensor] = []
        self._leaves: dict[int, Tensor] = {}
        self._grads: list[np.ndarray | None] = []

    def __len__(self) -> int:
        return len(self._nodes)

    # -- node creation ----------------------------------------------------

    def leaf(self, values) -> Tensor:
        """Wrap an array as a leaf node. The same ndarray object is wrapped
        only once per tape, so fan-out gradients accumulate correctly."""
        if isinstance(values, np.ndarray) and id(values) in self._leaves:
            return self._leaves[id(values)]
        arr = _as_matrix(values)
        node = self._record(arr, (), None)
        # cache only when the node holds the caller's array itself; a
        # converted copy would let the original die and its id be reused
        if arr is values:
            self._leaves[id(values)] = node
        return node

    def _record(self, values: np.ndarray, parents: tuple, grad_fn) -> Tensor:
        if not np.isfinite(values).all():
            raise NumericsError("operation produced non-finite values")
        node = Tensor(values, len(self._nodes), parents, grad_fn)
        self._nodes.append(node)
        return node

    # -- primitives --------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.cols != b.rows:
            raise DimensionError(f"matmul: {a.shape} @ {b.shape}")
        av, bv = a.values, b.values

        def bw(g):
            return g @ bv.T, av.T @ g

        return self._record(av @ bv, (a, b), bw)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise DimensionError(f"add: {a.shape} + {b.shape}")
        return self._record(a.values + b.values, (a, b), lambda g: (g, g))

    def hadamard(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise DimensionError(f"hadamard: {a.shape} * {b.shape}")
        av, bv = a.values, b.values
        return self._record(av * bv, (a, b), lambda g: (g * bv, g * av))

    def transpose(self, a: Tensor) -> Tensor:
        return self._record(a.values.T.copy(), (a,), lambda g: (g.T,))

    def scale(self, a: Tensor, c: float) -> Tensor:
        c = float(c)
        return self._record(a.values * c, (a,), lambda g: (g * c,))

    def concat_cols(self, parts: Sequence[Tensor]) -> Tensor:
        if not parts:
            raise ConfigError("concat_cols needs at least one input")
        rows = parts[0].rows
        for p in parts:
            if p.rows != rows:
                raise DimensionError(
                    f"concat_cols: row mismatch {[p.shape for p in parts]}"
                )
        widths = [p.cols for p in parts]
        offsets = np.cumsum([0] + widths)

        def bw(g):
            return tuple(g[:, offsets[i]:offsets[i + 1]] for i in range(len(widths)))

        return self._record(
            np.hstack([p.values for p in parts]), tuple(parts), bw
        )

    def slice_rows(self, a: Tensor, start: int, stop: int) -> Tensor:
        if not (0 <= start < stop <= a.rows):
            raise DimensionError(f"slice_rows [{start}:{stop}] of {a.shape}")
        shape = a.shape

        def bw(g):
            full = np.zeros(shape)
            full[start:stop, :] = g
            return (full,)

        return self._record(a.values[start:stop, :].copy(), (a,), bw)

    def slice_cols(self, a: Tensor, start: int, stop: int) -> Tensor:
        if not (0 <= start < stop <= a.cols):
            raise DimensionError(f"slice_cols [{start}:{stop}] of {a.shape}")
        shape = a.shape

        def bw(g):
            full = np.zeros(shape)
            full[:, start:stop] = g
            return (full,)

        return self._record(a.values[:, start:stop].copy(), (a,), bw)

    def sum(self, a: Tensor) -> Tensor:
        shape = a.shape

        def bw(g):
            return (np.full(shape, g[0, 0]),)

        return self._record(a.values.sum().reshape(1, 1), (a,), bw)

    def mean(self, a: Tensor) -> Tensor:
        shape = a.shape
        size = a.values.size

        def bw(g):
            return (np.full(shape, g[0, 0] / size),)

        return self._record(a.values.mean().reshape(1, 1), (a,), bw)

    def sigmoid(self, a: Tensor) -> Tensor:
        y = _sigmoid(a.values)
        return self._record(y, (a,), lambda g: (g * y * (1.0 - y),))

    def relu(self, a: Tensor) -> Tensor:
        pos = a.values > 0
        return self._record(np.where(pos, a.values, 0.0), (a,), lambda g: (g * pos,))

    def elu(self, a: Tensor, alpha: float = 1.0) -> Tensor:
        x = a.values
        pos = x > 0
        y = np.where(pos, x, alpha * (np.exp(np.minimum(x, 0.0)) - 1.0))

        def bw(g):
            return (g * np.where(pos, 1.0, y + alpha),)

        return self._record(y, (a,), bw)

    def leaky_relu(self, a: Tensor, slope: float = 0.2) -> Tensor:
        x = a.values
        pos = x > 0
        y = np.where(pos, x, slope * x)
        return self._record(y, (a,), lambda g: (g * np.where(pos, 1.0, slope),))

    def clip(self, a: Tensor, lo: float, hi: float) -> Tensor:
        x = a.values
        inside = (x > lo) & (x < hi)
        return self._record(np.clip(x, lo, hi), (a,), lambda g: (g * inside,))

    def exp(self, a: Tensor) -> Tensor:
        y = np.exp(a.values)
        return self._record(y, (a,), lambda g: (g * y,))

    def row_softmax_masked(self, a: Tensor, mask: np.ndarray) -> Tensor:
        """Softmax per row restricted to mask=1 entries; masked entries are 0.

        Every row must have at least one unmasked entry.
        """
        m = np.asarray(mask)
        if m.shape != a.shape:
            raise DimensionError(f"row_softmax_masked: {a.shape} vs mask {m.shape}")
        keep = m != 0
        if not keep.any(axis=1).all():
            bad = int(np.flatnonzero(~keep.any(axis=1))[0])
            raise ConfigError(f"masked softmax: row {bad} fully masked")
        x = np.where(keep, a.values, -np.inf)
        x = x - x.max(axis=1, keepdims=True)
        e = np.where(keep, np.exp(x), 0.0)
        alpha = e / e.sum(axis=1, keepdims=True)

        def bw(g):
            dot = (g * alpha).sum(axis=1, keepdims=True)
            return (alpha * (g - dot),)

        return self._record(alpha, (a,), bw)

    def dropout(self, a: Tensor, p: float, rng: np.random.Generator | None) -> Tensor:
        """Zero entries with probability p and rescale survivors by 1/(1-p).

        rng=None means eval mode: the input is returned unchanged.
        """
        if not (0.0 <= p < 1.0):
            raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
        if rng is None or p == 0.0:
            return a
        keep = rng.random(a.shape) >= p
        factor = keep / (1.0 - p)
        return self._record(a.values * factor, (a,), lambda g: (g * factor,))

    def logsumexp(self, a: Tensor) -> Tensor:
        """log(sum(exp(entries))) over the whole matrix, as a 1x1 scalar."""
        x = a.values
        m = x.max()
        e = np.exp(x - m)
        s = e.sum()
        out = np.array([[m + np.log(s)]])
        soft = e / s
        return self._record(out, (a,), lambda g: (g[0, 0] * soft,))

    def gaussian_kl(self, mu: Tensor, logvar: Tensor) -> Tensor:
        """KL(N(mu, diag(exp(logvar))) || N(0, I)) summed over entries,
        divided by the number of rows (per-node average)."""
        if mu.shape != logvar.shape:
            raise DimensionError(f"gaussian_kl: {mu.shape} vs {logvar.shape}")
        n = mu.rows
        var = np.exp(logvar.values)
        val = 0.5 * (var + mu.values**2 - logvar.values - 1.0).sum() / n
        muv = mu.values

        def bw(g):
            return (g[0, 0] * muv / n, g[0, 0] * 0.5 * (var - 1.0) / n)

        return self._record(np.array([[val]]), (mu, logvar), bw)

    def bce_mean(
        self,
        pred: Tensor,
        target: np.ndarray,
        weights: np.ndarray,
        mask: np.ndarray,
    ) -> Tensor:
        """Weighted binary cross-entropy averaged over mask=1 entries.

        target, weights and mask are constants. Predictions are clamped
        away from {0, 1} before the logs.
        """
        t = np.asarray(target, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64)
        m = np.asarray(mask, dtype=np.float64)
        if not (pred.shape == t.shape == w.shape == m.shape):
            raise DimensionError(
                f"bce_mean: pred {pred.shape}, target {t.shape}, "
                f"weights {w.shape}, mask {m.shape}"
            )
        count = m.sum()
        if count <= 0:
            raise ConfigError("bce_mean: mask selects no entries")
        x = pred.values
        in_range = (x > _CLIP) & (x < 1.0 - _CLIP)
        p = np.clip(x, _CLIP, 1.0 - _CLIP)
        ce = -(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))
        val = (w * m * ce).sum() / count

        def bw(g):
            d = w * m * (-t / p + (1.0 - t) / (1.0 - p)) / count
            return (g[0, 0] * d * in_range,)

        return self._record(np.array([[val]]), (pred,), bw)

    # -- reverse sweep -----------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Accumulate gradients of a scalar loss into every reachable node."""
        if loss.shape != (1, 1):
            raise ConfigError(f"backward needs a scalar (1x1) loss, got {loss.shape}")
        grads: list[np.ndarray | None] = [None] * (loss.idx + 1)
        grads[loss.idx] = np.ones((1, 1))
        for node in reversed(self._nodes[: loss.idx + 1]):
            g = grads[node.idx]
            if g is None or node.grad_fn is None:
                continue
            for parent, pg in zip(node.parents, node.grad_fn(g)):
                if grads[parent.idx] is None:
                    grads[parent.idx] = pg
                else:
                    grads[parent.idx] = grads[parent.idx] + pg
        self._grads = grads

    def grad(self, ref: Tensor | np.ndarray) -> np.ndarray:
        """Gradient for a node or a leaf array after backward().

        Leaves untouched by the loss get a zero gradient of their shape.
        """
        if isinstance(ref, Tensor):
            node = ref
        else:
            node = self._leaves.get(id(ref))
            if node is None:
                raise KeyError("array was never wrapped as a leaf on this tape")
        if node.idx < len(self._grads) and self._grads[node.idx] is not None:
            return self._grads[node.idx]
        return np.zeros(node.shape)


def grad_check(
    f: Callable[[dict[str, np.ndarray]], tuple[float, dict[str, np.ndarray]]],
    params: dict[str, np.ndarray],
    step: float = 1e-5,
    tol: float = 1e-4,
):
    """Compare analytic gradients of f against central finite differences.

    f maps a dict of named matrices to (loss, gradient dict). Returns a
    GradCheckReport; ``passed`` is True when the max relative error over
    all coordinates stays within tol.
    """
    _, analytic = f(params)
    work = {k: v.copy() for k, v in params.items()}
    max_rel = 0.0
    worst = None
    for name, arr in work.items():
        ga = analytic[name]
        flat = arr.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi, _ = f(work)
            flat[i] = orig - step
            lo, _ = f(work)
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * step)
            a = ga.reshape(-1)[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1.0)
            if rel > max_rel:
                max_rel = rel
                worst = (name, i)
    return GradCheckReport(max_rel_err=max_rel, passed=max_rel <= tol, worst=worst)


class GradCheckReport:
    """Outcome of one finite-difference sweep."""

    __slots__ = ("max_rel_err", "passed", "worst")

    def __init__(self, max_rel_err: float, passed: bool, worst):
        self.max_rel_err = max_rel_err
        self.passed = passed
        self.worst = worst

    def __repr__(self) -> str:
        state = "pass" if self.passed else "FAIL"
        return f"GradCheckReport({state}, max_rel_err={self.max_rel_err:.3e}, worst={self.worst})"
