"""Graph convolution and graph attention layers plus the prediction head.

All forwards run on a Tape so the classification loss differentiates
end to end. Layers are bias-free parameter holders; weights are plain
fp64 arrays updated in place by the optimizer between tapes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, Tensor
from .errors import ConfigError, DimensionError

LEAKY_SLOPE = 0.2  # negative slope inside attention scores


def glorot(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def normalized_adjacency(adj: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization of the adjacency with self-loops:
    D^{-1/2} (A + I) D^{-1/2}, where D is the loop-augmented degree."""
    a = np.asarray(adj, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"adjacency must be square, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise ConfigError("normalized_adjacency: adjacency is not symmetric")
    if np.diagonal(a).any():
        raise ConfigError("normalized_adjacency: adjacency has a nonzero diagonal")
    at = a + np.eye(a.shape[0])
    dinv = 1.0 / np.sqrt(at.sum(axis=1))
    return at * dinv[:, None] * dinv[None, :]


def _activate(tape: Tape, x: Tensor, activation: str) -> Tensor:
    if activation == "identity":
        return x
    if activation == "relu":
        return tape.relu(x)
    if activation == "elu":
        return tape.elu(x)
    if activation == "leaky_relu":
        return tape.leaky_relu(x, LEAKY_SLOPE)
    raise ConfigError(f"unknown activation '{activation}'")


@dataclass
class GcnLayer:
    weight: np.ndarray  # (f_in, f_out)
    activation: str = "elu"

    @classmethod
    def create(cls, f_in: int, f_out: int, rng, activation: str = "elu") -> "GcnLayer":
        return cls(weight=glorot(f_in, f_out, rng), activation=activation)

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w": self.weight}


@dataclass
class GatLayer:
    """Multi-head attention layer.

    Each head holds a projection (f_in, f_out) and an attention vector of
    length 2*f_out split into source and destination halves. Hidden layers
    concatenate head outputs; the output layer averages them before the
    activation so the width stays f_out.
    """

    weights: list[np.ndarray]
    att: list[np.ndarray]  # each (2*f_out, 1)
    slope: float = LEAKY_SLOPE
    concat: bool = True
    activation: str = "elu"

    @classmethod
    def create(
        cls,
        f_in: int,
        f_out: int,
        heads: int,
        rng,
        concat: bool = True,
        activation: str = "elu",
    ) -> "GatLayer":
        ws = [glorot(f_in, f_out, rng) for _ in range(heads)]
        atts = [glorot(2 * f_out, 1, rng) for _ in range(heads)]
        return cls(weights=ws, att=atts, concat=concat, activation=activation)

    @property
    def heads(self) -> int:
        return len(self.weights)

    @property
    def f_out(self) -> int:
        return self.weights[0].shape[1]

    def parameters(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for k in range(self.heads):
            out[f"h{k}.w"] = self.weights[k]
            out[f"h{k}.a"] = self.att[k]
        return out


def _attention_mask(adj: np.ndarray) -> np.ndarray:
    # every node attends over its neighbours and itself
    return np.asarray(adj, dtype=np.float64) + np.eye(adj.shape[0])


def _gat_head(tape: Tape, layer: GatLayer, k: int, h: Tensor, mask: np.ndarray):
    """Per-head attention matrix and projected features."""
    n = h.rows
    w = tape.leaf(layer.weights[k])
    a = tape.leaf(layer.att[k])
    fp = layer.f_out
    hw = tape.matmul(h, w)  # n x f_out
    a_src = tape.slice_rows(a, 0, fp)
    a_dst = tape.slice_rows(a, fp, 2 * fp)
    f = tape.matmul(hw, a_src)  # n x 1, source term per row
    g = tape.matmul(hw, a_dst)  # n x 1, destination term per row
    ones_row = tape.leaf(np.ones((1, n)))
    ones_col = tape.leaf(np.ones((n, 1)))
    scores = tape.add(
        tape.matmul(f, ones_row), tape.matmul(ones_col, tape.transpose(g))
    )
    scores = tape.leaky_relu(scores, layer.slope)
    alpha = tape.row_softmax_masked(scores, mask)
    return alpha, hw


def gat_attention(
    tape: Tape, layer: GatLayer, h: Tensor, adj: np.ndarray
) -> list[Tensor]:
    """Per-head attention matrices; rows sum to 1 over neighbours plus self."""
    if h.cols != layer.weights[0].shape[0]:
        raise DimensionError(
            f"gat_attention: features {h.shape} vs weight {layer.weights[0].shape}"
        )
    mask = _attention_mask(adj)
    return [_gat_head(tape, layer, k, h, mask)[0] for k in range(layer.heads)]


def gat_forward(tape: Tape, layer: GatLayer, h: Tensor, adj: np.ndarray) -> Tensor:
    if h.cols != layer.weights[0].shape[0]:
        raise DimensionError(
            f"gat_forward: features {h.shape} vs weight {layer.weights[0].shape}"
        )
    mask = _attention_mask(adj)
    outputs = []
    for k in range(layer.heads):
        alpha, hw = _gat_head(tape, layer, k, h, mask)
        outputs.append(tape.matmul(alpha, hw))
    if layer.concat:
        return _activate(tape, tape.concat_cols(outputs), layer.activation)
    acc = outputs[0]
    for out in outputs[1:]:
        acc = tape.add(acc, out)
    return _activate(tape, tape.scale(acc, 1.0 / layer.heads), layer.activation)


def gcn_forward(tape: Tape, layer: GcnLayer, h: Tensor, a_hat: Tensor) -> Tensor:
    if h.cols != layer.weight.shape[0]:
        raise DimensionError(
            f"gcn_forward: features {h.shape} vs weight {layer.weight.shape}"
        )
    w = tape.leaf(layer.weight)
    return _activate(tape, tape.matmul(tape.matmul(a_hat, h), w), layer.activation)


@dataclass
class PredictionNet:
    """Stack of GNN layers ending in a 2-unit output row per node."""

    layers: list = field(default_factory=list)
    dropout: float = 0.2
    variant: str = "gat"

    def parameters(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.parameters().items():
                out[f"l{i}.{name}"] = arr
        return out


def build_prediction_net(
    variant: str,
    f_in: int,
    hidden: int,
    heads: int,
    dropout: float,
    rng,
    classes: int = 2,
) -> PredictionNet:
    if variant == "gat":
        if hidden % heads != 0:
            raise ConfigError(f"hidden={hidden} not divisible by heads={heads}")
        per_head = hidden // heads
        layers = [
            GatLayer.create(f_in, per_head, heads, rng, concat=True, activation="elu"),
            GatLayer.create(hidden, per_head, heads, rng, concat=True, activation="elu"),
            GatLayer.create(hidden, classes, heads, rng, concat=False, activation="identity"),
        ]
    elif variant == "gcn":
        layers = [
            GcnLayer.create(f_in, hidden, rng, activation="elu"),
            GcnLayer.create(hidden, hidden, rng, activation="elu"),
            GcnLayer.create(hidden, classes, rng, activation="identity"),
        ]
    else:
        raise ConfigError(f"unknown model variant '{variant}'")
    return PredictionNet(layers=layers, dropout=dropout, variant=variant)


def prediction_forward(
    tape: Tape,
    net: PredictionNet,
    h: Tensor,
    adj: np.ndarray,
    a_hat: Tensor,
    drop_rng: np.random.Generator | None = None,
) -> Tensor:
    """Run the head; drop_rng=None disables dropout (eval mode)."""
    x = h
    for layer in net.layers:
        x = tape.dropout(x, net.dropout, drop_rng)
        if isinstance(layer, GatLayer):
            x = gat_forward(tape, layer, x, adj)
        else:
            x = gcn_forward(tape, layer, x, a_hat)
    return x


def ego_nll(tape: Tape, logits: Tensor, ego: int, label: int) -> Tensor:
    """Negative log-likelihood of the ego row under a 2-way softmax."""
    if not (0 <= ego < logits.rows):
        raise ConfigError(f"ego {ego} out of range for {logits.rows} nodes")
    if label not in (0, 1):
        raise ConfigError(f"label must be 0 or 1, got {label}")
    row = tape.slice_rows(logits, ego, ego + 1)
    lse = tape.logsumexp(row)
    picked = tape.slice_cols(row, label, label + 1)
    return tape.add(lse, tape.scale(picked, -1.0))


def softmax_row(logits: np.ndarray, row: int) -> np.ndarray:
    """Class probabilities for one row of raw logits (plain numpy, eval path)."""
    x = logits[row] - logits[row].max()
    e = np.exp(x)
    return e / e.sum()
