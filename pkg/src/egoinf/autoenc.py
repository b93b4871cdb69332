"""Graph autoencoders: deterministic (GAE) and variational (VGAE).

Both use a two-layer graph convolution encoder, Z = A_hat ReLU(A_hat X W0) W1,
and an inner-product decoder sigmoid(Z Z^T). The VGAE shares W0 between its
mean and log-variance heads and samples Z by reparameterization during
training; in eval mode Z is the mean.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor
from .errors import ConfigError, DivergenceError, NumericsError
from .layers import glorot, normalized_adjacency
from .optim import Adagrad
from .rng import stream

LOGVAR_CLAMP = 10.0  # |log variance| bound, guards exp overflow


@dataclass
class GaeModel:
    w0: np.ndarray  # (f_in, hidden)
    w1: np.ndarray  # (hidden, d)

    @classmethod
    def create(cls, f_in: int, hidden: int, d: int, rng) -> "GaeModel":
        return cls(w0=glorot(f_in, hidden, rng), w1=glorot(hidden, d, rng))

    @property
    def d(self) -> int:
        return self.w1.shape[1]

    @property
    def in_width(self) -> int:
        return self.w0.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w0": self.w0, "w1": self.w1}


@dataclass
class VgaeModel:
    w0: np.ndarray
    w1_mu: np.ndarray
    w1_logvar: np.ndarray

    @classmethod
    def create(cls, f_in: int, hidden: int, d: int, rng) -> "VgaeModel":
        return cls(
            w0=glorot(f_in, hidden, rng),
            w1_mu=glorot(hidden, d, rng),
            w1_logvar=glorot(hidden, d, rng),
        )

    @property
    def d(self) -> int:
        return self.w1_mu.shape[1]

    @property
    def in_width(self) -> int:
        return self.w0.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w0": self.w0, "w1_mu": self.w1_mu, "w1_logvar": self.w1_logvar}


def gae_encode(tape: Tape, m: GaeModel, x: Tensor, a_hat: Tensor) -> Tensor:
    hidden = tape.relu(tape.matmul(tape.matmul(a_hat, x), tape.leaf(m.w0)))
    return tape.matmul(tape.matmul(a_hat, hidden), tape.leaf(m.w1))


def vgae_encode(
    tape: Tape,
    m: VgaeModel,
    x: Tensor,
    a_hat: Tensor,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> tuple[Tensor, Tensor, Tensor]:
    """Return (z, mu, logvar). rng/noise None means eval mode (z = mu);
    a fixed noise matrix freezes epsilon for gradient checking."""
    hidden = tape.relu(tape.matmul(tape.matmul(a_hat, x), tape.leaf(m.w0)))
    ah = tape.matmul(a_hat, hidden)
    mu = tape.matmul(ah, tape.leaf(m.w1_mu))
    logvar = tape.clip(tape.matmul(ah, tape.leaf(m.w1_logvar)), -LOGVAR_CLAMP, LOGVAR_CLAMP)
    if rng is None and noise is None:
        return mu, mu, logvar
    eps = noise if noise is not None else rng.standard_normal(mu.shape)
    sigma = tape.exp(tape.scale(logvar, 0.5))
    z = tape.add(mu, tape.hadamard(sigma, tape.leaf(np.asarray(eps, dtype=np.float64))))
    return z, mu, logvar


def inner_product_decode(tape: Tape, z: Tensor) -> Tensor:
    """sigmoid(Z Z^T), symmetrized so M equals its transpose bitwise."""
    s = tape.matmul(z, tape.transpose(z))
    s = tape.scale(tape.add(s, tape.transpose(s)), 0.5)
    return tape.sigmoid(s)


def reconstruction_ce(
    tape: Tape,
    m: Tensor,
    a_target: np.ndarray,
    pos_weight: float | None = None,
) -> Tensor:
    """Mean binary cross-entropy between decoded probabilities and the
    adjacency over all off-diagonal entries, positives up-weighted by
    pos_weight (default: #off-diagonal zeros / #off-diagonal ones)."""
    target = np.asarray(a_target, dtype=np.float64)
    n = target.shape[0]
    if target.shape != (n, n) or m.shape != (n, n):
        raise ConfigError(f"reconstruction_ce: M {m.shape} vs target {target.shape}")
    mask = 1.0 - np.eye(n)
    ones = float((target * mask).sum())
    zeros = float(mask.sum() - ones)
    if pos_weight is None:
        if ones == 0:
            raise ConfigError(
                "reconstruction_ce: target has no positive entries; pos_weight undefined"
            )
        pos_weight = zeros / ones
    weights = np.where(target > 0, pos_weight, 1.0)
    return tape.bce_mean(m, target, weights, mask)


def kld(tape: Tape, mu: Tensor, logvar: Tensor) -> Tensor:
    """Gaussian KL to the standard normal, averaged per node."""
    return tape.gaussian_kl(mu, logvar)


@dataclass
class AutoencTrainConfig:
    epochs: int = 200
    lr: float = 0.05
    weight_decay: float = 0.0
    eps: float = 1e-10
    seed: int = 0


def _prepare_graphs(data) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Normalize (features, adjacency) pairs; features None -> one-hot rows."""
    prepared = []
    for x, adj in data:
        adj = np.asarray(adj, dtype=np.float64)
        if x is None:
            x = np.eye(adj.shape[0])
        prepared.append((np.asarray(x, dtype=np.float64), adj, normalized_adjacency(adj)))
    return prepared


def train_vgae(model: VgaeModel, data, cfg: AutoencTrainConfig):
    """Fit the VGAE on (features, adjacency) pairs with the reconstruction
    plus KL loss. Returns (model, trace) where trace has one dict per epoch
    with keys ce, kld, total."""
    if not data:
        raise ConfigError("train_vgae: empty dataset")
    prepared = _prepare_graphs(data)
    opt = Adagrad(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay, eps=cfg.eps)
    trace: list[dict[str, float]] = []
    for epoch in range(cfg.epochs):
        total_ce = total_kl = 0.0
        grads: dict[str, np.ndarray] = {}
        for gi, (x, adj, a_hat) in enumerate(prepared):
            tape = Tape()
            # one fixed noise draw per graph: traces are reproducible and a
            # frozen model yields a frozen loss trace
            eps_rng = stream(cfg.seed, "vgae-eps", gi)
            try:
                z, mu, logvar = vgae_encode(
                    tape, model, tape.leaf(x), tape.leaf(a_hat), rng=eps_rng
                )
                ce = reconstruction_ce(tape, inner_product_decode(tape, z), adj)
                kl = kld(tape, mu, logvar)
                loss = tape.add(ce, kl)
                tape.backward(loss)
            except NumericsError as exc:
                raise DivergenceError(f"VGAE diverged at epoch {epoch}: {exc}") from exc
            total_ce += float(ce.values[0, 0])
            total_kl += float(kl.values[0, 0])
            for name, arr in model.parameters().items():
                g = tape.grad(arr)
                grads[name] = grads.get(name, 0.0) + g
        count = len(prepared)
        opt.step({k: v / count for k, v in grads.items()})
        trace.append(
            {
                "ce": total_ce / count,
                "kld": total_kl / count,
                "total": (total_ce + total_kl) / count,
            }
        )
    return model, trace


def train_gae(model: GaeModel, data, cfg: AutoencTrainConfig):
    """Fit a plain GAE with the reconstruction loss only."""
    if not data:
        raise ConfigError("train_gae: empty dataset")
    prepared = _prepare_graphs(data)
    opt = Adagrad(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay, eps=cfg.eps)
    trace: list[dict[str, float]] = []
    for epoch in range(cfg.epochs):
        total_ce = 0.0
        grads: dict[str, np.ndarray] = {}
        for x, adj, a_hat in prepared:
            tape = Tape()
            try:
                z = gae_encode(tape, model, tape.leaf(x), tape.leaf(a_hat))
                ce = reconstruction_ce(tape, inner_product_decode(tape, z), adj)
                tape.backward(ce)
            except NumericsError as exc:
                raise DivergenceError(f"GAE diverged at epoch {epoch}: {exc}") from exc
            total_ce += float(ce.values[0, 0])
            for name, arr in model.parameters().items():
                grads[name] = grads.get(name, 0.0) + tape.grad(arr)
        count = len(prepared)
        opt.step({k: v / count for k, v in grads.items()})
        trace.append({"ce": total_ce / count, "total": total_ce / count})
    return model, trace
