"""Node embeddings from uniform random walks and skip-gram with negative
sampling, fit with plain SGD on numpy arrays.

Walks stop early at sink nodes, so isolated nodes produce no training
pairs and keep their initialization.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .graphs import UndirectedGraph


def random_walks(
    g: UndirectedGraph,
    walks_per_node: int,
    walk_length: int,
    rng: np.random.Generator,
) -> list[list[int]]:
    adj = g.adjacency
    neighbors = [np.flatnonzero(adj[v]) for v in range(g.n)]
    walks = []
    for _ in range(walks_per_node):
        for start in range(g.n):
            walk = [start]
            while len(walk) < walk_length:
                nbrs = neighbors[walk[-1]]
                if nbrs.size == 0:
                    break
                walk.append(int(nbrs[rng.integers(nbrs.size)]))
            walks.append(walk)
    return walks


def skipgram_pairs(walk: list[int], window: int) -> list[tuple[int, int]]:
    """(center, context) pairs within the window, both directions."""
    pairs = []
    for pos, center in enumerate(walk):
        lo = max(0, pos - window)
        hi = min(len(walk), pos + window + 1)
        for other in range(lo, hi):
            if other != pos:
                pairs.append((center, walk[other]))
    return pairs


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


def deepwalk_embed(
    g: UndirectedGraph,
    dim: int = 64,
    walks_per_node: int = 10,
    walk_length: int = 40,
    window: int = 5,
    negatives: int = 5,
    rng: np.random.Generator | None = None,
    epochs: int = 5,
    lr: float = 0.05,
) -> np.ndarray:
    """Train skip-gram with negative sampling over random walks and return
    the n x dim input embedding matrix."""
    if dim < 1:
        raise ConfigError(f"embedding dim must be >= 1, got {dim}")
    if rng is None:
        raise ConfigError("deepwalk_embed requires an explicit rng stream")
    n = g.n
    w_in = (rng.random((n, dim)) - 0.5) / dim
    w_out = np.zeros((n, dim))

    walks = random_walks(g, walks_per_node, walk_length, rng)
    pairs = [p for walk in walks for p in skipgram_pairs(walk, window)]
    if not pairs:
        return w_in
    centers = np.array([p[0] for p in pairs])
    contexts = np.array([p[1] for p in pairs])

    # negatives drawn from the unigram distribution of walk tokens ^ 0.75
    counts = np.bincount(np.concatenate([w for w in map(np.array, walks)]), minlength=n)
    noise = counts.astype(np.float64) ** 0.75
    noise_sum = noise.sum()
    if noise_sum == 0:
        return w_in
    noise /= noise_sum

    npairs = centers.size
    batch = max(64, 4 * n)  # small chunks: many steps per epoch, SGD-like
    for _ in range(epochs):
        neg = rng.choice(n, size=(npairs, negatives), p=noise)
        order = rng.permutation(npairs)
        for lo in range(0, npairs, batch):
            sel = order[lo : lo + batch]
            c, o, ng = centers[sel], contexts[sel], neg[sel]
            ci = w_in[c]  # (B, dim)
            # positive pairs (label 1): d/ds = sigmoid(s) - 1
            po = w_out[o]
            gpos = _sigmoid((ci * po).sum(axis=1)) - 1.0  # (B,)
            grad_in = gpos[:, None] * po
            grad_out = gpos[:, None] * ci
            # negative pairs (label 0): d/ds = sigmoid(s)
            no = w_out[ng]  # (B, K, dim)
            gneg = _sigmoid(np.einsum("pd,pkd->pk", ci, no))  # (B, K)
            grad_in += np.einsum("pk,pkd->pd", gneg, no)
            grad_neg = gneg[:, :, None] * ci[:, None, :]
            # summed per-node gradients divided by appearance counts, so a
            # node's step stays bounded by lr regardless of its frequency
            acc_in = np.zeros_like(w_in)
            acc_out = np.zeros_like(w_out)
            np.add.at(acc_in, c, grad_in)
            np.add.at(acc_out, o, grad_out)
            np.add.at(acc_out, ng.reshape(-1), grad_neg.reshape(-1, dim))
            count_in = np.maximum(np.bincount(c, minlength=n), 1)
            count_out = np.maximum(
                np.bincount(o, minlength=n) + np.bincount(ng.reshape(-1), minlength=n),
                1,
            )
            w_in -= lr * acc_in / count_in[:, None]
            w_out -= lr * acc_out / count_out[:, None]
    return w_in
