"""Stochastic edge addition driven by decoded edge probabilities.

A trained variational autoencoder scores every node pair; pairs above the
threshold that are not already edges become candidates, and each candidate
is added independently with its own probability. Augmented samples only
ever gain edges; ego, state and label are untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape
from .autoenc import VgaeModel, inner_product_decode, vgae_encode
from .errors import ConfigError
from .graphs import EgoSample, UndirectedGraph
from .layers import normalized_adjacency
from .rng import stream


@dataclass(frozen=True)
class EdgeProbMatrix:
    probs: np.ndarray  # n x n symmetric, entries in (0, 1); diagonal unused
    provenance: str = ""

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class AugmentationConfig:
    threshold: float = 0.8
    count: int = 3
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.count < 0:
            raise ConfigError(f"augmentation count must be >= 0, got {self.count}")


def edge_probabilities(
    sample: EgoSample,
    vgae: VgaeModel,
    features: np.ndarray | None = None,
) -> EdgeProbMatrix:
    """Decode deterministic (eval mode, Z = mean) edge probabilities for one
    sample. features=None falls back to one-hot rows, which requires the
    model to have been trained on width-n inputs."""
    n = sample.n
    x = np.eye(n) if features is None else np.asarray(features, dtype=np.float64)
    if x.shape[0] != n:
        raise ConfigError(f"features have {x.shape[0]} rows for an {n}-node sample")
    if x.shape[1] != vgae.in_width:
        raise ConfigError(
            f"feature width {x.shape[1]} does not match the checkpoint's "
            f"expected width {vgae.in_width}"
        )
    tape = Tape()
    a_hat = normalized_adjacency(sample.graph.adjacency)
    z, _, _ = vgae_encode(tape, vgae, tape.leaf(x), tape.leaf(a_hat))
    m = inner_product_decode(tape, z)
    return EdgeProbMatrix(probs=m.values, provenance=f"vgae-d{vgae.d}:{sample.sample_id}")


def candidate_edges(
    m: EdgeProbMatrix, adjacency: np.ndarray, threshold: float
) -> list[tuple[int, int]]:
    """Non-edges (i < j) whose probability strictly exceeds the threshold."""
    probs = m.probs
    adj = np.asarray(adjacency)
    if adj.shape != probs.shape:
        raise ConfigError(f"candidate_edges: adjacency {adj.shape} vs probs {probs.shape}")
    i, j = np.triu_indices(probs.shape[0], k=1)
    keep = (adj[i, j] == 0) & (probs[i, j] > threshold)
    return list(zip(i[keep].tolist(), j[keep].tolist()))


def _pair_uniforms(n: int, rng: np.random.Generator) -> np.ndarray:
    """One uniform per unordered pair, drawn in canonical (row-major upper
    triangle) order. Drawing all pairs up front couples augmentations across
    thresholds: raising the threshold can only remove added edges."""
    u = np.zeros((n, n))
    i, j = np.triu_indices(n, k=1)
    u[i, j] = rng.random(i.size)
    return u


def sample_augmentation(
    sample: EgoSample,
    candidates: list[tuple[int, int]],
    m: EdgeProbMatrix,
    rng: np.random.Generator,
) -> EgoSample:
    """Add each candidate edge independently with its decoded probability."""
    u = _pair_uniforms(sample.n, rng)
    adj = np.array(sample.graph.adjacency, dtype=np.int8)
    for i, j in candidates:
        if u[i, j] < m.probs[i, j]:
            adj[i, j] = 1
            adj[j, i] = 1
    return EgoSample(
        graph=UndirectedGraph(adj, sample.graph.node_ids),
        ego=sample.ego,
        influence_state=sample.influence_state,
        label=sample.label,
        sample_id=sample.sample_id,
    )


def generate_augmentations(
    sample: EgoSample,
    vgae: VgaeModel,
    cfg: AugmentationConfig,
    features: np.ndarray | None = None,
) -> list[EgoSample]:
    """Q independent augmented copies; copy k draws from the stream keyed by
    (master seed, sample id, k), so results do not depend on call order."""
    if cfg.count == 0:
        return []
    m = edge_probabilities(sample, vgae, features=features)
    candidates = candidate_edges(m, sample.graph.adjacency, cfg.threshold)
    out = []
    for k in range(cfg.count):
        rng = stream(cfg.seed, "aug", sample.sample_id, k)
        aug = sample_augmentation(sample, candidates, m, rng)
        out.append(
            EgoSample(
                graph=aug.graph,
                ego=aug.ego,
                influence_state=aug.influence_state,
                label=aug.label,
                sample_id=f"{sample.sample_id}#a{k}",
            )
        )
    return out
