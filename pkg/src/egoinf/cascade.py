"""Independent-cascade simulation and the synthetic influence dataset.

The generator runs cascades over a base graph and emits one ego sample per
cascade: the observation is taken at the seeding round, the ego is an
inactive node near the cascade front, and the label records whether the
ego activates in the next round. Egos are drawn from nodes with an active
node within two hops, so a share of samples has no directly active
neighbour and can never activate; the rest face genuine influence
pressure. That keeps the task graph-structural but not trivial.
"""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import ConfigError, DataError
from .graphs import Dataset, EgoSample, UndirectedGraph
from .rng import derive_seed, stream
from .sampling import rwr_sample

_MAX_ATTEMPTS = 80


@dataclass(frozen=True)
class CascadeConfig:
    graph_model: str = "watts_strogatz"  # or "barabasi_albert"
    graph_nodes: int = 300
    ws_k: int = 10
    ws_beta: float = 0.1
    ba_m: int = 2
    seed_set_size: int = 30
    activation_p: float = 0.15
    samples: int = 500
    n_target: int = 30
    restart_p: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.activation_p <= 1.0):
            raise ConfigError(f"activation probability must be in [0,1], got {self.activation_p}")
        if self.seed_set_size < 1:
            raise ConfigError("seed set size must be >= 1")


def independent_cascade(
    g: UndirectedGraph, seeds, p: float, rng: np.random.Generator
) -> set[int]:
    """Standard independent cascade: each newly active node gets one chance
    to activate each inactive neighbour with probability p. Returns the
    final active set (always includes the seeds)."""
    return {v for v, r in enumerate(cascade_rounds(g, seeds, p, rng)) if r >= 0}


def cascade_rounds(
    g: UndirectedGraph, seeds, p: float, rng: np.random.Generator
) -> np.ndarray:
    """Activation round per node (-1 if never active); seeds are round 0."""
    seeds = sorted(set(int(s) for s in seeds))
    for s in seeds:
        if not (0 <= s < g.n):
            raise ConfigError(f"seed {s} out of range")
    adj = g.adjacency
    rounds = np.full(g.n, -1, dtype=np.int64)
    rounds[seeds] = 0
    frontier = seeds
    r = 0
    while frontier:
        r += 1
        newly: list[int] = []
        for u in frontier:
            for v in np.flatnonzero(adj[u]):
                if rounds[v] == -1 and rng.random() < p:
                    rounds[v] = r
                    newly.append(int(v))
        frontier = sorted(set(newly))
    return rounds


def build_base_graph(cfg: CascadeConfig) -> UndirectedGraph:
    nx_seed = derive_seed(cfg.seed, "base-graph")
    if cfg.graph_model == "watts_strogatz":
        G = nx.connected_watts_strogatz_graph(
            cfg.graph_nodes, cfg.ws_k, cfg.ws_beta, tries=200, seed=nx_seed
        )
    elif cfg.graph_model == "barabasi_albert":
        G = nx.barabasi_albert_graph(cfg.graph_nodes, cfg.ba_m, seed=nx_seed)
    else:
        raise ConfigError(f"unknown graph model '{cfg.graph_model}'")
    return UndirectedGraph.from_edges(cfg.graph_nodes, G.edges())


def _candidate_egos(adj: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Inactive nodes with an active node within two hops."""
    one_hop = adj @ active > 0
    two_hop = adj @ one_hop.astype(np.int64) > 0
    near = one_hop | two_hop | (active > 0)
    return np.flatnonzero(near & (active == 0))


def _stratified_split(labels: list[int], rng: np.random.Generator) -> dict[str, list[int]]:
    """75 / 12.5 / 12.5 train/valid/test, stratified by label."""
    splits: dict[str, list[int]] = {"train": [], "valid": [], "test": []}
    for cls in (0, 1):
        idx = [i for i, y in enumerate(labels) if y == cls]
        idx = [idx[k] for k in rng.permutation(len(idx))]
        n_test = max(1, round(0.125 * len(idx)))
        n_valid = max(1, round(0.125 * len(idx)))
        splits["test"].extend(idx[:n_test])
        splits["valid"].extend(idx[n_test : n_test + n_valid])
        splits["train"].extend(idx[n_test + n_valid :])
    for part in splits.values():
        part.sort()
    return splits


def generate_dataset(cfg: CascadeConfig) -> Dataset:
    """Emit cfg.samples ego samples from independent cascades on one base
    graph. Aborts with DataError when the configuration produces a single
    class (for example p = 0)."""
    base = build_base_graph(cfg)
    samples: list[EgoSample] = []
    for idx in range(cfg.samples):
        sample = None
        for attempt in range(_MAX_ATTEMPTS):
            rng = stream(cfg.seed, "cascade", idx, attempt)
            seeds = rng.choice(cfg.graph_nodes, size=cfg.seed_set_size, replace=False)
            rounds = cascade_rounds(base, seeds, cfg.activation_p, rng)
            active = (rounds == 0).astype(np.int64)  # observation at seeding time
            candidates = _candidate_egos(base.adjacency.astype(np.int64), active)
            if candidates.size == 0:
                continue
            ego = int(candidates[rng.integers(candidates.size)])
            label = int(rounds[ego] == 1)
            sub = rwr_sample(
                base,
                ego,
                cfg.n_target,
                restart_p=cfg.restart_p,
                rng=stream(cfg.seed, "rwr", idx, attempt),
            )
            if sub.truncated:
                continue
            state = active[list(sub.node_ids)].astype(np.int8)
            sample = EgoSample(
                graph=sub.graph,
                ego=sub.ego,
                influence_state=state,
                label=label,
                sample_id=f"s{idx:05d}",
            )
            break
        if sample is None:
            raise DataError(
                f"could not build sample {idx} after {_MAX_ATTEMPTS} attempts; "
                "base graph too small or too sparse for the requested subgraph size"
            )
        samples.append(sample)

    labels = [s.label for s in samples]
    positives = sum(labels)
    if positives == 0 or positives == len(labels):
        raise DataError(
            f"degenerate cascade config: all {len(labels)} labels are "
            f"{labels[0]}; adjust activation_p or the seed set size"
        )
    splits = _stratified_split(labels, stream(cfg.seed, "split"))
    metadata = {
        "source": "synthetic-independent-cascade",
        "seed": cfg.seed,
        "graph_model": cfg.graph_model,
        "graph_nodes": cfg.graph_nodes,
        "activation_p": cfg.activation_p,
        "positives": positives,
        "negatives": len(labels) - positives,
    }
    return Dataset(samples=samples, splits=splits, metadata=metadata)
