"""Ego subgraph extraction by random walk with restart."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graphs import UndirectedGraph


@dataclass(frozen=True)
class SampledSubgraph:
    graph: UndirectedGraph
    ego: int  # local index of the ego inside the subgraph
    node_ids: tuple[int, ...]  # original node ids, ascending
    truncated: bool  # walk budget ran out before n_target nodes


def rwr_sample(
    g: UndirectedGraph,
    ego: int,
    n_target: int,
    restart_p: float = 0.8,
    rng: np.random.Generator | None = None,
) -> SampledSubgraph:
    """Collect n_target distinct nodes around the ego by a restarting walk
    and return the induced subgraph. The walk gives up after 50 * n_target
    steps and returns whatever it reached, flagged as truncated."""
    if rng is None:
        raise ConfigError("rwr_sample requires an explicit rng stream")
    if not (0 <= ego < g.n):
        raise ConfigError(f"ego {ego} out of range for {g.n}-node graph")
    if n_target < 1:
        raise ConfigError(f"n_target must be >= 1, got {n_target}")
    adj = g.adjacency
    neighbors = [np.flatnonzero(adj[v]) for v in range(g.n)]
    visited: set[int] = {ego}
    current = ego
    cap = 50 * n_target
    steps = 0
    while len(visited) < n_target and steps < cap:
        steps += 1
        nbrs = neighbors[current]
        if rng.random() < restart_p or nbrs.size == 0:
            current = ego
            continue
        current = int(nbrs[rng.integers(nbrs.size)])
        visited.add(current)
    ids = sorted(visited)
    sub_adj = adj[np.ix_(ids, ids)]
    orig_ids = g.node_ids
    node_ids = tuple(orig_ids[i] for i in ids) if orig_ids is not None else tuple(ids)
    return SampledSubgraph(
        graph=UndirectedGraph(sub_adj, node_ids),
        ego=ids.index(ego),
        node_ids=tuple(ids),
        truncated=len(visited) < n_target,
    )
