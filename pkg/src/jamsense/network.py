"""Node/jammer geometry, received jammer power, and the neighbor graph.

All jammers transmit from a single shared site, so a node's received
jammer SNR is the same on every channel.  Received power follows the
log-distance law pt_db + 10*phi*log10(d/d0) with a negative exponent phi
for attenuation.  Two nodes are neighbors when their distance is at most
the transmission range (boundary inclusive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class Placement:
    """Static scenario geometry (km) plus the propagation constants."""

    nodes: Tuple[Tuple[float, float], ...]
    jammer: Tuple[float, float] = (0.0, 0.0)
    range_km: float = 0.45
    d0_km: float = 0.05
    path_loss_exponent: float = -2.3
    jammer_power_db: float = 15.0

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "nodes", tuple((float(x), float(y)) for x, y in self.nodes)
        )
        object.__setattr__(
            self, "jammer", (float(self.jammer[0]), float(self.jammer[1]))
        )
        if self.range_km <= 0:
            raise ValueError(f"range_km must be > 0, got {self.range_km}")
        if self.d0_km <= 0:
            raise ValueError(f"d0_km must be > 0, got {self.d0_km}")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def default_placement(n_nodes: int = 10) -> Placement:
    """Deterministic two-ring layout around a central jammer site.

    Nodes split between an inner ring (radius 0.3 km) and an outer ring
    (radius 0.6 km), evenly spaced, with the outer ring rotated half a
    step so outer nodes sit between inner ones.  With the default
    0.45 km transmission range and 10 nodes this yields a connected
    graph where inner nodes link to their ring neighbors and to the two
    closest outer nodes.
    """
    if n_nodes < 1:
        raise ValueError(f"n_nodes must be >= 1, got {n_nodes}")
    inner = (n_nodes + 1) // 2
    outer = n_nodes - inner
    nodes = []
    for i in range(inner):
        angle = 2.0 * math.pi * i / inner
        nodes.append((0.3 * math.cos(angle), 0.3 * math.sin(angle)))
    for i in range(outer):
        angle = 2.0 * math.pi * (i + 0.5) / outer
        nodes.append((0.6 * math.cos(angle), 0.6 * math.sin(angle)))
    return Placement(nodes=tuple(nodes))


def received_power_db(
    pt_db: float, distance_km: float, d0_km: float, exponent: float
) -> float:
    """Received power pt_db + 10*exponent*log10(d/d0); d must be > 0."""
    if distance_km <= 0:
        raise ValueError(f"distance must be > 0, got {distance_km}")
    if d0_km <= 0:
        raise ValueError(f"reference distance must be > 0, got {d0_km}")
    return pt_db + 10.0 * exponent * math.log10(distance_km / d0_km)


def jammer_distance_km(placement: Placement, node: int) -> float:
    x, y = placement.nodes[node]
    jx, jy = placement.jammer
    return math.hypot(x - jx, y - jy)


def snr_at_node(placement: Placement, node: int, noise_var: float = 1.0) -> float:
    """Linear received jammer SNR at the node: 10^(rx_db/10) / noise_var."""
    if not 0 <= node < placement.n_nodes:
        raise ValueError(f"node {node} out of range")
    if noise_var <= 0:
        raise ValueError(f"noise_var must be > 0, got {noise_var}")
    rx_db = received_power_db(
        placement.jammer_power_db,
        jammer_distance_km(placement, node),
        placement.d0_km,
        placement.path_loss_exponent,
    )
    return 10.0 ** (rx_db / 10.0) / noise_var


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetric, irreflexive adjacency as per-node sorted index tuples."""

    neighbors: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        for i, nbrs in enumerate(self.neighbors):
            for j in nbrs:
                if j == i:
                    raise ValueError(f"node {i} listed as its own neighbor")
                if not 0 <= j < len(self.neighbors):
                    raise ValueError(f"neighbor index {j} out of range")
                if i not in self.neighbors[j]:
                    raise ValueError(f"asymmetric edge ({i}, {j})")

    @property
    def n_nodes(self) -> int:
        return len(self.neighbors)

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    def edges(self) -> Tuple[Tuple[int, int], ...]:
        out = []
        for i, nbrs in enumerate(self.neighbors):
            out.extend((i, j) for j in nbrs if i < j)
        return tuple(out)


def build_neighbor_graph(placement: Placement) -> NeighborGraph:
    """Edge (i, j) iff euclidean distance <= transmission range, i != j."""
    if placement.n_nodes < 1:
        raise ValueError("placement must contain at least one node")
    pts = np.asarray(placement.nodes, dtype=float)
    delta = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(delta[..., 0], delta[..., 1])
    adj = dist <= placement.range_km
    np.fill_diagonal(adj, False)
    neighbors = tuple(
        tuple(int(j) for j in np.flatnonzero(adj[i])) for i in range(len(pts))
    )
    return NeighborGraph(neighbors=neighbors)
