"""Per-network node dynamics.

Each node combines three channels into its next performance value:
its intrinsic level, the lagged mean of its in-network predecessors,
and the mean of its cross-network inputs (frozen between
synchronization points):

    p_i <- clamp(w_int * b_i + w_in * m_i + w_ext * f_i, 0, 1)

where m_i averages predecessor performance from ``lag`` timesteps back
with disrupted predecessors contributing zero (lost supply, not
renormalized demand), a node without in-edges falls back to b_i, and a
node without couplings renormalizes w_ext away.  Disrupted nodes are
pinned to zero until retracted.
"""

import json
from collections import deque

import numpy as np

from .errors import UnknownNode
from .topology import Topology

DEFAULT_WEIGHTS = (0.3, 0.4, 0.3)


class FederateState:
    """Mutable state of one network federate.

    Confined to one logical owner at a time; all cross-federate
    interaction goes through the coordinator's exchange.
    """

    def __init__(self, topology: Topology,
                 weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
                 lag: int = 1,
                 consumer_nodes: list[int] | None = None):
        w_int, w_in, w_ext = weights
        if min(weights) < 0 or abs(w_int + w_in + w_ext - 1.0) > 1e-9:
            raise ValueError(f"weights must be nonnegative and sum to 1, got {weights}")
        if lag < 1:
            raise ValueError(f"lag must be a positive integer, got {lag}")
        self.topology = topology
        self.w_int, self.w_in, self.w_ext = w_int, w_in, w_ext
        self.lag = lag

        n = topology.node_count
        self.intrinsic = np.array(topology.intrinsic_performance, dtype=float)
        self.performance = self.intrinsic.copy()
        self.disrupted = np.zeros(n, dtype=bool)
        self.history: deque[np.ndarray] = deque(
            [self.performance.copy() for _ in range(lag)], maxlen=lag)

        # In-adjacency: in_matrix[i, j] = 1 iff edge j -> i.
        self.in_matrix = np.zeros((n, n))
        for src, dst in topology.edges:
            self.in_matrix[dst, src] = 1.0
        self.in_degree = self.in_matrix.sum(axis=1)

        # consumer_nodes[k] is the local node fed by foreign slot k;
        # the coordinator writes foreign_inputs at sync instants.
        self.consumer_nodes = np.array(consumer_nodes or [], dtype=int)
        self.foreign_inputs = np.ones(len(self.consumer_nodes))
        self.coupling_count = np.bincount(
            self.consumer_nodes, minlength=n).astype(float)

    @property
    def node_count(self) -> int:
        return self.topology.node_count

    def _check_nodes(self, node_set) -> np.ndarray:
        nodes = np.asarray(sorted(set(node_set)), dtype=int)
        if len(nodes) and (nodes.min() < 0 or nodes.max() >= self.node_count):
            raise UnknownNode(
                f"node indices {node_set} out of range for "
                f"{self.topology.network_id.value} ({self.node_count} nodes)")
        return nodes

    def step(self) -> None:
        """Advance the federate by one internal timestep."""
        n = self.node_count
        lagged = self.history[0]
        masked = np.where(self.disrupted, 0.0, lagged)
        in_sum = self.in_matrix @ masked
        in_mean = np.where(self.in_degree > 0,
                           in_sum / np.maximum(self.in_degree, 1.0),
                           self.intrinsic)
        base = self.w_int * self.intrinsic + self.w_in * in_mean
        if len(self.consumer_nodes):
            foreign_sum = np.bincount(self.consumer_nodes,
                                      weights=self.foreign_inputs,
                                      minlength=n)
            foreign_mean = np.divide(foreign_sum, self.coupling_count,
                                     out=np.zeros(n),
                                     where=self.coupling_count > 0)
            p = np.where(self.coupling_count > 0,
                         base + self.w_ext * foreign_mean,
                         base / (self.w_int + self.w_in))
        else:
            p = base / (self.w_int + self.w_in)
        p = np.clip(p, 0.0, 1.0)
        p[self.disrupted] = 0.0
        self.performance = p
        self.history.append(p.copy())

    def apply_disruption(self, node_set) -> None:
        """Mark nodes disrupted and force their performance to zero now."""
        nodes = self._check_nodes(node_set)
        self.disrupted[nodes] = True
        self.performance[nodes] = 0.0

    def retract_disruption(self, node_set) -> None:
        """Clear flags and restore the nodes to their intrinsic levels.

        Downstream nodes recover through the dynamics only.
        """
        nodes = self._check_nodes(node_set)
        if not self.disrupted[nodes].all():
            raise ValueError(f"retract of nodes that are not disrupted: {node_set}")
        self.disrupted[nodes] = False
        self.performance[nodes] = self.intrinsic[nodes]

    def read_boundary(self, nodes) -> np.ndarray:
        """Instantaneous performance of locally-owned coupled nodes."""
        nodes = np.asarray(nodes, dtype=int)
        return self.performance[nodes].copy()

    def snapshot_json(self) -> str:
        doc = {
            "network_id": self.topology.network_id.value,
            "performance": self.performance.tolist(),
            "disrupted": self.disrupted.astype(int).tolist(),
            "foreign_inputs": self.foreign_inputs.tolist(),
            "history": [h.tolist() for h in self.history],
            "lag": self.lag,
            "weights": [self.w_int, self.w_in, self.w_ext],
        }
        return json.dumps(doc, sort_keys=True)
