"""Random directed topologies and cross-network couplings.

Networks are G(n, m)-style uniform samples of exactly m distinct
non-loop directed edges, so node and edge counts are met exactly.
Couplings wire every node of every network to each partner network:
the first coupling per partner is the deterministic backbone
b = a mod |B|, the rest are drawn from a seeded stream.
"""

import json
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .errors import EdgeCountOverflow
from .rng import stream


class NetworkId(str, Enum):
    WATER = "water"
    POWER = "power"
    BUSINESS = "business"


NETWORK_ORDER = (NetworkId.WATER, NetworkId.POWER, NetworkId.BUSINESS)


@dataclass(frozen=True)
class Topology:
    network_id: NetworkId
    node_count: int
    edges: tuple[tuple[int, int], ...]
    intrinsic_performance: tuple[float, ...]

    def to_json(self) -> str:
        doc = {
            "network_id": self.network_id.value,
            "node_count": self.node_count,
            "edges": [list(e) for e in self.edges],
            "intrinsic_performance": list(self.intrinsic_performance),
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        doc = json.loads(text)
        return cls(
            network_id=NetworkId(doc["network_id"]),
            node_count=doc["node_count"],
            edges=tuple((e[0], e[1]) for e in doc["edges"]),
            intrinsic_performance=tuple(doc["intrinsic_performance"]),
        )


class Coupling(NamedTuple):
    """Directed lifeline: consumer node takes the producer node's output."""

    consumer_network: NetworkId
    consumer_node: int
    producer_network: NetworkId
    producer_node: int


@dataclass(frozen=True)
class InterdependencyMap:
    couplings: tuple[Coupling, ...]

    def to_json(self) -> str:
        doc = {
            "couplings": [
                [c.consumer_network.value, c.consumer_node,
                 c.producer_network.value, c.producer_node]
                for c in self.couplings
            ]
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "InterdependencyMap":
        doc = json.loads(text)
        return cls(couplings=tuple(
            Coupling(NetworkId(c[0]), c[1], NetworkId(c[2]), c[3])
            for c in doc["couplings"]
        ))


def generate_topology(network_id: NetworkId, node_count: int,
                      edge_count: int, seed: int) -> Topology:
    """Sample a directed graph with exactly ``edge_count`` distinct non-loop edges."""
    if node_count < 1:
        raise ValueError(f"node_count must be positive, got {node_count}")
    if edge_count < 0:
        raise ValueError(f"edge_count must be non-negative, got {edge_count}")
    max_edges = node_count * (node_count - 1)
    if edge_count > max_edges:
        raise EdgeCountOverflow(
            f"{edge_count} edges requested but at most {max_edges} distinct "
            f"non-loop edges exist for {node_count} nodes"
        )
    rng = stream(seed, f"topology:{network_id.value}")
    pairs = [(i, j) for i in range(node_count)
             for j in range(node_count) if i != j]
    edges = tuple(sorted(rng.sample(pairs, edge_count)))
    return Topology(
        network_id=network_id,
        node_count=node_count,
        edges=edges,
        intrinsic_performance=(1.0,) * node_count,
    )


def generate_interdependencies(topologies: list[Topology],
                               couplings_per_node: int,
                               seed: int) -> InterdependencyMap:
    """Wire every node of every network to each partner network.

    Emits ``couplings_per_node`` couplings per (node, partner network):
    a deterministic backbone (producer = node index mod partner size)
    plus uniformly drawn extras.
    """
    if len(topologies) < 2:
        raise ValueError("need at least two topologies to interconnect")
    if couplings_per_node < 1:
        raise ValueError("couplings_per_node must be positive")
    rng = stream(seed, "interdependency")
    couplings = []
    for consumer in topologies:
        for a in range(consumer.node_count):
            for producer in topologies:
                if producer.network_id == consumer.network_id:
                    continue
                couplings.append(Coupling(
                    consumer.network_id, a,
                    producer.network_id, a % producer.node_count,
                ))
                for _ in range(couplings_per_node - 1):
                    couplings.append(Coupling(
                        consumer.network_id, a,
                        producer.network_id,
                        rng.randrange(producer.node_count),
                    ))
    return InterdependencyMap(couplings=tuple(couplings))
