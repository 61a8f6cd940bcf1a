"""
Physical network description: source, routing nodes, entangling nodes and
fiber links, plus per-arm loss, survival probability and propagation delay.

Node insertion losses belong to nodes; fiber attenuation belongs to links.
A topology is immutable once built and may be shared across runs.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from config import (
    DEFAULT_FIBER_ATTENUATION_DB_PER_KM,
    DEFAULT_INTERMEDIATE_LOSS_DB,
    DEFAULT_MEMORY_LOSS_DB,
    DEFAULT_SIGNAL_SPEED_KM_PER_S,
    DEFAULT_SOURCE_LOSS_DB,
)
from errors import TopologyError

logger = logging.getLogger(__name__)


class NodeKind(Enum):
    """Role of a node in the quantum network."""

    SOURCE = "source"
    INTERMEDIATE = "intermediate"
    ENTANGLING = "entangling"


DEFAULT_NODE_LOSS_DB: Dict[NodeKind, float] = {
    NodeKind.SOURCE: DEFAULT_SOURCE_LOSS_DB,
    NodeKind.INTERMEDIATE: DEFAULT_INTERMEDIATE_LOSS_DB,
    NodeKind.ENTANGLING: DEFAULT_MEMORY_LOSS_DB,
}


@dataclass(frozen=True)
class NodeSpec:
    """A network node and the insertion loss it charges to any path through it."""
    id: str
    kind: NodeKind
    insertion_loss_db: float

    def __post_init__(self):
        if self.insertion_loss_db < 0:
            raise TopologyError(f"Node '{self.id}' has negative insertion loss {self.insertion_loss_db}")


@dataclass(frozen=True)
class FiberLink:
    """A fiber span between two nodes."""
    endpoints: Tuple[str, str]
    length_km: float
    attenuation_db_per_km: float = DEFAULT_FIBER_ATTENUATION_DB_PER_KM

    def __post_init__(self):
        if self.length_km < 0:
            raise TopologyError(f"Link {self.endpoints} has negative length {self.length_km}")
        if self.attenuation_db_per_km < 0:
            raise TopologyError(f"Link {self.endpoints} has negative attenuation {self.attenuation_db_per_km}")

    @property
    def loss_db(self) -> float:
        return self.attenuation_db_per_km * self.length_km

    def connects(self, a: str, b: str) -> bool:
        return set(self.endpoints) == {a, b}


@dataclass(frozen=True)
class QuantumPath:
    """
    Source-to-entangling-node route.

    Attributes:
        nodes: Ordered nodes, first is the source, last is the memory node
        links: Links traversed, links[i] joins nodes[i] and nodes[i + 1]
        total_loss_db: Fiber loss plus every traversed node's insertion loss, each once
        propagation_delay_s: Fiber length over signal speed (T_Q)
    """
    nodes: Tuple[NodeSpec, ...]
    links: Tuple[FiberLink, ...]
    total_loss_db: float
    propagation_delay_s: float

    @property
    def node_ids(self) -> Tuple[str, ...]:
        return tuple(node.id for node in self.nodes)

    @property
    def length_km(self) -> float:
        return sum(link.length_km for link in self.links)

    @property
    def terminal(self) -> NodeSpec:
        return self.nodes[-1]


def _check_connected(nodes: Sequence[NodeSpec], links: Sequence[FiberLink]) -> None:
    if not nodes:
        raise TopologyError("Path has no nodes")
    if len(links) != len(nodes) - 1:
        raise TopologyError(
            f"Path with {len(nodes)} nodes needs {len(nodes) - 1} links, got {len(links)}"
        )
    for i, link in enumerate(links):
        if not link.connects(nodes[i].id, nodes[i + 1].id):
            raise TopologyError(
                f"Path is disconnected between '{nodes[i].id}' and '{nodes[i + 1].id}' "
                f"(link joins {link.endpoints})"
            )


def segment_loss_db(nodes: Sequence[NodeSpec], links: Sequence[FiberLink]) -> float:
    """Loss of any connected node chain, charging each listed node once."""
    _check_connected(nodes, links)
    return sum(link.loss_db for link in links) + sum(node.insertion_loss_db for node in nodes)


def path_loss_db(path: QuantumPath) -> float:
    """
    Total loss of a source-to-memory path in decibels.

    Raises:
        TopologyError: If the path is disconnected or does not start at the source
    """
    if not path.nodes or path.nodes[0].kind is not NodeKind.SOURCE:
        raise TopologyError("Quantum path must start at the source node")
    return segment_loss_db(path.nodes, path.links)


def survival_probability(loss_db: float) -> float:
    """Linear transmission 10^(-loss/10) for a loss given in decibels."""
    if loss_db < 0 or math.isnan(loss_db):
        raise ValueError(f"loss_db must be non-negative, got {loss_db}")
    return 10.0 ** (-loss_db / 10.0)


def arm_delay(path: QuantumPath, signal_speed_km_per_s: float = DEFAULT_SIGNAL_SPEED_KM_PER_S) -> float:
    """Propagation delay of a path; node traversal adds no delay."""
    if signal_speed_km_per_s <= 0:
        raise ValueError(f"signal_speed_km_per_s must be positive, got {signal_speed_km_per_s}")
    return path.length_km / signal_speed_km_per_s


def arm_skew(
    path_a: QuantumPath,
    path_b: QuantumPath,
    signal_speed_km_per_s: float = DEFAULT_SIGNAL_SPEED_KM_PER_S,
) -> float:
    """Arrival-time skew |ΔT_Q| between the two arms of a pair."""
    return abs(arm_delay(path_a, signal_speed_km_per_s) - arm_delay(path_b, signal_speed_km_per_s))


def build_path(
    nodes: Sequence[NodeSpec],
    links: Sequence[FiberLink],
    signal_speed_km_per_s: float = DEFAULT_SIGNAL_SPEED_KM_PER_S,
) -> QuantumPath:
    """Assemble a QuantumPath, computing its loss and delay."""
    nodes = tuple(nodes)
    links = tuple(links)
    if not nodes or nodes[0].kind is not NodeKind.SOURCE:
        raise TopologyError("Quantum path must start at the source node")
    loss = segment_loss_db(nodes, links)
    delay = sum(link.length_km for link in links) / signal_speed_km_per_s
    return QuantumPath(nodes=nodes, links=links, total_loss_db=loss, propagation_delay_s=delay)


@dataclass(frozen=True)
class NodePair:
    """A pair of entangling nodes under test, with optional explicit routes."""
    label: str
    node_a: str
    node_b: str
    route_a: Optional[Tuple[str, ...]] = None
    route_b: Optional[Tuple[str, ...]] = None


@dataclass(frozen=True)
class Topology:
    """
    Static network description.

    Exactly one source node is required. Routes default to the minimum
    fiber-length path from the source when a pair does not list one.
    """
    nodes: Tuple[NodeSpec, ...]
    links: Tuple[FiberLink, ...]
    pairs: Tuple[NodePair, ...] = ()
    signal_speed_km_per_s: float = DEFAULT_SIGNAL_SPEED_KM_PER_S
    _graph: nx.Graph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.signal_speed_km_per_s <= 0:
            raise TopologyError("signal_speed_km_per_s must be positive")

        ids = [node.id for node in self.nodes]
        if len(ids) != len(set(ids)):
            raise TopologyError(f"Duplicate node ids in topology: {ids}")

        sources = [node for node in self.nodes if node.kind is NodeKind.SOURCE]
        if len(sources) != 1:
            raise TopologyError(f"Topology needs exactly one source node, found {len(sources)}")

        graph = nx.Graph()
        for node in self.nodes:
            graph.add_node(node.id, spec=node)
        for link in self.links:
            a, b = link.endpoints
            for endpoint in (a, b):
                if endpoint not in graph:
                    raise TopologyError(f"Link {link.endpoints} references unknown node '{endpoint}'")
            if graph.has_edge(a, b):
                raise TopologyError(f"Duplicate link between '{a}' and '{b}'")
            graph.add_edge(a, b, link=link, length_km=link.length_km)
        object.__setattr__(self, "_graph", graph)

        labels = [pair.label for pair in self.pairs]
        if len(labels) != len(set(labels)):
            raise TopologyError(f"Duplicate node-pair labels: {labels}")
        for pair in self.pairs:
            for node_id in (pair.node_a, pair.node_b):
                if self.node(node_id).kind is not NodeKind.ENTANGLING:
                    raise TopologyError(f"Pair '{pair.label}' member '{node_id}' is not an entangling node")

    @property
    def source(self) -> NodeSpec:
        return next(node for node in self.nodes if node.kind is NodeKind.SOURCE)

    def node(self, node_id: str) -> NodeSpec:
        if node_id not in self._graph:
            raise TopologyError(f"Unknown node '{node_id}'")
        return self._graph.nodes[node_id]["spec"]

    def link(self, a: str, b: str) -> FiberLink:
        if not self._graph.has_edge(a, b):
            raise TopologyError(f"No fiber link between '{a}' and '{b}'")
        return self._graph.edges[a, b]["link"]

    def pair(self, label: str) -> NodePair:
        for pair in self.pairs:
            if pair.label == label:
                return pair
        raise TopologyError(f"Unknown node pair '{label}'; known: {[p.label for p in self.pairs]}")

    def path_through(self, node_ids: Iterable[str]) -> QuantumPath:
        """Build the path that visits node_ids in order."""
        node_ids = list(node_ids)
        nodes = [self.node(node_id) for node_id in node_ids]
        links = [self.link(a, b) for a, b in zip(node_ids, node_ids[1:])]
        return build_path(nodes, links, self.signal_speed_km_per_s)

    def resolve_arm(self, node_id: str, route: Optional[Sequence[str]] = None) -> QuantumPath:
        """
        Path from the source to an entangling node.

        Args:
            node_id: Terminal memory node
            route: Explicit node sequence; must start at the source and end at node_id

        Raises:
            TopologyError: If no connected path exists
        """
        if route is not None:
            route = list(route)
            if not route or route[0] != self.source.id or route[-1] != node_id:
                raise TopologyError(f"Route {route} must run from '{self.source.id}' to '{node_id}'")
            return self.path_through(route)

        self.node(node_id)
        try:
            node_ids: List[str] = nx.shortest_path(
                self._graph, self.source.id, node_id, weight="length_km"
            )
        except nx.NetworkXNoPath as e:
            raise TopologyError(f"Node '{node_id}' is not reachable from the source") from e
        return self.path_through(node_ids)

    def arms(self, label: str) -> Tuple[QuantumPath, QuantumPath]:
        """Both arms of a configured node pair."""
        pair = self.pair(label)
        path_a = self.resolve_arm(pair.node_a, pair.route_a)
        path_b = self.resolve_arm(pair.node_b, pair.route_b)
        logger.debug(
            f"Pair {label} arms: {path_a.node_ids} ({path_a.total_loss_db:.2f} dB, "
            f"{path_a.propagation_delay_s:.3e} s) / {path_b.node_ids} ({path_b.total_loss_db:.2f} dB, "
            f"{path_b.propagation_delay_s:.3e} s)"
        )
        return path_a, path_b


def default_node(node_id: str, kind: NodeKind, insertion_loss_db: Optional[float] = None) -> NodeSpec:
    """NodeSpec with the standard loss for its kind unless one is given."""
    loss = DEFAULT_NODE_LOSS_DB[kind] if insertion_loss_db is None else insertion_loss_db
    return NodeSpec(id=node_id, kind=kind, insertion_loss_db=loss)
