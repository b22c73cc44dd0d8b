# Copyright 2024 The momentnet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

"""Multi-layer moment networks, density weights, the projection layer
and node metrics."""

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from momentnet.connectedness import ConnectednessTable
from momentnet.errors import (
    CentralityError,
    DegenerateDensityError,
    DimensionError,
)
from momentnet.io import read_json, write_json

logger = logging.getLogger(__name__)

PROJECTION = "projection"


@dataclass(frozen=True)
class MomentLayer:
    """Symmetric total-connectedness edges of one moment layer, in
    fractions. ``directional`` keeps the normalized decomposition the
    edges were built from, when known."""

    name: str
    names: tuple
    edges: np.ndarray
    categories: tuple = None
    directional: np.ndarray = None

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        N = len(self.names)
        if edges.shape != (N, N):
            raise DimensionError(
                f"layer '{self.name}': edges of shape {edges.shape} for "
                f"{N} nodes"
            )
        if not np.array_equal(edges, edges.T):
            raise ValueError(f"layer '{self.name}': edges must be symmetric")
        if np.any(np.diag(edges) != 0.0) or np.any(edges < 0.0):
            raise ValueError(
                f"layer '{self.name}': edges must be nonnegative with a "
                "zero diagonal"
            )
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "names", tuple(self.names))
        if self.categories is not None:
            object.__setattr__(self, "categories", tuple(self.categories))

    @classmethod
    def from_decomposition(cls, name, d, names, categories=None):
        d = np.asarray(d, dtype=np.float64)
        edges = d + d.T
        np.fill_diagonal(edges, 0.0)
        return cls(name, names, edges, categories, d)

    @property
    def density(self):
        return float(np.triu(self.edges, k=1).sum())

    def table(self, scaled=False):
        if self.directional is None:
            raise ValueError(f"layer '{self.name}' has no directional data")
        return ConnectednessTable.from_matrix(
            self.directional, self.names, scaled=scaled
        )


@dataclass(frozen=True)
class MultiLayerNetwork:
    layers: tuple
    densities: np.ndarray
    weights: np.ndarray
    projection: MomentLayer

    @property
    def names(self):
        return self.projection.names

    @property
    def categories(self):
        return self.projection.categories

    def layer(self, name):
        if name == PROJECTION:
            return self.projection
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(f"unknown layer '{name}'")


@dataclass(frozen=True)
class NodeMetrics:
    names: tuple
    degree: np.ndarray
    net_degree: np.ndarray
    bridge: np.ndarray

    def to_records(self):
        return [
            {
                "id": name,
                "degree": float(self.degree[i]),
                "net_degree": float(self.net_degree[i]),
                "bridge": float(self.bridge[i]),
            }
            for i, name in enumerate(self.names)
        ]


def _check_layers(layers):
    if not layers:
        raise ValueError("at least one layer is required")
    names = layers[0].names
    for layer in layers[1:]:
        if layer.edges.shape != layers[0].edges.shape:
            raise DimensionError(
                f"layer '{layer.name}' has shape {layer.edges.shape}, "
                f"expected {layers[0].edges.shape}"
            )
        if layer.names != names:
            raise KeyError(f"layer '{layer.name}' has different node names")


def _normalize(densities):
    total = densities.sum(axis=-1, keepdims=True)
    if np.any(~(total > 0.0)):
        raise DegenerateDensityError("every layer has zero density")
    return densities / total


def layer_weights(layers):
    """Densities (edge mass over unordered pairs) and their shares."""
    _check_layers(layers)
    densities = np.array([layer.density for layer in layers])
    return densities, _normalize(densities)


def project_layers(layers, weights):
    _check_layers(layers)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(layers),):
        raise DimensionError(
            f"{len(weights)} weights given for {len(layers)} layers"
        )
    return sum(w * layer.edges for w, layer in zip(weights, layers))


def build_network(layers):
    layers = tuple(layers)
    densities, weights = layer_weights(layers)
    edges = project_layers(layers, weights)
    directional = None
    if all(layer.directional is not None for layer in layers):
        directional = sum(
            w * layer.directional for w, layer in zip(weights, layers)
        )
    projection = MomentLayer(
        PROJECTION, layers[0].names, edges, layers[0].categories, directional
    )
    logger.info(
        "network layers=%s weights=%s",
        [layer.name for layer in layers],
        np.round(weights, 6).tolist(),
    )
    return MultiLayerNetwork(layers, densities, weights, projection)


def project_path(layer_paths):
    """Per-date layer weights and projected decompositions.

    ``layer_paths`` maps layer names to ``(T, N, N)`` normalized
    decompositions on a common date grid. Returns ``(weights, d)`` with
    weights of shape ``(T, L)`` in mapping order.
    """
    shapes = {name: np.shape(p) for name, p in layer_paths.items()}
    if len(set(shapes.values())) > 1:
        raise DimensionError(f"layer paths differ in shape: {shapes}")
    paths = np.stack([np.asarray(p, np.float64) for p in layer_paths.values()])
    L, T, N, _ = paths.shape
    upper = np.triu(np.ones((N, N)), k=1)
    edges = paths + paths.transpose(0, 1, 3, 2)
    densities = (edges * upper).sum(axis=(2, 3)).T
    weights = _normalize(densities)
    projected = np.einsum("tl,ltij->tij", weights, paths)
    return weights, projected


def _cohesion(graph, n):
    if n < 2:
        return 0.0
    inverse = 0.0
    for source, lengths in nx.all_pairs_dijkstra_path_length(
        graph, weight="length"
    ):
        for target, dist in lengths.items():
            if target != source:
                inverse += 1.0 / dist
    return inverse / (n * (n - 1))


def _graph(edges):
    N = edges.shape[0]
    graph = nx.Graph()
    graph.add_nodes_from(range(N))
    for i, j in zip(*np.triu_indices(N, k=1)):
        if edges[i, j] > 0.0:
            graph.add_edge(int(i), int(j), length=1.0 / edges[i, j])
    return graph


def bridge_centrality(edges):
    """Cohesion lost when a node's edges are deleted one at a time.

    Cohesion is the mean inverse shortest-path distance over ordered node
    pairs, with edge length ``1 / weight`` and unreachable pairs counting
    zero. A node scores the summed loss over its incident edges, which
    is the mean over its ``N - 1`` potential edges with absent edges
    losing nothing. Averaging over present edges only is not used: it
    would give the ends and the middle of a path graph the same score.
    Scores are divided by their maximum.
    """
    edges = np.asarray(edges, dtype=np.float64)
    N = edges.shape[0]
    if N < 3:
        raise CentralityError(
            f"bridge centrality needs at least 3 nodes, got {N}"
        )
    graph = _graph(edges)
    base = _cohesion(graph, N)
    scores = np.zeros(N)
    for u, v in list(graph.edges()):
        data = graph.edges[u, v]
        graph.remove_edge(u, v)
        loss = base - _cohesion(graph, N)
        graph.add_edge(u, v, **data)
        scores[u] += loss
        scores[v] += loss
    scores /= N - 1
    top = scores.max()
    return scores / top if top > 0.0 else scores


def node_metrics(table, layer):
    """Degree and net degree from ``table`` margins plus the bridge
    centrality of ``layer``."""
    if tuple(table.names) != tuple(layer.names):
        missing = set(table.names) ^ set(layer.names)
        raise KeyError(
            "node sets differ: " + ", ".join(sorted(map(str, missing)))
            if missing
            else "node order differs between table and layer"
        )
    return NodeMetrics(
        tuple(layer.names),
        table.to + table.from_,
        table.to - table.from_,
        bridge_centrality(layer.edges),
    )


def _layer_record(layer, weight, density):
    names = layer.names
    records = []
    for i, j in zip(*np.triu_indices(len(names), k=1)):
        source, target = sorted((names[i], names[j]))
        records.append(
            {"source": source, "target": target, "weight": layer.edges[i, j]}
        )
    return {
        "name": layer.name,
        "weight": weight,
        "density": density,
        "edges": records,
    }


def network_document(network, metrics):
    categories = network.categories or (None,) * len(network.names)
    return {
        "nodes": [
            {"id": name, "category": category}
            for name, category in zip(network.names, categories)
        ],
        "layers": [
            _layer_record(layer, float(w), float(d))
            for layer, w, d in zip(
                network.layers, network.weights, network.densities
            )
        ],
        "projection": _layer_record(
            network.projection, 1.0, network.projection.density
        ),
        "metrics": {
            name: metric.to_records() for name, metric in metrics.items()
        },
    }


def export_network(network, metrics, path):
    return write_json(network_document(network, metrics), path)


def _layer_from_record(record, names, categories):
    position = {name: i for i, name in enumerate(names)}
    edges = np.zeros((len(names), len(names)))
    for edge in record["edges"]:
        i, j = position[edge["source"]], position[edge["target"]]
        edges[i, j] = edges[j, i] = edge["weight"]
    return MomentLayer(record["name"], names, edges, categories)


def read_network(path):
    """Inverse of :func:`export_network`; returns ``(network, metrics)``.
    Directional decompositions are not part of the document."""
    doc = read_json(path, stage="network")
    names = tuple(node["id"] for node in doc["nodes"])
    categories = tuple(node["category"] for node in doc["nodes"])
    if all(c is None for c in categories):
        categories = None
    layers = tuple(
        _layer_from_record(r, names, categories) for r in doc["layers"]
    )
    network = MultiLayerNetwork(
        layers,
        np.array([r["density"] for r in doc["layers"]]),
        np.array([r["weight"] for r in doc["layers"]]),
        _layer_from_record(doc["projection"], names, categories),
    )
    metrics = {}
    for name, records in doc["metrics"].items():
        metrics[name] = NodeMetrics(
            tuple(r["id"] for r in records),
            np.array([r["degree"] for r in records]),
            np.array([r["net_degree"] for r in records]),
            np.array([r["bridge"] for r in records]),
        )
    return network, metrics
