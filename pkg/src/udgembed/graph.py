"""Undirected simple graphs, structural statistics and component decomposition."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

EXACT_CLIQUE_LIMIT = 12


class MalformedInputError(ValueError):
    """Raised when a graph or document cannot be parsed into a valid object."""


def _normalize_pairs(n: int, pairs: Iterable[Sequence[int]]) -> frozenset[tuple[int, int]]:
    edges = set()
    for pair in pairs:
        if len(pair) != 2:
            raise MalformedInputError(f"edge {pair!r} is not a pair")
        u, v = (int(p) for p in pair)
        if u == v:
            raise MalformedInputError(f"self-loop on vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise MalformedInputError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        edges.add((min(u, v), max(u, v)))
    return frozenset(edges)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    Edges are stored as ordered tuples ``(u, v)`` with ``u < v``; any iterable of
    pairs is accepted and normalized, so ``(1, 0)`` and ``(0, 1)`` collapse.
    """

    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise MalformedInputError(f"vertex count must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", _normalize_pairs(self.n, self.edges))

    @classmethod
    def complete(cls, k: int) -> "Graph":
        return cls(k, frozenset(combinations(range(k), 2)))

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        nodes = sorted(g.nodes)
        index = {v: i for i, v in enumerate(nodes)}
        return cls(len(nodes), frozenset((index[u], index[v]) for u, v in g.edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Boolean ``(n, n)`` adjacency matrix."""
        a = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges:
            a[u, v] = a[v, u] = True
        a.flags.writeable = False
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        d = self.adjacency.sum(axis=1).astype(int)
        d.flags.writeable = False
        return d

    def neighbors(self, v: int) -> list[int]:
        return [int(u) for u in np.flatnonzero(self.adjacency[v])]

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u, v])

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.sorted_edges)
        return g

    def induced(self, vertices: Sequence[int]) -> "Graph":
        """Subgraph induced by ``vertices``, relabelled to ``0..len-1`` in the given order."""
        local = {v: i for i, v in enumerate(vertices)}
        sub = [(local[u], local[v]) for u, v in self.edges if u in local and v in local]
        return Graph(len(vertices), frozenset(sub))

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        return Graph(self.n, frozenset((perm[u], perm[v]) for u, v in self.edges))

    def to_document(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.sorted_edges]}


@dataclass(frozen=True)
class GraphStats:
    max_degree: int
    clique_lower_bound: int
    degree_sequence: list[int]
    clique: tuple[int, ...] = ()


@dataclass(frozen=True)
class GeneralComponent:
    vertices: tuple[int, ...]
    graph: Graph

    @property
    def index_map(self) -> dict[int, int]:
        """Local vertex index to global vertex index."""
        return dict(enumerate(self.vertices))


@dataclass(frozen=True)
class ComponentDecomposition:
    isolated: list[int]
    complete: list[tuple[int, ...]]
    general: list[GeneralComponent]

    def census(self) -> dict:
        """Counts of each component type, keyed the way the reports print them."""
        complete_sizes: dict[int, int] = {}
        for c in self.complete:
            complete_sizes[len(c)] = complete_sizes.get(len(c), 0) + 1
        return {
            "isolated": len(self.isolated),
            "complete": dict(sorted(complete_sizes.items())),
            "general": sorted(len(c.vertices) for c in self.general),
        }


# -- loading -----------------------------------------------------------------


def parse_graph(text: str) -> Graph:
    """Parse either the JSON edge-list document or the ``n <count>`` line format."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"invalid JSON: {exc}") from exc
        return graph_from_document(doc)

    lines = [ln.split("#", 1)[0].strip() for ln in stripped.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MalformedInputError("empty graph document")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "n":
        raise MalformedInputError("line format must start with a header 'n <count>'")
    try:
        n = int(header[1])
        pairs = [tuple(int(tok) for tok in ln.split()) for ln in lines[1:]]
    except ValueError as exc:
        raise MalformedInputError(f"non-integer token: {exc}") from exc
    return Graph(n, pairs)


def graph_from_document(doc: dict) -> Graph:
    if not isinstance(doc, dict) or "n" not in doc:
        raise MalformedInputError("graph document needs an 'n' field")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise MalformedInputError(f"'n' must be an integer, got {n!r}")
    edges = doc.get("edges", [])
    if not isinstance(edges, list):
        raise MalformedInputError("'edges' must be a list of pairs")
    return Graph(n, edges)


def load_graph(source: str | Path | dict) -> Graph:
    """Load a graph from a path, a raw document string, or an already-decoded dict."""
    if isinstance(source, dict):
        return graph_from_document(source)
    if isinstance(source, str) and source.lstrip().startswith(("{", "n ")):
        return parse_graph(source)
    path = Path(source)
    if not path.is_file():
        raise MalformedInputError(f"no such graph file: {source}")
    return parse_graph(path.read_text())


def save_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(g.to_document()) + "\n")


# -- statistics ----------------------------------------------------------------


def _degree_order(g: Graph) -> list[int]:
    # Descending degree, ties to the lower index.
    return sorted(range(g.n), key=lambda v: (-g.degrees[v], v))


def greedy_clique(g: Graph) -> tuple[int, ...]:
    """Best clique found by greedy expansion from every vertex.

    From each seed (taken in descending-degree order) the clique grows by the
    candidate with the most neighbours inside the remaining candidate set.
    """
    adj = g.adjacency
    order = _degree_order(g)
    best: tuple[int, ...] = (order[0],)
    for seed in order:
        if g.degrees[seed] + 1 <= len(best):
            continue
        clique = [seed]
        cand = adj[seed].copy()
        while cand.any():
            idx = np.flatnonzero(cand)
            inner = adj[np.ix_(idx, idx)].sum(axis=1)
            # max inner degree, then max global degree, then lowest index
            keys = sorted(zip(-inner, -g.degrees[idx], idx))
            pick = int(keys[0][2])
            clique.append(pick)
            cand &= adj[pick]
        if len(clique) > len(best):
            best = tuple(sorted(clique))
    return best


def exact_clique(g: Graph) -> tuple[int, ...]:
    best: tuple[int, ...] = (0,)
    for c in nx.find_cliques(g.to_networkx()):
        if len(c) > len(best) or (len(c) == len(best) and tuple(sorted(c)) < best):
            best = tuple(sorted(c))
    return best


def stats(g: Graph) -> GraphStats:
    clique = exact_clique(g) if g.n <= EXACT_CLIQUE_LIMIT else greedy_clique(g)
    degs = [int(d) for d in g.degrees]
    return GraphStats(
        max_degree=max(degs),
        clique_lower_bound=len(clique),
        degree_sequence=degs,
        clique=clique,
    )


def is_clique(g: Graph, vertices: Sequence[int]) -> bool:
    return all(g.has_edge(u, v) for u, v in combinations(vertices, 2))


# -- decomposition -------------------------------------------------------------


def decompose(g: Graph) -> ComponentDecomposition:
    """Split into isolated vertices, complete components and the rest.

    Components are listed by their smallest vertex; each general component
    keeps the sorted global vertex list so local index ``i`` maps back to
    ``vertices[i]``.
    """
    isolated: list[int] = []
    complete: list[tuple[int, ...]] = []
    general: list[GeneralComponent] = []
    comps = sorted((sorted(c) for c in nx.connected_components(g.to_networkx())), key=lambda c: c[0])
    for comp in comps:
        k = len(comp)
        if k == 1:
            isolated.append(comp[0])
            continue
        sub = g.induced(comp)
        if sub.m == k * (k - 1) // 2:
            complete.append(tuple(comp))
        else:
            general.append(GeneralComponent(tuple(comp), sub))
    return ComponentDecomposition(isolated, complete, general)
