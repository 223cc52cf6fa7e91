"""Conceptual neighbourhood graph of the eight base relations."""

from __future__ import annotations

import json
from collections import deque
from functools import lru_cache
from typing import Iterable

from .algebra import (
    CANONICAL,
    RELATIONS,
    BaseRelation,
    RCC8Error,
    RelationSet,
    TableSource,
    _data_text,
    _read_json,
)


class MalformedGraph(RCC8Error, ValueError):
    pass


class DisconnectedGraph(RCC8Error, ValueError):
    pass


class CNGraph:
    """Undirected, loop-free graph over the eight relations."""

    def __init__(self, edges: Iterable[tuple[BaseRelation, BaseRelation]]):
        self.edges = frozenset(frozenset(e) for e in edges)
        adj = [0] * 8
        for e in self.edges:
            a, b = tuple(e)
            adj[a.value] |= b.bit
            adj[b.value] |= a.bit
        self._adj = tuple(adj)
        self._dist = self._all_pairs_bfs()

    def _all_pairs_bfs(self) -> tuple[tuple[int | None, ...], ...]:
        rows = []
        for src in RELATIONS:
            dist: list[int | None] = [None] * 8
            dist[src.value] = 0
            queue = deque([src.value])
            while queue:
                u = queue.popleft()
                for v in range(8):
                    if self._adj[u] >> v & 1 and dist[v] is None:
                        dist[v] = dist[u] + 1
                        queue.append(v)
            rows.append(tuple(dist))
        return tuple(rows)

    def is_connected(self) -> bool:
        return all(d is not None for d in self._dist[0])

    def neighbors(self, r: BaseRelation) -> RelationSet:
        return RelationSet.from_mask(self._adj[r.value])

    def is_neighbor(self, r1: BaseRelation, r2: BaseRelation) -> bool:
        return bool(self._adj[r1.value] & r2.bit)

    def distance(self, r1: BaseRelation, r2: BaseRelation) -> int:
        d = self._dist[r1.value][r2.value]
        if d is None:
            raise DisconnectedGraph(f"no path from {r1.name} to {r2.name}")
        return d

    def directed_link_count(self) -> int:
        return 2 * len(self.edges)

    def to_document(self) -> list[list[str]]:
        pairs = sorted(sorted(r.value for r in e) for e in self.edges)
        return [[RELATIONS[a].name, RELATIONS[b].name] for a, b in pairs]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CNGraph) and other.edges == self.edges

    def __hash__(self) -> int:
        return hash(self.edges)


def load_cn_graph(source: TableSource = None) -> CNGraph:
    """Load an edge-list document: a JSON array of two-name arrays."""
    doc = json.loads(_data_text("cn_graph.json")) if source is None else _read_json(source)
    if not isinstance(doc, list):
        raise MalformedGraph("CN graph document must be a JSON array of pairs")
    seen: set[frozenset[BaseRelation]] = set()
    edges = []
    for item in doc:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise MalformedGraph(f"edge {item!r} is not a two-element array")
        pair = []
        for name in item:
            r = CANONICAL.lookup(name) if isinstance(name, str) else None
            if r is None or name != r.name:
                raise MalformedGraph(f"unknown relation name {name!r}")
            pair.append(r)
        a, b = pair
        if a is b:
            raise MalformedGraph(f"self-loop on {a.name}")
        key = frozenset(pair)
        if key in seen:
            raise MalformedGraph(f"duplicate edge {a.name}-{b.name}")
        seen.add(key)
        edges.append((a, b))
    g = CNGraph(edges)
    if not g.is_connected():
        isolated = [r.name for r in RELATIONS if g._dist[0][r.value] is None]
        raise DisconnectedGraph(f"unreachable from DC: {', '.join(isolated)}")
    return g


@lru_cache(maxsize=1)
def default_graph() -> CNGraph:
    return load_cn_graph()


def neighbors(r: BaseRelation, g: CNGraph | None = None) -> RelationSet:
    return (g or default_graph()).neighbors(r)


def is_neighbor(r1: BaseRelation, r2: BaseRelation, g: CNGraph | None = None) -> bool:
    return (g or default_graph()).is_neighbor(r1, r2)


def conceptual_distance(r1: BaseRelation, r2: BaseRelation, g: CNGraph | None = None) -> int:
    return (g or default_graph()).distance(r1, r2)
