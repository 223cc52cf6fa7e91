"""Constraint networks over named region variables.

Networks are immutable values. Each entry is a :class:`RelationSet`;
the diagonal is ``{EQ}`` and ``constraint(j, i)`` is always the converse of
``constraint(i, j)``. Refinement uses algebraic closure (path consistency)
and, for a definite answer, backtracking over base-relation scenarios.
"""

from __future__ import annotations

import json
import random
from collections import deque
from typing import Iterable, Mapping, Sequence

from .algebra import (
    ALL,
    CompositionTable,
    RCC8Error,
    RelationSet,
    BaseRelation,
    RELATIONS,
    _converse_mask,
    _read_json,
    default_table,
    parse_relation,
)

EQ_MASK = BaseRelation.EQ.bit


class EmptyConstraint(RCC8Error, ValueError):
    pass


class SelfConstraint(RCC8Error, ValueError):
    pass


class ConstraintNetwork:
    def __init__(self, variables: Sequence[str] = (),
                 _matrix: Sequence[Sequence[int]] | None = None):
        names = tuple(variables)
        if len(set(names)) != len(names):
            raise ValueError("variable names must be distinct")
        self.variables = names
        n = len(names)
        if _matrix is None:
            _matrix = [[EQ_MASK if i == j else 0xFF for j in range(n)] for i in range(n)]
        self._m = tuple(tuple(row) for row in _matrix)
        self._index = {v: i for i, v in enumerate(names)}

    def __len__(self) -> int:
        return len(self.variables)

    def index(self, name: str) -> int:
        return self._index[name]

    def constraint(self, x: str, y: str) -> RelationSet:
        return RelationSet.from_mask(self._m[self._index[x]][self._index[y]])

    def __getitem__(self, pair: tuple[str, str]) -> RelationSet:
        return self.constraint(*pair)

    def masks(self) -> list[list[int]]:
        return [list(row) for row in self._m]

    def with_variable(self, name: str) -> "ConstraintNetwork":
        if name in self._index:
            return self
        rows = [list(row) + [0xFF] for row in self._m]
        rows.append([0xFF] * len(self.variables) + [EQ_MASK])
        return ConstraintNetwork(self.variables + (name,), rows)

    def add_constraint(self, x: str, y: str, s: RelationSet) -> "ConstraintNetwork":
        return add_constraint(self, x, y, s)

    def is_scenario(self) -> bool:
        """True when every off-diagonal entry is a single base relation."""
        return all(bin(m).count("1") == 1 for row in self._m for m in row)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, ConstraintNetwork)
                and self.variables == other.variables and self._m == other._m)

    def __hash__(self) -> int:
        return hash((self.variables, self._m))

    def render(self) -> str:
        """Tab-separated matrix, one row per variable."""
        lines = ["\t" + "\t".join(self.variables)]
        for i, v in enumerate(self.variables):
            cells = [",".join(r.name for r in RelationSet.from_mask(m)) for m in self._m[i]]
            lines.append(v + "\t" + "\t".join(cells))
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"ConstraintNetwork({list(self.variables)!r})"


def add_constraint(net: ConstraintNetwork, x: str, y: str, s: RelationSet) -> ConstraintNetwork:
    """Intersect the (x, y) entry with ``s``; unseen variables are created."""
    if x == y:
        if s != RelationSet.of(BaseRelation.EQ):
            raise SelfConstraint(f"{x} can only be related to itself by EQ, got {s}")
        return net.with_variable(x)
    if not s:
        raise EmptyConstraint(f"empty relation set for ({x}, {y})")
    net = net.with_variable(x).with_variable(y)
    i, j = net.index(x), net.index(y)
    m = net.masks()
    new = m[i][j] & s.mask
    if new == 0:
        raise EmptyConstraint(
            f"({x}, {y}): {RelationSet.from_mask(m[i][j])} and {s} are disjoint")
    m[i][j] = new
    m[j][i] = _converse_mask(new)
    return ConstraintNetwork(net.variables, m)


def _close_in_place(m: list[list[int]], t: CompositionTable,
                    dirty: Iterable[tuple[int, int]] | None = None) -> bool:
    """Run path consistency on a mutable mask matrix. False on inconsistency."""
    n = len(m)
    if dirty is None:
        dirty = [(i, j) for i in range(n) for j in range(n) if i != j]
    queue = deque(dirty)
    queued = set(queue)
    compose = t.compose_masks
    while queue:
        i, j = queue.popleft()
        queued.discard((i, j))
        for k in range(n):
            if k == i or k == j:
                continue
            # (i, k) <- (i, k) & (i, j)∘(j, k)
            old = m[i][k]
            new = old & compose(m[i][j], m[j][k])
            if new != old:
                if not new:
                    return False
                m[i][k] = new
                m[k][i] = _converse_mask(new)
                for p in ((i, k), (k, i)):
                    if p not in queued:
                        queue.append(p)
                        queued.add(p)
            # (k, j) <- (k, j) & (k, i)∘(i, j)
            old = m[k][j]
            new = old & compose(m[k][i], m[i][j])
            if new != old:
                if not new:
                    return False
                m[k][j] = new
                m[j][k] = _converse_mask(new)
                for p in ((k, j), (j, k)):
                    if p not in queued:
                        queue.append(p)
                        queued.add(p)
    return True


def algebraic_closure(net: ConstraintNetwork,
                      t: CompositionTable | None = None) -> ConstraintNetwork | None:
    """Refine ``net`` to its algebraic closure, or return ``None`` if some
    entry becomes empty.

    Sound but not complete for arbitrary disjunctive networks; use
    :func:`refine_to_scenario` to decide consistency.
    """
    t = t or default_table()
    m = net.masks()
    if not _close_in_place(m, t):
        return None
    return ConstraintNetwork(net.variables, m)


def refine_to_scenario(net: ConstraintNetwork, t: CompositionTable | None = None
                       ) -> dict[tuple[str, str], BaseRelation] | None:
    """Find one base relation per variable pair that survives closure.

    Branches on the undecided pair with the fewest remaining relations
    (ties broken lexicographically) and tries relations in canonical order,
    so the result is deterministic. Keys are ``(x, y)`` with ``x`` before
    ``y`` in variable order.
    """
    t = t or default_table()
    m = net.masks()
    if not _close_in_place(m, t):
        return None
    solved = _search(m, t)
    if solved is None:
        return None
    names = net.variables
    n = len(names)
    return {(names[i], names[j]): RELATIONS[solved[i][j].bit_length() - 1]
            for i in range(n) for j in range(i + 1, n)}


def _search(m: list[list[int]], t: CompositionTable) -> list[list[int]] | None:
    n = len(m)
    best = None
    best_size = 9
    for i in range(n):
        for j in range(i + 1, n):
            size = bin(m[i][j]).count("1")
            if 1 < size < best_size:
                best, best_size = (i, j), size
    if best is None:
        return m
    i, j = best
    for r in RELATIONS:
        if not m[i][j] & r.bit:
            continue
        trial = [row[:] for row in m]
        trial[i][j] = r.bit
        trial[j][i] = r.converse.bit
        if _close_in_place(trial, t, [(i, j), (j, i)]):
            done = _search(trial, t)
            if done is not None:
                return done
    return None


def network_from_records(records: Iterable[Mapping]) -> ConstraintNetwork:
    """Build a network from ``{"x": ..., "y": ..., "rels": [...]}`` records."""
    net = ConstraintNetwork()
    for rec in records:
        try:
            x, y, rels = rec["x"], rec["y"], rec["rels"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"bad network record {rec!r}") from exc
        s = RelationSet(parse_relation(name) for name in rels)
        net = add_constraint(net, str(x), str(y), s)
    return net


def load_network(source) -> ConstraintNetwork:
    doc = _read_json(source)
    if not isinstance(doc, list):
        raise ValueError("network document must be a JSON list of records")
    return network_from_records(doc)


def random_network(n_vars: int, rng: random.Random, density: float = 0.7) -> ConstraintNetwork:
    """Random disjunctive network; each pair is constrained with probability
    ``density`` to a nonempty random subset, otherwise left as ALL."""
    names = [f"v{i}" for i in range(n_vars)]
    net = ConstraintNetwork(names)
    m = net.masks()
    for i in range(n_vars):
        for j in range(i + 1, n_vars):
            if rng.random() < density:
                mask = rng.randint(1, 0xFF)
                m[i][j] = mask
                m[j][i] = _converse_mask(mask)
    return ConstraintNetwork(names, m)


def json_records(net: ConstraintNetwork) -> str:
    """Serialize the upper triangle of ``net`` as a network input document."""
    out = []
    for i, x in enumerate(net.variables):
        for y in net.variables[i + 1:]:
            s = net.constraint(x, y)
            if not s.is_all():
                out.append({"x": x, "y": y, "rels": s.names()})
    return json.dumps(out)


__all__ = [
    "ALL",
    "ConstraintNetwork",
    "EmptyConstraint",
    "SelfConstraint",
    "add_constraint",
    "algebraic_closure",
    "refine_to_scenario",
    "load_network",
    "network_from_records",
    "random_network",
    "json_records",
]
