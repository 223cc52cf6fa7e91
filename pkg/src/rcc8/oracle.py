"""Brute-force model of RCC-8 over grid regions.

A region is a finite nonempty set of integer cells ``(column, row)``; each
cell stands for the closed unit square ``[c, c+1] x [r, r+1]``. Under that
reading the point-set notions behind the eight relations become exact
combinatorial tests:

* interiors overlap   <=> the regions share a cell
* closures meet       <=> some pair of cells is equal or 8-adjacent
* x is part of y      <=> cells(x) is a subset of cells(y)
* x touches y's edge  <=> some cell of x is 8-adjacent to a cell not in y

Sampling works on bitmasks inside a padded rectangular frame so that
classification is a handful of integer operations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Iterator

from .algebra import (
    RELATIONS,
    BaseRelation,
    CompositionTable,
    RelationSet,
    default_table,
)

R = BaseRelation

DEFAULT_GRID = (6, 6)
DEFAULT_SOUNDNESS_SAMPLES = 100_000
DEFAULT_WITNESS_BUDGET = 20_000


@dataclass(frozen=True)
class GridRegion:
    cells: frozenset[tuple[int, int]]

    def __post_init__(self):
        if not self.cells:
            raise ValueError("a grid region needs at least one cell")

    @classmethod
    def of(cls, *cells: tuple[int, int]) -> "GridRegion":
        return cls(frozenset(cells))

    @classmethod
    def block(cls, col: int, row: int, width: int, height: int) -> "GridRegion":
        return cls(frozenset((col + dc, row + dr)
                             for dc in range(width) for dr in range(height)))

    def __len__(self) -> int:
        return len(self.cells)

    def is_one_piece(self) -> bool:
        """True when the cells form a single 4-connected component."""
        start = next(iter(self.cells))
        seen = {start}
        stack = [start]
        while stack:
            c, r = stack.pop()
            for nb in ((c + 1, r), (c - 1, r), (c, r + 1), (c, r - 1)):
                if nb in self.cells and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.cells)

    def to_list(self) -> list[list[int]]:
        return [list(c) for c in sorted(self.cells)]

    def render(self, width: int | None = None, height: int | None = None, mark: str = "#") -> str:
        cols = [c for c, _ in self.cells]
        rows = [r for _, r in self.cells]
        w = width if width is not None else max(cols) + 1
        h = height if height is not None else max(rows) + 1
        return "\n".join("".join(mark if (c, r) in self.cells else "." for c in range(w))
                         for r in range(h))


@dataclass(frozen=True)
class Witness:
    x: GridRegion
    y: GridRegion
    z: GridRegion
    relations: tuple[BaseRelation, BaseRelation, BaseRelation]

    def to_json(self) -> dict:
        return {
            "x": self.x.to_list(),
            "y": self.y.to_list(),
            "z": self.z.to_list(),
            "relations": [r.name for r in self.relations],
        }


class Frame:
    """A ``width x height`` window embedded in a bitmask with a one-cell
    border, so that dilation never wraps and out-of-window neighbours are
    representable (they are simply never members of a region)."""

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise ValueError("grid must be at least 1x1")
        self.width = width
        self.height = height
        self.stride = width + 2
        self.inside = 0
        self.cell_bits = []
        for r in range(height):
            for c in range(width):
                b = 1 << self.bit_index(c, r)
                self.cell_bits.append(b)
                self.inside |= b
        self.area = width * height
        self.full = (1 << (self.stride * (height + 2))) - 1

    def bit_index(self, c: int, r: int) -> int:
        return (r + 1) * self.stride + (c + 1)

    def encode(self, region: GridRegion) -> int:
        m = 0
        for c, r in region.cells:
            if not (0 <= c < self.width and 0 <= r < self.height):
                raise ValueError(f"cell {(c, r)} outside {self.width}x{self.height} frame")
            m |= 1 << self.bit_index(c, r)
        return m

    def decode(self, mask: int) -> GridRegion:
        cells = []
        s = self.stride
        while mask:
            low = mask & -mask
            idx = low.bit_length() - 1
            cells.append((idx % s - 1, idx // s - 1))
            mask ^= low
        return GridRegion(frozenset(cells))

    def dilate8(self, m: int) -> int:
        h = m | (m << 1) | (m >> 1)
        return h | (h << self.stride) | (h >> self.stride)

    def dilate4(self, m: int) -> int:
        s = self.stride
        return m | (m << 1) | (m >> 1) | (m << s) | (m >> s)

    def classify(self, a: int, b: int) -> BaseRelation:
        return classify_masks(a, b, self.dilate8(a), self.dilate8(b))

    def is_one_piece(self, m: int) -> bool:
        if not m:
            return False
        low = m & -m
        comp = low
        while True:
            grown = self.dilate4(comp) & m
            if grown == comp:
                return comp == m
            comp = grown


def classify_masks(a: int, b: int, da: int, db: int) -> BaseRelation:
    """Classify regions given as masks plus their 8-dilations."""
    if a == b:
        return R.EQ
    if not a & b:
        return R.EC if da & b else R.DC
    if not a & ~b:
        return R.TPP if da & ~b else R.NTPP
    if not b & ~a:
        return R.TPPi if db & ~a else R.NTPPi
    return R.PO


def classify(x: GridRegion, y: GridRegion) -> BaseRelation:
    cols = [c for c, _ in x.cells] + [c for c, _ in y.cells]
    rows = [r for _, r in x.cells] + [r for _, r in y.cells]
    c0, r0 = min(cols), min(rows)
    frame = Frame(max(cols) - c0 + 1, max(rows) - r0 + 1)

    def enc(g: GridRegion) -> int:
        return frame.encode(GridRegion(frozenset((c - c0, r - r0) for c, r in g.cells)))

    return frame.classify(enc(x), enc(y))


# ---------------------------------------------------------------- sampling

def _pick_bit(m: int, rng: random.Random) -> int:
    bits = []
    while m:
        low = m & -m
        bits.append(low)
        m ^= low
    return bits[rng.randrange(len(bits))]


def _popcount(m: int) -> int:
    return bin(m).count("1")


def _grow(frame: Frame, seed_mask: int, target: int, allowed: int, rng: random.Random) -> int:
    """Grow ``seed_mask`` by 4-adjacent cells drawn from ``allowed`` until it
    has ``target`` cells or cannot grow further."""
    m = seed_mask
    n = _popcount(m)
    while n < target:
        frontier = frame.dilate4(m) & ~m & allowed
        if not frontier:
            break
        m |= _pick_bit(frontier, rng)
        n += 1
    return m


def _random_mask(frame: Frame, rng: random.Random, one_piece: bool) -> int:
    k = rng.randint(1, frame.area)
    if one_piece:
        start = frame.cell_bits[rng.randrange(frame.area)]
        return _grow(frame, start, k, frame.inside, rng)
    m = 0
    for b in rng.sample(frame.cell_bits, k):
        m |= b
    return m


def random_region(bounds: tuple[int, int] = DEFAULT_GRID, one_piece: bool = True,
                  seed: int = 0) -> GridRegion:
    """Deterministic random region in a ``bounds = (width, height)`` window."""
    frame = Frame(*bounds)
    return frame.decode(_random_mask(frame, random.Random(seed), one_piece))


def _derive(frame: Frame, src: int, rng: random.Random, one_piece: bool) -> int:
    """Draw a region correlated with ``src``.

    Independent draws rarely produce nested or touching configurations, so
    most draws start from ``src`` and grow, shrink, dilate, erode, shift or
    attach to it. The result is nonempty and lies inside the frame; when
    ``one_piece`` is requested it is also 4-connected.
    """
    op = rng.randrange(10)
    inside = frame.inside
    out = 0
    if op == 0:
        out = src
    elif op == 1:
        extra = rng.randint(1, frame.area)
        out = _grow(frame, src, _popcount(src) + extra, inside, rng)
    elif op == 2:
        out = frame.dilate8(src) & inside
        if rng.random() < 0.5:
            out = _grow(frame, out, _popcount(out) + rng.randint(1, frame.area), inside, rng)
    elif op == 3:
        start = _pick_bit(src, rng)
        out = _grow(frame, start, rng.randint(1, _popcount(src)), src, rng)
    elif op == 4:
        # cells of src whose whole 8-neighbourhood lies in src
        out = src & ~frame.dilate8(frame.full & ~src)
        if out and rng.random() < 0.5:
            start = _pick_bit(out, rng)
            out = _grow(frame, start, rng.randint(1, _popcount(out)), out, rng)
    elif op == 5:
        dc, dr = rng.randint(-2, 2), rng.randint(-2, 2)
        shift = dr * frame.stride + dc
        moved = src << shift if shift >= 0 else src >> -shift
        if _popcount(moved & inside) == _popcount(src) and not moved & ~inside:
            out = moved
    elif op == 6:
        ring = frame.dilate8(src) & ~src & inside
        if ring:
            start = _pick_bit(ring, rng)
            out = _grow(frame, start, rng.randint(1, frame.area), inside & ~src, rng)
    elif op == 8:
        # separated: keep clear of src and its 8-neighbourhood
        free = inside & ~frame.dilate8(src)
        if free:
            out = _grow(frame, _pick_bit(free, rng), rng.randint(1, frame.area), free, rng)
    elif op == 9:
        out = frame.dilate8(frame.dilate8(src)) & inside
    else:
        # overlap: start inside src, grow into anything
        start = _pick_bit(src, rng)
        out = _grow(frame, start, rng.randint(1, frame.area), inside, rng)
    if not out or (one_piece and not frame.is_one_piece(out)):
        return _random_mask(frame, rng, one_piece)
    return out


def _draw_triple(frame: Frame, rng: random.Random, one_piece: bool) -> tuple[int, int, int]:
    """x independent; y derived from x (or independent); z derived from x or y
    (or independent)."""
    x = _random_mask(frame, rng, one_piece)
    u = rng.random()
    y = _derive(frame, x, rng, one_piece) if u < 0.8 else _random_mask(frame, rng, one_piece)
    u = rng.random()
    if u < 0.45:
        z = _derive(frame, y, rng, one_piece)
    elif u < 0.8:
        z = _derive(frame, x, rng, one_piece)
    else:
        z = _random_mask(frame, rng, one_piece)
    return x, y, z


def _classify_triple(frame: Frame, x: int, y: int, z: int):
    dx, dy, dz = frame.dilate8(x), frame.dilate8(y), frame.dilate8(z)
    return (classify_masks(x, y, dx, dy), classify_masks(y, z, dy, dz),
            classify_masks(x, z, dx, dz))


def _iter_triples(frame: Frame, n: int, seed: int, one_piece: bool
                  ) -> Iterator[tuple[int, int, int, tuple[BaseRelation, BaseRelation, BaseRelation]]]:
    rng = random.Random(seed)
    for _ in range(n):
        x, y, z = _draw_triple(frame, rng, one_piece)
        yield x, y, z, _classify_triple(frame, x, y, z)


def sample_pairs(n: int, bounds: tuple[int, int] = DEFAULT_GRID, seed: int = 0,
                 one_piece: bool = False) -> Iterator[tuple[GridRegion, GridRegion]]:
    """Yield ``n`` seeded region pairs from the triple sampler, alternating
    the (x, y) and (x, z) legs so every relation shows up regularly."""
    frame = Frame(*bounds)
    rng = random.Random(seed)
    for k in range(n):
        x, y, z = _draw_triple(frame, rng, one_piece)
        yield frame.decode(x), frame.decode(y if k % 2 == 0 else z)


def _witness(frame: Frame, x: int, y: int, z: int, rels) -> Witness:
    return Witness(frame.decode(x), frame.decode(y), frame.decode(z), tuple(rels))


def soundness_sample(t: CompositionTable | None = None, n: int = DEFAULT_SOUNDNESS_SAMPLES,
                     bounds: tuple[int, int] = DEFAULT_GRID, seed: int = 42,
                     one_piece: bool = False) -> list[Witness]:
    """Return every sampled triple whose x-z relation the table rules out.

    Regions may be disconnected by default, which admits strictly more
    models than one-piece sampling.
    """
    t = t or default_table()
    frame = Frame(*bounds)
    bad = []
    for x, y, z, (a, b, c) in _iter_triples(frame, n, seed, one_piece):
        if not t.cell_mask(a.value, b.value) & c.bit:
            bad.append(_witness(frame, x, y, z, (a, b, c)))
    return bad


def _draw_related(frame: Frame, src: int, others: tuple[int, ...], target: BaseRelation,
                  rng: random.Random, one_piece: bool, tries: int) -> int | None:
    """Draw a region standing in ``target`` relation to ``src``, deriving it
    from ``src`` or from one of ``others``."""
    pool = (src,) + others
    for _ in range(tries):
        base = pool[rng.randrange(len(pool))]
        cand = _derive(frame, base, rng, one_piece)
        if frame.classify(src, cand) is target:
            return cand
    return None


def _sample_witness(want, budget, bounds, seed, one_piece,
                    tries: int = 12) -> Witness | None:
    """Goal-directed sampling: each of ``budget`` attempts draws x, then y
    with R(x, y) = r1 and z with R(y, z) = r2 (up to ``tries`` draws each),
    and accepts when R(x, z) = r3."""
    r1, r2, r3 = want
    frame = Frame(*bounds)
    rng = random.Random(seed)
    for _ in range(budget):
        x = _random_mask(frame, rng, one_piece)
        y = _draw_related(frame, x, (), r1, rng, one_piece, tries)
        if y is None:
            continue
        z = _draw_related(frame, y, (x,), r2, rng, one_piece, tries)
        if z is None:
            continue
        if frame.classify(x, z) is r3:
            return _witness(frame, x, y, z, want)
    return None


def witness_search(r1: BaseRelation, r2: BaseRelation, r3: BaseRelation,
                   budget: int = DEFAULT_WITNESS_BUDGET,
                   bounds: tuple[int, int] = DEFAULT_GRID, seed: int = 0,
                   one_piece: bool = True) -> Witness | None:
    """Sample up to ``budget`` triples looking for R1(x,y), R2(y,z), R3(x,z).

    A returned witness proves the combination realizable; ``None`` proves
    nothing. If sampling fails, a hand-built construction from
    :data:`CONSTRUCTIONS` is tried as a fallback when it fits the frame.
    """
    w = _sample_witness((r1, r2, r3), budget, bounds, seed, one_piece)
    if w is None:
        w = constructed_witness(r1, r2, r3, bounds, one_piece)
    return w


# Explicit constructions: (r1, r2, r3) -> (x, y, z). Each is checked by
# classify before use, so a wrong entry can only cost coverage.
CONSTRUCTIONS: dict[tuple[BaseRelation, BaseRelation, BaseRelation],
                    tuple[GridRegion, GridRegion, GridRegion]] = {
    (R.DC, R.DC, R.NTPP): (GridRegion.of((1, 1)), GridRegion.of((5, 5)),
                           GridRegion.block(0, 0, 3, 3)),
}

# Three nested blocks; every assignment of them to (x, y, z) realizes one
# of the deep-containment triples that sampling reaches only rarely.
_NESTED = (GridRegion.of((2, 2)), GridRegion.block(1, 1, 3, 3), GridRegion.block(0, 0, 5, 5))
for _x, _y, _z in permutations(_NESTED):
    CONSTRUCTIONS[classify(_x, _y), classify(_y, _z), classify(_x, _z)] = (_x, _y, _z)
del _x, _y, _z


def constructed_witness(r1: BaseRelation, r2: BaseRelation, r3: BaseRelation,
                        bounds: tuple[int, int] = DEFAULT_GRID,
                        one_piece: bool = True) -> Witness | None:
    regions = CONSTRUCTIONS.get((r1, r2, r3))
    if regions is None:
        return None
    if one_piece and not all(g.is_one_piece() for g in regions):
        return None
    w, h = bounds
    if any(not (0 <= c < w and 0 <= r < h) for g in regions for c, r in g.cells):
        return None
    x, y, z = regions
    rels = (classify(x, y), classify(y, z), classify(x, z))
    if rels != (r1, r2, r3):
        return None
    return Witness(x, y, z, rels)


@dataclass
class CellCoverage:
    cell: tuple[BaseRelation, BaseRelation]
    reference: RelationSet
    observed: RelationSet

    @property
    def missing(self) -> RelationSet:
        return self.reference - self.observed

    @property
    def unexpected(self) -> RelationSet:
        return self.observed - self.reference


@dataclass
class ObservedComposition:
    """Empirical composition table plus per-cell coverage against a reference."""

    samples: int
    cells: dict[tuple[BaseRelation, BaseRelation], RelationSet]
    coverage: dict[tuple[BaseRelation, BaseRelation], CellCoverage] = field(default_factory=dict)

    def is_sound_against_reference(self) -> bool:
        return all(not c.unexpected for c in self.coverage.values())

    def entries_observed(self) -> int:
        return sum(len(s) for s in self.cells.values())


def observed_composition(bounds: tuple[int, int] = DEFAULT_GRID, samples: int = 10_000,
                         seed: int = 0, reference: CompositionTable | None = None,
                         one_piece: bool = False) -> ObservedComposition:
    frame = Frame(*bounds)
    masks = [[0] * 8 for _ in range(8)]
    for _, _, _, (a, b, c) in _iter_triples(frame, samples, seed, one_piece):
        masks[a.value][b.value] |= c.bit
    cells = {(a, b): RelationSet.from_mask(masks[a.value][b.value])
             for a, b in product(RELATIONS, RELATIONS)}
    reference = reference or default_table()
    coverage = {k: CellCoverage(k, reference[k], v) for k, v in cells.items()}
    return ObservedComposition(samples, cells, coverage)


@dataclass
class EntryResult:
    triple: tuple[BaseRelation, BaseRelation, BaseRelation]
    witness: Witness | None
    config: str  # "sampled", "construction", or "not found"


@dataclass
class WitnessCoverage:
    entries: list[EntryResult]
    budget: int
    bounds: tuple[int, int]
    seed: int

    @property
    def found(self) -> int:
        return sum(e.witness is not None for e in self.entries)

    @property
    def total(self) -> int:
        return len(self.entries)

    @property
    def complete(self) -> bool:
        return self.found == self.total

    def non_default(self) -> list[EntryResult]:
        return [e for e in self.entries if e.config != "sampled"]


def witness_coverage(t: CompositionTable | None = None, budget: int = DEFAULT_WITNESS_BUDGET,
                     bounds: tuple[int, int] = DEFAULT_GRID, seed: int = 0) -> WitnessCoverage:
    """Search a witness for every (r1, r2, r3) asserted by the table.

    Entry ``k`` (in canonical cell-then-member order) samples one-piece
    regions with seed ``seed + k``; explicit constructions are only used
    for entries that sampling missed, and are reported as such.
    """
    t = t or default_table()
    entries = []
    k = 0
    for (a, b), cell in t.items():
        for c in cell:
            w = _sample_witness((a, b, c), budget, bounds, seed + k, True)
            config = "sampled"
            if w is None:
                w = constructed_witness(a, b, c, bounds)
                config = "construction" if w is not None else "not found"
            entries.append(EntryResult((a, b, c), w, config))
            k += 1
    return WitnessCoverage(entries, budget, bounds, seed)
