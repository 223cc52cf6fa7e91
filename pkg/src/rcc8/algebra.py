"""Base relations, relation sets, lexicons and the composition table.

The eight RCC-8 base relations are modelled as an :class:`enum.Enum` whose
values fix the canonical order used everywhere in rendered output::

    DC, EC, PO, TPP, NTPP, TPPi, NTPPi, EQ

A :class:`RelationSet` is an immutable 8-bit membership mask, which keeps
set algebra cheap inside constraint propagation and sampling loops.
"""

from __future__ import annotations

import json
import re
from enum import Enum
from functools import lru_cache
from importlib import resources
from itertools import product
from os import PathLike
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Union


class RCC8Error(Exception):
    """Base class for errors raised by this package."""


class UnknownRelation(RCC8Error, ValueError):
    pass


class MalformedTable(RCC8Error, ValueError):
    pass


class LawViolation(RCC8Error):
    """A composition table breaks the identity or converse law.

    ``cell`` is the offending ``(r1, r2)`` cell and ``relation`` the member
    that is wrongly present or absent there.
    """

    def __init__(self, law: str, cell: tuple["BaseRelation", "BaseRelation"],
                 relation: "BaseRelation | None" = None, detail: str = ""):
        self.law = law
        self.cell = cell
        self.relation = relation
        where = f"{cell[0].name}|{cell[1].name}"
        msg = f"{law} law violated at cell {where}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class BaseRelation(Enum):
    DC = 0
    EC = 1
    PO = 2
    TPP = 3
    NTPP = 4
    TPPi = 5
    NTPPi = 6
    EQ = 7

    @property
    def bit(self) -> int:
        return 1 << self.value

    @property
    def converse(self) -> "BaseRelation":
        return _CONVERSE[self]

    @property
    def letter(self) -> str:
        """Single-letter code used in report grids."""
        return _LETTERS[self]

    def __repr__(self) -> str:
        return self.name

    def __str__(self) -> str:
        return self.name


R = BaseRelation
RELATIONS: tuple[BaseRelation, ...] = tuple(BaseRelation)

_CONVERSE = {
    R.DC: R.DC, R.EC: R.EC, R.PO: R.PO, R.EQ: R.EQ,
    R.TPP: R.TPPi, R.TPPi: R.TPP, R.NTPP: R.NTPPi, R.NTPPi: R.NTPP,
}
_LETTERS = {
    R.DC: "D", R.EC: "E", R.PO: "P", R.TPP: "T",
    R.NTPP: "N", R.TPPi: "t", R.NTPPi: "n", R.EQ: "Q",
}


def converse(r: BaseRelation) -> BaseRelation:
    return _CONVERSE[r]


def _bits(mask: int) -> Iterator[BaseRelation]:
    for r in RELATIONS:
        if mask & r.bit:
            yield r


@lru_cache(maxsize=None)
def _converse_mask(mask: int) -> int:
    out = 0
    for r in _bits(mask):
        out |= _CONVERSE[r].bit
    return out


class RelationSet:
    """Immutable disjunction of base relations."""

    __slots__ = ("_mask",)

    def __init__(self, members: Iterable[BaseRelation] = ()):
        mask = 0
        for r in members:
            mask |= r.bit
        object.__setattr__(self, "_mask", mask)

    @classmethod
    def from_mask(cls, mask: int) -> "RelationSet":
        if not 0 <= mask <= 0xFF:
            raise ValueError(f"relation mask out of range: {mask}")
        s = cls.__new__(cls)
        object.__setattr__(s, "_mask", mask)
        return s

    @classmethod
    def of(cls, *members: BaseRelation) -> "RelationSet":
        return cls(members)

    @classmethod
    def from_names(cls, names: Iterable[str],
                   lex: "Lexicon | None" = None) -> "RelationSet":
        lex = lex or CANONICAL
        return cls(parse_relation(n, lex) for n in names)

    @property
    def mask(self) -> int:
        return self._mask

    def __setattr__(self, name, value):
        raise AttributeError("RelationSet is immutable")

    def __iter__(self) -> Iterator[BaseRelation]:
        return _bits(self._mask)

    def __len__(self) -> int:
        return bin(self._mask).count("1")

    def __bool__(self) -> bool:
        return self._mask != 0

    def __contains__(self, r: object) -> bool:
        return isinstance(r, BaseRelation) and bool(self._mask & r.bit)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, RelationSet):
            return self._mask == other._mask
        if isinstance(other, (set, frozenset)):
            return self == RelationSet(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("RelationSet", self._mask))

    def __and__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet.from_mask(self._mask & other._mask)

    def __or__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet.from_mask(self._mask | other._mask)

    def __sub__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet.from_mask(self._mask & ~other._mask)

    def __le__(self, other: "RelationSet") -> bool:
        return self._mask & ~other._mask == 0

    def __ge__(self, other: "RelationSet") -> bool:
        return other <= self

    def is_all(self) -> bool:
        return self._mask == 0xFF

    def converse(self) -> "RelationSet":
        return RelationSet.from_mask(_converse_mask(self._mask))

    def names(self, lex: "Lexicon | None" = None) -> list[str]:
        lex = lex or CANONICAL
        return [lex.token(r) for r in self]

    def __repr__(self) -> str:
        return "{" + ", ".join(r.name for r in self) + "}"

    __str__ = __repr__


ALL = RelationSet.from_mask(0xFF)
EMPTY = RelationSet.from_mask(0)


def converse_set(s: RelationSet) -> RelationSet:
    return s.converse()


class Lexicon:
    """Bijection between surface tokens and base relations.

    ``style`` is ``"canonical"`` (DC, EC, ...) or ``"anonymized"`` (XDC,
    XEC, ...).
    """

    STYLES = ("canonical", "anonymized")

    def __init__(self, style: str = "canonical"):
        if style not in self.STYLES:
            raise ValueError(f"unknown lexicon style {style!r}")
        self.style = style
        prefix = "X" if style == "anonymized" else ""
        self._tokens = {r: prefix + r.name for r in RELATIONS}
        self._lookup = {t.casefold(): r for r, t in self._tokens.items()}

    def token(self, r: BaseRelation) -> str:
        return self._tokens[r]

    def tokens(self) -> dict[BaseRelation, str]:
        return dict(self._tokens)

    def lookup(self, token: str) -> BaseRelation | None:
        return self._lookup.get(token.casefold())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Lexicon) and other.style == self.style

    def __hash__(self) -> int:
        return hash(("Lexicon", self.style))

    def __repr__(self) -> str:
        return f"Lexicon({self.style!r})"


CANONICAL = Lexicon("canonical")
ANONYMIZED = Lexicon("anonymized")


def lexicon(anonymize: bool) -> Lexicon:
    return ANONYMIZED if anonymize else CANONICAL


# trailing argument list such as "(x,z)" or "(a, b)"
_ARGS_SUFFIX = re.compile(r"(?<=\w)\s*\([^()]*\)$")
_PUNCT = " \t\r\n.,;:!?\"'`*()[]{}<>"


def parse_relation(token: str, lex: Lexicon | None = None) -> BaseRelation:
    """Map a surface token such as ``"tpp"`` or ``"XDC(x,z):"`` to a relation."""
    lex = lex or CANONICAL
    if not token or not token.strip():
        raise UnknownRelation("empty relation token")
    t = token.strip().rstrip(" .,;:!?")
    t = _ARGS_SUFFIX.sub("", t)
    t = t.strip(_PUNCT)
    r = lex.lookup(t)
    if r is None:
        raise UnknownRelation(f"unknown relation token {token!r} ({lex.style} lexicon)")
    return r


TableSource = Union[str, "PathLike[str]", Mapping[str, Iterable[str]], None]


class CompositionTable:
    """Validated 8x8 map from relation pairs to relation sets.

    Instances are built by :func:`load_composition_table`; the constructor
    itself performs no law checks.
    """

    def __init__(self, cells: Mapping[tuple[BaseRelation, BaseRelation], RelationSet]):
        masks = [0] * 64
        for (r1, r2), s in cells.items():
            masks[r1.value * 8 + r2.value] = s.mask
        self._masks = tuple(masks)
        self._set_cache: dict[tuple[int, int], int] = {}

    def __getitem__(self, pair: tuple[BaseRelation, BaseRelation]) -> RelationSet:
        r1, r2 = pair
        return RelationSet.from_mask(self._masks[r1.value * 8 + r2.value])

    def cell_mask(self, r1: int, r2: int) -> int:
        return self._masks[r1 * 8 + r2]

    def compose_masks(self, a: int, b: int) -> int:
        key = (a, b)
        hit = self._set_cache.get(key)
        if hit is not None:
            return hit
        out = 0
        for i in range(8):
            if a >> i & 1:
                row = i * 8
                for j in range(8):
                    if b >> j & 1:
                        out |= self._masks[row + j]
                if out == 0xFF:
                    break
        self._set_cache[key] = out
        return out

    def items(self) -> Iterator[tuple[tuple[BaseRelation, BaseRelation], RelationSet]]:
        for r1, r2 in product(RELATIONS, RELATIONS):
            yield (r1, r2), self[r1, r2]

    def to_document(self) -> dict[str, list[str]]:
        return {f"{r1.name}|{r2.name}": s.names() for (r1, r2), s in self.items()}

    def entry_count(self, include_eq: bool = False) -> int:
        return sum(len(s) for (r1, r2), s in self.items()
                   if include_eq or R.EQ not in (r1, r2))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CompositionTable) and self._masks == other._masks

    def __hash__(self) -> int:
        return hash(self._masks)


def _read_json(source) -> object:
    if isinstance(source, (str, PathLike)):
        return json.loads(Path(source).read_text(encoding="utf-8"))
    return source


def _data_text(name: str) -> str:
    return resources.files("rcc8").joinpath("data").joinpath(name).read_text(encoding="utf-8")


def _parse_pair_key(key: str) -> tuple[BaseRelation, BaseRelation]:
    parts = key.split("|")
    if len(parts) != 2:
        raise MalformedTable(f"bad cell key {key!r}; expected 'R1|R2'")
    out = []
    for p in parts:
        r = CANONICAL.lookup(p.strip())
        if r is None or p.strip() != r.name:
            raise MalformedTable(f"unknown relation name {p!r} in key {key!r}")
        out.append(r)
    return out[0], out[1]


def check_laws(table: CompositionTable) -> None:
    """Raise :class:`LawViolation` on the first identity or converse failure."""
    for r in RELATIONS:
        for cell in ((R.EQ, r), (r, R.EQ)):
            got = table[cell]
            if got != RelationSet.of(r):
                raise LawViolation("identity", cell, r, f"expected {{{r.name}}}, got {got}")
    for r, s in product(RELATIONS, RELATIONS):
        here = table[r, s]
        mirror_cell = (s.converse, r.converse)
        mirror = table[mirror_cell]
        for u in RELATIONS:
            if (u in here) != (u.converse in mirror):
                if u in here:
                    raise LawViolation(
                        "converse", mirror_cell, u.converse,
                        f"{u.converse.name} missing but {u.name} present in {r.name}|{s.name}")
                raise LawViolation(
                    "converse", (r, s), u,
                    f"{u.name} missing but {u.converse.name} present in "
                    f"{mirror_cell[0].name}|{mirror_cell[1].name}")


def load_composition_table(source: TableSource = None) -> CompositionTable:
    """Load and validate a composition table document.

    ``source`` may be a path, an already-decoded mapping, or ``None`` for the
    table shipped with the package.
    """
    if source is None:
        doc = json.loads(_data_text("composition_table.json"))
    else:
        doc = _read_json(source)
    if not isinstance(doc, Mapping):
        raise MalformedTable("composition table must be a JSON object")
    cells: dict[tuple[BaseRelation, BaseRelation], RelationSet] = {}
    for key, names in doc.items():
        pair = _parse_pair_key(key)
        if pair in cells:
            raise MalformedTable(f"duplicate cell {key!r}")
        if isinstance(names, str) or not isinstance(names, Iterable):
            raise MalformedTable(f"cell {key!r} must be a list of relation names")
        members = []
        for n in names:
            r = CANONICAL.lookup(n) if isinstance(n, str) else None
            if r is None or n != r.name:
                raise MalformedTable(f"unknown relation name {n!r} in cell {key!r}")
            members.append(r)
        if not members:
            raise MalformedTable(f"empty cell {key!r}")
        cells[pair] = RelationSet(members)
    missing = [f"{a.name}|{b.name}" for a, b in product(RELATIONS, RELATIONS)
               if (a, b) not in cells]
    if missing:
        raise MalformedTable(f"missing cells: {', '.join(missing)}")
    table = CompositionTable(cells)
    check_laws(table)
    return table


@lru_cache(maxsize=1)
def default_table() -> CompositionTable:
    return load_composition_table()


def compose(r1: BaseRelation, r2: BaseRelation,
            t: CompositionTable | None = None) -> RelationSet:
    t = t or default_table()
    return t[r1, r2]


def compose_sets(s1: RelationSet, s2: RelationSet,
                 t: CompositionTable | None = None) -> RelationSet:
    t = t or default_table()
    return RelationSet.from_mask(t.compose_masks(s1.mask, s2.mask))


NON_EQ_PAIRS: tuple[tuple[BaseRelation, BaseRelation], ...] = tuple(
    (a, b) for a, b in product(RELATIONS, RELATIONS) if R.EQ not in (a, b))


def cell_key(cell) -> str:
    """``(DC, EC) -> "DC|EC"``; a single relation renders as its name."""
    if isinstance(cell, BaseRelation):
        return cell.name
    return f"{cell[0].name}|{cell[1].name}"


def parse_cell_key(key: str):
    if "|" in key:
        return _parse_pair_key(key)
    r = CANONICAL.lookup(key.strip())
    if r is None:
        raise UnknownRelation(f"unknown cell {key!r}")
    return r
