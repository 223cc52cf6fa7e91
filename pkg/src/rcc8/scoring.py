"""Parse free-text answers, score them against ground truth, render reports.

Three scorers mirror the three experiments:

* :func:`score_composition` compares predicted relation sets with the
  composition table, giving one of four verdicts per (cell, relation).
* :func:`score_preferred` checks a single preferred relation per cell for
  possibility and, given human preference data, for agreement.
* :func:`score_cn` compares predicted "next relation" links with the
  conceptual neighbourhood graph over the 56 off-diagonal cells.

Percentages are exact :class:`fractions.Fraction` values until rendering,
where they are rounded half-up to two decimals.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from .algebra import (
    ALL,
    CANONICAL,
    NON_EQ_PAIRS,
    RELATIONS,
    BaseRelation,
    CompositionTable,
    Lexicon,
    RCC8Error,
    RelationSet,
    _read_json,
    cell_key,
    default_table,
    lexicon,
    parse_cell_key,
    parse_relation,
)
from .neighborhood import CNGraph, default_graph

R = BaseRelation


class MissingCell(RCC8Error, KeyError):
    pass


class NoPreferenceFound(RCC8Error, ValueError):
    pass


class EmptyScore(RCC8Error, ValueError):
    pass


def format_percent(value: Fraction, places: int = 2) -> str:
    q = Decimal(1).scaleb(-places)
    d = (Decimal(value.numerator) * 100 / Decimal(value.denominator)).quantize(q, ROUND_HALF_UP)
    return f"{d}%"


# ------------------------------------------------------------------ parsing

NEGATION = re.compile(
    r"not\s+(?:be\s+)?possible|impossible|cannot|can't|can\s+not|contradict"
    r"|rul(?:e|ed|es)\s+out|excluded|(?:does|would)\s+not\s+hold",
    re.IGNORECASE)
PREFERENCE = re.compile(
    r"prefer|most\s+likely|most\s+probable|safest|safer\s+to\s+assume|safe\s+to\s+assume"
    r"|cautious|best\s+guess",
    re.IGNORECASE)
UNIQUENESS = re.compile(
    r"only\s+possible|must\s+be|the\s+only\s+(?:relation|option|possibility)"
    r"|necessarily|uniquely|unique",
    re.IGNORECASE)
# "... the possible relationships between x and z are:" style lead-ins
FINAL_SECTION = re.compile(
    r"(?:\bare|\bis|answers?|relations(?:hips?)?|follows?)\s*:", re.IGNORECASE)
ALL_TOKEN = re.compile(r"(?<![A-Za-z0-9_])ALL(?![A-Za-z0-9_])")
SENTENCE = re.compile(r"[^.!?\n]+[.!?]?")

_token_patterns: dict[Lexicon, re.Pattern] = {}


def _token_pattern(lex: Lexicon) -> re.Pattern:
    pat = _token_patterns.get(lex)
    if pat is None:
        toks = sorted(lex.tokens().values(), key=len, reverse=True)
        pat = re.compile(r"(?<![A-Za-z0-9_])(" + "|".join(map(re.escape, toks)) + r")(?![A-Za-z0-9_])",
                         re.IGNORECASE)
        _token_patterns[lex] = pat
    return pat


class _Mention(NamedTuple):
    relation: BaseRelation
    span: tuple[int, int]
    negated: bool
    sentence: int


def _mentions(text: str, lex: Lexicon) -> list[_Mention]:
    pat = _token_pattern(lex)
    out = []
    for k, sent in enumerate(SENTENCE.finditer(text)):
        negated = bool(NEGATION.search(sent.group()))
        for m in pat.finditer(text, sent.start(), sent.end()):
            out.append(_Mention(lex.lookup(m.group(1)), m.span(1), negated, k))
    return out


@dataclass(frozen=True)
class ParsedAnswer:
    relations: RelationSet
    uniqueness_claimed: bool = False
    needs_review: bool = False
    evidence: Mapping[BaseRelation, tuple[tuple[int, int], ...]] = field(default_factory=dict)


def parse_relation_set(text: str, lex: Lexicon | None = None) -> ParsedAnswer:
    """Extract the set of relations a free-text answer asserts.

    "ALL" yields the full set. Otherwise relation tokens are collected from
    sentences without negation cues, restricted to the final enumerated
    section when one exists. Conflicting positive and negative evidence, or
    an empty result, sets ``needs_review``.
    """
    lex = lex or CANONICAL
    mentions = _mentions(text, lex)
    negative = {m.relation for m in mentions if m.negated}
    positive = [m for m in mentions if not m.negated]
    unique = bool(UNIQUENESS.search(text))

    all_hits = []
    for m in ALL_TOKEN.finditer(text):
        sent = _sentence_at(text, m.start())
        if not NEGATION.search(sent):
            all_hits.append(m.span())
    if all_hits:
        evidence = {r: tuple(all_hits) for r in RELATIONS}
        return ParsedAnswer(ALL, unique, bool(negative), evidence)

    cut = None
    for m in FINAL_SECTION.finditer(text):
        cut = m.end()
    if cut is not None:
        tail = [m for m in positive if m.span[0] >= cut]
        if tail:
            positive = tail
    evidence: dict[BaseRelation, tuple[tuple[int, int], ...]] = {}
    for m in positive:
        evidence[m.relation] = evidence.get(m.relation, ()) + (m.span,)
    rels = RelationSet(evidence)
    review = not rels or any(r in negative for r in rels)
    ordered = {r: evidence[r] for r in rels}
    return ParsedAnswer(rels, unique, review, ordered)


def _sentence_at(text: str, pos: int) -> str:
    for m in SENTENCE.finditer(text):
        if m.start() <= pos < m.end():
            return m.group()
    return ""


def render_relation_set(s: RelationSet, lex: Lexicon | None = None, args: str = "x,z") -> str:
    """``{DC, EC} -> "DC(x,z), EC(x,z)"``; the inverse of :func:`parse_relation_set`."""
    lex = lex or CANONICAL
    return ", ".join(f"{lex.token(r)}({args})" for r in s)


class PreferredAnswer(NamedTuple):
    relation: BaseRelation
    uniqueness_claimed: bool
    needs_review: bool


def parse_preferred(text: str, lex: Lexicon | None = None) -> PreferredAnswer:
    """Pick the relation named in the last preference-cue sentence.

    Raises :class:`NoPreferenceFound` when no relation co-occurs with a cue
    such as "preferred", "most likely" or "safer to assume".
    """
    lex = lex or CANONICAL
    pat = _token_pattern(lex)
    cued: list[BaseRelation] = []
    for sent in SENTENCE.finditer(text):
        if PREFERENCE.search(sent.group()):
            cued.extend(lex.lookup(m.group(1)) for m in pat.finditer(sent.group()))
    if not cued:
        raise NoPreferenceFound("no relation co-occurs with a preference cue")
    unique = bool(UNIQUENESS.search(text))
    return PreferredAnswer(cued[-1], unique, len(set(cued)) > 1)


# ---------------------------------------------------------- composition score

class Verdict(str, Enum):
    TP = "true-present"
    FP = "false-present"
    FN = "false-absent"
    TN = "true-absent"


def _verdict(predicted: bool, true: bool) -> Verdict:
    if predicted:
        return Verdict.TP if true else Verdict.FP
    return Verdict.FN if true else Verdict.TN


def accuracy_from_counts(tp: int, fp: int, fn: int, total: int) -> tuple[int, Fraction]:
    """Recover TN and accuracy (TP + TN) / total from the other three counts."""
    tn = total - tp - fp - fn
    if tn < 0:
        raise ValueError("counts exceed total")
    return tn, Fraction(tp + tn, total)


@dataclass
class CompositionScore:
    cells: tuple[tuple[BaseRelation, BaseRelation], ...]
    predicted: dict[tuple[BaseRelation, BaseRelation], RelationSet]
    truth: dict[tuple[BaseRelation, BaseRelation], RelationSet]
    flagged: tuple[tuple[BaseRelation, BaseRelation], ...] = ()

    def __post_init__(self):
        self.verdicts = {
            (c, r): _verdict(r in self.predicted[c], r in self.truth[c])
            for c in self.cells for r in RELATIONS
        }
        self.counts = Counter(self.verdicts.values())

    @property
    def tp(self) -> int:
        return self.counts[Verdict.TP]

    @property
    def fp(self) -> int:
        return self.counts[Verdict.FP]

    @property
    def fn(self) -> int:
        return self.counts[Verdict.FN]

    @property
    def tn(self) -> int:
        return self.counts[Verdict.TN]

    @property
    def total(self) -> int:
        return len(self.cells) * 8

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.tp + self.tn, self.total) if self.total else Fraction(0)

    def fully_correct_cells(self) -> int:
        return sum(self.predicted[c] == self.truth[c] for c in self.cells)

    def per_relation(self) -> dict[BaseRelation, Counter]:
        out = {r: Counter() for r in RELATIONS}
        for (_, r), v in self.verdicts.items():
            out[r][v] += 1
        return out


def _as_set(v) -> RelationSet:
    if isinstance(v, ParsedAnswer):
        return v.relations
    if isinstance(v, RelationSet):
        return v
    return RelationSet(v)


def score_composition(answers: Mapping, truth: CompositionTable | None = None,
                      cells: Sequence[tuple[BaseRelation, BaseRelation]] = NON_EQ_PAIRS
                      ) -> CompositionScore:
    truth = truth or default_table()
    predicted, flagged = {}, []
    for c in cells:
        if c not in answers:
            raise MissingCell(f"no answer for cell {cell_key(c)}")
        predicted[c] = _as_set(answers[c])
        if isinstance(answers[c], ParsedAnswer) and answers[c].needs_review:
            flagged.append(c)
    return CompositionScore(tuple(cells), predicted, {c: truth[c] for c in cells}, tuple(flagged))


# ------------------------------------------------------------ preferred score

class PreferredCategory(str, Enum):
    AGREE_OVERALL = "AgreeOverall"
    AGREE_LANGUAGE_GROUP = "AgreeLanguageGroup"
    IMPOSSIBLE = "Impossible"
    POSSIBLE_NOT_PREFERRED = "PossibleNotPreferred"
    POSSIBLE = "Possible"  # possible, but no human data to rate it against


@dataclass(frozen=True)
class HumanPreference:
    overall: BaseRelation | None
    groups: Mapping[str, frozenset[BaseRelation]] = field(default_factory=dict)


@dataclass
class HumanPreferenceTable:
    cells: dict[tuple[BaseRelation, BaseRelation], HumanPreference]

    def group_names(self) -> list[str]:
        return sorted({g for p in self.cells.values() for g in p.groups})


def load_human_preferences(source) -> HumanPreferenceTable:
    """Read ``{"R1|R2": {"overall": name, "groups": {group: name | [names]}}}``."""
    doc = _read_json(source)
    cells = {}
    for key, entry in doc.items():
        cell = parse_cell_key(key)
        overall = entry.get("overall")
        groups = {}
        for g, v in (entry.get("groups") or {}).items():
            names = [v] if isinstance(v, str) else list(v)
            groups[g] = frozenset(parse_relation(n) for n in names)
        cells[cell] = HumanPreference(parse_relation(overall) if overall else None, groups)
    return HumanPreferenceTable(cells)


@dataclass
class PreferredScore:
    cells: tuple[tuple[BaseRelation, BaseRelation], ...]
    predicted: dict[tuple[BaseRelation, BaseRelation], BaseRelation]
    truth: dict[tuple[BaseRelation, BaseRelation], RelationSet]
    categories: dict[tuple[BaseRelation, BaseRelation], PreferredCategory]
    unique_unnoticed: tuple[tuple[BaseRelation, BaseRelation], ...]
    human_data: bool
    agreement: dict[str, int]
    flagged: tuple[tuple[BaseRelation, BaseRelation], ...] = ()

    def count(self, category: PreferredCategory) -> int:
        return sum(v is category for v in self.categories.values())

    def rate(self, n: int) -> Fraction:
        return Fraction(n, len(self.cells))


def score_preferred(preferred: Mapping, truth: CompositionTable | None = None,
                    humans: HumanPreferenceTable | None = None,
                    cells: Sequence[tuple[BaseRelation, BaseRelation]] = NON_EQ_PAIRS,
                    uniqueness: Mapping[tuple[BaseRelation, BaseRelation], bool] | None = None
                    ) -> PreferredScore:
    """Categorize one preferred relation per cell.

    With human data a cell without an explicit entry but with a singleton
    truth set is taken to prefer that unique relation.
    """
    truth = truth or default_table()
    uniqueness = dict(uniqueness or {})
    pred, flagged = {}, []
    for c in cells:
        if c not in preferred:
            raise MissingCell(f"no preferred relation for cell {cell_key(c)}")
        v = preferred[c]
        if isinstance(v, PreferredAnswer):
            uniqueness.setdefault(c, v.uniqueness_claimed)
            if v.needs_review:
                flagged.append(c)
            v = v.relation
        pred[c] = v
    groups = humans.group_names() if humans else []
    agreement = {"overall": 0, "overall_or_group": 0, **{g: 0 for g in groups}}
    categories, unnoticed = {}, []
    for c in cells:
        p, cell_truth = pred[c], truth[c]
        if len(cell_truth) == 1 and not uniqueness.get(c, False):
            unnoticed.append(c)
        if p not in cell_truth:
            categories[c] = PreferredCategory.IMPOSSIBLE
            continue
        if humans is None:
            categories[c] = PreferredCategory.POSSIBLE
            continue
        hp = humans.cells.get(c)
        if hp is None and len(cell_truth) == 1:
            only = next(iter(cell_truth))
            hp = HumanPreference(only, {g: frozenset({only}) for g in groups})
        if hp is None:
            categories[c] = PreferredCategory.POSSIBLE
            continue
        group_hit = False
        for g, rels in hp.groups.items():
            if p in rels:
                agreement[g] += 1
                group_hit = True
        if p is hp.overall:
            categories[c] = PreferredCategory.AGREE_OVERALL
            agreement["overall"] += 1
        elif group_hit:
            categories[c] = PreferredCategory.AGREE_LANGUAGE_GROUP
        else:
            categories[c] = PreferredCategory.POSSIBLE_NOT_PREFERRED
        if p is hp.overall or group_hit:
            agreement["overall_or_group"] += 1
    return PreferredScore(tuple(cells), pred, {c: truth[c] for c in cells}, categories,
                          tuple(unnoticed), humans is not None, agreement, tuple(flagged))


# ------------------------------------------------------------------ CN score

class CNVerdict(str, Enum):
    CORRECT_LINK = "correct-link"
    INCORRECT_LINK = "incorrect-link"
    MISSING_LINK = "missing-link"
    CORRECT_ABSENCE = "correct-absence"


OFF_DIAGONAL: tuple[tuple[BaseRelation, BaseRelation], ...] = tuple(
    (a, b) for a in RELATIONS for b in RELATIONS if a is not b)


@dataclass
class CNScore:
    predicted: dict[tuple[BaseRelation, BaseRelation], bool]
    verdicts: dict[tuple[BaseRelation, BaseRelation], CNVerdict]
    flagged: tuple[BaseRelation, ...] = ()

    def __post_init__(self):
        self.counts = Counter(self.verdicts.values())

    @property
    def correct(self) -> int:
        return self.counts[CNVerdict.CORRECT_LINK] + self.counts[CNVerdict.CORRECT_ABSENCE]

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.correct, len(self.verdicts))


CNPrediction = Union[Mapping, Sequence[Sequence[bool]]]


def _cn_matrix(predicted: CNPrediction) -> dict[tuple[BaseRelation, BaseRelation], bool]:
    if isinstance(predicted, Mapping):
        keys = list(predicted)
        if keys and isinstance(keys[0], BaseRelation):
            # row -> set of predicted next relations
            return {(a, b): b in _as_set(predicted[a]) for a, b in OFF_DIAGONAL}
        missing = [k for k in OFF_DIAGONAL if k not in predicted]
        if missing:
            raise MissingCell(f"no prediction for {cell_key(missing[0])}")
        return {k: bool(predicted[k]) for k in OFF_DIAGONAL}
    rows = [list(r) for r in predicted]
    if len(rows) != 8 or any(len(r) != 8 for r in rows):
        raise ValueError("CN prediction matrix must be 8x8")
    return {(a, b): bool(rows[a.value][b.value]) for a, b in OFF_DIAGONAL}


def score_cn(predicted: CNPrediction, truth: CNGraph | None = None) -> CNScore:
    truth = truth or default_graph()
    pred = _cn_matrix(predicted)
    verdicts = {}
    for a, b in OFF_DIAGONAL:
        p, t = pred[a, b], truth.is_neighbor(a, b)
        if p:
            verdicts[a, b] = CNVerdict.CORRECT_LINK if t else CNVerdict.INCORRECT_LINK
        else:
            verdicts[a, b] = CNVerdict.MISSING_LINK if t else CNVerdict.CORRECT_ABSENCE
    return CNScore(pred, verdicts)


# ------------------------------------------------------- transcripts to scores

Score = Union[CompositionScore, PreferredScore, CNScore]


def load_corrections(source) -> dict[str, object]:
    doc = _read_json(source)
    if not isinstance(doc, Mapping):
        raise ValueError("corrections must be a JSON object keyed by cell")
    return dict(doc)


def score_transcript(records, truth: CompositionTable | None = None,
                     graph: CNGraph | None = None,
                     humans: HumanPreferenceTable | None = None,
                     corrections: Mapping[str, object] | None = None) -> Score:
    """Parse every cell response of a stored run and score it.

    ``corrections`` maps cell keys ("DC|EC", or "EC" for continuity) to
    canonical relation names and overrides the parsed answer for that cell.
    """
    from .harness import ExperimentKind, spec_for_transcript

    spec = spec_for_transcript(records)
    lex = lexicon(spec.anonymize)
    corrections = corrections or {}
    by_cell = {r.cell: r.response for r in records if r.cell != "initial"}

    def corrected(key: str) -> RelationSet | None:
        if key not in corrections:
            return None
        v = corrections[key]
        names = [v] if isinstance(v, str) else list(v)
        return RelationSet(parse_relation(n) for n in names)

    if spec.kind is ExperimentKind.CONTINUITY:
        rows, flagged = {}, []
        for r in RELATIONS:
            key = cell_key(r)
            fix = corrected(key)
            if fix is not None:
                rows[r] = fix
                continue
            if key not in by_cell:
                raise MissingCell(f"no response for {key}")
            ans = parse_relation_set(by_cell[key], lex)
            rows[r] = ans.relations - RelationSet.of(r)
            if ans.needs_review:
                flagged.append(r)
        score = score_cn(rows, graph)
        score.flagged = tuple(flagged)
        return score

    answers = {}
    for c in NON_EQ_PAIRS:
        key = cell_key(c)
        fix = corrected(key)
        if spec.kind is ExperimentKind.PREFERRED:
            if fix is not None:
                if len(fix) != 1:
                    raise ValueError(f"preferred correction for {key} must name one relation")
                answers[c] = PreferredAnswer(next(iter(fix)), False, False)
            elif key in by_cell:
                try:
                    answers[c] = parse_preferred(by_cell[key], lex)
                except NoPreferenceFound as exc:
                    raise NoPreferenceFound(f"{key}: {exc}; add a correction") from exc
        else:
            if fix is not None:
                answers[c] = ParsedAnswer(fix, evidence={r: () for r in fix})
            elif key in by_cell:
                answers[c] = parse_relation_set(by_cell[key], lex)
    if spec.kind is ExperimentKind.PREFERRED:
        return score_preferred(answers, truth, humans)
    return score_composition(answers, truth)


# ------------------------------------------------------------------ reports

LEGEND = "D (DC), E(EC), P(PO), T(TPP), N(NTPP), t(TPPi), n(NTPPi), Q(EQ)"
_ROWS = [r for r in RELATIONS if r is not R.EQ]


def _md_table(header: Sequence[str], rows: Iterable[Sequence[object]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return lines


def _composition_markdown(s: CompositionScore) -> str:
    def cell_text(c) -> str:
        parts = []
        for r in RELATIONS:
            v = s.verdicts[c, r]
            if v is Verdict.TP:
                parts.append(r.letter)
            elif v is Verdict.FP:
                parts.append(r.letter + "!")
            elif v is Verdict.FN:
                parts.append(f"({r.letter})")
        return " ".join(parts) or "-"

    out = ["# Composition table scoring", "",
           f"Relation coding: {LEGEND}.",
           "`X` correctly predicted, `X!` incorrectly predicted, `(X)` incorrectly not predicted.",
           ""]
    cols = sorted({c[1] for c in s.cells}, key=lambda r: r.value)
    rows = sorted({c[0] for c in s.cells}, key=lambda r: r.value)
    out += _md_table(["R1 \\ R2"] + [r.name for r in cols],
                     ([a.name] + [cell_text((a, b)) if (a, b) in s.predicted else "" for b in cols]
                      for a in rows))
    out += ["", "## Aggregates", ""]
    out += _md_table(["TP", "FP", "FN", "TN", "total", "accuracy", "fully correct cells"],
                     [[s.tp, s.fp, s.fn, s.tn, s.total, format_percent(s.accuracy),
                       f"{s.fully_correct_cells()}/{len(s.cells)}"]])
    out += ["", "## Per relation", ""]
    rel_rows = []
    for r, cnt in s.per_relation().items():
        n = sum(cnt.values())
        pct = (lambda k: format_percent(Fraction(cnt[k], n)) if n else "-")
        rel_rows.append([r.name, cnt[Verdict.TP], cnt[Verdict.FP], cnt[Verdict.FN],
                         cnt[Verdict.TN], pct(Verdict.TP), pct(Verdict.FP), pct(Verdict.FN),
                         pct(Verdict.TN),
                         format_percent(Fraction(cnt[Verdict.TP] + cnt[Verdict.TN], n)) if n else "-"])
    out += _md_table(["relation", "TP", "FP", "FN", "TN", "TP %", "FP %", "FN %", "TN %",
                      "accuracy"], rel_rows)
    out += _flagged_section([cell_key(c) for c in s.flagged])
    return "\n".join(out) + "\n"


def _flagged_section(keys: Sequence[str]) -> list[str]:
    if not keys:
        return []
    return ["", "## Needs review", "",
            "Parsed answers with conflicting or missing evidence "
            "(override via a corrections file):", ""] + [f"- {k}" for k in keys]


_PREF_MARK = {
    PreferredCategory.AGREE_OVERALL: "=",
    PreferredCategory.AGREE_LANGUAGE_GROUP: "~",
    PreferredCategory.IMPOSSIBLE: "!",
    PreferredCategory.POSSIBLE_NOT_PREFERRED: "?",
    PreferredCategory.POSSIBLE: "",
}


def _preferred_markdown(s: PreferredScore) -> str:
    n = len(s.cells)
    out = ["# Preferred composition scoring", "",
           "Markers: `=` agrees with overall human preference, `~` agrees with a language "
           "group only, `!` impossible relation, `?` possible but not preferred, "
           "`*` unique composition not noted as unique.", ""]
    cols = sorted({c[1] for c in s.cells}, key=lambda r: r.value)
    rows = sorted({c[0] for c in s.cells}, key=lambda r: r.value)

    def text(c) -> str:
        if c not in s.predicted:
            return ""
        star = "*" if c in s.unique_unnoticed else ""
        return f"{s.predicted[c].name}{_PREF_MARK[s.categories[c]]}{star}"

    out += _md_table(["R1 \\ R2"] + [r.name for r in cols],
                     ([a.name] + [text((a, b)) for b in cols] for a in rows))
    out += ["", "## Categories", ""]
    cat_rows = []
    for cat in PreferredCategory:
        if cat is PreferredCategory.POSSIBLE and s.human_data and not s.count(cat):
            continue
        if cat in (PreferredCategory.AGREE_OVERALL, PreferredCategory.AGREE_LANGUAGE_GROUP,
                   PreferredCategory.POSSIBLE_NOT_PREFERRED) and not s.human_data:
            cat_rows.append([cat.value, "unavailable", "unavailable"])
            continue
        k = s.count(cat)
        cat_rows.append([cat.value, f"{k}/{n}", format_percent(s.rate(k))])
    k = len(s.unique_unnoticed)
    singletons = sum(len(s.truth[c]) == 1 for c in s.cells)
    cat_rows.append(["UniqueUnnoticed", f"{k}/{singletons}",
                     format_percent(Fraction(k, singletons)) if singletons else "-"])
    out += _md_table(["category", "count", "rate"], cat_rows)
    if s.human_data:
        out += ["", "## Agreement with human preferences", ""]
        out += _md_table(["reference", "count", "rate"],
                         [[name, f"{v}/{n}", format_percent(s.rate(v))]
                          for name, v in s.agreement.items()])
    out += _flagged_section([cell_key(c) for c in s.flagged])
    return "\n".join(out) + "\n"


_CN_MARK = {
    CNVerdict.CORRECT_LINK: "x",
    CNVerdict.INCORRECT_LINK: "x!",
    CNVerdict.MISSING_LINK: "!",
    CNVerdict.CORRECT_ABSENCE: "",
}


def _cn_markdown(s: CNScore) -> str:
    out = ["# Continuity (conceptual neighbourhood) scoring", "",
           "`x` correctly predicted link, `x!` incorrectly predicted link, "
           "`!` missing link, blank correct absence; diagonal not scored.", ""]
    out += _md_table(["row \\ next"] + [r.name for r in RELATIONS],
                     ([a.name] + ["·" if a is b else _CN_MARK[s.verdicts[a, b]] for b in RELATIONS]
                      for a in RELATIONS))
    out += ["", "## Aggregates", ""]
    c = s.counts
    out += _md_table(["correct links", "incorrect links", "missing links", "correct absences",
                      "accuracy"],
                     [[c[CNVerdict.CORRECT_LINK], c[CNVerdict.INCORRECT_LINK],
                       c[CNVerdict.MISSING_LINK], c[CNVerdict.CORRECT_ABSENCE],
                       f"{s.correct}/{len(s.verdicts)} ({format_percent(s.accuracy)})"]])
    out += _flagged_section([r.name for r in s.flagged])
    return "\n".join(out) + "\n"


def _csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_report(score: Score, fmt: str = "markdown") -> str:
    if fmt not in ("markdown", "csv"):
        raise ValueError(f"unknown report format {fmt!r}")
    if isinstance(score, CompositionScore):
        if not score.cells:
            raise EmptyScore("composition score has no cells")
        if fmt == "markdown":
            return _composition_markdown(score)
        return _csv(["cell", "relation", "predicted", "truth", "verdict"],
                    ([cell_key(c), r.name, int(r in score.predicted[c]), int(r in score.truth[c]),
                      score.verdicts[c, r].value] for c in score.cells for r in RELATIONS))
    if isinstance(score, PreferredScore):
        if not score.cells:
            raise EmptyScore("preferred score has no cells")
        if fmt == "markdown":
            return _preferred_markdown(score)
        return _csv(["cell", "predicted", "truth", "category", "unique_unnoticed"],
                    ([cell_key(c), score.predicted[c].name, " ".join(score.truth[c].names()),
                      score.categories[c].value, int(c in score.unique_unnoticed)]
                     for c in score.cells))
    if isinstance(score, CNScore):
        if not score.verdicts:
            raise EmptyScore("CN score has no cells")
        if fmt == "markdown":
            return _cn_markdown(score)
        return _csv(["row", "column", "predicted", "truth", "verdict"],
                    ([a.name, b.name, int(score.predicted[a, b]),
                      int(score.verdicts[a, b] in (CNVerdict.CORRECT_LINK, CNVerdict.MISSING_LINK)),
                      score.verdicts[a, b].value] for a, b in OFF_DIAGONAL))
    raise EmptyScore(f"nothing to render for {type(score).__name__}")


def score_summary(score: Score) -> dict:
    """Small JSON-friendly digest used by the CLI."""
    if isinstance(score, CompositionScore):
        return {"tp": score.tp, "fp": score.fp, "fn": score.fn, "tn": score.tn,
                "total": score.total, "accuracy": format_percent(score.accuracy)}
    if isinstance(score, PreferredScore):
        return {c.value: score.count(c) for c in PreferredCategory} | {
            "unique_unnoticed": len(score.unique_unnoticed)}
    return {v.value: score.counts[v] for v in CNVerdict} | {
        "accuracy": format_percent(score.accuracy)}


def dump_summary(score: Score) -> str:
    return json.dumps(score_summary(score), sort_keys=True)
