import csv
import io
import itertools
import json
import re
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rcc8.algebra import (ALL, ANONYMIZED, CANONICAL, EMPTY, NON_EQ_PAIRS, RELATIONS,
                          BaseRelation as R, RelationSet)
from rcc8.scoring import (
    LEGEND,
    CNVerdict,
    CompositionScore,
    EmptyScore,
    MissingCell,
    NoPreferenceFound,
    ParsedAnswer,
    PreferredCategory,
    Verdict,
    accuracy_from_counts,
    format_percent,
    load_human_preferences,
    parse_preferred,
    parse_relation_set,
    render_relation_set,
    render_report,
    score_cn,
    score_composition,
    score_preferred,
)


# ---------------------------------------------------------------- parsing

def test_reference_composition_response(reference_responses):
    ans = parse_relation_set(reference_responses["composition_DC_DC"])
    assert ans.relations == RelationSet.of(R.DC, R.EC)
    assert not ans.needs_review
    for r in (R.TPP, R.NTPP, R.PO, R.EQ):
        assert r not in ans.relations


def test_evidence_spans_cover_every_relation(reference_responses):
    text = reference_responses["composition_DC_DC"]
    ans = parse_relation_set(text)
    assert set(ans.evidence) == set(ans.relations)
    for r, spans in ans.evidence.items():
        assert spans and all(text[a:b] == r.name for a, b in spans)


@pytest.mark.parametrize("key, expected", [
    ("preferred_DC_DC", R.DC),
    ("preferred_EC_NTPPi", R.EC),
    ("preferred_TPPi_TPPi", R.TPP),
])
def test_reference_preferred_responses(reference_responses, key, expected):
    assert parse_preferred(reference_responses[key]).relation is expected


def test_continuity_responses(reference_responses):
    ec = parse_relation_set(reference_responses["continuity_EC"]).relations
    assert ec - RelationSet.of(R.EC) == RelationSet.of(R.DC, R.PO)
    po = parse_relation_set(reference_responses["continuity_PO"]).relations
    assert po - RelationSet.of(R.PO) == RelationSet.of(R.DC, R.EC, R.TPP, R.TPPi, R.EQ)


def test_all_answer():
    assert parse_relation_set("ALL").relations == ALL
    assert parse_relation_set("All eight are possible, so: ALL.").relations == ALL
    assert parse_relation_set("It cannot be ALL. DC(x,z).").relations \
        == RelationSet.of(R.DC)


def test_no_tokens_needs_review():
    ans = parse_relation_set("I am not sure what you mean.")
    assert ans.relations == EMPTY and ans.needs_review


def test_conflicting_evidence_flags_review():
    ans = parse_relation_set("PO(x,z) is possible. On reflection PO is not possible.")
    assert ans.relations == RelationSet.of(R.PO)
    assert ans.needs_review


def test_final_section_preferred():
    text = ("Let us consider DC, EC and PO in turn. NTPP also comes to mind.\n"
            "So the possible relations are:\nDC(x,z)\nEC(x,z)")
    assert parse_relation_set(text).relations == RelationSet.of(R.DC, R.EC)


def test_uniqueness_claims():
    assert parse_relation_set("The only possible relation is NTPP(x,z).").uniqueness_claimed
    assert not parse_relation_set("DC(x,z) or EC(x,z).").uniqueness_claimed
    assert parse_preferred("It must be TPP, so my preferred relation is TPP(x,z).").uniqueness_claimed


def test_preferred_tie_break_and_errors():
    ans = parse_preferred("I prefer DC. Actually the most likely is EC(x,z).")
    assert ans.relation is R.EC and ans.needs_review
    with pytest.raises(NoPreferenceFound):
        parse_preferred("DC(x,z) and EC(x,z) are both fine.")


def test_anonymized_tokens():
    text = "The possible relations are XDC(x,z) and XEC(x,z). XPO is not possible."
    assert parse_relation_set(text, ANONYMIZED).relations == RelationSet.of(R.DC, R.EC)
    assert parse_relation_set(text, CANONICAL).relations == EMPTY


SUBSETS = [RelationSet.from_mask(m) for m in range(256)]


@pytest.mark.parametrize("lex", [CANONICAL, ANONYMIZED], ids=["canonical", "anonymized"])
def test_render_parse_roundtrip_all_subsets(lex):
    for s in SUBSETS:
        text = render_relation_set(s, lex)
        got = parse_relation_set(text, lex).relations
        assert got == s, (s, text)


def test_render_example():
    assert render_relation_set(RelationSet.of(R.EC, R.DC)) == "DC(x,z), EC(x,z)"


def _deanonymize(text):
    return re.sub(r"\bX(NTPPi|TPPi|NTPP|TPP|DC|EC|PO|EQ)\b", r"\1", text)


@given(st.lists(st.sampled_from(RELATIONS), max_size=6), st.lists(st.sampled_from(RELATIONS), max_size=3),
       st.booleans())
def test_anonymized_parse_equals_canonical_parse(pos, neg, final):
    parts = [f"X{r.name}(x,z) is possible." for r in pos]
    parts += [f"X{r.name}(x,z) is not possible." for r in neg]
    if final:
        parts.append("So the relations are: " + ", ".join(f"X{r.name}(x,z)" for r in pos))
    text = " ".join(parts)
    a = parse_relation_set(text, ANONYMIZED)
    c = parse_relation_set(_deanonymize(text), CANONICAL)
    assert (a.relations, a.needs_review, a.uniqueness_claimed) == \
        (c.relations, c.needs_review, c.uniqueness_claimed)


# ------------------------------------------------------------ composition

def test_self_comparison(table):
    score = score_composition({c: table[c] for c in NON_EQ_PAIRS}, table)
    assert score.tp == table.entry_count(include_eq=False) == 178
    assert score.fp == score.fn == 0
    assert score.accuracy == 1
    assert score.fully_correct_cells() == 49


def test_verdict_partition(table):
    import random
    rng = random.Random(7)
    answers = {c: RelationSet.from_mask(rng.randrange(256)) for c in NON_EQ_PAIRS}
    score = score_composition(answers, table)
    assert score.total == 392 == len(score.verdicts)
    assert score.tp + score.fp + score.fn + score.tn == 392
    for c in NON_EQ_PAIRS:
        for r in RELATIONS:
            v = score.verdicts[c, r]
            assert v is {(True, True): Verdict.TP, (True, False): Verdict.FP,
                         (False, True): Verdict.FN, (False, False): Verdict.TN}[
                r in answers[c], r in table[c]]
    per = score.per_relation()
    assert sum(sum(cnt.values()) for cnt in per.values()) == 392
    assert sum(cnt[Verdict.TP] for cnt in per.values()) == score.tp


def test_missing_cell(table):
    with pytest.raises(MissingCell):
        score_composition({}, table)


@pytest.mark.parametrize("counts, tn, pct", [
    ((85, 61, 49, 392), 197, "71.94%"),
    ((95, 57, 72, 392), 168, "67.09%"),
])
def test_accuracy_from_counts(counts, tn, pct):
    got_tn, acc = accuracy_from_counts(*counts)
    assert got_tn == tn
    assert format_percent(acc) == pct


@given(st.integers(0, 392), st.integers(0, 392), st.integers(0, 392))
def test_accuracy_identity(tp, fp, fn):
    if tp + fp + fn > 392:
        with pytest.raises(ValueError):
            accuracy_from_counts(tp, fp, fn, 392)
        return
    tn, acc = accuracy_from_counts(tp, fp, fn, 392)
    assert acc == Fraction(tp + 392 - tp - fp - fn, 392)
    assert 0 <= acc <= 1


def test_format_percent_rounds_half_up():
    assert format_percent(Fraction(1, 8)) == "12.50%"
    assert format_percent(Fraction(1, 80000)) == "0.00%"
    assert format_percent(Fraction(5, 100000)) == "0.01%"
    assert format_percent(Fraction(20, 49)) == "40.82%"


# -------------------------------------------------------------- preferred

def test_impossible(table):
    pref = {c: next(iter(table[c])) for c in NON_EQ_PAIRS}
    pref[R.TPP, R.NTPP] = R.TPP  # truth is {NTPP}
    score = score_preferred(pref, table)
    assert score.categories[R.TPP, R.NTPP] is PreferredCategory.IMPOSSIBLE
    assert score.count(PreferredCategory.IMPOSSIBLE) == 1
    assert score.count(PreferredCategory.POSSIBLE) == 48
    assert not score.human_data


def test_unique_unnoticed(table):
    singles = [c for c in NON_EQ_PAIRS if len(table[c]) == 1]
    pref = {c: next(iter(table[c])) for c in NON_EQ_PAIRS}
    score = score_preferred(pref, table, uniqueness={singles[0]: True})
    assert set(score.unique_unnoticed) == set(singles[1:])
    assert all(len(table[c]) == 1 for c in score.unique_unnoticed)


def _synthetic_humans(table, agree):
    pref, humans = {}, {}
    for k, c in enumerate(NON_EQ_PAIRS):
        rels = list(table[c])
        if k < agree:
            pref[c] = humans[c] = rels[0]
        elif len(rels) > 1:
            pref[c], humans[c] = rels[0], rels[1]
        else:
            pref[c] = next(r for r in RELATIONS if r not in table[c])
            humans[c] = rels[0]
    return pref, humans


def test_agree_overall_rate(table):
    pref, overall = _synthetic_humans(table, 20)
    doc = {f"{a.name}|{b.name}": {"overall": r.name} for (a, b), r in overall.items()}
    score = score_preferred(pref, table, load_human_preferences(doc))
    assert score.count(PreferredCategory.AGREE_OVERALL) == 20
    assert score.agreement["overall"] == 20
    assert format_percent(score.rate(20)) == "40.82%"


def test_language_groups(table, tmp_path):
    doc = {"DC|DC": {"overall": "DC", "groups": {"german": "DC", "mongolian": ["EC", "PO"]}},
           "EC|EC": {"overall": "DC", "groups": {"german": "EC"}}}
    path = tmp_path / "humans.json"
    path.write_text(json.dumps(doc))
    humans = load_human_preferences(path)
    assert humans.group_names() == ["german", "mongolian"]
    pref = {c: next(iter(table[c])) for c in NON_EQ_PAIRS}
    pref[R.DC, R.DC] = R.EC
    pref[R.EC, R.EC] = R.EC
    score = score_preferred(pref, table, humans)
    assert score.categories[R.DC, R.DC] is PreferredCategory.AGREE_LANGUAGE_GROUP
    assert score.categories[R.EC, R.EC] is PreferredCategory.AGREE_LANGUAGE_GROUP
    singles = sum(len(table[c]) == 1 for c in NON_EQ_PAIRS)
    assert score.agreement["mongolian"] == 1 + singles
    # singleton truth cells default to the unique relation
    assert score.categories[R.TPP, R.NTPP] is PreferredCategory.AGREE_OVERALL


def test_impossible_never_agrees(table):
    doc = {f"{a.name}|{b.name}": {"overall": "TPP"} for a, b in NON_EQ_PAIRS}
    score = score_preferred({c: R.TPP for c in NON_EQ_PAIRS}, table, load_human_preferences(doc))
    for c in NON_EQ_PAIRS:
        cat = score.categories[c]
        assert (cat is PreferredCategory.IMPOSSIBLE) == (R.TPP not in table[c])


# --------------------------------------------------------------------- CN

def test_cn_self_comparison(graph):
    pred = {(a, b): graph.is_neighbor(a, b) for a in RELATIONS for b in RELATIONS if a is not b}
    score = score_cn(pred, graph)
    assert score.correct == 56 and score.accuracy == 1
    assert len(score.verdicts) == 56


def test_cn_all_false(graph):
    score = score_cn([[False] * 8 for _ in range(8)], graph)
    assert score.correct == 56 - graph.directed_link_count() == 34


def test_cn_nineteen_plus_thirtyone(graph):
    links = [(a, b) for a in RELATIONS for b in RELATIONS if a is not b and graph.is_neighbor(a, b)]
    absent = [(a, b) for a in RELATIONS for b in RELATIONS if a is not b and not graph.is_neighbor(a, b)]
    pred = {k: False for k in links + absent}
    for k in links[:19]:
        pred[k] = True
    for k in absent[31:]:
        pred[k] = True
    score = score_cn(pred, graph)
    assert score.counts[CNVerdict.CORRECT_LINK] == 19
    assert score.counts[CNVerdict.CORRECT_ABSENCE] == 31
    assert score.accuracy == Fraction(50, 56)
    assert format_percent(score.accuracy, 1) == "89.3%"


def test_cn_row_sets(graph):
    rows = {r: graph.neighbors(r) for r in RELATIONS}
    assert score_cn(rows, graph).correct == 56


# ----------------------------------------------------------------- reports

@pytest.fixture
def comp_score(table):
    return score_composition({c: table[c] for c in NON_EQ_PAIRS}, table)


def _rows(text):
    return list(csv.reader(io.StringIO(text)))[1:]


def test_report_row_counts(table, graph, comp_score):
    assert len(_rows(render_report(comp_score, "csv"))) == 392
    cn = score_cn([[False] * 8 for _ in range(8)], graph)
    assert len(_rows(render_report(cn, "csv"))) == 56
    pref = score_preferred({c: next(iter(table[c])) for c in NON_EQ_PAIRS}, table)
    assert len(_rows(render_report(pref, "csv"))) == 49


def test_markdown_legend(comp_score):
    md = render_report(comp_score)
    assert "D (DC), E(EC), P(PO)" in md
    assert LEGEND in md
    assert "100.00%" in md


def test_markdown_markers(table):
    answers = {c: table[c] for c in NON_EQ_PAIRS}
    answers[R.DC, R.DC] = RelationSet.of(R.DC, R.EC)
    answers[R.TPP, R.NTPP] = RelationSet.of(R.NTPP, R.PO)
    md = render_report(score_composition(answers, table))
    assert "(T)" in md and "P!" in md


def test_render_deterministic(comp_score):
    assert render_report(comp_score) == render_report(comp_score)


def test_empty_score(table):
    empty = CompositionScore((), {}, {})
    with pytest.raises(EmptyScore):
        render_report(empty)
    with pytest.raises(ValueError):
        render_report(score_composition({c: table[c] for c in NON_EQ_PAIRS}, table), "pdf")
