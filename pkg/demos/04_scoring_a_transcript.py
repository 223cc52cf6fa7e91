"""Running and scoring an experiment offline.

A real run talks to a chat-completions endpoint (`rcc8 eval run`). Here a
scripted stand-in answers every composition question, getting the DC row
slightly wrong, so the whole pipeline can be shown without network access:
prompts, the stored transcript, replay, parsing and the report.

    python3 demos/04_scoring_a_transcript.py
"""

import re
import tempfile
from pathlib import Path

from rcc8 import BaseRelation as R, RelationSet, default_table, parse_relation
from rcc8.harness import (ExperimentSpec, ReplayEndpoint, ScriptedEndpoint, TranscriptStore,
                          build_initial_prompt, read_transcript, run_experiment)
from rcc8.scoring import format_percent, render_relation_set, render_report, score_transcript

CELL = re.compile(r"If (\w+)\(x,y\) and (\w+)\(y,z\)")


def answer(prompt):
    m = CELL.search(prompt)
    if m is None:
        return "Understood."
    a, b = parse_relation(m.group(1)), parse_relation(m.group(2))
    rels = default_table()[a, b]
    if a is R.DC:
        rels = RelationSet.of(R.DC, R.EC)  # a typical over-cautious answer
    return ("Other relations would contradict the premises, so they are not possible. "
            "The possible relationships between x and z are:\n"
            + render_relation_set(rels).replace(", ", "\n"))


spec = ExperimentSpec("composition")
print(build_initial_prompt(spec)[:300], "...\n")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "composition.jsonl"
    summary = run_experiment(spec, ScriptedEndpoint(answer, model="scripted"),
                             TranscriptStore(path))
    print(f"{summary.exchanges} exchanges stored in {path.name}")

    # Replaying the stored run reproduces it exactly.
    records = read_transcript(path)
    again = run_experiment(spec, ReplayEndpoint(records))
    print("replay identical:", [r.response for r in again.records] == [r.response for r in records])

    score = score_transcript(records)
    print(f"\nTP={score.tp} FP={score.fp} FN={score.fn} TN={score.tn} "
          f"accuracy {format_percent(score.accuracy)}\n")
    print(render_report(score))
