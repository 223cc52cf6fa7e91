"""Composing RCC-8 relations.

Walks through the relation algebra: base relations and their converses,
single and set-valued composition, and the conceptual-neighbourhood graph
that says which relations can follow each other under continuous change.

    python3 demos/01_composition_table.py
"""

from rcc8 import (RELATIONS, BaseRelation as R, RelationSet, compose, compose_sets,
                  conceptual_distance, converse, default_table, neighbors)

table = default_table()

# Eight base relations, each with a converse. Only the proper-part
# relations are not their own converse.
for r in RELATIONS:
    print(f"{r.name:6} converse {converse(r).name}")
print()

# A part of a non-tangential part is itself a non-tangential part.
print("TPP ; NTPP =", compose(R.TPP, R.NTPP))

# Two disconnected regions tell us nothing about how x and z relate.
print("DC  ; DC   =", compose(R.DC, R.DC), "(all eight)" if compose(R.DC, R.DC).is_all() else "")

# Composition lifts to sets by taking the union over members.
lhs = RelationSet.of(R.EC, R.TPP)
print(f"{lhs} ; {{NTPP}} =", compose_sets(lhs, RelationSet.of(R.NTPP)))
print()

# The full 7x7 grid of non-EQ cells, one letter per member.
header = "      " + " ".join(f"{r.name:8}" for r in RELATIONS[:-1])
print(header)
for a in RELATIONS[:-1]:
    row = [("".join(r.letter for r in table[a, b])).ljust(8) for b in RELATIONS[:-1]]
    print(f"{a.name:6}", " ".join(row))
print(f"\n{table.entry_count()} entries over the 49 non-EQ cells, "
      f"{table.entry_count(include_eq=True)} with the EQ row and column")
print()

# Continuity: EC can only become DC or PO in one step; DC is four steps from NTPP.
print("neighbours of EC:", neighbors(R.EC))
print("neighbours of PO:", neighbors(R.PO))
print("distance DC -> NTPP:", conceptual_distance(R.DC, R.NTPP))
